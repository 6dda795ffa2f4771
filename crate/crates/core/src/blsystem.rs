//! The classical Battle-Lemarié scaling function and wavelet of order `n`.
//!
//! Both generators are stored in exact truncated spline form:
//!
//! * `Psi(x) = sum_k d_k B_n(x - k)` on the integer grid, where `d_k` are the
//!   Fourier coefficients of `E_n(xi)^{-1/2}`;
//! * `psi(x) = sum_k e_k B_n(2x - k)` on the half-integer grid, where
//!   `e = h * g` with the binomial high-pass factor
//!   `h(w) = -2 e^{-iw} ((1 - e^{iw}) / 2)^{n+1}` and the Fourier coefficients
//!   `g_k` of `sqrt(E_n(w + pi) / (E_n(w) E_n(2w)))`.
//!
//! Keeping the factor `h` exact means the discrete moments of `e` up to order
//! `n` vanish regardless of where `g` is truncated, so the vanishing moments of
//! `psi` do not depend on the truncation `K`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bspline::{binomial, bspline_series, AutocorrSymbol};
use crate::error::{Error, Result};
use crate::piecewise::{PiecewisePoly, Side};

/// Tail mass below which the automatic truncation stops.
pub const AUTO_TAIL_TOL: f64 = 1e-10;
/// Smallest admissible truncation half-width.
pub const MIN_TRUNCATION: usize = 8;
/// Default number of symbol samples.
pub const DEFAULT_SAMPLES: usize = 8192;
/// Largest order accepted by [`build_system`].
pub const MAX_ORDER: usize = 12;

/// A finite real sequence `values[i]` sitting at index `offset + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub offset: i64,
    pub values: Vec<f64>,
}

impl Sequence {
    pub fn new(offset: i64, values: Vec<f64>) -> Self {
        Self { offset, values }
    }

    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    /// First and last stored index.
    pub fn range(&self) -> (i64, i64) {
        (self.offset, self.offset + self.values.len() as i64 - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.offset + i as i64, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Discrete convolution `(a * b)_k = sum_i a_i b_{k-i}`.
    pub fn convolve(&self, other: &Sequence) -> Sequence {
        if self.is_empty() || other.is_empty() {
            return Sequence::new(self.offset + other.offset, Vec::new());
        }
        let mut out = vec![0.0; self.len() + other.len() - 1];
        for (i, &a) in self.values.iter().enumerate() {
            for (j, &b) in other.values.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Sequence::new(self.offset + other.offset, out)
    }
}

/// Envelope constants `|v(x)| <= c e^{-gamma |x|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    pub gamma: f64,
    /// Both tails of the sample set are exactly zero.
    pub compact: bool,
}

impl DecayFit {
    pub fn envelope(&self, x: f64) -> f64 {
        self.c * (-self.gamma * x.abs()).exp()
    }

    /// Smallest radius beyond which the envelope is below `tol`.
    pub fn radius_for(&self, tol: f64) -> f64 {
        ((self.c / tol).ln() / self.gamma).max(0.0)
    }
}

/// Starting abscissa of the log-linear regression.
pub const DECAY_FIT_K0: f64 = 2.0;
/// Samples smaller than this fraction of the largest one are treated as zero.
pub const DECAY_FIT_FLOOR: f64 = 1e-14;

/// Fits an exponential envelope to `(x, value)` samples.
///
/// `gamma` comes from a least-squares line through `log|v|` against `|x|`
/// over `|x| >= 2`; `c` is then the smallest constant making the envelope
/// hold at every sample above the relative floor. When fewer than 8 samples
/// qualify the fit is only available for compactly supported data, which
/// gets `gamma = 1`.
pub fn decay_fit(samples: &[(f64, f64)]) -> Result<DecayFit> {
    let vmax = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    if vmax == 0.0 {
        return Err(Error::FitUnavailable { usable: 0 });
    }
    let floor = DECAY_FIT_FLOOR * vmax;
    let mut sorted: Vec<(f64, f64)> = samples.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let first_nz = sorted.iter().position(|s| s.1 != 0.0).unwrap();
    let last_nz = sorted.iter().rposition(|s| s.1 != 0.0).unwrap();
    let compact = first_nz > 0 && last_nz + 1 < sorted.len();

    let usable: Vec<(f64, f64)> = sorted
        .iter()
        .filter(|s| s.0.abs() >= DECAY_FIT_K0 && s.1.abs() > floor)
        .map(|s| (s.0.abs(), s.1.abs().ln()))
        .collect();
    let gamma = if usable.len() >= 8 {
        let m = usable.len() as f64;
        let mx = usable.iter().map(|u| u.0).sum::<f64>() / m;
        let my = usable.iter().map(|u| u.1).sum::<f64>() / m;
        let sxy: f64 = usable.iter().map(|u| (u.0 - mx) * (u.1 - my)).sum();
        let sxx: f64 = usable.iter().map(|u| (u.0 - mx) * (u.0 - mx)).sum();
        if sxx == 0.0 {
            return Err(Error::FitUnavailable {
                usable: usable.len(),
            });
        }
        -sxy / sxx
    } else if compact {
        1.0
    } else {
        return Err(Error::FitUnavailable {
            usable: usable.len(),
        });
    };
    let c = sorted
        .iter()
        .filter(|s| s.1.abs() > floor)
        .map(|s| s.1.abs() * (gamma * s.0.abs()).exp())
        .fold(0.0, f64::max);
    Ok(DecayFit { c, gamma, compact })
}

/// Index `(j, mu)` of a dyadic interval `I_{j,mu}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    pub j: i32,
    pub mu: i64,
}

impl DyadicIndex {
    pub fn new(j: i32, mu: i64) -> Self {
        Self { j, mu }
    }

    /// `[2^{-j} mu, 2^{-j} (mu + 1))`, with the unit grid at `j = -1`.
    pub fn interval(&self) -> (f64, f64) {
        let h = if self.j >= 0 {
            0.5f64.powi(self.j)
        } else {
            1.0
        };
        (h * self.mu as f64, h * (self.mu + 1) as f64)
    }
}

/// Which member of the system to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemberKind {
    /// `Psi(x)`; the index is ignored.
    Scaling,
    /// `psi(x)`; the index is ignored.
    Wavelet,
    /// `psi_{j,mu}(x) = psi(2^j x - mu)`, and `sqrt(2) Psi(x - mu)` at `j = -1`.
    Dyadic,
    /// `psi(2^j x - nu/2)`, and `Psi(x - nu)` at `j = -1`.
    Oversampled,
    /// `Psi(x - mu)`; `j` is ignored.
    Base,
}

/// Selects one of the two generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    /// The scaling function `Psi`.
    Scaling,
    /// The wavelet `psi`.
    Wavelet,
}

/// Taylor coefficients of the two pieces meeting at `mu/2`, both expanded
/// around `mu/2`. `left[k] = f^(k)(mu/2-) / k!`, likewise `right`.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceCoefficients {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SplineSystem {
    order: usize,
    truncation: usize,
    samples: usize,
    scaling_coeffs: Sequence,
    wavelet_coeffs: Sequence,
    symbol_coeffs: Sequence,
    decay: DecayFit,
    truncation_tail: f64,
    scaling_pp: PiecewisePoly,
    wavelet_pp: PiecewisePoly,
}

/// Serialized form; the piecewise polynomials are rebuilt on load.
#[derive(Serialize, Deserialize)]
struct SystemDoc {
    order: usize,
    truncation: usize,
    samples: usize,
    scaling_coeffs: Sequence,
    wavelet_coeffs: Sequence,
    symbol_coeffs: Sequence,
    decay: DecayFit,
    truncation_tail: f64,
}

/// `h_{1-m} = -2^{-n} (-1)^m C(n+1, m)` for `m = 0..=n+1`.
pub fn highpass_binomial(order: usize) -> Sequence {
    let n = order;
    let scale = -(0.5f64).powi(n as i32);
    // index 1 - m runs from -n to 1
    let values = (0..=n + 1)
        .rev()
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            scale * sign * binomial(n + 1, m)
        })
        .collect();
    Sequence::new(-(n as i64), values)
}

/// Fourier coefficients `c_k` (with `S(w) = sum c_k e^{-ikw}`) of a real,
/// even symbol sampled at `w_m = 2 pi m / N`, indexed `k = -N/2+1..=N/2`.
fn symbol_coefficients(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

fn coefficient_at(coeffs: &[f64], k: i64) -> f64 {
    let n = coeffs.len() as i64;
    coeffs[k.rem_euclid(n) as usize]
}

fn window_sequence(coeffs: &[f64], radius: usize) -> Sequence {
    let r = radius as i64;
    Sequence::new(-r, (-r..=r).map(|k| coefficient_at(coeffs, k)).collect())
}

/// `sum_{radius < |k| < N/2} |c_k|`.
fn tail_mass(coeffs: &[f64], radius: usize) -> f64 {
    let half = coeffs.len() / 2;
    (radius + 1..half)
        .map(|k| coefficient_at(coeffs, k as i64).abs() + coefficient_at(coeffs, -(k as i64)).abs())
        .sum()
}

/// Builds the classical system of order `n`.
///
/// `truncation = None` picks the smallest `K >= 8` whose discarded
/// coefficient mass is at most `1e-10`.
pub fn build_system(order: usize, truncation: Option<usize>, samples: usize) -> Result<SplineSystem> {
    if order > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "order {order} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    if samples < 1024 || !samples.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "symbol sample count must be a power of two >= 1024, got {samples}"
        )));
    }
    let max_k = samples / 4 - order - 2;
    if let Some(k) = truncation {
        if k < MIN_TRUNCATION {
            return Err(Error::InvalidParameter(format!(
                "truncation K must be at least {MIN_TRUNCATION}, got {k}"
            )));
        }
        if k > max_k {
            return Err(Error::InvalidParameter(format!(
                "truncation K = {k} too large for {samples} symbol samples (max {max_k})"
            )));
        }
    }

    if order == 0 {
        let k = truncation.unwrap_or(MIN_TRUNCATION);
        return Ok(SplineSystem::assemble(
            0,
            k,
            samples,
            Sequence::new(0, vec![1.0]),
            Sequence::new(0, vec![1.0, -1.0]),
            Sequence::new(0, vec![1.0]),
            0.0,
        ));
    }

    let sym = AutocorrSymbol::new(order);
    let e_vals: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|m| sym.eval(2.0 * PI * m as f64 / samples as f64))
        .collect();
    let min = e_vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < 1e-10 {
        return Err(Error::SymbolBreakdown { min });
    }
    let half = samples / 2;
    let scaling_symbol: Vec<f64> = e_vals.iter().map(|e| e.powf(-0.5)).collect();
    let g_symbol: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|m| {
            let shifted = e_vals[(m + half) % samples];
            let doubled = e_vals[(2 * m) % samples];
            (shifted / (e_vals[m] * doubled)).sqrt()
        })
        .collect();
    let d_all = symbol_coefficients(&scaling_symbol);
    let g_all = symbol_coefficients(&g_symbol);

    let h = highpass_binomial(order);
    let h_mass: f64 = h.values.iter().map(|v| v.abs()).sum();
    let tail = |k: usize| tail_mass(&d_all, k) + h_mass * tail_mass(&g_all, 2 * k);
    let k = match truncation {
        Some(k) => k,
        None => (MIN_TRUNCATION..=max_k)
            .find(|&k| tail(k) <= AUTO_TAIL_TOL)
            .unwrap_or(max_k),
    };
    let d = window_sequence(&d_all, k);
    let g = window_sequence(&g_all, 2 * k);
    let e = h.convolve(&g);
    Ok(SplineSystem::assemble(order, k, samples, d, e, g, tail(k)))
}

impl SplineSystem {
    fn assemble(
        order: usize,
        truncation: usize,
        samples: usize,
        scaling_coeffs: Sequence,
        wavelet_coeffs: Sequence,
        symbol_coeffs: Sequence,
        truncation_tail: f64,
    ) -> Self {
        let scaling_pp = bspline_series(order, scaling_coeffs.offset, &scaling_coeffs.values);
        let wavelet_pp =
            bspline_series(order, wavelet_coeffs.offset, &wavelet_coeffs.values).affine(2.0, 0.0);
        let mut sys = Self {
            order,
            truncation,
            samples,
            scaling_coeffs,
            wavelet_coeffs,
            symbol_coeffs,
            decay: DecayFit {
                c: 1.0,
                gamma: 1.0,
                compact: true,
            },
            truncation_tail,
            scaling_pp,
            wavelet_pp,
        };
        sys.decay = sys.fit_generator_decay();
        sys
    }

    /// Envelope of `max_{k <= max(n-1, 0)} (|Psi^(k)| + |psi^(k)|)` fitted at
    /// the half-integer knots, one-sided limits included.
    fn fit_generator_decay(&self) -> DecayFit {
        let samples = self.decay_samples();
        decay_fit(&samples).unwrap_or(DecayFit {
            c: samples.iter().map(|s| s.1).fold(0.0, f64::max),
            gamma: 1.0,
            compact: true,
        })
    }

    /// Half-integer knot samples used by the generator decay fit.
    pub fn decay_samples(&self) -> Vec<(f64, f64)> {
        let (s0, s1) = self.scaling_pp.window();
        let (w0, w1) = self.wavelet_pp.window();
        let lo = s0.min(w0);
        let hi = s1.max(w1);
        // For the exactly compact Haar pair include zero padding so the
        // tails register as zero; otherwise stay strictly inside the window.
        let (i0, i1) = if self.order == 0 {
            ((2.0 * lo) as i64 - 4, (2.0 * hi) as i64 + 4)
        } else {
            ((2.0 * lo) as i64 + 1, (2.0 * hi) as i64 - 1)
        };
        let kmax = self.order.saturating_sub(1);
        (i0..=i1)
            .map(|i| {
                let x = 0.5 * i as f64;
                let mut v = 0.0f64;
                for side in [Side::Left, Side::Right] {
                    let a = self.scaling_pp.taylor_at(x, side);
                    let b = self.wavelet_pp.taylor_at(x, side);
                    let mut fact = 1.0;
                    for k in 0..=kmax {
                        if k > 0 {
                            fact *= k as f64;
                        }
                        v = v.max(fact * (a[k].abs() + b[k].abs()));
                    }
                }
                (x, v)
            })
            .collect()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Index half-width `K` of the scaling sequence.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Symbol sample count `N`.
    pub fn samples(&self) -> usize {
        self.samples
    }

    /// `d_k` with `Psi = sum d_k B_n(. - k)`.
    pub fn scaling_coeffs(&self) -> &Sequence {
        &self.scaling_coeffs
    }

    /// `e_k` with `psi = sum e_k B_n(2 . - k)`.
    pub fn wavelet_coeffs(&self) -> &Sequence {
        &self.wavelet_coeffs
    }

    /// `g_k`, the coefficients of `sqrt(E(w + pi) / (E(w) E(2w)))`.
    pub fn symbol_coeffs(&self) -> &Sequence {
        &self.symbol_coeffs
    }

    /// Fitted `(C_0, gamma)`.
    pub fn decay(&self) -> DecayFit {
        self.decay
    }

    /// Measured coefficient mass discarded by the truncation.
    pub fn truncation_tail(&self) -> f64 {
        self.truncation_tail
    }

    pub fn scaling_pp(&self) -> &PiecewisePoly {
        &self.scaling_pp
    }

    pub fn wavelet_pp(&self) -> &PiecewisePoly {
        &self.wavelet_pp
    }

    pub fn generator(&self, which: Which) -> &PiecewisePoly {
        match which {
            Which::Scaling => &self.scaling_pp,
            Which::Wavelet => &self.wavelet_pp,
        }
    }

    pub fn eval_member(&self, kind: MemberKind, idx: DyadicIndex, x: f64) -> Result<f64> {
        check_scale(kind, idx)?;
        let j = idx.j;
        let mu = idx.mu as f64;
        Ok(match kind {
            MemberKind::Scaling => self.scaling_pp.eval(x),
            MemberKind::Wavelet => self.wavelet_pp.eval(x),
            MemberKind::Base => self.scaling_pp.eval(x - mu),
            MemberKind::Dyadic if j == -1 => std::f64::consts::SQRT_2 * self.scaling_pp.eval(x - mu),
            MemberKind::Dyadic => self.wavelet_pp.eval(2f64.powi(j) * x - mu),
            MemberKind::Oversampled if j == -1 => self.scaling_pp.eval(x - mu),
            MemberKind::Oversampled => self.wavelet_pp.eval(2f64.powi(j) * x - 0.5 * mu),
        })
    }

    /// Exact piecewise form of a member.
    pub fn member_pp(&self, kind: MemberKind, idx: DyadicIndex) -> Result<PiecewisePoly> {
        check_scale(kind, idx)?;
        let j = idx.j;
        let mu = idx.mu as f64;
        Ok(match kind {
            MemberKind::Scaling => self.scaling_pp.clone(),
            MemberKind::Wavelet => self.wavelet_pp.clone(),
            MemberKind::Base => self.scaling_pp.shifted(mu),
            MemberKind::Dyadic if j == -1 => {
                self.scaling_pp.shifted(mu).scaled(std::f64::consts::SQRT_2)
            }
            MemberKind::Dyadic => self.wavelet_pp.affine(2f64.powi(j), mu),
            MemberKind::Oversampled if j == -1 => self.scaling_pp.shifted(mu),
            MemberKind::Oversampled => self.wavelet_pp.affine(2f64.powi(j), 0.5 * mu),
        })
    }

    /// Support window `[lo, hi]` of a member, without building it.
    pub fn member_window(&self, kind: MemberKind, idx: DyadicIndex) -> Result<(f64, f64)> {
        check_scale(kind, idx)?;
        let (s0, s1) = self.scaling_pp.window();
        let (w0, w1) = self.wavelet_pp.window();
        let j = idx.j;
        let mu = idx.mu as f64;
        Ok(match kind {
            MemberKind::Scaling => (s0, s1),
            MemberKind::Wavelet => (w0, w1),
            MemberKind::Base => (s0 + mu, s1 + mu),
            MemberKind::Dyadic | MemberKind::Oversampled if j == -1 => (s0 + mu, s1 + mu),
            MemberKind::Dyadic | MemberKind::Oversampled => {
                let shift = if kind == MemberKind::Dyadic { mu } else { 0.5 * mu };
                let a = 2f64.powi(j);
                ((w0 + shift) / a, (w1 + shift) / a)
            }
        })
    }

    /// Taylor coefficients of the two pieces adjacent to `mu/2`, expanded
    /// around `mu/2`; zero vectors outside the truncation window.
    pub fn piecewise_coefficients(&self, which: Which, mu: i64) -> PieceCoefficients {
        let pp = self.generator(which);
        let x = 0.5 * mu as f64;
        PieceCoefficients {
            left: pp.taylor_at(x, Side::Left),
            right: pp.taylor_at(x, Side::Right),
        }
    }

    /// `int x^k f(x) dx` for `k = 0..=kappa_max`.
    pub fn moments(&self, which: Which, kappa_max: usize) -> Result<Vec<f64>> {
        if kappa_max > 2 * self.order + 4 {
            return Err(Error::InvalidParameter(format!(
                "moment order {kappa_max} exceeds 2n + 4 = {}",
                2 * self.order + 4
            )));
        }
        Ok(self.generator(which).moments(kappa_max))
    }

    /// Largest knot mismatch of derivatives `0..n-1` over both generators
    /// (zero for the Haar pair, which is not continuous).
    pub fn smoothness_defect(&self) -> f64 {
        if self.order == 0 {
            return 0.0;
        }
        let r = self.order - 1;
        self.scaling_pp
            .knot_mismatch(r)
            .max(self.wavelet_pp.knot_mismatch(r))
    }

    /// `max |(psi_{j,mu}, psi_{k,0}) - 2^{-j} delta_{jk} delta_{mu,0}|` over
    /// `j, k` in `scales` and `|mu| <= max_shift`.
    pub fn orthonormality_residual(&self, scales: std::ops::RangeInclusive<i32>, max_shift: i64) -> f64 {
        let js: Vec<i32> = scales.collect();
        let tasks: Vec<(i32, i32, i64)> = js
            .iter()
            .flat_map(|&j| {
                js.iter()
                    .flat_map(move |&k| (-max_shift..=max_shift).map(move |mu| (j, k, mu)))
            })
            .collect();
        tasks
            .par_iter()
            .map(|&(j, k, mu)| {
                let a = self
                    .member_pp(MemberKind::Dyadic, DyadicIndex::new(j, mu))
                    .expect("scales are >= -1");
                let b = self
                    .member_pp(MemberKind::Dyadic, DyadicIndex::new(k, 0))
                    .expect("scales are >= -1");
                let target = if j == k && mu == 0 {
                    2f64.powi(-j)
                } else {
                    0.0
                };
                (a.inner(&b) - target).abs()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// The antiderivative `rho` with `rho^(n+1)(2x) = psi(x)`:
    /// `rho = sum_k r_k B_{2n+1}(. - k)` with `r_k = (-1)^n 2^{-n} g_{k+n}`.
    ///
    /// Substituting `r` into the derivative identity reproduces `e = h * g`
    /// term by term, so no division by the vanishing factor `(i xi)^{n+1}` is
    /// needed. The coefficients are cut where their fitted envelope falls
    /// below `1e-10`.
    pub fn antiderivative_rho(&self) -> PiecewisePoly {
        let n = self.order;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let scale = sign * 0.5f64.powi(n as i32);
        let (g0, g1) = self.symbol_coeffs.range();
        let shift = n as i64;
        let r = Sequence::new(
            g0 - shift,
            (g0..=g1).map(|k| scale * self.symbol_coeffs.get(k)).collect(),
        );
        let r = match self.rho_radius(&r) {
            Some(radius) => {
                let lo = (-radius).max(r.offset);
                let hi = radius.min(r.range().1);
                Sequence::new(lo, (lo..=hi).map(|k| r.get(k)).collect())
            }
            None => r,
        };
        bspline_series(2 * n + 1, r.offset, &r.values)
    }

    fn rho_radius(&self, r: &Sequence) -> Option<i64> {
        if r.len() < 16 {
            return None;
        }
        let samples: Vec<(f64, f64)> = r.iter().map(|(k, v)| (k as f64, v)).collect();
        let fit = decay_fit(&samples).ok()?;
        if fit.gamma <= 0.0 {
            return None;
        }
        Some(fit.radius_for(AUTO_TAIL_TOL).ceil() as i64)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = SystemDoc {
            order: self.order,
            truncation: self.truncation,
            samples: self.samples,
            scaling_coeffs: self.scaling_coeffs.clone(),
            wavelet_coeffs: self.wavelet_coeffs.clone(),
            symbol_coeffs: self.symbol_coeffs.clone(),
            decay: self.decay,
            truncation_tail: self.truncation_tail,
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SystemDoc = serde_json::from_str(text)?;
        if doc.order > MAX_ORDER {
            return Err(Error::InvalidParameter(format!("order {} in cached system", doc.order)));
        }
        let mut sys = Self::assemble(
            doc.order,
            doc.truncation,
            doc.samples,
            doc.scaling_coeffs,
            doc.wavelet_coeffs,
            doc.symbol_coeffs,
            doc.truncation_tail,
        );
        sys.decay = doc.decay;
        Ok(sys)
    }
}

fn check_scale(kind: MemberKind, idx: DyadicIndex) -> Result<()> {
    if matches!(kind, MemberKind::Dyadic | MemberKind::Oversampled) && idx.j < -1 {
        return Err(Error::InvalidParameter(format!(
            "scale j = {} is below the base scale -1",
            idx.j
        )));
    }
    Ok(())
}
