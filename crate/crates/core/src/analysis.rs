//! Test functions, pairings with system members, and frame coefficients.
//!
//! Frame coefficients are computed through the B-spline two-scale relation.
//! With `b_l[m] = int f(x) B_n(2^l x - m) dx`,
//!
//! ```text
//! (f, psi(2^j . - nu/2)) = sum_k e_k b_{j+1}[nu + k]
//! (f, Psi(. - mu))       = sum_k d_k b_0[mu + k]
//! b_l[m] = 2^{-n} sum_i C(n+1, i) b_{l+1}[2m + i]
//! ```
//!
//! so only the finest level needs quadrature. [`pair`] integrates each member
//! directly and serves as the independent check of this route.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::blsystem::{DyadicIndex, MemberKind, Sequence, SplineSystem};
use crate::bspline::{binomial, bspline_fourier, bspline_piecewise};
use crate::error::{Error, Result};
use crate::norms::{CoefficientTable, ScaleRow};
use crate::piecewise::PiecewisePoly;
use crate::quadrature::{panel_breaks, GaussLegendre};

/// Gaussians are cut off this many widths from their center.
pub const GAUSSIAN_CUTOFF: f64 = 12.0;
/// Degree of the polynomial bump under a modulated bump.
pub const MODULATED_BUMP_DEGREE: usize = 6;
/// Default tail tolerance for coefficient windows.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default finest scale.
pub const DEFAULT_J_MAX: i32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `exp(-(x - center)^2 / (2 width^2))`.
    Gaussian { center: f64, width: f64 },
    /// `B_order(scale x - shift)`.
    DilatedBspline { order: usize, scale: f64, shift: f64 },
    /// `(4 (x - a)(b - x) / (b - a)^2)^degree` on `[a, b]`.
    PolyBump { degree: usize, a: f64, b: f64 },
    /// `cos(freq (x - (a + b)/2))` times the degree-6 bump on `[a, b]`.
    ModulatedBump { freq: f64, a: f64, b: f64 },
    /// `1_[a, b)`.
    Indicator { a: f64, b: f64 },
    /// An arbitrary piecewise polynomial.
    Piecewise(PiecewisePoly),
}

/// An analytically described input function, times an amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    family: Family,
    amplitude: f64,
}

fn bump_poly(degree: usize, len: f64) -> Vec<f64> {
    // (4 t (len - t) / len^2)^degree in the local variable t = x - a
    let base = [0.0, 4.0 / len, -4.0 / (len * len)];
    let mut out = vec![1.0];
    for _ in 0..degree {
        let mut next = vec![0.0; out.len() + 2];
        for (i, &a) in out.iter().enumerate() {
            for (k, &b) in base.iter().enumerate() {
                next[i + k] += a * b;
            }
        }
        out = next;
    }
    out
}

fn hermite(k: usize, u: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, u);
    if k == 0 {
        return 1.0;
    }
    for i in 1..k {
        let h2 = u * h1 - i as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

impl TestFunction {
    pub fn new(family: Family) -> Result<Self> {
        let ok = match &family {
            Family::Gaussian { width, center } => *width > 0.0 && center.is_finite(),
            Family::DilatedBspline { scale, shift, .. } => *scale > 0.0 && shift.is_finite(),
            Family::PolyBump { a, b, degree } => a < b && *degree >= 1,
            Family::ModulatedBump { a, b, freq } => a < b && freq.is_finite(),
            Family::Indicator { a, b } => a < b,
            Family::Piecewise(_) => true,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("malformed test function {family:?}")));
        }
        Ok(Self {
            family,
            amplitude: 1.0,
        })
    }

    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        Self::new(Family::Gaussian { center, width })
    }

    pub fn bspline(order: usize, scale: f64, shift: f64) -> Result<Self> {
        Self::new(Family::DilatedBspline { order, scale, shift })
    }

    pub fn poly_bump(degree: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(Family::PolyBump { degree, a, b })
    }

    pub fn modulated_bump(freq: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(Family::ModulatedBump { freq, a, b })
    }

    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Self::new(Family::Indicator { a, b })
    }

    pub fn piecewise_fn(pp: PiecewisePoly) -> Self {
        Self {
            family: Family::Piecewise(pp),
            amplitude: 1.0,
        }
    }

    pub fn zero() -> Self {
        Self::piecewise_fn(PiecewisePoly::zero(1.0, 0.0, 0))
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// `alpha f`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            family: self.family.clone(),
            amplitude: self.amplitude * alpha,
        }
    }

    /// `x -> f(lambda x)` for `lambda > 0`.
    pub fn dilate(&self, lambda: f64) -> Self {
        assert!(lambda > 0.0, "dilation factor must be positive");
        let family = match &self.family {
            Family::Gaussian { center, width } => Family::Gaussian {
                center: center / lambda,
                width: width / lambda,
            },
            Family::DilatedBspline { order, scale, shift } => Family::DilatedBspline {
                order: *order,
                scale: scale * lambda,
                shift: *shift,
            },
            Family::PolyBump { degree, a, b } => Family::PolyBump {
                degree: *degree,
                a: a / lambda,
                b: b / lambda,
            },
            Family::ModulatedBump { freq, a, b } => Family::ModulatedBump {
                freq: freq * lambda,
                a: a / lambda,
                b: b / lambda,
            },
            Family::Indicator { a, b } => Family::Indicator {
                a: a / lambda,
                b: b / lambda,
            },
            Family::Piecewise(pp) => Family::Piecewise(pp.affine(lambda, 0.0)),
        };
        Self {
            family,
            amplitude: self.amplitude,
        }
    }

    /// Exact piecewise form (amplitude included) for the spline families.
    pub fn piecewise(&self) -> Option<PiecewisePoly> {
        let pp = match &self.family {
            Family::DilatedBspline { order, scale, shift } => {
                bspline_piecewise(*order).affine(*scale, *shift)
            }
            Family::PolyBump { degree, a, b } => {
                PiecewisePoly::new(b - a, *a, 2 * degree, &[bump_poly(*degree, b - a)])
            }
            Family::Indicator { a, b } => PiecewisePoly::new(b - a, *a, 0, &[vec![1.0]]),
            Family::Piecewise(pp) => pp.clone(),
            Family::Gaussian { .. } | Family::ModulatedBump { .. } => return None,
        };
        Some(if self.amplitude == 1.0 {
            pp
        } else {
            pp.scaled(self.amplitude)
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * self.eval_unit(x)
    }

    fn eval_unit(&self, x: f64) -> f64 {
        match &self.family {
            Family::Gaussian { center, width } => {
                let u = (x - center) / width;
                (-0.5 * u * u).exp()
            }
            Family::DilatedBspline { order, scale, shift } => {
                crate::bspline::bspline_eval(*order, scale * x - shift)
            }
            Family::PolyBump { degree, a, b } => {
                if x <= *a || x >= *b {
                    0.0
                } else {
                    (4.0 * (x - a) * (b - x) / ((b - a) * (b - a))).powi(*degree as i32)
                }
            }
            Family::ModulatedBump { freq, a, b } => {
                if x <= *a || x >= *b {
                    0.0
                } else {
                    let mid = 0.5 * (a + b);
                    let bump = (4.0 * (x - a) * (b - x) / ((b - a) * (b - a)))
                        .powi(MODULATED_BUMP_DEGREE as i32);
                    (freq * (x - mid)).cos() * bump
                }
            }
            Family::Indicator { a, b } => {
                if x >= *a && x < *b {
                    1.0
                } else {
                    0.0
                }
            }
            Family::Piecewise(pp) => pp.eval(x),
        }
    }

    /// `f^(k)(x)`, available up to [`weak_derivatives`](Self::weak_derivatives).
    pub fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        if k > self.weak_derivatives() {
            return Err(Error::Unsupported(format!(
                "derivative of order {k} of {:?}",
                self.family
            )));
        }
        if k == 0 {
            return Ok(self.eval(x));
        }
        let v = match &self.family {
            Family::Gaussian { center, width } => {
                let u = (x - center) / width;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * hermite(k, u) * (-0.5 * u * u).exp() / width.powi(k as i32)
            }
            Family::ModulatedBump { freq, a, b } => {
                let bump = Self::poly_bump(MODULATED_BUMP_DEGREE, *a, *b)?
                    .piecewise()
                    .expect("bumps are piecewise");
                let mid = 0.5 * (a + b);
                (0..=k)
                    .map(|i| {
                        let phase = freq * (x - mid) + i as f64 * std::f64::consts::FRAC_PI_2;
                        binomial(k, i)
                            * freq.powi(i as i32)
                            * phase.cos()
                            * bump.nth_derivative(k - i).eval(x)
                    })
                    .sum::<f64>()
            }
            _ => {
                let pp = self.piecewise().expect("remaining families are piecewise");
                return Ok(pp.nth_derivative(k).eval(x));
            }
        };
        Ok(self.amplitude * v)
    }

    /// Piecewise form of `f^(k)` for the spline families.
    pub fn derivative_piecewise(&self, k: usize) -> Result<Option<PiecewisePoly>> {
        if k > self.weak_derivatives() {
            return Err(Error::Unsupported(format!(
                "derivative of order {k} of {:?}",
                self.family
            )));
        }
        Ok(self.piecewise().map(|pp| pp.nth_derivative(k)))
    }

    /// Largest `k` for which `f^(k)` exists as a bounded function.
    pub fn weak_derivatives(&self) -> usize {
        match &self.family {
            Family::Gaussian { .. } => usize::MAX,
            Family::DilatedBspline { order, .. } => *order,
            Family::PolyBump { degree, .. } => *degree,
            Family::ModulatedBump { .. } => MODULATED_BUMP_DEGREE,
            Family::Indicator { .. } => 0,
            Family::Piecewise(pp) => {
                let scale = pp.sup_abs();
                if scale == 0.0 {
                    return usize::MAX;
                }
                (0..pp.degree())
                    .take_while(|&r| pp.knot_mismatch(r) <= 1e-9 * scale)
                    .count()
            }
        }
    }

    /// Interval outside of which `f` vanishes (Gaussians: the cutoff).
    pub fn support(&self) -> (f64, f64) {
        match &self.family {
            Family::Gaussian { center, width } => {
                (center - GAUSSIAN_CUTOFF * width, center + GAUSSIAN_CUTOFF * width)
            }
            Family::DilatedBspline { order, scale, shift } => {
                (shift / scale, (shift + *order as f64 + 1.0) / scale)
            }
            Family::PolyBump { a, b, .. }
            | Family::ModulatedBump { a, b, .. }
            | Family::Indicator { a, b } => (*a, *b),
            Family::Piecewise(pp) => pp.window(),
        }
    }

    /// Points where `f` is not analytic.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            Family::Gaussian { .. } => Vec::new(),
            Family::DilatedBspline { order, scale, shift } => (0..=*order + 1)
                .map(|i| (shift + i as f64) / scale)
                .collect(),
            Family::PolyBump { a, b, .. }
            | Family::ModulatedBump { a, b, .. }
            | Family::Indicator { a, b } => vec![*a, *b],
            Family::Piecewise(pp) => pp.knots(),
        }
    }

    /// Length over which `f` varies appreciably; sizes quadrature panels.
    pub fn length_scale(&self) -> f64 {
        match &self.family {
            Family::Gaussian { width, .. } => *width,
            Family::DilatedBspline { scale, .. } => 1.0 / scale,
            Family::PolyBump { a, b, .. } | Family::Indicator { a, b } => b - a,
            Family::ModulatedBump { freq, a, b } => {
                let wave = if *freq == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / freq.abs()
                };
                (0.25 * (b - a)).min(wave)
            }
            Family::Piecewise(pp) => pp.spacing(),
        }
    }

    /// Polynomial degree of the spline families; `None` for the others.
    pub fn poly_degree(&self) -> Option<usize> {
        self.piecewise().map(|pp| pp.degree())
    }

    /// Quadrature panels covering `[lo, hi]` that respect `f`'s breakpoints and
    /// the extra breakpoints `extra`, no longer than `max_len` nor a quarter
    /// of `f`'s length scale.
    fn panels(&self, lo: f64, hi: f64, extra: &[f64], max_len: f64) -> Vec<f64> {
        let mut breaks = self.breakpoints();
        breaks.extend_from_slice(extra);
        panel_breaks(lo, hi, &breaks, max_len.min(0.25 * self.length_scale()))
    }

    pub fn l1_norm(&self) -> f64 {
        if let Family::Gaussian { width, .. } = self.family {
            return self.amplitude.abs() * width * (2.0 * std::f64::consts::PI).sqrt();
        }
        self.lp_norm(1.0)
    }

    /// `||f||_p` by composite quadrature (exact piecewise route where possible).
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        if let Some(pp) = self.piecewise() {
            return pp.lp_norm(p);
        }
        let (lo, hi) = self.support();
        let gl = GaussLegendre::new(16);
        let breaks = self.panels(lo, hi, &[], f64::INFINITY);
        let sub: Vec<f64> = refine(&breaks, 4);
        gl.integrate_panels(&sub, |x| self.eval(x).abs().powf(p))
            .powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        if let Some(pp) = self.piecewise() {
            return pp.sup_abs();
        }
        sampled_sup(self.support(), self.length_scale(), |x| self.eval(x))
    }

    /// `f^(x) = int f(x) e^{-i x xi} dx` where a closed form exists.
    pub fn fourier(&self, xi: f64) -> Option<Complex64> {
        let v = match &self.family {
            Family::Gaussian { center, width } => {
                let mag = width * (2.0 * std::f64::consts::PI).sqrt()
                    * (-0.5 * width * width * xi * xi).exp();
                Complex64::from_polar(mag, -center * xi)
            }
            Family::DilatedBspline { order, scale, shift } => {
                bspline_fourier(*order, xi / scale) * Complex64::from_polar(1.0 / scale, -shift * xi / scale)
            }
            Family::Indicator { a, b } => {
                if xi == 0.0 {
                    Complex64::new(b - a, 0.0)
                } else {
                    let ea = Complex64::from_polar(1.0, -a * xi);
                    let eb = Complex64::from_polar(1.0, -b * xi);
                    (ea - eb) / Complex64::new(0.0, xi)
                }
            }
            _ => return None,
        };
        Some(v * self.amplitude)
    }

    /// Human-readable description in the `family:args` syntax of [`FromStr`].
    pub fn describe(&self) -> String {
        let base = match &self.family {
            Family::Gaussian { center, width } => format!("gaussian:{center},{width}"),
            Family::DilatedBspline { order, scale, shift } => {
                format!("bspline:{order},{scale},{shift}")
            }
            Family::PolyBump { degree, a, b } => format!("polybump:{degree},{a},{b}"),
            Family::ModulatedBump { freq, a, b } => format!("modbump:{freq},{a},{b}"),
            Family::Indicator { a, b } => format!("indicator:{a},{b}"),
            Family::Piecewise(pp) => format!("piecewise:{}pieces", pp.num_pieces()),
        };
        if self.amplitude == 1.0 {
            base
        } else {
            format!("{}*{base}", self.amplitude)
        }
    }
}

/// Parses `indicator:a,b`, `gaussian:c,w`, `bspline:order,scale,shift`,
/// `polybump:deg,a,b` and `modbump:freq,a,b`.
impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse test function '{s}'"));
        let (name, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let want = |k: usize| if nums.len() == k { Ok(()) } else { Err(bad()) };
        let as_usize = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(bad())
            }
        };
        match name.trim() {
            "indicator" => {
                want(2)?;
                Self::indicator(nums[0], nums[1])
            }
            "gaussian" => {
                want(2)?;
                Self::gaussian(nums[0], nums[1])
            }
            "bspline" => {
                want(3)?;
                Self::bspline(as_usize(nums[0])?, nums[1], nums[2])
            }
            "polybump" => {
                want(3)?;
                Self::poly_bump(as_usize(nums[0])?, nums[1], nums[2])
            }
            "modbump" => {
                want(3)?;
                Self::modulated_bump(nums[0], nums[1], nums[2])
            }
            _ => Err(bad()),
        }
    }
}

/// Splits every panel of `breaks` into `parts` equal pieces.
fn refine(breaks: &[f64], parts: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(breaks.len() * parts);
    if let Some(&first) = breaks.first() {
        out.push(first);
    }
    for w in breaks.windows(2) {
        for k in 1..=parts {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / parts as f64);
        }
    }
    out
}

/// `sup |g|` over `[lo, hi]` from dense samples refined by golden-section
/// search around the best sample.
pub(crate) fn sampled_sup(support: (f64, f64), scale: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi) = support;
    if hi <= lo {
        return 0.0;
    }
    let step = (scale / 64.0).min((hi - lo) / 64.0);
    let count = ((hi - lo) / step).ceil() as usize;
    let mut best = (lo, g(lo).abs());
    for i in 0..=count {
        let x = (lo + i as f64 * step).min(hi);
        let v = g(x).abs();
        if v > best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c).abs() > g(d).abs() {
            b = d;
        } else {
            a = c;
        }
    }
    best.1.max(g(0.5 * (a + b)).abs())
}

/// `(f, member)` by Gauss-Legendre quadrature with `2(n + 3)` nodes on panels
/// that never straddle a knot of either factor; exact when `f` is itself a
/// piecewise polynomial.
pub fn pair(f: &TestFunction, sys: &SplineSystem, kind: MemberKind, idx: DyadicIndex) -> Result<f64> {
    let member = sys.member_pp(kind, idx)?;
    Ok(pair_pp(f, &member))
}

/// `int f m dx` for a piecewise-polynomial `m`.
pub fn pair_pp(f: &TestFunction, member: &PiecewisePoly) -> f64 {
    pair_pp_refined(f, member, 1)
}

/// As [`pair_pp`], with every quadrature panel split into `subdivide` parts.
pub fn pair_pp_refined(f: &TestFunction, member: &PiecewisePoly, subdivide: usize) -> f64 {
    if let Some(pp) = f.piecewise() {
        return pp.inner(member);
    }
    if member.is_empty() {
        return 0.0;
    }
    let (m0, m1) = member.window();
    let (f0, f1) = f.support();
    let lo = m0.max(f0);
    let hi = m1.min(f1);
    if hi <= lo {
        return 0.0;
    }
    let h = member.spacing();
    let first = ((lo - m0) / h).ceil() as usize;
    let last = ((hi - m0) / h).floor() as usize;
    let knots: Vec<f64> = (first..=last).map(|i| member.knot(i)).collect();
    let breaks = f.panels(lo, hi, &knots, h);
    let breaks = refine(&breaks, subdivide.max(1));
    let gl = GaussLegendre::new(2 * (member.degree() + 3));
    gl.integrate_panels(&breaks, |x| f.eval(x) * member.eval(x))
}

/// `b_l[m] = int f(x) B_n(2^l x - m) dx` over the indices where it can be
/// nonzero.
fn finest_bspline_moments(f: &TestFunction, order: usize, level: i32) -> Sequence {
    let a = 2f64.powi(level);
    let (lo, hi) = f.support();
    let m_lo = (a * lo).floor() as i64 - order as i64 - 1;
    let m_hi = (a * hi).ceil() as i64;
    let base = bspline_piecewise(order);
    let exact = f.piecewise();
    let gl = GaussLegendre::new(2 * (order + 3));
    let values: Vec<f64> = (m_lo..=m_hi)
        .into_par_iter()
        .map(|m| {
            let member = base.affine(a, m as f64);
            match &exact {
                Some(pp) => pp.inner(&member),
                None => {
                    let (x0, x1) = member.window();
                    let lo_m = x0.max(lo);
                    let hi_m = x1.min(hi);
                    if hi_m <= lo_m {
                        return 0.0;
                    }
                    let knots: Vec<f64> = member.knots();
                    let breaks = f.panels(lo_m, hi_m, &knots, 1.0 / a);
                    gl.integrate_panels(&breaks, |x| f.eval(x) * member.eval(x))
                }
            }
        })
        .collect();
    Sequence::new(m_lo, values)
}

/// One cascade step `b_l` from `b_{l+1}`.
fn coarsen(fine: &Sequence, order: usize) -> Sequence {
    let (f_lo, f_hi) = fine.range();
    // b_l[m] needs b_{l+1}[2m .. 2m + n + 1]
    let m_lo = (f_lo - order as i64 - 1).div_euclid(2);
    let m_hi = f_hi.div_euclid(2);
    let weights: Vec<f64> = (0..=order + 1)
        .map(|i| binomial(order + 1, i) * 0.5f64.powi(order as i32))
        .collect();
    let values = (m_lo..=m_hi)
        .map(|m| {
            weights
                .iter()
                .enumerate()
                .map(|(i, w)| w * fine.get(2 * m + i as i64))
                .sum()
        })
        .collect();
    Sequence::new(m_lo, values)
}

/// `sum_k c_k b[t + k]` for `t` in `[t_lo, t_hi]`, skipping zero products.
fn correlate(c: &Sequence, b: &Sequence, t_lo: i64, t_hi: i64) -> Vec<f64> {
    let (c_lo, c_hi) = c.range();
    let (b_lo, b_hi) = b.range();
    (t_lo..=t_hi)
        .into_par_iter()
        .map(|t| {
            let k_lo = c_lo.max(b_lo - t);
            let k_hi = c_hi.min(b_hi - t);
            (k_lo..=k_hi).map(|k| c.get(k) * b.get(t + k)).sum()
        })
        .collect()
}

/// The oversampled coefficient table `s_{j,mu}(f)` for `j = -1..=j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCoefficients {
    order: usize,
    j_max: i32,
    tol: f64,
    tail_bound: f64,
    rows: Vec<ScaleRow>,
    pairings: Vec<ScaleRow>,
}

impl FrameCoefficients {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Bound on any coefficient outside the stored windows.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Rows `j = -1..=j_max` of `s_{j,mu}`.
    pub fn rows(&self) -> &[ScaleRow] {
        &self.rows
    }

    pub fn row(&self, j: i32) -> Option<&ScaleRow> {
        self.rows.get((j + 1) as usize)
    }

    pub fn value(&self, j: i32, mu: i64) -> f64 {
        self.row(j).map_or(0.0, |r| r.get(mu))
    }

    /// Signed pairings: `(f, psi(2^j . - nu/2))` indexed by `nu` for
    /// `j >= 0`, and `(f, Psi(. - mu))` indexed by `mu` for `j = -1`.
    pub fn pairings(&self, j: i32) -> Option<&ScaleRow> {
        self.pairings.get((j + 1) as usize)
    }

    pub fn to_table(&self) -> CoefficientTable {
        CoefficientTable::new(self.rows.clone())
    }

    /// Non-oversampled coefficients `omega_{j,mu} = 2^j (f, psi_{j,mu})`,
    /// with `omega_{-1,mu} = (f, Psi(. - mu)) / sqrt(2)`.
    pub fn basis_table(&self) -> CoefficientTable {
        let rows = self
            .pairings
            .iter()
            .map(|p| {
                if p.j < 0 {
                    return ScaleRow::new(
                        p.j,
                        p.mu_min,
                        p.values.iter().map(|v| v * std::f64::consts::FRAC_1_SQRT_2).collect(),
                    );
                }
                let scale = 2f64.powi(p.j);
                let mu_lo = p.mu_min.div_euclid(2) + (p.mu_min.rem_euclid(2) != 0) as i64;
                let mu_hi = (p.mu_min + p.values.len() as i64 - 1).div_euclid(2);
                let values = (mu_lo..=mu_hi).map(|mu| scale * p.get(2 * mu)).collect();
                ScaleRow::new(p.j, mu_lo, values)
            })
            .collect();
        CoefficientTable::new(rows)
    }

    /// CSV with a `#` metadata line and columns `j,mu,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# n={} J_max={} tol={:e} tail_bound={:e}",
            self.order, self.j_max, self.tol, self.tail_bound
        );
        out.push_str("j,mu,value\n");
        for row in &self.rows {
            for (mu, v) in row.iter() {
                let _ = writeln!(out, "{},{},{:.16e}", row.j, mu, v);
            }
        }
        out
    }
}

/// Computes `s_{j,mu}(f)` for `j = -1..=j_max`.
///
/// At scale `j` the translations kept are those whose member center lies
/// within `R_j = gamma^{-1} log(2^{j+1} C_0 ||f||_1 / tol)` (in member units)
/// of `f`'s support, so that every omitted `s_{j,mu}` is at most `tol` by
/// the exponential envelope of the system.
pub fn frame_coefficients(
    f: &TestFunction,
    sys: &SplineSystem,
    j_max: i32,
    tol: f64,
) -> Result<FrameCoefficients> {
    if j_max < -1 {
        return Err(Error::InvalidParameter(format!("J_max = {j_max} is below -1")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = sys.order();
    let fit = sys.decay();
    let l1 = f.l1_norm();
    let (lo, hi) = f.support();
    let (w0, w1) = sys.wavelet_pp().window();
    let (s0, s1) = sys.scaling_pp().window();
    let radius = |j: i32| {
        if l1 == 0.0 {
            return 0.0;
        }
        let weight = 2f64.powi(j + 1);
        ((weight * fit.c * l1 / tol).ln() / fit.gamma).max(0.0)
    };

    let finest = j_max + 1;
    let mut levels: Vec<Sequence> = vec![finest_bspline_moments(f, n, finest)];
    for _ in 0..finest {
        let next = coarsen(levels.last().unwrap(), n);
        levels.push(next);
    }
    levels.reverse(); // levels[l] = b_l

    let mut rows = Vec::with_capacity((j_max + 2) as usize);
    let mut pairings = Vec::with_capacity((j_max + 2) as usize);

    // j = -1: (f, Psi(. - mu))
    {
        let r = radius(-1);
        let mu_lo = (lo - r).max(lo - s1).ceil() as i64;
        let mu_hi = (hi + r).min(hi - s0).floor() as i64;
        let vals = if mu_hi >= mu_lo {
            correlate(sys.scaling_coeffs(), &levels[0], mu_lo, mu_hi)
        } else {
            Vec::new()
        };
        rows.push(ScaleRow::new(-1, mu_lo, vals.iter().map(|v| v.abs()).collect()));
        pairings.push(ScaleRow::new(-1, mu_lo, vals));
    }
    for j in 0..=j_max {
        let a = 2f64.powi(j);
        let r = radius(j);
        let half_lo = (a * lo - r).max(a * lo - w1);
        let half_hi = (a * hi + r).min(a * hi - w0);
        let (mu_lo, mu_hi) = if half_hi >= half_lo {
            (
                ((2.0 * half_lo).ceil() as i64).div_euclid(2),
                ((2.0 * half_hi).floor() as i64).div_euclid(2),
            )
        } else {
            (0, -1)
        };
        let nu_lo = 2 * mu_lo;
        let nu_hi = 2 * mu_hi + 1;
        let c = if mu_hi >= mu_lo {
            correlate(sys.wavelet_coeffs(), &levels[(j + 1) as usize], nu_lo, nu_hi)
        } else {
            Vec::new()
        };
        let s: Vec<f64> = c.chunks_exact(2).map(|p| a * (p[0].abs() + p[1].abs())).collect();
        rows.push(ScaleRow::new(j, mu_lo, s));
        pairings.push(ScaleRow::new(j, nu_lo, c));
    }

    let mut tail_bound = if l1 == 0.0 { 0.0 } else { tol };
    if let Family::Gaussian { width, .. } = f.family() {
        // mass beyond the cutoff, bounded by 2 e^{-c^2/2} / c in units of width
        let mass = f.amplitude().abs() * width * 2.0 * (-0.5 * GAUSSIAN_CUTOFF * GAUSSIAN_CUTOFF).exp()
            / GAUSSIAN_CUTOFF;
        let sup = sys.wavelet_pp().sup_abs().max(sys.scaling_pp().sup_abs());
        tail_bound += 2f64.powi(j_max + 1) * sup * mass;
    }

    Ok(FrameCoefficients {
        order: n,
        j_max,
        tol,
        tail_bound,
        rows,
        pairings,
    })
}

/// Non-oversampled coefficient table `omega_{j,mu}(f) = 2^j (f, psi_{j,mu})`.
pub fn basis_coefficients(
    f: &TestFunction,
    sys: &SplineSystem,
    j_max: i32,
    tol: f64,
) -> Result<CoefficientTable> {
    Ok(frame_coefficients(f, sys, j_max, tol)?.basis_table())
}
