//! Littlewood-Paley reference norms computed on the Fourier side.
//!
//! The partition is built from a smooth step `chi` that equals 1 on
//! `|xi| <= c` and 0 on `|xi| >= 2c`:
//!
//! ```text
//! phi_0^(xi) = sqrt(chi(xi)),  phi_k^(xi) = sqrt(chi(2^-k xi) - chi(2^-k+1 xi))
//! ```
//!
//! so that `sum_{k<=K} |phi_k^|^2 = chi(2^-K xi)`. The reconstruction symbols
//! use a second step `eta` with its transition inside `(1.1c, 1.9c)`:
//! `Lambda_k^ = (eta(2^-k xi) - eta(2^-k+1 xi)) / phi_k^`, and
//! `sum_k phi_k^ Lambda_k^` telescopes to `eta(2^-K xi)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analysis::TestFunction;
use crate::error::{Error, Result};
use crate::norms::{Exponent, NormParams, Space};

/// Default number of grid samples.
pub const DEFAULT_GRID_SAMPLES: usize = 1 << 16;
/// Default margin added around the support of `f`.
pub const DEFAULT_MARGIN: f64 = 20.0;

/// `e^{-1/t}`-based smooth step from 0 at `u <= 0` to 1 at `u >= 1`.
fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

/// Dyadic square partition of unity with `levels + 1` pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    /// Inner radius `c` of the transition band `(c, 2c)` of `chi`.
    pub c: f64,
    /// Transition band of `eta` as fractions of `c`.
    pub eta_band: (f64, f64),
    /// Number of annular levels `K`.
    pub levels: usize,
}

impl DyadicPartition {
    pub fn new(levels: usize) -> Self {
        Self {
            c: PI,
            eta_band: (1.1, 1.9),
            levels,
        }
    }

    pub fn chi(&self, xi: f64) -> f64 {
        1.0 - smooth_step((xi.abs() - self.c) / self.c)
    }

    pub fn eta(&self, xi: f64) -> f64 {
        let (a, b) = self.eta_band;
        1.0 - smooth_step((xi.abs() - a * self.c) / ((b - a) * self.c))
    }

    /// `phi_k^(xi)`.
    pub fn phi(&self, k: usize, xi: f64) -> f64 {
        if k == 0 {
            return self.chi(xi).sqrt();
        }
        let s = 0.5f64.powi(k as i32);
        (self.chi(s * xi) - self.chi(2.0 * s * xi)).max(0.0).sqrt()
    }

    /// `Lambda_k^(xi)`.
    pub fn lambda(&self, k: usize, xi: f64) -> f64 {
        let num = if k == 0 {
            self.eta(xi)
        } else {
            let s = 0.5f64.powi(k as i32);
            self.eta(s * xi) - self.eta(2.0 * s * xi)
        };
        if num == 0.0 {
            0.0
        } else {
            num / self.phi(k, xi)
        }
    }

    /// Frequency band `[lo, hi]` supporting `phi_k^`.
    pub fn annulus(&self, k: usize) -> (f64, f64) {
        if k == 0 {
            (0.0, 2.0 * self.c)
        } else {
            let s = 2f64.powi(k as i32);
            (0.5 * s * self.c, 2.0 * s * self.c)
        }
    }

    /// Largest frequency touched by the partition.
    pub fn max_frequency(&self) -> f64 {
        self.annulus(self.levels).1
    }

    /// Most levels a grid can resolve.
    pub fn max_levels(grid: &GridSpec) -> usize {
        let nyquist = PI / grid.spacing();
        let mut k = 0;
        while Self::new(k + 1).max_frequency() <= nyquist {
            k += 1;
        }
        k
    }
}

/// A uniform sampling grid `x_i = lo + i h`, `i = 0..samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, samples: usize) -> Result<Self> {
        if !(hi > lo) || samples < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid [{lo}, {hi}] with {samples} samples"
            )));
        }
        Ok(Self { lo, hi, samples })
    }

    /// A grid centered on `f`'s support, widened by `margin` on each side.
    pub fn for_function(f: &TestFunction, samples: usize, margin: f64) -> Result<Self> {
        let (a, b) = f.support();
        let mid = 0.5 * (a + b);
        let radius = 0.5 * (b - a) + margin;
        Self::new(mid - radius, mid + radius, samples)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.samples as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.samples).map(move |i| self.lo + i as f64 * h)
    }

    /// Angular frequency of DFT bin `m`.
    fn frequency(&self, m: usize) -> f64 {
        let n = self.samples as i64;
        let k = if (m as i64) <= n / 2 { m as i64 } else { m as i64 - n };
        2.0 * PI * k as f64 / (self.hi - self.lo)
    }

    /// Rejects partitions reaching past the Nyquist frequency.
    pub fn check(&self, partition: &DyadicPartition) -> Result<()> {
        let needed = partition.max_frequency();
        let nyquist = PI / self.spacing();
        if needed > nyquist {
            return Err(Error::Resolution {
                spacing: self.spacing(),
                levels: partition.levels,
                required: PI / needed,
            });
        }
        Ok(())
    }

    fn sample(&self, f: &TestFunction) -> Vec<f64> {
        self.points().map(|x| f.eval(x)).collect()
    }

    fn l2(&self, v: &[f64]) -> f64 {
        (self.spacing() * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }
}

/// Band-limited pieces of one function on a grid.
#[derive(Debug, Clone)]
pub struct Pieces {
    pub grid: GridSpec,
    pub partition: DyadicPartition,
    /// `pieces[k][i]` is the value at grid point `i` of piece `k`.
    pub pieces: Vec<Vec<f64>>,
}

fn spectrum(grid: &GridSpec, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::<f64>::new()
        .plan_fft_forward(grid.samples)
        .process(&mut buf);
    buf
}

fn filtered(grid: &GridSpec, spec: &[Complex64], symbol: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut buf: Vec<Complex64> = spec
        .iter()
        .enumerate()
        .map(|(m, c)| c * symbol(grid.frequency(m)))
        .collect();
    FftPlanner::<f64>::new()
        .plan_fft_inverse(grid.samples)
        .process(&mut buf);
    let scale = 1.0 / grid.samples as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

fn pieces_with(
    f: &TestFunction,
    levels: usize,
    grid: &GridSpec,
    symbol: impl Fn(&DyadicPartition, usize, f64) -> f64 + Sync,
) -> Result<Pieces> {
    let partition = DyadicPartition::new(levels);
    grid.check(&partition)?;
    let spec = spectrum(grid, &grid.sample(f));
    let pieces = (0..=levels)
        .into_par_iter()
        .map(|k| filtered(grid, &spec, |xi| symbol(&partition, k, xi)))
        .collect();
    Ok(Pieces {
        grid: *grid,
        partition,
        pieces,
    })
}

/// `L_k f` for `k = 0..=levels`.
pub fn lp_pieces(f: &TestFunction, levels: usize, grid: &GridSpec) -> Result<Pieces> {
    pieces_with(f, levels, grid, |p, k, xi| p.phi(k, xi))
}

/// `Lambda_k f` for `k = 0..=levels`.
pub fn lambda_pieces(f: &TestFunction, levels: usize, grid: &GridSpec) -> Result<Pieces> {
    pieces_with(f, levels, grid, |p, k, xi| p.lambda(k, xi))
}

fn grid_lp(h: f64, v: &[f64], p: Exponent) -> f64 {
    match p {
        Exponent::Infinite => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        Exponent::Finite(p) => (h * v.iter().map(|x| x.abs().powf(p)).sum::<f64>()).powf(1.0 / p),
    }
}

impl Pieces {
    /// `||piece_k||_p` for every level.
    pub fn level_norms(&self, p: Exponent) -> Vec<f64> {
        let h = self.grid.spacing();
        self.pieces.iter().map(|v| grid_lp(h, v, p)).collect()
    }

    /// The `l_q(L_p)` or `L_p(l_q)` aggregation of `2^{ks}` times the pieces.
    pub fn aggregate(&self, params: &NormParams) -> Result<f64> {
        let h = self.grid.spacing();
        let w: Vec<f64> = (0..self.pieces.len())
            .map(|k| 2f64.powf(k as f64 * params.s))
            .collect();
        match params.space {
            Space::Besov | Space::SobolevEndpoint => {
                let terms = self.level_norms(params.p).into_iter().zip(&w).map(|(a, b)| a * b);
                Ok(match params.q {
                    Exponent::Infinite => terms.fold(0.0, f64::max),
                    Exponent::Finite(q) => terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q),
                })
            }
            Space::TriebelLizorkin => {
                let n = self.grid.samples;
                let inner: Vec<f64> = (0..n)
                    .map(|i| {
                        let vals = self.pieces.iter().zip(&w).map(|(v, wk)| wk * v[i].abs());
                        match params.q {
                            Exponent::Infinite => vals.fold(0.0, f64::max),
                            Exponent::Finite(q) => vals.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q),
                        }
                    })
                    .collect();
                if params.p.is_infinite() {
                    return Err(Error::InvalidParameter(
                        "Triebel-Lizorkin reference norm requires finite p".into(),
                    ));
                }
                Ok(grid_lp(h, &inner, params.p))
            }
        }
    }

    /// CSV rows `k,norm` of `||piece_k||_p`.
    pub fn to_csv(&self, p: Exponent) -> String {
        let mut out = format!(
            "# c={:.16e} eta_band=({},{}) levels={} samples={} window=[{},{}]\nk,norm\n",
            self.partition.c,
            self.partition.eta_band.0,
            self.partition.eta_band.1,
            self.partition.levels,
            self.grid.samples,
            self.grid.lo,
            self.grid.hi
        );
        for (k, v) in self.level_norms(p).iter().enumerate() {
            let _ = writeln!(out, "{k},{v:.16e}");
        }
        out
    }
}

/// Littlewood-Paley reference norm of `f` built from the `L_k` pieces.
pub fn reference_norm(f: &TestFunction, params: &NormParams, levels: usize, grid: &GridSpec) -> Result<f64> {
    lp_pieces(f, levels, grid)?.aggregate(params)
}

/// As [`reference_norm`], from the `Lambda_k` pieces.
pub fn lambda_reference_norm(
    f: &TestFunction,
    params: &NormParams,
    levels: usize,
    grid: &GridSpec,
) -> Result<f64> {
    lambda_pieces(f, levels, grid)?.aggregate(params)
}

/// `||f - sum_{k<=K} L_k(Lambda_k f)||_2 / ||f||_2` (absolute when `f = 0`).
pub fn lp_reconstruct(f: &TestFunction, levels: usize, grid: &GridSpec) -> Result<f64> {
    let partition = DyadicPartition::new(levels);
    grid.check(&partition)?;
    let values = grid.sample(f);
    let spec = spectrum(grid, &values);
    let recon = filtered(grid, &spec, |xi| {
        (0..=levels)
            .map(|k| partition.phi(k, xi) * partition.lambda(k, xi))
            .sum()
    });
    let diff: Vec<f64> = values.iter().zip(&recon).map(|(a, b)| a - b).collect();
    let err = grid.l2(&diff);
    let norm = grid.l2(&values);
    Ok(if norm == 0.0 { err } else { err / norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gaussian_grid(f: &TestFunction) -> GridSpec {
        GridSpec::for_function(f, 1 << 14, 20.0).unwrap()
    }

    #[test]
    fn square_partition_of_unity() {
        let p = DyadicPartition::new(8);
        for i in 0..5000 {
            let xi = -p.max_frequency() * 0.49 + i as f64 * p.max_frequency() * 0.49 / 2500.0;
            let total: f64 = (0..=8).map(|k| p.phi(k, xi).powi(2)).sum();
            assert!((total - 1.0).abs() <= 1e-12, "xi={xi} total={total}");
        }
    }

    #[test]
    fn annuli_contain_the_symbols() {
        let p = DyadicPartition::new(6);
        for k in 1..=6 {
            let (lo, hi) = p.annulus(k);
            assert_eq!(p.phi(k, 0.999 * lo), 0.0);
            assert_eq!(p.phi(k, 1.001 * hi), 0.0);
            assert!(p.phi(k, 0.5 * (lo + hi)) > 0.0);
        }
    }

    #[test]
    fn lambda_telescopes() {
        let p = DyadicPartition::new(5);
        for i in 0..3000 {
            let xi = i as f64 * 0.05;
            let total: f64 = (0..=5).map(|k| p.phi(k, xi) * p.lambda(k, xi)).sum();
            assert!((total - p.eta(xi / 32.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_function() {
        let f = TestFunction::zero();
        let grid = GridSpec::new(-10.0, 10.0, 1 << 12).unwrap();
        let pieces = lp_pieces(&f, 5, &grid).unwrap();
        assert!(pieces.pieces.iter().flatten().all(|v| *v == 0.0));
        let pr = NormParams::besov(1, 0.5, 2.0, 2.0).unwrap();
        assert_eq!(reference_norm(&f, &pr, 5, &grid).unwrap(), 0.0);
        assert_eq!(lp_reconstruct(&f, 5, &grid).unwrap(), 0.0);
    }

    #[test]
    fn band_limited_input_stays_in_its_level() {
        // A slowly windowed carrier at frequency 8 pi sits inside level 3's
        // annulus (4 pi, 16 pi), far from the edges of levels 1 and 5.
        let grid = GridSpec::new(-40.0, 40.0, 1 << 15).unwrap();
        let carrier = TestFunction::modulated_bump(8.0 * PI, -12.0, 12.0).unwrap();
        let pieces = lp_pieces(&carrier, 7, &grid).unwrap();
        let norms = pieces.level_norms(Exponent::Finite(2.0));
        let total: f64 = norms.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (k, v) in norms.iter().enumerate() {
            if (k as i64 - 3).abs() >= 2 {
                assert!(v / total <= 1e-8, "k={k} rel={:e}", v / total);
            }
        }
    }

    #[test]
    fn plancherel_split() {
        let f = TestFunction::gaussian(0.3, 0.2).unwrap();
        let grid = gaussian_grid(&f);
        let levels = DyadicPartition::max_levels(&grid);
        let pieces = lp_pieces(&f, levels, &grid).unwrap();
        let split: f64 = pieces.level_norms(Exponent::Finite(2.0)).iter().map(|v| v * v).sum();
        let direct = grid.l2(&grid.sample(&f)).powi(2);
        assert!((split - direct).abs() <= 1e-8, "{split} vs {direct}");
    }

    #[test]
    fn triebel_s0_p2_q2_is_l2() {
        let f = TestFunction::gaussian(-0.4, 0.3).unwrap();
        let grid = gaussian_grid(&f);
        let levels = DyadicPartition::max_levels(&grid);
        let pr = NormParams::triebel(1, 0.0, 2.0, 2.0).unwrap();
        let v = reference_norm(&f, &pr, levels, &grid).unwrap();
        // exact L2 norm of the Gaussian
        let exact = (0.3 * PI.sqrt()).sqrt();
        assert_relative_eq!(v, exact, epsilon = 1e-6);
    }

    /// Relative out-of-band mass `(int |f^|^2 (1 - eta(2^-K xi))^2 / int |f^|^2)^(1/2)`
    /// of a centered Gaussian, by composite Simpson on the frequency axis.
    fn gaussian_tail_oracle(width: f64, levels: usize) -> f64 {
        let p = DyadicPartition::new(levels);
        let spec = |xi: f64| (-width * width * xi * xi).exp();
        let hi = 40.0 / width;
        let n = 200_000;
        let h = hi / n as f64;
        let simpson = |g: &dyn Fn(f64) -> f64| {
            let mut acc = g(0.0) + g(hi);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
            }
            acc * h / 3.0
        };
        let s = 0.5f64.powi(levels as i32);
        let tail = simpson(&|xi| spec(xi) * (1.0 - p.eta(s * xi)).powi(2));
        (tail / simpson(&spec)).sqrt()
    }

    #[test]
    fn gaussian_reconstruction() {
        let f = TestFunction::gaussian(0.0, 0.5).unwrap();
        let grid = GridSpec::new(-20.0, 20.0, 1 << 19).unwrap();
        let r = lp_reconstruct(&f, 12, &grid).unwrap();
        assert!(r <= 1e-6, "residual {r:e}");
        assert!((r - gaussian_tail_oracle(0.5, 12)).abs() <= 1e-10);
    }

    #[test]
    fn reconstruction_residual_is_the_spectral_tail() {
        let f = TestFunction::gaussian(0.0, 0.2).unwrap();
        let grid = GridSpec::new(-20.0, 20.0, 1 << 12).unwrap();
        let r = lp_reconstruct(&f, 2, &grid).unwrap();
        let oracle = gaussian_tail_oracle(0.2, 2);
        assert!(oracle > 1e-4);
        assert_relative_eq!(r, oracle, max_relative = 1e-6);
    }

    #[test]
    fn dilation_slope() {
        let pr = NormParams::besov(1, 1.0, 2.0, 2.0).unwrap();
        let grid = GridSpec::new(-16.0, 16.0, 1 << 18).unwrap();
        let pts: Vec<(f64, f64)> = (3..=8)
            .map(|m| {
                let f = TestFunction::gaussian(0.0, 1.0).unwrap().dilate(2f64.powi(m));
                (m as f64, reference_norm(&f, &pr, 12, &grid).unwrap().log2())
            })
            .collect();
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
        let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        assert!((slope - 0.5).abs() <= 0.05 * 0.5, "slope {slope}");
    }

    #[test]
    fn band_limited_reconstruction_is_exact() {
        let f = TestFunction::gaussian(0.0, 1.0).unwrap();
        let grid = GridSpec::new(-30.0, 30.0, 1 << 12).unwrap();
        assert!(lp_reconstruct(&f, 4, &grid).unwrap() <= 1e-10);
    }

    #[test]
    fn resolution_error_names_required_spacing() {
        let grid = GridSpec::new(-10.0, 10.0, 256).unwrap();
        let f = TestFunction::gaussian(0.0, 1.0).unwrap();
        match lp_pieces(&f, 10, &grid) {
            Err(Error::Resolution { required, .. }) => {
                assert!(required < grid.spacing());
                assert_relative_eq!(required, PI / DyadicPartition::new(10).max_frequency());
            }
            other => panic!("expected a resolution error, got {other:?}"),
        }
    }

    #[test]
    fn lambda_norms_are_comparable() {
        let pr = NormParams::besov(1, 0.5, 2.0, 2.0).unwrap();
        for f in [
            TestFunction::gaussian(0.0, 0.3).unwrap(),
            TestFunction::bspline(3, 2.0, 0.0).unwrap(),
            TestFunction::modulated_bump(6.0, -1.0, 1.0).unwrap(),
        ] {
            let grid = GridSpec::for_function(&f, 1 << 15, 20.0).unwrap();
            let a = reference_norm(&f, &pr, 8, &grid).unwrap();
            let b = lambda_reference_norm(&f, &pr, 8, &grid).unwrap();
            assert!((0.5..=2.0).contains(&(a / b)), "{f:?} ratio {}", a / b);
        }
    }

    #[test]
    fn csv_export() {
        let f = TestFunction::gaussian(0.0, 1.0).unwrap();
        let grid = GridSpec::new(-20.0, 20.0, 1 << 10).unwrap();
        let csv = lp_pieces(&f, 3, &grid).unwrap().to_csv(Exponent::Finite(2.0));
        assert_eq!(csv.lines().nth(1), Some("k,norm"));
        assert_eq!(csv.lines().count(), 6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn grid_refinement_is_stable(c in -1.0f64..1.0, w in 0.3f64..1.0) {
            let f = TestFunction::gaussian(c, w).unwrap();
            let pr = NormParams::besov(1, 1.0, 2.0, 2.0).unwrap();
            let coarse = GridSpec::for_function(&f, 1 << 13, 20.0).unwrap();
            let fine = GridSpec::for_function(&f, 1 << 14, 20.0).unwrap();
            let a = reference_norm(&f, &pr, 6, &coarse).unwrap();
            let b = reference_norm(&f, &pr, 6, &fine).unwrap();
            prop_assert!((a - b).abs() <= 1e-4 * b);
        }
    }
}
