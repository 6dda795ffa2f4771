//! Gram matrices of the oversampled system, least-squares representation of
//! `B_{2n+1}^{(n+1)}(2x)` by oversampled wavelets, and the projections `E_N`
//! onto the scale spaces.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::analysis::{pair_pp, TestFunction};
use crate::blsystem::{decay_fit, DecayFit, DyadicIndex, MemberKind, Sequence, SplineSystem};
use crate::bspline::bspline_difference;
use crate::error::{Error, Result};
use crate::piecewise::PiecewisePoly;

/// Ridge parameter of the normal equations.
pub const RIDGE: f64 = 1e-10;
/// Iterated-Tikhonov refinement steps after the first ridge solve.
pub const REFINEMENT_STEPS: usize = 3;
/// Eigenvalue ratio below which a least-squares result carries a warning.
pub const CONDITION_WARNING: f64 = 1e-12;

fn oversampled_members(sys: &SplineSystem, j: i32, window: &RangeInclusive<i64>) -> Result<Vec<PiecewisePoly>> {
    window
        .clone()
        .map(|l| sys.member_pp(MemberKind::Oversampled, DyadicIndex::new(j, l)))
        .collect()
}

fn gram_of(members: &[PiecewisePoly]) -> DMatrix<f64> {
    let n = members.len();
    let upper: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| (a..n).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, members[a].inner(&members[b])))
        .collect();
    let mut g = DMatrix::zeros(n, n);
    for (a, b, v) in upper {
        g[(a, b)] = v;
        g[(b, a)] = v;
    }
    g
}

/// `(psi~_{j,l}, psi~_{j,l'})` for `l, l'` in `window`, row/column `i`
/// standing for `l = window.start() + i`.
pub fn gram_matrix(sys: &SplineSystem, j: i32, window: RangeInclusive<i64>) -> Result<DMatrix<f64>> {
    if window.is_empty() {
        return Err(Error::InvalidParameter("empty index window".into()));
    }
    Ok(gram_of(&oversampled_members(sys, j, &window)?))
}

/// `B_{2n+1}^{(n+1)}(2x)`, built exactly as an alternating binomial
/// combination of shifted `B_n`.
pub fn crux_target(order: usize) -> PiecewisePoly {
    bspline_difference(2 * order + 1, order + 1).affine(2.0, 0.0)
}

/// Result of [`frame_least_squares`].
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// `q_l` over the requested window.
    pub coeffs: Sequence,
    /// `||target - sum_l q_l psi~_{0,l}||_2`, computed exactly.
    pub residual: f64,
    /// Residual of the same fit with the ridge parameter scaled by 10.
    pub residual_ridge_x10: f64,
    /// Smallest over largest Gram eigenvalue.
    pub eigen_ratio: f64,
    pub warning: Option<String>,
}

impl LeastSquares {
    /// Exponential envelope fitted to `|q_l|`.
    pub fn decay(&self) -> Result<DecayFit> {
        let samples: Vec<(f64, f64)> = self.coeffs.iter().map(|(l, q)| (l as f64, q.abs())).collect();
        decay_fit(&samples)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# residual={:.6e} eigen_ratio={:.3e}\nell,q\n", self.residual, self.eigen_ratio);
        for (l, q) in self.coeffs.iter() {
            let _ = writeln!(out, "{l},{q:.16e}");
        }
        out
    }
}

fn ridge_solve(gram: &DMatrix<f64>, rhs: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = gram.nrows();
    let shifted = gram + DMatrix::identity(n, n) * lambda;
    let chol = shifted.cholesky().ok_or_else(|| {
        Error::InvalidParameter("regularized Gram matrix is not positive definite".into())
    })?;
    let mut q = chol.solve(rhs);
    for _ in 0..REFINEMENT_STEPS {
        q = chol.solve(&(rhs + &q * lambda));
    }
    Ok(q)
}

fn combination(members: &[PiecewisePoly], q: &DVector<f64>, target: &PiecewisePoly) -> Result<PiecewisePoly> {
    let mut terms: Vec<(f64, &PiecewisePoly)> = vec![(1.0, target)];
    terms.extend(q.iter().zip(members).map(|(&c, m)| (-c, m)));
    PiecewisePoly::linear_combination(&terms)
}

/// Least-squares `q` minimizing `||target - sum_l q_l psi~_{0,l}||_2` over
/// `l` in `window`, via ridge-regularized normal equations.
pub fn frame_least_squares(
    sys: &SplineSystem,
    target: &PiecewisePoly,
    window: RangeInclusive<i64>,
) -> Result<LeastSquares> {
    if window.is_empty() {
        return Err(Error::InvalidParameter("empty index window".into()));
    }
    let members = oversampled_members(sys, 0, &window)?;
    let gram = gram_of(&members);
    let rhs = DVector::from_iterator(members.len(), members.iter().map(|m| target.inner(m)));

    let eig = gram.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let eigen_ratio = if max > 0.0 { min / max } else { 0.0 };

    let residual_of = |q: &DVector<f64>| -> Result<f64> { Ok(combination(&members, q, target)?.lp_norm(2.0)) };
    let q = ridge_solve(&gram, &rhs, RIDGE)?;
    let residual = residual_of(&q)?;
    let residual_ridge_x10 = residual_of(&ridge_solve(&gram, &rhs, 10.0 * RIDGE)?)?;

    let warning = (eigen_ratio < CONDITION_WARNING).then(|| {
        format!("Gram matrix is nearly singular (eigenvalue ratio {eigen_ratio:.2e}); regularized solution reported")
    });
    Ok(LeastSquares {
        coeffs: Sequence::new(*window.start(), q.iter().copied().collect()),
        residual,
        residual_ridge_x10,
        eigen_ratio,
        warning,
    })
}

/// `E_N f = sum_mu 2^N (f, Psi_{N,mu}) Psi_{N,mu}` with `Psi_{N,mu} = Psi(2^N x - mu)`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub scale: i32,
    pub coeffs: Sequence,
    /// Exact piecewise form of `E_N f`.
    pub function: PiecewisePoly,
}

impl Projection {
    pub fn eval(&self, x: f64) -> f64 {
        self.function.eval(x)
    }

    pub fn sample(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&x| self.eval(x)).collect()
    }

    pub fn to_csv(&self, grid: &[f64]) -> String {
        let mut out = format!("# N={}\nx,value\n", self.scale);
        for &x in grid {
            let _ = writeln!(out, "{x:.16e},{:.16e}", self.eval(x));
        }
        out
    }
}

/// Indices `mu` whose `Psi_{N,mu}` can overlap the support of `f`.
pub fn projection_window(f: &TestFunction, sys: &SplineSystem, scale: i32) -> RangeInclusive<i64> {
    let a = 2f64.powi(scale);
    let (lo, hi) = f.support();
    let (s0, s1) = sys.scaling_pp().window();
    (a * lo - s1).floor() as i64..=(a * hi - s0).ceil() as i64
}

pub fn projection_en(
    f: &TestFunction,
    sys: &SplineSystem,
    scale: i32,
    window: RangeInclusive<i64>,
) -> Result<Projection> {
    if scale < 0 {
        return Err(Error::InvalidParameter(format!("projection scale must be nonnegative, got {scale}")));
    }
    let a = 2f64.powi(scale);
    let members: Vec<PiecewisePoly> = window.clone().map(|mu| sys.scaling_pp().affine(a, mu as f64)).collect();
    let coeffs: Vec<f64> = members.par_iter().map(|m| a * pair_pp(f, m)).collect();
    let terms: Vec<(f64, &PiecewisePoly)> = coeffs.iter().copied().zip(&members).collect();
    let function = PiecewisePoly::linear_combination(&terms)?;
    Ok(Projection {
        scale,
        coeffs: Sequence::new(*window.start(), coeffs),
        function,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blsystem::build_system;
    use crate::quadrature::GaussLegendre;
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn system(n: usize) -> &'static SplineSystem {
        static CACHE: OnceLock<Vec<SplineSystem>> = OnceLock::new();
        &CACHE.get_or_init(|| (0..=3).map(|n| build_system(n, Some(40), 4096).unwrap()).collect())[n]
    }

    #[test]
    fn haar_neighbour_entry() {
        let g = gram_matrix(system(0), 0, 0..=1).unwrap();
        // oracle: h = 1 on [0, 1/2), -1 on [1/2, 1); the shifted copy is 1 on
        // [1/2, 1), so the overlap integrates -1 over a half unit
        let gl = GaussLegendre::new(4);
        let h = |x: f64| if (0.0..0.5).contains(&x) { 1.0 } else if (0.5..1.0).contains(&x) { -1.0 } else { 0.0 };
        let oracle = gl.integrate(0.5, 1.0, |x| h(x) * h(x - 0.5));
        assert_relative_eq!(g[(0, 1)], oracle, epsilon = 1e-14);
        assert_relative_eq!(g[(0, 1)], -0.5, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_and_even_block() {
        for n in 0..=2 {
            for j in 0..=2 {
                let g = gram_matrix(system(n), j, -6..=6).unwrap();
                let scale = 0.5f64.powi(j);
                for a in 0..13 {
                    assert!((g[(a, a)] - scale).abs() <= 1e-8, "n={n} j={j}");
                    for b in (0..13).step_by(2) {
                        if a % 2 == 0 && a != b {
                            assert!(g[(a, b)].abs() <= 1e-8, "n={n} j={j} ({a},{b})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gram_is_symmetric_psd_toeplitz() {
        let g = gram_matrix(system(2), 0, -8..=8).unwrap();
        assert_eq!(g, g.transpose());
        let min = g.clone().symmetric_eigenvalues().min();
        assert!(min >= -1e-10);
        for a in 1..17 {
            for b in 1..17 {
                assert!((g[(a, b)] - g[(a - 1, b - 1)]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn haar_crux_is_exact() {
        let ls = frame_least_squares(system(0), &crux_target(0), -10..=10).unwrap();
        assert!(ls.residual <= 1e-12, "{}", ls.residual);
        for (l, q) in ls.coeffs.iter() {
            let expect = if l == 0 { 1.0 } else { 0.0 };
            assert!((q - expect).abs() <= 1e-9, "l={l} q={q}");
        }
    }

    #[test]
    fn crux_residual_shrinks_with_window() {
        for n in 1..=2 {
            let mut last = f64::INFINITY;
            for w in [5, 10, 20, 30] {
                let ls = frame_least_squares(system(n), &crux_target(n), -w..=w).unwrap();
                assert!(ls.residual <= last * (1.0 + 1e-9) + 1e-13, "n={n} w={w}");
                last = ls.residual;
            }
            assert!(last <= 1e-4, "n={n} residual {last:e}");
        }
    }

    #[test]
    fn crux_coefficients_decay() {
        let ls = frame_least_squares(system(1), &crux_target(1), -30..=30).unwrap();
        assert!(ls.decay().unwrap().gamma > 0.0);
        assert!(ls.residual_ridge_x10.is_finite());
        assert!(ls.to_csv().lines().nth(1) == Some("ell,q"));
    }

    #[test]
    fn projection_reproduces_scaling_function() {
        for n in 0..=2 {
            let sys = system(n);
            let psi = TestFunction::piecewise_fn(sys.scaling_pp().clone());
            let p = projection_en(&psi, sys, 0, projection_window(&psi, sys, 0)).unwrap();
            for i in 0..400 {
                let x = -5.0 + i as f64 * 0.025;
                assert!((p.eval(x) - sys.scaling_pp().eval(x)).abs() <= 1e-7, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn projection_is_linear() {
        let sys = system(1);
        let f = TestFunction::gaussian(0.2, 0.7).unwrap();
        let w = projection_window(&f, sys, 2);
        let a = projection_en(&f, sys, 2, w.clone()).unwrap();
        let b = projection_en(&f.scaled(-2.5), sys, 2, w).unwrap();
        let scale = b.coeffs.iter().fold(0.0f64, |m, (_, y)| m.max(y.abs()));
        for ((_, x), (_, y)) in a.coeffs.iter().zip(b.coeffs.iter()) {
            assert!((-2.5 * x - y).abs() <= 1e-14 * scale);
        }
    }

    fn grid_l2(f: impl Fn(f64) -> f64) -> f64 {
        let h = 1e-3;
        ((0..12_000).map(|i| f(-6.0 + i as f64 * h).powi(2)).sum::<f64>() * h).sqrt()
    }

    #[test]
    fn gaussian_projection_error_decreases() {
        let sys = system(1);
        let f = TestFunction::gaussian(0.1, 0.4).unwrap();
        let errs: Vec<f64> = (0..=5)
            .map(|n| {
                let p = projection_en(&f, sys, n, projection_window(&f, sys, n)).unwrap();
                grid_l2(|x| f.eval(x) - p.eval(x))
            })
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let sys = system(2);
        let f = TestFunction::poly_bump(3, -1.0, 1.5).unwrap();
        let once = projection_en(&f, sys, 1, projection_window(&f, sys, 1)).unwrap();
        let g = TestFunction::piecewise_fn(once.function.clone());
        let twice = projection_en(&g, sys, 1, projection_window(&g, sys, 1)).unwrap();
        assert!(grid_l2(|x| once.eval(x) - twice.eval(x)) <= 1e-6);
    }

    #[test]
    fn negative_projection_scale_is_rejected() {
        let f = TestFunction::gaussian(0.0, 1.0).unwrap();
        assert!(projection_en(&f, system(0), -1, 0..=1).is_err());
    }
}
