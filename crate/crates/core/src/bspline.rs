//! Cardinal B-splines `B_m = B_{m-1} * 1_[0,1)` and the autocorrelation
//! symbol used to orthonormalize their integer shifts.

use num_complex::Complex64;

use crate::piecewise::PiecewisePoly;

/// `B_m(x)` by the triangular recursion
/// `m B_m(x) = x B_{m-1}(x) + (m + 1 - x) B_{m-1}(x - 1)`.
pub fn bspline_eval(order: usize, x: f64) -> f64 {
    if !(0.0..(order + 1) as f64).contains(&x) {
        return 0.0;
    }
    let mut vals: Vec<f64> = (0..=order)
        .map(|i| {
            let y = x - i as f64;
            if (0.0..1.0).contains(&y) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for k in 1..=order {
        for i in 0..=order - k {
            let y = x - i as f64;
            vals[i] = (y * vals[i] + (k as f64 + 1.0 - y) * vals[i + 1]) / k as f64;
        }
    }
    vals[0]
}

/// Exact piecewise form of `B_m` on the integer knots `0..=m+1`.
///
/// Piece `i` of `B_m` is `F_i(t) - F_{i-1}(t) + F_{i-1}(1)` where `F_i` is the
/// antiderivative (from 0) of piece `i` of `B_{m-1}`.
pub fn bspline_piecewise(order: usize) -> PiecewisePoly {
    let mut pieces: Vec<Vec<f64>> = vec![vec![1.0]];
    for m in 1..=order {
        let anti: Vec<Vec<f64>> = pieces
            .iter()
            .map(|p| {
                let mut a = vec![0.0];
                a.extend(p.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64));
                a
            })
            .collect();
        let mut next = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let mut q = vec![0.0; m + 1];
            if i < anti.len() {
                for (k, &c) in anti[i].iter().enumerate() {
                    q[k] += c;
                }
            }
            if i >= 1 {
                let prev = &anti[i - 1];
                let at_one: f64 = prev.iter().sum();
                for (k, &c) in prev.iter().enumerate() {
                    q[k] -= c;
                }
                q[0] += at_one;
            }
            next.push(q);
        }
        pieces = next;
    }
    PiecewisePoly::new(1.0, 0.0, order, &pieces)
}

/// `sum_i (-1)^i C(t, i) B_{m-t}(x - i)`, which equals `B_m^(t)` by the
/// derivative identity `B_m' = B_{m-1} - B_{m-1}(. - 1)`.
pub fn bspline_difference(order: usize, times: usize) -> PiecewisePoly {
    assert!(times <= order, "cannot differentiate B_{order} {times} times");
    let base = bspline_piecewise(order - times);
    let shifted: Vec<PiecewisePoly> = (0..=times).map(|i| base.shifted(i as f64)).collect();
    let terms: Vec<(f64, &PiecewisePoly)> = shifted
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            (sign * binomial(times, i), p)
        })
        .collect();
    PiecewisePoly::linear_combination(&terms).expect("integer shifts share a grid")
}

/// `sum_k c[k] B_m(y - offset - k)`: an integer-knot spline from its B-spline
/// coefficients.
pub fn bspline_series(order: usize, offset: i64, coeffs: &[f64]) -> PiecewisePoly {
    if coeffs.is_empty() {
        return PiecewisePoly::zero(1.0, offset as f64, order);
    }
    let base = bspline_piecewise(order);
    let stride = order + 1;
    let count = coeffs.len() + order;
    let mut flat = vec![0.0; count * stride];
    for i in 0..count {
        let dst = &mut flat[i * stride..(i + 1) * stride];
        // piece i collects B_m pieces r from the shifts k = i - r
        for r in 0..=order {
            let Some(k) = i.checked_sub(r) else { break };
            let Some(&c) = coeffs.get(k) else { continue };
            if c == 0.0 {
                continue;
            }
            for (d, &b) in dst.iter_mut().zip(base.piece(r)) {
                *d += c * b;
            }
        }
    }
    PiecewisePoly::from_flat(1.0, offset as f64, order, flat)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `B_m^(xi) = ((1 - e^{-i xi}) / (i xi))^{m+1}` under `f^(xi) = int f e^{-i x xi}`.
pub fn bspline_fourier(order: usize, xi: f64) -> Complex64 {
    let half = 0.5 * xi;
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    let base = Complex64::from_polar(sinc, -half);
    base.powu(order as u32 + 1)
}

/// Exact `int p q dx` of two piecewise polynomials.
pub fn spline_inner(p: &PiecewisePoly, q: &PiecewisePoly) -> f64 {
    p.inner(q)
}

/// The periodized energy `E_n(xi) = sum_k |B_n^(xi + 2 pi k)|^2`, held as the
/// cosine polynomial `a_0 + 2 sum_j a_j cos(j xi)` with
/// `a_j = int B_n(x) B_n(x + j) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrSymbol {
    order: usize,
    coeffs: Vec<f64>,
}

impl AutocorrSymbol {
    pub fn new(order: usize) -> Self {
        let b = bspline_piecewise(order);
        let coeffs = (0..=order)
            .map(|j| spline_inner(&b, &b.shifted(-(j as f64))))
            .collect();
        Self { order, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `a_j` for `j = 0..=n`; `a_{-j} = a_j`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, &a)| if j == 0 { a } else { 2.0 * a * (j as f64 * xi).cos() })
            .sum()
    }
}

/// `E_n(xi)`; see [`AutocorrSymbol`].
pub fn autocorr_symbol(order: usize, xi: f64) -> f64 {
    AutocorrSymbol::new(order).eval(xi)
}
