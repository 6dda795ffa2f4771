//! Piecewise polynomials on a uniform knot grid.
//!
//! Every spline object in the crate (B-splines, the scaling function and
//! wavelet, the antiderivative `rho`, least-squares residuals) is stored as a
//! [`PiecewisePoly`]: a run of polynomial pieces of equal length, each written
//! in the local variable `t = x - left_knot`. Outside its window the function
//! is identically zero.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Which one-sided limit to take at a knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    spacing: f64,
    origin: f64,
    degree: usize,
    /// Row-major, `degree + 1` coefficients per piece, lowest order first.
    coeffs: Vec<f64>,
}

/// Coefficients of `p(t + delta)` given those of `p(t)`.
pub fn taylor_shift(c: &[f64], delta: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    let n = out.len();
    if delta == 0.0 || n < 2 {
        return out;
    }
    for i in 0..n - 1 {
        for j in (i..n - 1).rev() {
            out[j] += delta * out[j + 1];
        }
    }
    out
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

/// `int_0^len p(t) q(t) dt` for two power-basis polynomials.
fn product_integral(p: &[f64], q: &[f64], len: f64) -> f64 {
    let mut pows = Vec::with_capacity(p.len() + q.len());
    let mut l = len;
    for _ in 0..p.len() + q.len() {
        pows.push(l);
        l *= len;
    }
    let mut sum = 0.0;
    for (a, &pa) in p.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        for (b, &qb) in q.iter().enumerate() {
            sum += pa * qb * pows[a + b] / (a + b + 1) as f64;
        }
    }
    sum
}

impl PiecewisePoly {
    /// Builds a piecewise polynomial from explicit pieces. Each piece may be
    /// shorter than `degree + 1`; missing high-order coefficients are zero.
    pub fn new(spacing: f64, origin: f64, degree: usize, pieces: &[Vec<f64>]) -> Self {
        assert!(spacing > 0.0, "knot spacing must be positive");
        let stride = degree + 1;
        let mut coeffs = vec![0.0; pieces.len() * stride];
        for (i, piece) in pieces.iter().enumerate() {
            assert!(piece.len() <= stride, "piece {i} exceeds degree {degree}");
            coeffs[i * stride..i * stride + piece.len()].copy_from_slice(piece);
        }
        Self {
            spacing,
            origin,
            degree,
            coeffs,
        }
    }

    pub(crate) fn from_flat(spacing: f64, origin: f64, degree: usize, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(coeffs.len() % (degree + 1), 0);
        Self {
            spacing,
            origin,
            degree,
            coeffs,
        }
    }

    pub fn zero(spacing: f64, origin: f64, degree: usize) -> Self {
        Self::from_flat(spacing, origin, degree, Vec::new())
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Left end of the first piece.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_pieces(&self) -> usize {
        self.coeffs.len() / (self.degree + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The closed interval outside of which the function vanishes.
    pub fn window(&self) -> (f64, f64) {
        (self.origin, self.knot(self.num_pieces()))
    }

    pub fn knot(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn piece(&self, i: usize) -> &[f64] {
        let stride = self.degree + 1;
        &self.coeffs[i * stride..(i + 1) * stride]
    }

    pub fn pieces(&self) -> impl Iterator<Item = &[f64]> {
        self.coeffs.chunks_exact(self.degree + 1)
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let n = self.num_pieces();
        if n == 0 {
            return None;
        }
        let (lo, hi) = self.window();
        if x < lo || x >= hi {
            return None;
        }
        let i = (((x - self.origin) / self.spacing).floor() as usize).min(n - 1);
        Some((i, x - self.knot(i)))
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((i, t)) => horner(self.piece(i), t),
            None => 0.0,
        }
    }

    /// One-sided limit at `x`; away from knots this equals [`eval`](Self::eval).
    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        match self.side_piece(x, side) {
            Some((i, t)) => horner(self.piece(i), t),
            None => 0.0,
        }
    }

    fn side_piece(&self, x: f64, side: Side) -> Option<(usize, f64)> {
        let n = self.num_pieces();
        if n == 0 {
            return None;
        }
        let r = (x - self.origin) / self.spacing;
        let nearest = r.round();
        let at_knot = (r - nearest).abs() < 1e-9;
        match side {
            Side::Right => {
                let i = if at_knot { nearest } else { r.floor() };
                if i < 0.0 || i >= n as f64 {
                    return None;
                }
                let i = i as usize;
                Some((i, x - self.knot(i)))
            }
            Side::Left => {
                let i = if at_knot { nearest - 1.0 } else { r.floor() };
                if i < 0.0 || i >= n as f64 {
                    return None;
                }
                let i = i as usize;
                Some((i, x - self.knot(i)))
            }
        }
    }

    /// Taylor coefficients (`f^(k)(x) / k!`, k = 0..=degree) of the piece on
    /// the requested side of `x`. Zero outside the window.
    pub fn taylor_at(&self, x: f64, side: Side) -> Vec<f64> {
        match self.side_piece(x, side) {
            Some((i, t)) => taylor_shift(self.piece(i), t),
            None => vec![0.0; self.degree + 1],
        }
    }

    pub fn derivative(&self) -> Self {
        if self.degree == 0 {
            return Self::from_flat(self.spacing, self.origin, 0, vec![0.0; self.num_pieces()]);
        }
        let d = self.degree;
        let mut coeffs = Vec::with_capacity(self.num_pieces() * d);
        for piece in self.pieces() {
            for k in 1..=d {
                coeffs.push(piece[k] * k as f64);
            }
        }
        Self::from_flat(self.spacing, self.origin, d - 1, coeffs)
    }

    pub fn nth_derivative(&self, order: usize) -> Self {
        (0..order).fold(self.clone(), |acc, _| acc.derivative())
    }

    /// `x -> f(a x - b)` for `a > 0`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        assert!(a > 0.0, "dilation factor must be positive");
        let mut coeffs = self.coeffs.clone();
        let stride = self.degree + 1;
        for piece in coeffs.chunks_exact_mut(stride) {
            let mut scale = 1.0;
            for c in piece.iter_mut() {
                *c *= scale;
                scale *= a;
            }
        }
        Self::from_flat(self.spacing / a, (self.origin + b) / a, self.degree, coeffs)
    }

    /// `x -> f(x - delta)`.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.origin += delta;
        out
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= alpha);
        out
    }

    /// Raises the stored degree without changing the function.
    pub fn with_degree(&self, degree: usize) -> Self {
        assert!(degree >= self.degree);
        if degree == self.degree {
            return self.clone();
        }
        let pieces: Vec<Vec<f64>> = self.pieces().map(|p| p.to_vec()).collect();
        Self::new(self.spacing, self.origin, degree, &pieces)
    }

    /// `sum_i alpha_i f_i` for functions on a common, aligned knot grid.
    pub fn linear_combination(terms: &[(f64, &PiecewisePoly)]) -> Result<Self> {
        let nonempty: Vec<_> = terms.iter().filter(|(_, p)| !p.is_empty()).collect();
        let Some(&&(_, first)) = nonempty.first() else {
            let (h, o) = terms.first().map_or((1.0, 0.0), |(_, p)| (p.spacing, p.origin));
            return Ok(Self::zero(h, o, 0));
        };
        let h = first.spacing;
        let degree = nonempty.iter().map(|(_, p)| p.degree).max().unwrap_or(0);
        let origin = nonempty.iter().map(|(_, p)| p.origin).fold(f64::INFINITY, f64::min);
        let mut offsets = Vec::with_capacity(nonempty.len());
        let mut len = 0usize;
        for (_, p) in &nonempty {
            if ((p.spacing - h) / h).abs() > 1e-12 {
                return Err(Error::InvalidParameter(
                    "linear combination of splines with different knot spacings".into(),
                ));
            }
            let off = (p.origin - origin) / h;
            let k = off.round();
            if (off - k).abs() > 1e-9 {
                return Err(Error::InvalidParameter(
                    "linear combination of splines on misaligned knot grids".into(),
                ));
            }
            let k = k as usize;
            offsets.push(k);
            len = len.max(k + p.num_pieces());
        }
        let stride = degree + 1;
        let mut coeffs = vec![0.0; len * stride];
        for ((alpha, p), &off) in nonempty.iter().zip(&offsets) {
            for (i, piece) in p.pieces().enumerate() {
                let dst = &mut coeffs[(off + i) * stride..(off + i) * stride + piece.len()];
                for (d, &c) in dst.iter_mut().zip(piece) {
                    *d += alpha * c;
                }
            }
        }
        Ok(Self::from_flat(h, origin, degree, coeffs))
    }

    /// Drops leading and trailing pieces whose coefficients are all zero.
    pub fn trimmed(&self) -> Self {
        let n = self.num_pieces();
        let nz = |i: usize| self.piece(i).iter().any(|&c| c != 0.0);
        let Some(first) = (0..n).find(|&i| nz(i)) else {
            return Self::zero(self.spacing, self.origin, self.degree);
        };
        let last = (0..n).rev().find(|&i| nz(i)).unwrap();
        let stride = self.degree + 1;
        Self::from_flat(
            self.spacing,
            self.knot(first),
            self.degree,
            self.coeffs[first * stride..(last + 1) * stride].to_vec(),
        )
    }

    /// All knots of the window, including both ends.
    pub fn knots(&self) -> Vec<f64> {
        (0..=self.num_pieces()).map(|i| self.knot(i)).collect()
    }

    /// Exact `int p q dx` by per-interval polynomial product integration.
    pub fn inner(&self, other: &PiecewisePoly) -> f64 {
        if self.is_empty() || other.is_empty() {
            return 0.0;
        }
        let (a0, a1) = self.window();
        let (b0, b1) = other.window();
        let lo = a0.max(b0);
        let hi = a1.min(b1);
        if lo >= hi {
            return 0.0;
        }
        let h_min = self.spacing.min(other.spacing);
        let eps = 1e-11 * h_min;

        // Fast path: identical, aligned grids.
        if (self.spacing - other.spacing).abs() <= 1e-14 * self.spacing {
            let off = (other.origin - self.origin) / self.spacing;
            if (off - off.round()).abs() < 1e-10 {
                let off = off.round() as i64;
                let h = self.spacing;
                let mut sum = 0.0;
                let (start, end) = (0i64.max(off), (self.num_pieces() as i64).min(off + other.num_pieces() as i64));
                for i in start..end {
                    let p = self.piece(i as usize);
                    let q = other.piece((i - off) as usize);
                    sum += product_integral(p, q, h);
                }
                return sum;
            }
        }

        let mut breaks = Vec::new();
        let push_knots = |pp: &PiecewisePoly, out: &mut Vec<f64>| {
            let first = ((lo - pp.origin) / pp.spacing).ceil().max(0.0) as usize;
            let mut i = first;
            loop {
                let x = pp.knot(i);
                if x > hi + eps || i > pp.num_pieces() {
                    break;
                }
                if x >= lo - eps {
                    out.push(x.clamp(lo, hi));
                }
                i += 1;
            }
        };
        breaks.push(lo);
        breaks.push(hi);
        push_knots(self, &mut breaks);
        push_knots(other, &mut breaks);
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() <= eps);

        let mut sum = 0.0;
        for w in breaks.windows(2) {
            let (u, v) = (w[0], w[1]);
            if v - u <= eps {
                continue;
            }
            let mid = 0.5 * (u + v);
            let (Some((i, _)), Some((k, _))) = (self.locate(mid), other.locate(mid)) else {
                continue;
            };
            let p = taylor_shift(self.piece(i), u - self.knot(i));
            let q = taylor_shift(other.piece(k), u - other.knot(k));
            sum += product_integral(&p, &q, v - u);
        }
        sum
    }

    /// `int x^k f(x) dx` for `k = 0..=max_order`.
    pub fn moments(&self, max_order: usize) -> Vec<f64> {
        let h = self.spacing;
        let mut out = vec![0.0; max_order + 1];
        // binom[k][m]
        let mut binom = vec![vec![1.0f64; max_order + 1]; max_order + 1];
        for k in 0..=max_order {
            for m in 1..k {
                binom[k][m] = binom[k - 1][m - 1] + binom[k - 1][m];
            }
        }
        for (i, piece) in self.pieces().enumerate() {
            let x0 = self.knot(i);
            // local[m] = int_0^h t^m P(t) dt
            let local: Vec<f64> = (0..=max_order)
                .map(|m| {
                    piece
                        .iter()
                        .enumerate()
                        .map(|(a, &c)| c * h.powi((a + m + 1) as i32) / (a + m + 1) as f64)
                        .sum()
                })
                .collect();
            for (k, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                let mut xp = 1.0;
                // sum_m C(k, m) x0^(k-m) local[m], accumulated from m = k downwards
                for m in (0..=k).rev() {
                    acc += binom[k][m] * xp * local[m];
                    xp *= x0;
                }
                *slot += acc;
            }
        }
        out
    }

    pub fn integral(&self) -> f64 {
        self.moments(0)[0]
    }

    /// Largest one-sided mismatch of derivatives `0..=max_order` over all
    /// knots, including the window ends (where the outside value is zero).
    pub fn knot_mismatch(&self, max_order: usize) -> f64 {
        let mut worst = 0.0f64;
        let n = self.num_pieces();
        for i in 0..=n {
            let left = if i == 0 {
                vec![0.0; self.degree + 1]
            } else {
                taylor_shift(self.piece(i - 1), self.spacing)
            };
            let right = if i == n {
                vec![0.0; self.degree + 1]
            } else {
                self.piece(i).to_vec()
            };
            let mut fact = 1.0;
            for k in 0..=max_order.min(self.degree) {
                if k > 0 {
                    fact *= k as f64;
                }
                worst = worst.max(fact * (left[k] - right[k]).abs());
            }
        }
        worst
    }

    /// `sup |f|`, located from piece endpoints and interior critical points.
    pub fn sup_abs(&self) -> f64 {
        let h = self.spacing;
        let mut best = 0.0f64;
        for piece in self.pieces() {
            let dp: Vec<f64> = piece
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect();
            best = best.max(horner(piece, 0.0).abs()).max(horner(piece, h).abs());
            if dp.len() < 2 {
                continue;
            }
            const SAMPLES: usize = 32;
            let mut prev_t = 0.0;
            let mut prev = horner(&dp, 0.0);
            for s in 1..=SAMPLES {
                let t = h * s as f64 / SAMPLES as f64;
                let cur = horner(&dp, t);
                if prev == 0.0 {
                    best = best.max(horner(piece, prev_t).abs());
                } else if prev.signum() != cur.signum() {
                    let (mut a, mut b, mut fa) = (prev_t, t, prev);
                    for _ in 0..60 {
                        let m = 0.5 * (a + b);
                        let fm = horner(&dp, m);
                        if fm.signum() == fa.signum() {
                            a = m;
                            fa = fm;
                        } else {
                            b = m;
                        }
                    }
                    best = best.max(horner(piece, 0.5 * (a + b)).abs());
                }
                prev_t = t;
                prev = cur;
            }
        }
        best
    }

    /// `||f||_p` for finite `p`; exact for `p = 2`, Gauss-Legendre otherwise.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == 2.0 {
            return self.inner(self).max(0.0).sqrt();
        }
        let gl = GaussLegendre::new(12);
        const SUB: usize = 8;
        let h = self.spacing / SUB as f64;
        let mut sum = 0.0;
        for piece in self.pieces() {
            for s in 0..SUB {
                let a = s as f64 * h;
                sum += gl.integrate(a, a + h, |t| horner(piece, t).abs().powf(p));
            }
        }
        sum.powf(1.0 / p)
    }
}
