//! Sequence-space norms, frame norms and parameter-range validation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analysis::{frame_coefficients, sampled_sup, FrameCoefficients, TestFunction};
use crate::blsystem::SplineSystem;
use crate::error::{Error, Interval, Result};
use crate::quadrature::{panel_breaks, GaussLegendre};

/// An integrability or summability exponent in `(0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn new(v: f64) -> Result<Self> {
        if v.is_infinite() && v > 0.0 {
            Ok(Self::Infinite)
        } else if v > 0.0 {
            Ok(Self::Finite(v))
        } else {
            Err(Error::InvalidParameter(format!("exponent must lie in (0, inf], got {v}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::INFINITY,
        }
    }

    /// `1/p`, zero at infinity.
    pub fn recip(self) -> f64 {
        match self {
            Self::Finite(v) => 1.0 / v,
            Self::Infinite => 0.0,
        }
    }

    /// `1/p' = 1 - 1/p`, used for every `p` including `p < 1`.
    pub fn conj_recip(self) -> f64 {
        1.0 - self.recip()
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Self::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse exponent '{s}'")))
                .and_then(Self::new),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => ser.serialize_f64(*v),
            Self::Infinite => ser.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Exponent::new(v).map_err(serde::de::Error::custom),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Space {
    Besov,
    TriebelLizorkin,
    SobolevEndpoint,
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "besov" | "b" => Ok(Self::Besov),
            "triebel" | "triebel-lizorkin" | "tl" | "f" => Ok(Self::TriebelLizorkin),
            "sobolev" | "sobolev-endpoint" | "endpoint" | "w" => Ok(Self::SobolevEndpoint),
            _ => Err(Error::InvalidParameter(format!("unknown space '{s}'"))),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Besov => "besov",
            Self::TriebelLizorkin => "triebel-lizorkin",
            Self::SobolevEndpoint => "sobolev-endpoint",
        })
    }
}

/// Smoothness `s`, exponents `p`, `q`, the target space and the system order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub s: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub space: Space,
    pub order: usize,
}

impl NormParams {
    pub fn new(space: Space, order: usize, s: f64, p: f64, q: f64) -> Result<Self> {
        Ok(Self {
            s,
            p: Exponent::new(p)?,
            q: Exponent::new(q)?,
            space,
            order,
        })
    }

    pub fn besov(order: usize, s: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(Space::Besov, order, s, p, q)
    }

    pub fn triebel(order: usize, s: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(Space::TriebelLizorkin, order, s, p, q)
    }

    /// The endpoint norm at `s = n + 1`; `q` is unused and set to infinity.
    pub fn sobolev_endpoint(order: usize, p: f64) -> Result<Self> {
        Self::new(Space::SobolevEndpoint, order, order as f64 + 1.0, p, f64::INFINITY)
    }

    pub fn with_s(self, s: f64) -> Self {
        Self { s, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeClass {
    /// Inside both the frame range and the unconditional-basis range.
    Both,
    /// Inside the frame range only.
    FrameValid,
    /// Inside the basis range only.
    BasisValid,
    Outside,
}

/// Outcome of [`validate_range`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub class: RangeClass,
    /// Admissible `s` for the frame characterization (degenerate `(n+1, n+1)`
    /// for the endpoint space, where `s` is fixed).
    pub frame: Interval,
    /// Whether the `p`, `q` (and order) hypotheses of the frame result hold.
    pub frame_hypotheses: bool,
    /// Admissible `s` for the non-oversampled basis, when one applies.
    pub basis: Option<Interval>,
    /// Human-readable explanation of any failed hypothesis.
    pub notes: Vec<String>,
}

impl RangeReport {
    pub fn frame_valid(&self) -> bool {
        matches!(self.class, RangeClass::Both | RangeClass::FrameValid)
    }

    pub fn basis_valid(&self) -> bool {
        matches!(self.class, RangeClass::Both | RangeClass::BasisValid)
    }
}

/// Classifies `(s, p, q)` against the frame and basis ranges.
pub fn validate_range(params: &NormParams) -> RangeReport {
    let n = params.order as f64;
    let (p, q) = (params.p, params.q);
    let p_min = 1.0 / (2.0 * (n + 1.0));
    let mut notes = Vec::new();
    let (frame, frame_hyp, basis) = match params.space {
        Space::Besov => {
            let ok = p.value() > p_min;
            if !ok {
                notes.push(format!("p = {p} must exceed 1/(2(n+1)) = {p_min}"));
            }
            let frame = Interval::new(-p.conj_recip() - n, n + 1.0);
            let basis = Interval::new(-p.conj_recip() - n, n + p.recip().min(1.0));
            (frame, ok, Some(basis))
        }
        Space::TriebelLizorkin => {
            let mut ok = true;
            if p.is_infinite() {
                notes.push("p = inf is not admissible for Triebel-Lizorkin spaces".into());
                ok = false;
            } else if p.value() <= p_min {
                notes.push(format!("p = {p} must exceed 1/(2(n+1)) = {p_min}"));
                ok = false;
            }
            if q.is_infinite() {
                if !p.is_infinite() && p.value() > 1.0 {
                    notes.push("q = inf requires p <= 1".into());
                    ok = false;
                }
            } else if q.value() <= p_min {
                notes.push(format!("q = {q} must exceed 1/(2(n+1)) = {p_min}"));
                ok = false;
            }
            let lower = (-p.conj_recip()).max(-q.conj_recip()) - n;
            let frame = Interval::new(lower, n + 1.0);
            let basis = if p.is_infinite() {
                None
            } else {
                let pv = p.value();
                let improved = (pv > 1.0 && !q.is_infinite() && q.value() > 1.0)
                    || (pv <= 1.0
                        && !q.is_infinite()
                        && q.value() > 1.0
                        && p.recip() < 1.0 + q.recip());
                Some(if improved {
                    Interval::new(lower, n + p.recip().min(q.recip()))
                } else {
                    Interval::new(lower.max(-n), n)
                })
            };
            (frame, ok, basis)
        }
        Space::SobolevEndpoint => {
            let mut ok = true;
            if params.order < 1 {
                notes.push("the endpoint characterization needs order n >= 1".into());
                ok = false;
            }
            if p.value() <= 1.0 {
                notes.push(format!("p = {p} must satisfy 1 < p <= inf"));
                ok = false;
            }
            (Interval::new(n + 1.0, n + 1.0), ok, None)
        }
    };
    let in_frame = frame_hyp
        && match params.space {
            Space::SobolevEndpoint => true,
            _ => frame.contains(params.s),
        };
    let in_basis = basis.is_some_and(|b| b.contains(params.s));
    let class = match (in_frame, in_basis) {
        (true, true) => RangeClass::Both,
        (true, false) => RangeClass::FrameValid,
        (false, true) => RangeClass::BasisValid,
        (false, false) => RangeClass::Outside,
    };
    if frame_hyp && !in_frame {
        notes.push(format!("s = {} lies outside {frame}", params.s));
    }
    RangeReport {
        class,
        frame,
        frame_hypotheses: frame_hyp,
        basis,
        notes,
    }
}

/// Values `omega_{j, mu}` for `mu = mu_min..mu_min + values.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRow {
    pub j: i32,
    pub mu_min: i64,
    pub values: Vec<f64>,
}

impl ScaleRow {
    pub fn new(j: i32, mu_min: i64, values: Vec<f64>) -> Self {
        Self { j, mu_min, values }
    }

    pub fn get(&self, mu: i64) -> f64 {
        let i = mu - self.mu_min;
        if i < 0 {
            return 0.0;
        }
        self.values.get(i as usize).copied().unwrap_or(0.0)
    }

    pub fn mu_max(&self) -> i64 {
        self.mu_min + self.values.len() as i64 - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.mu_min + i as i64, v))
    }

    fn lp(&self, p: Exponent) -> f64 {
        match p {
            Exponent::Infinite => self.values.iter().fold(0.0, |m, v| m.max(v.abs())),
            Exponent::Finite(p) => self
                .values
                .iter()
                .map(|v| v.abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }
}

/// A sign-carrying coefficient table over scales `j >= -1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientTable {
    rows: Vec<ScaleRow>,
}

impl CoefficientTable {
    pub fn new(mut rows: Vec<ScaleRow>) -> Self {
        rows.sort_by_key(|r| r.j);
        assert!(rows.iter().all(|r| r.j >= -1), "scales start at -1");
        assert!(rows.windows(2).all(|w| w[0].j < w[1].j), "duplicate scale rows");
        Self { rows }
    }

    /// A table holding the listed entries, zero elsewhere.
    pub fn from_entries(entries: &[(i32, i64, f64)]) -> Self {
        let mut rows: Vec<ScaleRow> = Vec::new();
        let mut js: Vec<i32> = entries.iter().map(|e| e.0).collect();
        js.sort_unstable();
        js.dedup();
        for j in js {
            let mus = entries.iter().filter(|e| e.0 == j).map(|e| e.1);
            let lo = mus.clone().min().unwrap();
            let hi = mus.max().unwrap();
            let mut values = vec![0.0; (hi - lo + 1) as usize];
            for e in entries.iter().filter(|e| e.0 == j) {
                values[(e.1 - lo) as usize] += e.2;
            }
            rows.push(ScaleRow::new(j, lo, values));
        }
        Self::new(rows)
    }

    pub fn rows(&self) -> &[ScaleRow] {
        &self.rows
    }

    pub fn row(&self, j: i32) -> Option<&ScaleRow> {
        self.rows.iter().find(|r| r.j == j)
    }

    pub fn get(&self, j: i32, mu: i64) -> f64 {
        self.row(j).map_or(0.0, |r| r.get(mu))
    }

    pub fn j_max(&self) -> Option<i32> {
        self.rows.last().map(|r| r.j)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| ScaleRow::new(r.j, r.mu_min, r.values.iter().map(|v| alpha * v).collect()))
                .collect(),
        }
    }

    /// `omega'_{j,mu} = omega_{j,mu+m}` at every scale.
    pub fn shifted(&self, m: i64) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| ScaleRow::new(r.j, r.mu_min - m, r.values.clone()))
                .collect(),
        }
    }

    /// Entrywise absolute values.
    pub fn abs(&self) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| ScaleRow::new(r.j, r.mu_min, r.values.iter().map(|v| v.abs()).collect()))
                .collect(),
        }
    }

    /// Entrywise sum.
    pub fn add(&self, other: &Self) -> Self {
        let mut js: Vec<i32> = self.rows.iter().chain(&other.rows).map(|r| r.j).collect();
        js.sort_unstable();
        js.dedup();
        let rows = js
            .into_iter()
            .map(|j| {
                let a = self.row(j);
                let b = other.row(j);
                let lo = a.iter().chain(b.iter()).map(|r| r.mu_min).min().unwrap();
                let hi = a.iter().chain(b.iter()).map(|r| r.mu_max()).max().unwrap();
                let values = (lo..=hi)
                    .map(|mu| a.map_or(0.0, |r| r.get(mu)) + b.map_or(0.0, |r| r.get(mu)))
                    .collect();
                ScaleRow::new(j, lo, values)
            })
            .collect();
        Self { rows }
    }
}

fn q_sum(terms: impl Iterator<Item = f64>, q: Exponent) -> f64 {
    match q {
        Exponent::Infinite => terms.fold(0.0, f64::max),
        Exponent::Finite(q) => terms.map(|t| t.powf(q)).sum::<f64>().powf(1.0 / q),
    }
}

/// Per-scale weights `2^{j(s - 1/p)} ||omega_j||_p` of the `b^s_{p,q}` norm.
fn besov_terms<'a>(table: &'a CoefficientTable, s: f64, p: Exponent) -> impl Iterator<Item = f64> + 'a {
    table
        .rows
        .iter()
        .map(move |r| 2f64.powf(r.j as f64 * (s - p.recip())) * r.lp(p))
}

/// `||omega||_{b^s_{p,q}}` over the stored scales.
pub fn seq_norm_besov(table: &CoefficientTable, params: &NormParams) -> f64 {
    q_sum(besov_terms(table, params.s, params.p), params.q)
}

/// `sup_j 2^{j(n+1-1/p)} ||omega_j||_p`.
pub fn seq_norm_endpoint(table: &CoefficientTable, order: usize, p: Exponent) -> f64 {
    besov_terms(table, order as f64 + 1.0, p).fold(0.0, f64::max)
}

/// Dyadic level of the intervals `I_{j,mu}`; the base scale shares level 0.
fn level(j: i32) -> i32 {
    j.max(0)
}

/// `||omega||_{f^s_{p,q}}`, evaluated exactly.
///
/// The integrand is constant on every dyadic cell that no finer stored scale
/// subdivides, so a walk down the dyadic tree that stops as soon as all finer
/// rows vanish on the current cell sums the integral exactly.
pub fn seq_norm_triebel(table: &CoefficientTable, params: &NormParams) -> Result<f64> {
    let Exponent::Finite(p) = params.p else {
        return Err(Error::InvalidParameter(
            "the f^s_{p,q} norm requires finite p".into(),
        ));
    };
    let q = params.q;
    let s = params.s;
    let rows: Vec<&ScaleRow> = table.rows.iter().filter(|r| r.values.iter().any(|v| *v != 0.0)).collect();
    if rows.is_empty() {
        return Ok(0.0);
    }
    // prefix[r][i] = number of nonzero entries among the first i values of row r
    let prefix: Vec<Vec<u32>> = rows
        .iter()
        .map(|r| {
            let mut acc = 0u32;
            std::iter::once(0)
                .chain(r.values.iter().map(|v| {
                    acc += (*v != 0.0) as u32;
                    acc
                }))
                .collect()
        })
        .collect();
    let any_nonzero = |ri: usize, lo: i64, hi: i64| -> bool {
        let r = rows[ri];
        let a = (lo - r.mu_min).max(0);
        let b = (hi - r.mu_min + 1).min(r.values.len() as i64);
        a < b && prefix[ri][b as usize] > prefix[ri][a as usize]
    };
    let weight = |j: i32, v: f64| -> f64 {
        let w = 2f64.powf(j as f64 * s) * v.abs();
        match q {
            Exponent::Infinite => w,
            Exponent::Finite(q) => w.powf(q),
        }
    };
    let combine = |acc: f64, t: f64| match q {
        Exponent::Infinite => acc.max(t),
        Exponent::Finite(_) => acc + t,
    };
    let finish = |acc: f64| match q {
        Exponent::Infinite => acc,
        Exponent::Finite(q) => acc.powf(1.0 / q),
    };

    // Level-0 cells covering every row.
    let extent = |r: &ScaleRow| {
        let sh = level(r.j);
        (r.mu_min >> sh, r.mu_max() >> sh)
    };
    let i_lo = rows.iter().map(|r| extent(r).0).min().unwrap();
    let i_hi = rows.iter().map(|r| extent(r).1).max().unwrap();
    let max_level = rows.iter().map(|r| level(r.j)).max().unwrap();

    let mut total = 0.0;
    // (level, index, accumulated value before adding rows at this level)
    let mut stack: Vec<(i32, i64, f64)> = (i_lo..=i_hi).map(|i| (0, i, 0.0)).collect();
    while let Some((l, i, acc_above)) = stack.pop() {
        let mut acc = acc_above;
        for r in rows.iter().filter(|r| level(r.j) == l) {
            acc = combine(acc, weight(r.j, r.get(i)));
        }
        let deeper = l < max_level
            && rows.iter().enumerate().any(|(ri, r)| {
                let lr = level(r.j);
                lr > l && {
                    let sh = lr - l;
                    any_nonzero(ri, i << sh, ((i + 1) << sh) - 1)
                }
            });
        if deeper {
            stack.push((l + 1, 2 * i, acc));
            stack.push((l + 1, 2 * i + 1, acc));
        } else {
            let g = finish(acc);
            if g > 0.0 {
                total += 0.5f64.powi(l) * g.powf(p);
            }
        }
    }
    Ok(total.powf(1.0 / p))
}

/// A frame norm together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub function: String,
    pub params: NormParams,
    pub j_max: i32,
    pub tol: f64,
    pub value: f64,
    /// Geometric estimate of the scales beyond `j_max`, with ratio
    /// `2^{s-(n+1)}`; absent for the endpoint norm, where the ratio is one.
    pub tail_remainder: Option<f64>,
    /// Bound on every coefficient outside the computed windows.
    pub coefficient_tail_bound: f64,
    pub range: RangeReport,
}

/// Fails with [`Error::OutOfRange`] unless `params` lie in the frame range.
pub fn require_frame_range(params: &NormParams) -> Result<RangeReport> {
    let report = validate_range(params);
    if !report.frame_valid() {
        let reason = if report.notes.is_empty() {
            format!("s = {} outside the frame range", params.s)
        } else {
            report.notes.join("; ")
        };
        return Err(Error::OutOfRange {
            reason,
            interval: report.frame,
        });
    }
    Ok(report)
}

/// The norm of the requested space evaluated on precomputed coefficients.
pub fn norm_from_coefficients(
    fc: &FrameCoefficients,
    params: &NormParams,
    function: &str,
) -> Result<NormReport> {
    if params.order != fc.order() {
        return Err(Error::InvalidParameter(format!(
            "parameters for order {} applied to coefficients of order {}",
            params.order,
            fc.order()
        )));
    }
    let range = require_frame_range(params)?;
    let table = fc.to_table();
    let value = match params.space {
        Space::Besov => seq_norm_besov(&table, params),
        Space::TriebelLizorkin => seq_norm_triebel(&table, params)?,
        Space::SobolevEndpoint => seq_norm_endpoint(&table, params.order, params.p),
    };
    let tail_remainder = match params.space {
        Space::SobolevEndpoint => None,
        _ => {
            let ratio = 2f64.powf(params.s - (params.order as f64 + 1.0));
            let last = table
                .row(fc.j_max())
                .map_or(0.0, |r| 2f64.powf(r.j as f64 * (params.s - params.p.recip())) * r.lp(params.p));
            Some(match params.q {
                Exponent::Infinite => last * ratio,
                Exponent::Finite(q) => last * ratio / (1.0 - ratio.powf(q)).powf(1.0 / q),
            })
        }
    };
    Ok(NormReport {
        function: function.to_string(),
        params: *params,
        j_max: fc.j_max(),
        tol: fc.tol(),
        value,
        tail_remainder,
        coefficient_tail_bound: fc.tail_bound(),
        range,
    })
}

/// Frame norm of `f` for the given space and parameters.
pub fn frame_norm(
    f: &TestFunction,
    sys: &SplineSystem,
    params: &NormParams,
    j_max: i32,
    tol: f64,
) -> Result<NormReport> {
    if params.order != sys.order() {
        return Err(Error::InvalidParameter(format!(
            "parameters for order {} applied to a system of order {}",
            params.order,
            sys.order()
        )));
    }
    require_frame_range(params)?;
    let fc = frame_coefficients(f, sys, j_max, tol)?;
    norm_from_coefficients(&fc, params, &f.describe())
}

/// `||f||_p + ||f^(k)||_p`.
pub fn sobolev_reference_norm(f: &TestFunction, p: Exponent, k: usize) -> Result<f64> {
    if let Some(dk) = f.derivative_piecewise(k)? {
        let pp = f.piecewise().expect("piecewise family");
        let norm = |g: &crate::piecewise::PiecewisePoly| match p {
            Exponent::Infinite => g.sup_abs(),
            Exponent::Finite(p) => g.lp_norm(p),
        };
        return Ok(norm(&pp) + norm(&dk));
    }
    let (lo, hi) = f.support();
    let deriv = |x: f64| f.derivative(k, x).unwrap_or(0.0);
    match p {
        Exponent::Infinite => Ok(f.sup_norm() + sampled_sup((lo, hi), f.length_scale(), deriv)),
        Exponent::Finite(p) => {
            let gl = GaussLegendre::new(16);
            let breaks = panel_breaks(lo, hi, &f.breakpoints(), f.length_scale() / 8.0);
            let a = gl.integrate_panels(&breaks, |x| f.eval(x).abs().powf(p)).powf(1.0 / p);
            let b = gl.integrate_panels(&breaks, |x| deriv(x).abs().powf(p)).powf(1.0 / p);
            Ok(a + b)
        }
    }
}
