use thiserror::Error;

/// An open interval of admissible smoothness values.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Membership in the open interval `(lo, hi)`.
    pub fn contains(&self, s: f64) -> bool {
        s > self.lo && s < self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", trim_float(self.lo), trim_float(self.hi))
    }
}

fn trim_float(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("autocorrelation symbol drops to {min:e} on the sampling grid (below 1e-10)")]
    SymbolBreakdown { min: f64 },

    #[error("exponential decay fit unavailable: {usable} usable samples (need at least 8)")]
    FitUnavailable { usable: usize },

    #[error("parameters outside the admissible range: {reason}; admissible s-interval {interval}")]
    OutOfRange { reason: String, interval: Interval },

    #[error("grid spacing {spacing:e} is too coarse for {levels} levels; required spacing <= {required:e}")]
    Resolution {
        spacing: f64,
        levels: usize,
        required: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
