//! Layered run configuration: defaults, then an optional JSON file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use blframe::{Exponent, Space, TestFunction};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SAMPLES: usize = 8192;
pub const DEFAULT_J_MAX: i32 = 8;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_LP_MIN_SAMPLES: usize = 1 << 16;
pub const DEFAULT_LP_MARGIN: f64 = 20.0;

/// Flags present on every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    pub dump_config: bool,
}

/// A configuration that can be overlaid on another and completed with
/// defaults.
pub trait Layered: Serialize + DeserializeOwned + Default {
    /// Fields set in `self` win over those in `base`.
    fn overlay(self, base: Self) -> Self;
    /// Fills unset fields with their defaults.
    fn resolved(self) -> Result<Self, CliError>;
}

macro_rules! overlay_fields {
    ($top:ident, $base:ident; $($field:ident),*; $($extra:tt)*) => {
        Self { $($field: $top.$field.or($base.$field),)* $($extra)* }
    };
}

/// Reads the config file, if any, and overlays the command-line values.
pub fn load<T: Layered>(flags: &ConfigFlags, cli: T) -> Result<T, CliError> {
    let base = match &flags.config {
        Some(path) => serde_json::from_str(&read(path)?)?,
        None => T::default(),
    };
    cli.overlay(base).resolved()
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| CliError::Usage(format!("missing required value --{flag} (flag or config file)")))
}

pub fn parse_functions(specs: &[String]) -> Result<Vec<TestFunction>, CliError> {
    specs.iter().map(|s| Ok(s.parse::<TestFunction>()?)).collect()
}

/// Smallest power-of-two grid, at least `min`, that resolves `levels`
/// Littlewood-Paley levels over the default window around `f`.
pub fn lp_samples_for(f: &TestFunction, levels: usize, min: usize) -> usize {
    let (a, b) = f.support();
    let width = (b - a) + 2.0 * DEFAULT_LP_MARGIN;
    let needed = (width * 2f64.powi(levels as i32 + 1)).ceil() as usize;
    needed.max(min).next_power_of_two()
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemOpts {
    /// Spline order n.
    #[arg(long)]
    pub order: Option<usize>,
    /// Truncation K of the coefficient sequences; chosen automatically when
    /// absent.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Number of samples N of the symbol DFT.
    #[arg(long)]
    pub samples: Option<usize>,
}

impl SystemOpts {
    fn overlay(self, base: Self) -> Self {
        overlay_fields!(self, base; order, truncation, samples;)
    }

    fn resolved(self) -> Result<Self, CliError> {
        Ok(Self {
            order: Some(required(&self.order, "order")?),
            truncation: self.truncation,
            samples: Some(self.samples.unwrap_or(DEFAULT_SAMPLES)),
        })
    }

    pub fn order(&self) -> usize {
        self.order.expect("resolved")
    }

    pub fn samples(&self) -> usize {
        self.samples.expect("resolved")
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemOpts,
}

impl Layered for BuildConfig {
    fn overlay(self, base: Self) -> Self {
        Self {
            system: self.system.overlay(base.system),
        }
    }

    fn resolved(self) -> Result<Self, CliError> {
        Ok(Self {
            system: self.system.resolved()?,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemOpts,
    /// Largest shift |mu - nu| in the orthonormality check.
    #[arg(long)]
    pub max_shift: Option<i64>,
    /// Half-width of the least-squares window for the crux representation.
    #[arg(long)]
    pub window: Option<i64>,
}

impl Layered for CheckConfig {
    fn overlay(self, base: Self) -> Self {
        Self {
            system: self.system.overlay(base.system),
            max_shift: self.max_shift.or(base.max_shift),
            window: self.window.or(base.window),
        }
    }

    fn resolved(self) -> Result<Self, CliError> {
        Ok(Self {
            system: self.system.resolved()?,
            max_shift: Some(self.max_shift.unwrap_or(8)),
            window: Some(self.window.unwrap_or(30)),
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CoeffsConfig {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemOpts,
    /// Test function, e.g. `gaussian:0,1` or `indicator:0,1`.
    #[arg(long = "fn", value_name = "SPEC")]
    #[serde(rename = "fn")]
    pub function: Option<String>,
    /// Finest scale J_max.
    #[arg(long)]
    pub j_max: Option<i32>,
    /// Tail tolerance of the coefficient windows.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Emit the non-oversampled (even-index) table instead.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub basis: Option<bool>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Layered for CoeffsConfig {
    fn overlay(self, base: Self) -> Self {
        overlay_fields!(self, base; function, j_max, tol, basis, out; system: self.system.overlay(base.system))
    }

    fn resolved(self) -> Result<Self, CliError> {
        Ok(Self {
            system: self.system.resolved()?,
            function: Some(required(&self.function, "fn")?),
            j_max: Some(self.j_max.unwrap_or(DEFAULT_J_MAX)),
            tol: Some(self.tol.unwrap_or(DEFAULT_TOL)),
            basis: Some(self.basis.unwrap_or(false)),
            out: self.out,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct NormConfig {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemOpts,
    /// besov, triebel or sobolev-endpoint.
    #[arg(long)]
    pub space: Option<Space>,
    /// Smoothness s (ignored for the endpoint space).
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Integrability p (`inf` allowed).
    #[arg(long)]
    pub p: Option<Exponent>,
    /// Summability q (`inf` allowed).
    #[arg(long)]
    pub q: Option<Exponent>,
    #[arg(long = "fn", value_name = "SPEC")]
    #[serde(rename = "fn")]
    pub function: Option<String>,
    #[arg(long)]
    pub j_max: Option<i32>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Littlewood-Paley levels of the reference norm (defaults to J_max).
    #[arg(long)]
    pub lp_levels: Option<usize>,
    /// Grid size of the reference norm (sized automatically when absent).
    #[arg(long)]
    pub lp_samples: Option<usize>,
}

impl Layered for NormConfig {
    fn overlay(self, base: Self) -> Self {
        overlay_fields!(self, base; space, s, p, q, function, j_max, tol, lp_levels, lp_samples; system: self.system.overlay(base.system))
    }

    fn resolved(self) -> Result<Self, CliError> {
        let space = required(&self.space, "space")?;
        let system = self.system.resolved()?;
        let s = match space {
            Space::SobolevEndpoint => Some(system.order() as f64 + 1.0),
            _ => Some(required(&self.s, "s")?),
        };
        let q = match space {
            Space::SobolevEndpoint => Some(Exponent::Infinite),
            _ => Some(required(&self.q, "q")?),
        };
        let function = required(&self.function, "fn")?;
        let j_max = self.j_max.unwrap_or(DEFAULT_J_MAX);
        let lp_levels = self.lp_levels.unwrap_or(j_max.max(0) as usize);
        let lp_samples = match self.lp_samples {
            Some(n) => n,
            None => lp_samples_for(&function.parse()?, lp_levels, DEFAULT_LP_MIN_SAMPLES),
        };
        Ok(Self {
            system,
            space: Some(space),
            s,
            p: Some(required(&self.p, "p")?),
            q,
            function: Some(function),
            j_max: Some(j_max),
            tol: Some(self.tol.unwrap_or(DEFAULT_TOL)),
            lp_levels: Some(lp_levels),
            lp_samples: Some(lp_samples),
        })
    }
}

/// Default suite of smooth test functions for the sweeps.
pub fn default_suite() -> Vec<String> {
    [
        "gaussian:0.1,0.35",
        "gaussian:-0.3,0.6",
        "bspline:3,1,0",
        "bspline:5,2,3",
        "polybump:6,-1,1.2",
        "modbump:5,-1,1",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemOpts,
    #[arg(long)]
    pub space: Option<Space>,
    /// Comma-separated smoothness values.
    #[arg(long = "s", value_delimiter = ',', allow_negative_numbers = true)]
    pub s: Option<Vec<f64>>,
    /// Comma-separated p values.
    #[arg(long = "p", value_delimiter = ',')]
    pub p: Option<Vec<Exponent>>,
    /// Comma-separated q values.
    #[arg(long = "q", value_delimiter = ',')]
    pub q: Option<Vec<Exponent>>,
    /// Test functions (repeatable); a default suite when absent.
    #[arg(long = "fn", value_name = "SPEC")]
    #[serde(rename = "fn")]
    pub functions: Option<Vec<String>>,
    /// Dilations 2^m for m = 0..=max_dilation.
    #[arg(long)]
    pub max_dilation: Option<i32>,
    #[arg(long)]
    pub j_max: Option<i32>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub lp_levels: Option<usize>,
    /// Smallest reference grid; grids grow with the levels as needed.
    #[arg(long)]
    pub lp_samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Layered for SweepConfig {
    fn overlay(self, base: Self) -> Self {
        overlay_fields!(self, base; space, s, p, q, functions, max_dilation, j_max, tol, lp_levels, lp_samples, out; system: self.system.overlay(base.system))
    }

    fn resolved(self) -> Result<Self, CliError> {
        let j_max = self.j_max.unwrap_or(DEFAULT_J_MAX);
        Ok(Self {
            system: self.system.resolved()?,
            space: Some(required(&self.space, "space")?),
            s: Some(required(&self.s, "s")?),
            p: Some(required(&self.p, "p")?),
            q: Some(required(&self.q, "q")?),
            functions: Some(self.functions.unwrap_or_else(default_suite)),
            max_dilation: Some(self.max_dilation.unwrap_or(6)),
            j_max: Some(j_max),
            tol: Some(self.tol.unwrap_or(DEFAULT_TOL)),
            lp_levels: Some(self.lp_levels.unwrap_or(j_max.max(0) as usize)),
            lp_samples: Some(self.lp_samples.unwrap_or(DEFAULT_LP_MIN_SAMPLES)),
            out: self.out,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    #[command(flatten)]
    #[serde(flatten)]
    pub system: SystemOpts,
    /// Comma-separated p values (`inf` allowed).
    #[arg(long = "p", value_delimiter = ',')]
    pub p: Option<Vec<Exponent>>,
    #[arg(long = "fn", value_name = "SPEC")]
    #[serde(rename = "fn")]
    pub functions: Option<Vec<String>>,
    #[arg(long)]
    pub max_dilation: Option<i32>,
    /// Scales computed beyond the dilation exponent: J_max = m + extra.
    #[arg(long)]
    pub extra_levels: Option<i32>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Layered for EndpointConfig {
    fn overlay(self, base: Self) -> Self {
        overlay_fields!(self, base; p, functions, max_dilation, extra_levels, tol, out; system: self.system.overlay(base.system))
    }

    fn resolved(self) -> Result<Self, CliError> {
        let smooth = ["gaussian:0.1,0.4", "polybump:6,-1,1", "modbump:4,-1.5,1.5", "bspline:5,1,0"];
        Ok(Self {
            system: self.system.resolved()?,
            p: Some(self.p.unwrap_or_else(|| vec![Exponent::Finite(2.0), Exponent::Infinite])),
            functions: Some(
                self.functions
                    .unwrap_or_else(|| smooth.iter().map(|s| s.to_string()).collect()),
            ),
            max_dilation: Some(self.max_dilation.unwrap_or(4)),
            extra_levels: Some(self.extra_levels.unwrap_or(DEFAULT_J_MAX)),
            tol: Some(self.tol.unwrap_or(DEFAULT_TOL)),
            out: self.out,
        })
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct LpReconConfig {
    #[arg(long = "fn", value_name = "SPEC")]
    #[serde(rename = "fn")]
    pub function: Option<String>,
    /// Number of levels K.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Grid size (sized automatically when absent).
    #[arg(long)]
    pub lp_samples: Option<usize>,
    /// Also write the per-level norms `k, ||L_k f||_p` to this CSV file.
    #[arg(long)]
    pub pieces_csv: Option<PathBuf>,
    /// Exponent for the per-level norms.
    #[arg(long)]
    pub p: Option<Exponent>,
}

impl Layered for LpReconConfig {
    fn overlay(self, base: Self) -> Self {
        overlay_fields!(self, base; function, levels, lp_samples, pieces_csv, p;)
    }

    fn resolved(self) -> Result<Self, CliError> {
        let function = required(&self.function, "fn")?;
        let levels = self.levels.unwrap_or(12);
        let lp_samples = match self.lp_samples {
            Some(n) => n,
            None => lp_samples_for(&function.parse()?, levels, DEFAULT_LP_MIN_SAMPLES),
        };
        Ok(Self {
            function: Some(function),
            levels: Some(levels),
            lp_samples: Some(lp_samples),
            pieces_csv: self.pieces_csv,
            p: Some(self.p.unwrap_or(Exponent::Finite(2.0))),
        })
    }
}
