//! Subcommand implementations. Each returns the text written to stdout.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use blframe::{
    crux_target, frame_coefficients, frame_least_squares, lp_pieces, lp_reconstruct, norm_from_coefficients,
    reference_norm, require_frame_range, seq_norm_endpoint, sobolev_reference_norm, Exponent, GridSpec, NormParams,
    NormReport, Space, SplineSystem, TestFunction, Which,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::cache::{build_and_store, load_system};
use crate::config::{
    lp_samples_for, parse_functions, BuildConfig, CheckConfig, CoeffsConfig, EndpointConfig, LpReconConfig,
    NormConfig, SweepConfig, DEFAULT_LP_MARGIN,
};
use crate::error::CliError;

const ORTHO_TOL: f64 = 1e-7;
const MOMENT_TOL: f64 = 1e-8;
const KNOT_TOL: f64 = 1e-7;
const CRUX_TOL: f64 = 1e-4;
const HAAR_CRUX_TOL: f64 = 1e-12;
const RHO_TOL: f64 = 1e-6;
const PIECE_TOL: f64 = 1e-8;

fn write_or_return(out: Option<&Path>, text: String) -> Result<String, CliError> {
    match out {
        Some(path) => {
            fs::write(path, &text).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn system_summary(sys: &SplineSystem) -> serde_json::Value {
    json!({
        "order": sys.order(),
        "truncation": sys.truncation(),
        "samples": sys.samples(),
        "truncation_tail": sys.truncation_tail(),
        "decay": sys.decay(),
    })
}

pub fn build(cfg: &BuildConfig) -> Result<String, CliError> {
    let (sys, path) = build_and_store(&cfg.system)?;
    let mut doc = system_summary(&sys);
    doc["path"] = json!(path.display().to_string());
    pretty(&doc)
}

#[derive(Serialize)]
struct Invariant {
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl Invariant {
    fn at_most(value: f64, tolerance: f64) -> Self {
        Self {
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

pub fn check(cfg: &CheckConfig) -> Result<(String, bool), CliError> {
    let sys = load_system(&cfg.system)?;
    let n = sys.order();
    let max_shift = cfg.max_shift.expect("resolved");
    let w = cfg.window.expect("resolved");

    let ortho = sys.orthonormality_residual(-1..=3, max_shift);
    let moments = sys
        .moments(Which::Wavelet, n)?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let knots = sys.smoothness_defect();
    let gamma = sys.decay().gamma;

    let ls = frame_least_squares(&sys, &crux_target(n), -w..=w)?;
    let crux_tol = if n == 0 { HAAR_CRUX_TOL } else { CRUX_TOL };

    let d = sys.antiderivative_rho().nth_derivative(n + 1);
    let rho = (0..200)
        .map(|i| {
            let x = -6.0 + 12.0 * i as f64 / 200.0 + 1.234e-3;
            (d.eval(2.0 * x) - sys.wavelet_pp().eval(x)).abs()
        })
        .fold(0.0f64, f64::max);

    let fit = sys.decay();
    let bound = |mu: i64| 4.0 * fit.c * (fit.gamma / 2.0).exp() * (-(fit.gamma / 2.0) * mu.abs() as f64).exp();
    let mut agree = 0.0f64;
    let mut envelope = 0.0f64;
    for which in [Which::Scaling, Which::Wavelet] {
        for mu in -20..=20 {
            let pc = sys.piecewise_coefficients(which, mu);
            for k in 0..n {
                agree = agree.max((pc.left[k] - pc.right[k]).abs());
            }
            envelope = envelope.max(pc.left[n].abs().max(pc.right[n].abs()) / bound(mu));
        }
    }

    let gamma_check = Invariant {
        value: gamma,
        tolerance: 0.0,
        pass: gamma > 0.0,
    };
    let invariants = [
        ("orthonormality_residual", Invariant::at_most(ortho, ORTHO_TOL)),
        ("wavelet_moments", Invariant::at_most(moments, MOMENT_TOL)),
        ("knot_mismatch", Invariant::at_most(knots, KNOT_TOL)),
        ("decay_gamma", gamma_check),
        ("crux_residual", Invariant::at_most(ls.residual, crux_tol)),
        ("rho_relation", Invariant::at_most(rho, RHO_TOL)),
        ("piece_agreement", Invariant::at_most(agree, PIECE_TOL)),
        ("leading_envelope", Invariant::at_most(envelope, 1.0)),
    ];
    let pass = invariants.iter().all(|(_, inv)| inv.pass);
    let mut doc = system_summary(&sys);
    let mut map = serde_json::Map::new();
    for (name, inv) in invariants {
        map.insert(name.to_string(), serde_json::to_value(inv)?);
    }
    doc["invariants"] = serde_json::Value::Object(map);
    doc["crux_window"] = json!(w);
    if let Some(warning) = &ls.warning {
        doc["warning"] = json!(warning);
    }
    doc["pass"] = json!(pass);
    Ok((pretty(&doc)?, pass))
}

pub fn coeffs(cfg: &CoeffsConfig) -> Result<String, CliError> {
    let sys = load_system(&cfg.system)?;
    let f: TestFunction = cfg.function.as_deref().expect("resolved").parse()?;
    let fc = frame_coefficients(&f, &sys, cfg.j_max.expect("resolved"), cfg.tol.expect("resolved"))?;
    let text = if cfg.basis == Some(true) {
        let mut s = String::from("j,mu,value\n");
        for row in fc.basis_table().rows() {
            for (mu, v) in row.iter() {
                writeln!(s, "{},{mu},{v:e}", row.j).expect("string write");
            }
        }
        s
    } else {
        fc.to_csv()
    };
    write_or_return(cfg.out.as_deref(), text)
}

fn params_of(space: Space, order: usize, s: f64, p: Exponent, q: Exponent) -> Result<NormParams, CliError> {
    Ok(NormParams::new(space, order, s, p.value(), q.value())?)
}

#[derive(Serialize)]
struct Reference {
    method: &'static str,
    levels: Option<usize>,
    samples: Option<usize>,
    value: f64,
}

/// Reference value for a norm: the Littlewood-Paley norm, or the classical
/// Sobolev norm for the endpoint space.
fn reference(
    f: &TestFunction,
    params: &NormParams,
    levels: usize,
    samples: usize,
) -> Result<Reference, CliError> {
    if params.space == Space::SobolevEndpoint {
        return Ok(Reference {
            method: "sobolev",
            levels: None,
            samples: None,
            value: sobolev_reference_norm(f, params.p, params.order + 1)?,
        });
    }
    let grid = GridSpec::for_function(f, samples, DEFAULT_LP_MARGIN)?;
    Ok(Reference {
        method: "littlewood-paley",
        levels: Some(levels),
        samples: Some(samples),
        value: reference_norm(f, params, levels, &grid)?,
    })
}

pub fn norm(cfg: &NormConfig) -> Result<String, CliError> {
    let space = cfg.space.expect("resolved");
    let order = cfg.system.order();
    let params = params_of(
        space,
        order,
        cfg.s.expect("resolved"),
        cfg.p.expect("resolved"),
        cfg.q.expect("resolved"),
    )?;
    require_frame_range(&params)?;
    let spec = cfg.function.as_deref().expect("resolved");
    let f: TestFunction = spec.parse()?;
    let sys = load_system(&cfg.system)?;
    let fc = frame_coefficients(&f, &sys, cfg.j_max.expect("resolved"), cfg.tol.expect("resolved"))?;
    let frame: NormReport = norm_from_coefficients(&fc, &params, spec)?;
    let (reference, reference_error) = match reference(
        &f,
        &params,
        cfg.lp_levels.expect("resolved"),
        cfg.lp_samples.expect("resolved"),
    ) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let ratio = reference.as_ref().map(|r| frame.value / r.value);
    pretty(&json!({
        "frame": frame,
        "reference": reference,
        "reference_error": reference_error,
        "ratio": ratio,
    }))
}

struct SweepRow {
    function: String,
    m: i32,
    s: f64,
    p: Exponent,
    q: Exponent,
    frame: f64,
    reference: f64,
}

pub fn equiv_sweep(cfg: &SweepConfig) -> Result<String, CliError> {
    let space = cfg.space.expect("resolved");
    let order = cfg.system.order();
    let (ss, ps, qs) = (
        cfg.s.as_ref().expect("resolved"),
        cfg.p.as_ref().expect("resolved"),
        cfg.q.as_ref().expect("resolved"),
    );
    let mut grid = Vec::new();
    for &s in ss {
        for &p in ps {
            for &q in qs {
                let params = params_of(space, order, s, p, q)?;
                require_frame_range(&params)?;
                grid.push((s, p, q, params));
            }
        }
    }
    let specs = cfg.functions.as_ref().expect("resolved");
    let functions = parse_functions(specs)?;
    let sys = load_system(&cfg.system)?;
    let j_max = cfg.j_max.expect("resolved");
    let tol = cfg.tol.expect("resolved");
    let levels = cfg.lp_levels.expect("resolved");
    let min_samples = cfg.lp_samples.expect("resolved");
    let max_m = cfg.max_dilation.expect("resolved");

    let cells: Vec<(usize, i32)> = (0..functions.len())
        .flat_map(|i| (0..=max_m).map(move |m| (i, m)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(i, m)| -> Result<Vec<SweepRow>, CliError> {
            let f = functions[i].dilate(2f64.powi(m));
            let fc = frame_coefficients(&f, &sys, j_max + m, tol)?;
            let lp_levels = levels + m.max(0) as usize;
            let samples = lp_samples_for(&f, lp_levels, min_samples);
            let lp_grid = GridSpec::for_function(&f, samples, DEFAULT_LP_MARGIN)?;
            let pieces = lp_pieces(&f, lp_levels, &lp_grid)?;
            grid.iter()
                .map(|&(s, p, q, params)| {
                    Ok(SweepRow {
                        function: specs[i].clone(),
                        m,
                        s,
                        p,
                        q,
                        frame: norm_from_coefficients(&fc, &params, &specs[i])?.value,
                        reference: pieces.aggregate(&params)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let mut csv = String::from("function,m,s,p,q,frame,reference,ratio\n");
    let mut ratios = Vec::new();
    for r in rows.iter().flatten() {
        let ratio = r.frame / r.reference;
        ratios.push(ratio);
        writeln!(
            csv,
            "\"{}\",{},{:.17e},{},{},{:.17e},{:.17e},{:.17e}",
            r.function,
            r.m,
            r.s,
            r.p,
            r.q,
            r.frame,
            r.reference,
            ratio
        )
        .expect("string write");
    }
    eprintln!("{}", ratio_summary(&ratios));
    write_or_return(cfg.out.as_deref(), csv)
}

fn ratio_summary(ratios: &[f64]) -> String {
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    format!(
        "{} points, ratio range [{min:.4}, {max:.4}], max/min {:.4}",
        ratios.len(),
        max / min
    )
}

pub fn endpoint(cfg: &EndpointConfig) -> Result<String, CliError> {
    let order = cfg.system.order();
    let specs = cfg.functions.as_ref().expect("resolved");
    let functions = parse_functions(specs)?;
    let ps = cfg.p.as_ref().expect("resolved");
    for &p in ps {
        require_frame_range(&NormParams::new(Space::SobolevEndpoint, order, order as f64 + 1.0, p.value(), f64::INFINITY)?)?;
    }
    let sys = load_system(&cfg.system)?;
    let extra = cfg.extra_levels.expect("resolved");
    let tol = cfg.tol.expect("resolved");
    let max_m = cfg.max_dilation.expect("resolved");

    let cells: Vec<(usize, i32)> = (0..functions.len())
        .flat_map(|i| (0..=max_m).map(move |m| (i, m)))
        .collect();
    let rows: Vec<Vec<(usize, i32, Exponent, f64, f64)>> = cells
        .par_iter()
        .map(|&(i, m)| -> Result<_, CliError> {
            let f = functions[i].dilate(2f64.powi(m));
            let table = frame_coefficients(&f, &sys, m + extra, tol)?.to_table();
            ps.iter()
                .map(|&p| {
                    let frame = seq_norm_endpoint(&table, order, p);
                    let reference = sobolev_reference_norm(&f, p, order + 1)?;
                    Ok((i, m, p, frame, reference))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let mut csv = String::from("function,m,p,frame,reference,ratio\n");
    let mut ratios = Vec::new();
    for &(i, m, p, frame, reference) in rows.iter().flatten() {
        let ratio = frame / reference;
        ratios.push(ratio);
        writeln!(
            csv,
            "\"{}\",{m},{},{frame:.17e},{reference:.17e},{ratio:.17e}",
            specs[i],
            p
        )
        .expect("string write");
    }
    eprintln!("{}", ratio_summary(&ratios));
    write_or_return(cfg.out.as_deref(), csv)
}

pub fn lp_recon(cfg: &LpReconConfig) -> Result<String, CliError> {
    let spec = cfg.function.as_deref().expect("resolved");
    let f: TestFunction = spec.parse()?;
    let levels = cfg.levels.expect("resolved");
    let samples = cfg.lp_samples.expect("resolved");
    let grid = GridSpec::for_function(&f, samples, DEFAULT_LP_MARGIN)?;
    let residual = lp_reconstruct(&f, levels, &grid)?;
    if let Some(path) = &cfg.pieces_csv {
        let pieces = lp_pieces(&f, levels, &grid)?;
        fs::write(path, pieces.to_csv(cfg.p.expect("resolved"))).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    pretty(&json!({
        "function": spec,
        "levels": levels,
        "samples": samples,
        "window": [grid.lo, grid.hi],
        "residual": residual,
    }))
}
