//! On-disk cache of constructed systems, keyed by `(n, K, N)`.

use std::env;
use std::fs;
use std::path::PathBuf;

use blframe::{build_system, SplineSystem};

use crate::config::SystemOpts;
use crate::error::CliError;

pub const CACHE_ENV: &str = "BLFRAME_CACHE_DIR";
const DEFAULT_CACHE_DIR: &str = ".blframe-cache";

pub fn cache_dir() -> PathBuf {
    env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

pub fn cache_path(opts: &SystemOpts) -> PathBuf {
    let k = opts.truncation.map_or_else(|| "auto".to_string(), |k| k.to_string());
    cache_dir().join(format!("bl_n{}_K{}_N{}.json", opts.order(), k, opts.samples()))
}

/// The cached system if present, otherwise a freshly built one.
pub fn load_system(opts: &SystemOpts) -> Result<SplineSystem, CliError> {
    let path = cache_path(opts);
    if let Ok(text) = fs::read_to_string(&path) {
        return Ok(SplineSystem::from_json(&text)?);
    }
    Ok(build_system(opts.order(), opts.truncation, opts.samples())?)
}

/// Builds the system and writes it to the cache.
pub fn build_and_store(opts: &SystemOpts) -> Result<(SplineSystem, PathBuf), CliError> {
    let sys = build_system(opts.order(), opts.truncation, opts.samples())?;
    let dir = cache_dir();
    fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir, source })?;
    let path = cache_path(opts);
    fs::write(&path, sys.to_json()?).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok((sys, path))
}
