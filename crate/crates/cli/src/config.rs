//! Run configuration: a flat `key = value` file overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use fcs_core::curve_space::{read_curve, ForwardCurve, Grid, GridKind, WeightParams};
use fcs_core::hjmm_sim::{SimConfig, VolSpec, VASICEK_A, VASICEK_C};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown key '{key}'")]
    UnknownKey { key: String },

    #[error("key '{key}': expected {expected}, found '{found}'")]
    BadValue {
        key: String,
        expected: &'static str,
        found: String,
    },

    #[error("key '{key}': {reason}")]
    Invalid { key: String, reason: String },

    #[error("config file line {line}: expected 'key = value'")]
    Malformed { line: usize },

    #[error("cannot read '{path}': {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    FourierVerify,
    Simulate,
    Approximate,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::FourierVerify => "fourier-verify",
            Command::Simulate => "simulate",
            Command::Approximate => "approximate",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Every accepted key, in canonical form.
pub const KEYS: [&str; 18] = [
    "beta",
    "gamma",
    "grid",
    "cells",
    "x-max",
    "vol-c",
    "vol-a",
    "dt",
    "t-max",
    "paths",
    "seed",
    "h0-file",
    "x-probe",
    "snapshots",
    "rank",
    "eps",
    "threshold-k",
    "out",
];

/// Lower-case, with `_` read as `-`.
pub fn canonical_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Malformed { line: i + 1 })?;
        out.push((canonical_key(k), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub beta: f64,
    pub gamma: f64,
    pub grid: GridKind,
    pub cells: usize,
    pub x_max: f64,
    pub vol_c: f64,
    pub vol_a: f64,
    pub dt: f64,
    pub t_max: f64,
    pub paths: usize,
    pub seed: u64,
    pub h0_file: Option<PathBuf>,
    pub x_probe: f64,
    pub snapshots: bool,
    pub rank: usize,
    pub eps: f64,
    pub threshold_k: Option<f64>,
    pub out: PathBuf,
    /// Every resolved value, for the manifest.
    pub echo: BTreeMap<String, String>,
}

struct Values {
    map: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

impl Values {
    fn get<T>(&mut self, key: &str, expected: &'static str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr + ToString,
    {
        let value = match self.map.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                expected,
                found: raw.clone(),
            })?,
            None => default,
        };
        self.echo.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    fn get_opt<T: FromStr + ToString>(&mut self, key: &str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        match self.map.get(key) {
            Some(raw) => {
                let v = raw.parse::<T>().map_err(|_| ConfigError::BadValue {
                    key: key.to_string(),
                    expected,
                    found: raw.clone(),
                })?;
                self.echo.insert(key.to_string(), v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Merges file entries and flags (flags win), applies per-command defaults and validates
/// every constraint before any computation.
pub fn parse_config(
    command: Command,
    flags: &[(String, String)],
    file: Option<&[(String, String)]>,
) -> Result<RunConfig, ConfigError> {
    let mut map = BTreeMap::new();
    for (k, v) in file.unwrap_or(&[]).iter().chain(flags) {
        let key = canonical_key(k);
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { key: k.clone() });
        }
        map.insert(key, v.clone());
    }
    let mut vals = Values {
        map,
        echo: BTreeMap::new(),
    };

    let (beta0, gamma0, grid0) = match command {
        Command::Spectrum | Command::FourierVerify => (1.0, 2.0, GridKind::Stretched),
        _ => (0.5, 1.5, GridKind::Geometric),
    };
    let beta = vals.get("beta", "a real number", beta0)?;
    let gamma = vals.get("gamma", "a real number", gamma0)?;
    let params = WeightParams::new(beta, gamma)
        .map_err(|_| invalid("gamma", format!("need gamma > beta > 0, got beta = {beta}, gamma = {gamma}")))?;
    let grid = vals.get("grid", "one of uniform, geometric, stretched", grid0.to_string())?;
    let grid = GridKind::from_str(&grid).map_err(|_| ConfigError::BadValue {
        key: "grid".into(),
        expected: "one of uniform, geometric, stretched",
        found: grid,
    })?;
    let cells = vals.get("cells", "a positive integer", 64usize)?;
    if cells < 2 {
        return Err(invalid("cells", "need at least 2 cells"));
    }
    let t_max: f64 = vals.get("t-max", "a positive real number", 1.0)?;
    let dt: f64 = vals.get("dt", "a positive real number", 1.0 / 252.0)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", "must be positive"));
    }
    if !(t_max >= dt && t_max.is_finite()) {
        return Err(invalid("t-max", "must be at least dt"));
    }
    let simulating = matches!(command, Command::Simulate | Command::Approximate | Command::VerifyAll);
    let x_max_default = if simulating {
        params.default_x_max() + t_max
    } else {
        params.default_x_max()
    };
    let x_max = vals.get("x-max", "a positive real number", x_max_default)?;
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(invalid("x-max", "must be positive"));
    }
    if simulating && x_max < t_max {
        return Err(invalid("x-max", "the grid must cover the translation horizon t-max"));
    }
    let vol_c = vals.get("vol-c", "a real number", VASICEK_C)?;
    let vol_a = vals.get("vol-a", "a positive real number", VASICEK_A)?;
    if !vol_c.is_finite() || !(vol_a > 0.0 && vol_a.is_finite()) {
        return Err(invalid("vol-a", "need finite vol-c and positive vol-a"));
    }
    let paths = vals.get("paths", "a positive integer", 100usize)?;
    if paths == 0 {
        return Err(invalid("paths", "need at least one path"));
    }
    let seed = vals.get("seed", "a non-negative integer", 1u64)?;
    let h0_file = vals.get_opt::<String>("h0-file", "a file path")?.map(PathBuf::from);
    let x_probe = vals.get("x-probe", "a real number in [0, x-max]", 1.0)?;
    if !(0.0..=x_max).contains(&x_probe) {
        return Err(invalid("x-probe", format!("must lie in [0, {x_max}]")));
    }
    let snapshots = vals.get("snapshots", "true or false", false)?;
    let rank = vals.get("rank", "a positive integer", 4usize)?;
    if rank == 0 || rank > cells {
        return Err(invalid("rank", format!("must lie in 1..={cells}")));
    }
    let eps = vals.get("eps", "a non-negative real number", fcs_core::approx::default_eps(rank))?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(invalid("eps", "must be non-negative"));
    }
    let threshold_k = vals.get_opt::<f64>("threshold-k", "a positive real number")?;
    let out = PathBuf::from(vals.get("out", "a directory path", "fcs-out".to_string())?);

    let cfg = RunConfig {
        command,
        beta,
        gamma,
        grid,
        cells,
        x_max,
        vol_c,
        vol_a,
        dt,
        t_max,
        paths,
        seed,
        h0_file,
        x_probe,
        snapshots,
        rank,
        eps,
        threshold_k,
        out,
        echo: vals.echo,
    };
    // the grid, initial curve and threshold are cheap and checked here so no run starts
    // with a config that would fail later
    let grid = cfg.build_grid()?;
    if simulating {
        let h0 = cfg.initial_curve(&grid)?;
        if let Some(k) = cfg.threshold_k {
            let norm = h0.hgamma_norm(&params);
            if !(k > norm) {
                return Err(invalid("threshold-k", format!("must exceed ||h0||_gamma = {norm}")));
            }
        }
        cfg.sim_config(grid)?;
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn params(&self) -> WeightParams {
        WeightParams::new(self.beta, self.gamma).expect("validated")
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>, ConfigError> {
        self.grid
            .build(self.x_max, self.cells, &self.params())
            .map(Arc::new).map_err(|e| invalid("cells", e.to_string()))
    }

    pub fn vol(&self) -> VolSpec {
        VolSpec::vasicek(self.vol_c, self.vol_a)
    }

    /// `h0` from `h0-file` (read on the uniform grid of its header and resampled), or the
    /// default `0.05 - 0.02 e^{-x}` with long-end level 0.05.
    pub fn initial_curve(&self, grid: &Arc<Grid>) -> Result<ForwardCurve, ConfigError> {
        match &self.h0_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
                read_curve(&text)
                    .and_then(|f| f.on_uniform_grid())
                    .and_then(|h| h.resample(grid.clone()))
                    .map_err(|e| invalid("h0-file", e.to_string()))
            }
            None => ForwardCurve::from_fn(grid.clone(), 0.05, |x| 0.05 - 0.02 * (-x).exp())
                .map_err(|e| invalid("h0-file", e.to_string())),
        }
    }

    pub fn sim_config(&self, grid: Arc<Grid>) -> Result<SimConfig, ConfigError> {
        SimConfig::new(self.dt, self.t_max, self.paths, self.seed, self.params(), grid)
            .map_err(|e| invalid("t-max", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn weights_from_flags() {
        let cfg = parse_config(Command::Spectrum, &pairs(&[("beta", "1"), ("gamma", "2")]), None).unwrap();
        assert_eq!(cfg.params().delta(), 1.5);
    }

    #[test]
    fn equal_weights_are_rejected() {
        let err = parse_config(Command::Spectrum, &pairs(&[("beta", "2"), ("gamma", "2")]), None).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "gamma"));
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("seed = 7\n# comment\nbeta=0.5\n").unwrap();
        let cfg = parse_config(Command::Simulate, &pairs(&[("seed", "9")]), Some(&file)).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.beta, 0.5);
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        let file = parse_config_text("sed = 7").unwrap();
        assert_eq!(
            parse_config(Command::Simulate, &[], Some(&file)).unwrap_err(),
            ConfigError::UnknownKey { key: "sed".into() }
        );
        let err = parse_config(Command::Simulate, &pairs(&[("paths", "many")]), None).unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { ref key, expected: "a positive integer", .. } if key == "paths"));
        assert_eq!(parse_config_text("just words"), Err(ConfigError::Malformed { line: 1 }));
    }

    #[test]
    fn threshold_must_exceed_initial_norm() {
        let err = parse_config(Command::Approximate, &pairs(&[("threshold_K", "0.01")]), None).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "threshold-k"));
    }

    #[test]
    fn horizon_must_fit_grid() {
        let err = parse_config(Command::Simulate, &pairs(&[("x-max", "0.5")]), None).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "x-max"));
    }
}
