use super::RunArgs;
use crate::equidist::{ScanMode, ScanPlan};
use crate::error::{Error, Result};
use crate::lattice::{Dim, CACHE_ENV};
use crate::TorusPoint;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::invalid(format!(
                "unknown format {s:?} (expected csv or json)"
            ))),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: Dim,
    pub phi: f64,
    pub x0: TorusPoint,
    pub ceiling: f64,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub mode: ScanMode,
    pub grid: usize,
    pub rgrid: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub tol: f64,
    pub lambda_range: Option<(f64, f64)>,
    pub range_xi: i64,
}

impl RunConfig {
    pub const DEFAULT_PHI: f64 = 0.0;
    pub const DEFAULT_CEILING: f64 = 2000.0;
    pub const DEFAULT_SEED: u64 = 20240917;
    pub const DEFAULT_TOL: f64 = 1e-11;
    pub const DEFAULT_RANGE_XI: i64 = 30;

    const KEYS: [&'static str; 18] = [
        "d",
        "phi",
        "x0",
        "x",
        "eps",
        "delta",
        "eta",
        "mode",
        "grid",
        "rgrid",
        "seed",
        "jobs",
        "cache",
        "out",
        "format",
        "tol",
        "lambda-range",
        "range-xi",
    ];

    /// Defaults, then `--config`, then flags.
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => read_config_file(p)?,
            None => HashMap::new(),
        };
        let env_cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
        Self::merge(args, &file, env_cache)
    }

    /// `file` holds raw `key = value` pairs; the cache path precedence is
    /// flag, then environment, then file.
    pub fn merge(
        args: &RunArgs,
        file: &HashMap<String, String>,
        env_cache: Option<PathBuf>,
    ) -> Result<Self> {
        let d: Option<u32> = pick(args.d, file, "d")?;
        let mode: Option<ScanMode> = match &args.mode {
            Some(m) => Some(m.parse()?),
            None => parse_key(file, "mode")?,
        };
        let dim = match d {
            Some(d) => Dim::try_from(d)?,
            None => mode.map(ScanMode::dim).unwrap_or(Dim::Two),
        };
        let mode = match mode {
            Some(m) if m.dim() != dim => {
                return Err(Error::invalid(format!(
                    "mode {m} needs d = {}, got d = {dim}",
                    m.dim()
                )))
            }
            Some(m) => m,
            None if dim == Dim::Two => ScanMode::TwoD,
            None => ScanMode::ThreeDAll,
        };
        let x0 = match &args.x0 {
            Some(v) => Some(v.clone()),
            None => file.get("x0").map(|s| parse_list(s)).transpose()?,
        }
        .unwrap_or_else(|| vec![0.0; dim.get()]);
        let lambda_range = match &args.lambda_range {
            Some(s) => Some(parse_range(s)?),
            None => file
                .get("lambda-range")
                .map(|s| parse_range(s))
                .transpose()?,
        };
        let format = match &args.format {
            Some(f) => f.parse()?,
            None => parse_key(file, "format")?.unwrap_or(OutputFormat::Csv),
        };
        let cfg = Self {
            dim,
            phi: pick(args.phi, file, "phi")?.unwrap_or(Self::DEFAULT_PHI),
            x0,
            ceiling: pick(args.x, file, "x")?.unwrap_or(Self::DEFAULT_CEILING),
            eps: pick(args.eps, file, "eps")?.unwrap_or(ScanPlan::DEFAULT_EPS),
            delta: pick(args.delta, file, "delta")?.unwrap_or(ScanPlan::DEFAULT_DELTA),
            eta: pick(args.eta, file, "eta")?.unwrap_or(ScanPlan::DEFAULT_ETA),
            mode,
            grid: pick(args.grid, file, "grid")?.unwrap_or(mode.default_grid()),
            rgrid: pick(args.rgrid, file, "rgrid")?.unwrap_or(ScanPlan::DEFAULT_RADII),
            seed: pick(args.seed, file, "seed")?.unwrap_or(Self::DEFAULT_SEED),
            jobs: pick(args.jobs, file, "jobs")?,
            cache: args
                .cache
                .clone()
                .or(env_cache)
                .or_else(|| file.get("cache").map(PathBuf::from)),
            out: args
                .out
                .clone()
                .or_else(|| file.get("out").map(PathBuf::from)),
            format,
            tol: pick(args.tol, file, "tol")?.unwrap_or(Self::DEFAULT_TOL),
            lambda_range,
            range_xi: pick(args.range_xi, file, "range-xi")?.unwrap_or(Self::DEFAULT_RANGE_XI),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x0.len() != self.dim.get() {
            return Err(Error::invalid(format!(
                "x0 has {} coordinates, expected {}",
                self.x0.len(),
                self.dim.get()
            )));
        }
        if !(self.ceiling > 0.0 && self.ceiling.is_finite()) {
            return Err(Error::invalid(format!(
                "X must be > 0, got {}",
                self.ceiling
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::invalid("jobs must be ≥ 1"));
        }
        if self.grid == 0 || self.rgrid == 0 {
            return Err(Error::invalid("grid and rgrid must be ≥ 1"));
        }
        Ok(())
    }
}

fn pick<T: FromStr>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => parse_key(file, key),
    }
}

fn parse_key<T: FromStr>(file: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    file.get(key)
        .map(|s| {
            s.parse()
                .map_err(|_| Error::invalid(format!("config key {key}: cannot parse {s:?}")))
        })
        .transpose()
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("not a number: {t:?}")))
        })
        .collect()
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    match parse_list(s)?.as_slice() {
        &[lo, hi] if lo <= hi => Ok((lo, hi)),
        _ => Err(Error::invalid(format!(
            "lambda range must be lo,hi with lo ≤ hi, got {s:?}"
        ))),
    }
}

/// `key = value` lines; `#` starts a comment. Keys match the long flag names,
/// with `_` accepted for `-`.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::invalid(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = k.trim().replace('_', "-");
        if !RunConfig::KEYS.contains(&key.as_str()) {
            return Err(Error::invalid(format!(
                "config line {}: unknown key {key:?}",
                i + 1
            )));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::invalid(format!(
                "config line {}: duplicate key {key:?}",
                i + 1
            )));
        }
    }
    Ok(out)
}

fn read_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}
