//! Command-line front end: `spectrum`, `scan` and `audit`.
//!
//! Settings come from built-in defaults, then an optional `key = value`
//! config file, then flags. The shell cache path may also come from the
//! `SCATTERER_CACHE` environment variable.

mod config;

pub use config::{OutputFormat, RunConfig};

use crate::equidist::{
    audit_ab_mapping, audit_inner_products, audit_lemma_counts, audit_lemma_n0, audit_strips,
    lambda_zero_preset, scan, tilde_n1_census, write_report_csv, write_report_json, AuditOutcome,
    ScanPlan,
};
use crate::error::{Error, Result};
use crate::lattice::{br_census_table, landau_count, Dim, LatticePoint, ShellCache};
use crate::spectrum::{solve_spectrum, ScattererConfig};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
/// I/O failures and failed audits.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "scatterer",
    version,
    about = "Point scatterer spectra and eigenfunction mass on the flat torus"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve for the perturbed eigenvalues up to X.
    Spectrum(RunArgs),
    /// Spectrum, filters and mass-ratio discrepancy scan.
    Scan(RunArgs),
    /// Exhaustive lattice audits and census checks.
    Audit(RunArgs),
}

/// Every flag is optional; unset flags fall back to the config file and then
/// to defaults. Flags a subcommand does not use are ignored.
#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// `key = value` config file; keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dimension, 2 or 3.
    #[arg(long)]
    pub d: Option<u32>,
    /// Self-adjoint extension parameter in (−π, π).
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Scatterer position, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Spectrum ceiling X.
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// 2d, 3d-all or 3d-filtered.
    #[arg(long)]
    pub mode: Option<String>,
    /// Centres per axis.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Number of radii.
    #[arg(long)]
    pub rgrid: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Shell cache file, loaded before and saved after the run.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Series tolerance for the spectral function.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Restrict scans to `lo,hi`.
    #[arg(long)]
    pub lambda_range: Option<String>,
    /// Exhaustive audit range for |ξ| (smaller is faster).
    #[arg(long)]
    pub range_xi: Option<i64>,
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_numerical() => EXIT_NUMERICAL,
        Error::InvalidInput(_) | Error::StepTooCoarse { .. } | Error::CacheFormat { .. } => {
            EXIT_VALIDATION
        }
        _ => EXIT_FAILURE,
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let (args, name) = match &cli.command {
        Command::Spectrum(a) => (a, "spectrum"),
        Command::Scan(a) => (a, "scan"),
        Command::Audit(a) => (a, "audit"),
    };
    let cfg = RunConfig::resolve(args)?;
    if let Some(jobs) = cfg.jobs {
        // Fails only if a pool already exists, e.g. when run twice in one process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    if let Some(path) = &cfg.cache {
        let loaded = ShellCache::global().load(path)?;
        log::info!("loaded {loaded} shells from {}", path.display());
    }
    let mut buf = Vec::new();
    let code = match name {
        "spectrum" => cmd_spectrum(&cfg, &mut buf)?,
        "scan" => cmd_scan(&cfg, &mut buf)?,
        _ => cmd_audit(&cfg, &mut buf)?,
    };
    match &cfg.out {
        Some(path) => std::fs::write(path, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    if let Some(path) = &cfg.cache {
        ShellCache::global().save(path)?;
    }
    Ok(code)
}

fn scatterer(cfg: &RunConfig) -> Result<ScattererConfig> {
    ScattererConfig::new(cfg.dim, cfg.phi, cfg.x0.clone(), cfg.tol)
}

pub fn cmd_spectrum<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<i32> {
    let spec = solve_spectrum(cfg.ceiling, &scatterer(cfg)?)?;
    match cfg.format {
        OutputFormat::Csv => spec.write_csv(&mut *out)?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &spec)?;
            writeln!(out)?;
        }
    }
    if spec.anomalies.is_empty() {
        Ok(EXIT_OK)
    } else {
        for a in &spec.anomalies {
            eprintln!("warning: {a}");
        }
        Ok(EXIT_NUMERICAL)
    }
}

pub fn scan_plan(cfg: &RunConfig) -> Result<ScanPlan> {
    let mut plan = ScanPlan::new(cfg.mode, cfg.eps, cfg.delta)?;
    plan.eta = cfg.eta;
    plan.grid_n = cfg.grid;
    plan.radii_count = cfg.rgrid;
    plan.lambda_range = cfg.lambda_range;
    plan.validate()?;
    Ok(plan)
}

pub fn cmd_scan<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<i32> {
    let plan = scan_plan(cfg)?;
    let spec = solve_spectrum(cfg.ceiling, &scatterer(cfg)?)?;
    for a in &spec.anomalies {
        log::warn!("{a}");
    }
    let reports = scan(&spec, &plan)?;
    if reports.is_empty() {
        eprintln!("warning: no eigenvalue passed the filters; the report is empty");
    }
    match cfg.format {
        OutputFormat::Csv => write_report_csv(&reports, &plan, cfg.seed, &mut *out)?,
        OutputFormat::Json => write_report_json(&reports, &plan, cfg.seed, &mut *out)?,
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRow {
    pub audit: String,
    pub checked: u64,
    pub violations: u64,
    pub measured: Option<f64>,
    pub status: &'static str,
    pub note: String,
}

impl From<AuditOutcome> for AuditRow {
    fn from(a: AuditOutcome) -> Self {
        Self {
            status: if a.passed() { "pass" } else { "fail" },
            audit: a.name,
            checked: a.checked,
            violations: a.violations,
            measured: a.measured,
            note: a.note,
        }
    }
}

fn row(audit: &str, ok: bool, measured: f64, note: String) -> AuditRow {
    AuditOutcome {
        name: audit.into(),
        checked: 1,
        violations: (!ok) as u64,
        measured: Some(measured),
        note,
    }
    .into()
}

/// Every audit at the configured range.
pub fn audit_rows(cfg: &RunConfig) -> Result<Vec<AuditRow>> {
    let r = cfg.range_xi;
    if r < 2 {
        return Err(Error::invalid(format!("range-xi must be ≥ 2, got {r}")));
    }
    let scale = r as f64 / 30.0;
    let mut rows: Vec<AuditRow> = Vec::new();
    rows.extend(
        audit_lemma_n0(r, (r + 1) / 2)?
            .into_iter()
            .map(AuditRow::from),
    );
    rows.push(audit_ab_mapping((2 * r / 3).max(1), &[0.1, 0.25])?.into());
    let radii: Vec<f64> = [1.5, 10.0, 37.5, 100.0].iter().map(|v| v * scale).collect();
    rows.push(audit_inner_products(r, (5 * r / 3).max(1), &radii)?.into());

    let strips = audit_strips(200, cfg.seed)?;
    rows.push(AuditRow {
        audit: "strip_count_bound".into(),
        checked: 2 * strips.samples as u64,
        violations: (strips.growth() > 1.5) as u64,
        measured: Some(strips.max_ratio_doubled),
        status: if strips.growth() <= 1.5 {
            "pass"
        } else {
            "fail"
        },
        note: format!(
            "max count/(L lambda^0.1): {:.6} over {} pairs, {:.6} over {}; growth {:.4}; seed {}",
            strips.max_ratio,
            strips.samples,
            strips.max_ratio_doubled,
            2 * strips.samples,
            strips.growth(),
            strips.seed
        ),
    });

    let table = br_census_table(1e5)?;
    let low = table.census(1e3, 0.3)?.density();
    let high = table.census(1e5, 0.3)?.density();
    rows.push(row(
        "br_density_trend",
        high < low,
        high / low,
        format!("BR(0.3) density {low:.6} at 1e3, {high:.6} at 1e5"),
    ));
    let landau = landau_count(1e6)?;
    let ratio = landau.ratio();
    rows.push(row(
        "landau_ratio",
        (0.9..=1.3).contains(&ratio),
        ratio,
        format!("count {} at X = 1e6", landau.count),
    ));
    let (kept, total) = tilde_n1_census(100_000);
    let frac = kept as f64 / total as f64;
    rows.push(row(
        "tilde_n1_fraction",
        frac > 0.9,
        frac,
        format!("{kept} of {total} norms in [2, 1e5]"),
    ));

    let x = cfg.ceiling;
    let spec2 = solve_spectrum(x, &ScattererConfig::at_origin(Dim::Two, cfg.phi)?)?;
    let l0 = lambda_zero_preset(&spec2, ScanPlan::DEFAULT_EPS, ScanPlan::DEFAULT_DELTA)?;
    for z in [
        LatticePoint::new2(1, 0),
        LatticePoint::new2(1, 1),
        LatticePoint::new2(3, 4),
    ] {
        let a = audit_lemma_counts(&spec2, &l0, x, &z, 0.1)?;
        rows.push(row(
            "lambda_proximity_count",
            a.count <= a.candidates,
            a.ratio(),
            format!(
                "zeta {:?}, X = {x}, delta 0.1: {} of {} in Lambda_0; measured = count/(X^(1/2+2 delta)/|zeta|)",
                z.coords(),
                a.count,
                a.candidates
            ),
        ));
    }
    Ok(rows)
}

pub fn cmd_audit<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<i32> {
    let rows = audit_rows(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record([
                "audit",
                "checked",
                "violations",
                "measured",
                "status",
                "note",
            ])?;
            for r in &rows {
                w.write_record([
                    r.audit.clone(),
                    r.checked.to_string(),
                    r.violations.to_string(),
                    r.measured.map(|m| format!("{m:.11e}")).unwrap_or_default(),
                    r.status.to_string(),
                    r.note.clone(),
                ])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &rows)?;
            writeln!(out)?;
        }
    }
    Ok(if rows.iter().all(|r| r.violations == 0) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}
