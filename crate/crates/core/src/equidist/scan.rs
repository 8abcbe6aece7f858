use super::{br_avoid_filter, gap_filter_2d, intersect, lambda_prime_3d, Filter};
use crate::ballmass::{correlate, grid_point, ModeCorrelation, RadialProfile};
use crate::error::{Error, Result};
use crate::greens::{norm_report, TruncatedEigenfunction};
use crate::lattice::Dim;
use crate::numeric::log_spaced;
use crate::spectrum::{PerturbedSpectrum, SpectrumEntry};
use crate::TorusPoint;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanMode {
    #[serde(rename = "2d")]
    TwoD,
    #[serde(rename = "3d-all")]
    ThreeDAll,
    #[serde(rename = "3d-filtered")]
    ThreeDFiltered,
}

impl ScanMode {
    pub fn name(self) -> &'static str {
        match self {
            ScanMode::TwoD => "2d",
            ScanMode::ThreeDAll => "3d-all",
            ScanMode::ThreeDFiltered => "3d-filtered",
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            ScanMode::TwoD => Dim::Two,
            _ => Dim::Three,
        }
    }

    /// `δ` must stay below `ε` divided by this.
    pub fn delta_divisor(self) -> f64 {
        match self {
            ScanMode::TwoD => 6.0,
            ScanMode::ThreeDAll => 1.0,
            ScanMode::ThreeDFiltered => 16.0,
        }
    }

    /// Smallest radius is `λ^{κ + ε}`.
    pub fn radius_exponent(self) -> f64 {
        match self {
            ScanMode::TwoD => -0.5,
            ScanMode::ThreeDAll => -1.0 / 12.0,
            ScanMode::ThreeDFiltered => -1.0 / 6.0,
        }
    }

    pub fn default_filters(self) -> Vec<Filter> {
        match self {
            ScanMode::TwoD => vec![Filter::Gap, Filter::BrAvoid],
            ScanMode::ThreeDAll => vec![],
            ScanMode::ThreeDFiltered => vec![Filter::LambdaPrime3d],
        }
    }

    pub fn default_grid(self) -> usize {
        match self {
            ScanMode::TwoD => 24,
            _ => 12,
        }
    }
}

impl fmt::Display for ScanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2d" => Ok(ScanMode::TwoD),
            "3d-all" => Ok(ScanMode::ThreeDAll),
            "3d-filtered" => Ok(ScanMode::ThreeDFiltered),
            _ => Err(Error::invalid(format!(
                "unknown mode {s:?} (expected 2d, 3d-all or 3d-filtered)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPlan {
    pub mode: ScanMode,
    pub eps: f64,
    pub delta: f64,
    /// Exponent of the gap filter.
    pub eta: f64,
    /// Centres per axis.
    pub grid_n: usize,
    pub radii_count: usize,
    /// Only `λ` in this closed range are scanned.
    pub lambda_range: Option<(f64, f64)>,
    pub filters: Vec<Filter>,
}

impl ScanPlan {
    pub const DEFAULT_EPS: f64 = 0.3;
    pub const DEFAULT_DELTA: f64 = 0.04;
    pub const DEFAULT_ETA: f64 = 0.2;
    pub const DEFAULT_RADII: usize = 16;

    pub fn new(mode: ScanMode, eps: f64, delta: f64) -> Result<Self> {
        let plan = Self {
            mode,
            eps,
            delta,
            eta: Self::DEFAULT_ETA,
            grid_n: mode.default_grid(),
            radii_count: Self::DEFAULT_RADII,
            lambda_range: None,
            filters: mode.default_filters(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("ε must be > 0, got {}", self.eps)));
        }
        let bound = self.eps / self.mode.delta_divisor();
        if !(self.delta > 0.0 && self.delta < bound) {
            return Err(Error::invalid(format!(
                "mode {} needs 0 < δ < {bound} (ε/{}), got δ = {}",
                self.mode,
                self.mode.delta_divisor(),
                self.delta
            )));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("η must be > 0, got {}", self.eta)));
        }
        if self.grid_n < 2 {
            return Err(Error::invalid("grid needs at least 2 points per axis"));
        }
        if self.radii_count == 0 {
            return Err(Error::invalid("need at least one radius"));
        }
        if let Some((lo, hi)) = self.lambda_range {
            if !(lo <= hi) {
                return Err(Error::invalid(format!("empty λ range [{lo}, {hi}]")));
            }
        }
        for f in &self.filters {
            let ok = match f {
                Filter::Gap | Filter::BrAvoid => self.mode.dim() == Dim::Two,
                Filter::LambdaPrime3d => self.mode.dim() == Dim::Three,
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "filter {f} does not apply to mode {}",
                    self.mode
                )));
            }
        }
        if self.filters.contains(&Filter::BrAvoid) && self.eps >= 0.5 {
            return Err(Error::invalid("the BR filter needs ε < 1/2"));
        }
        Ok(())
    }

    /// Smallest radius for this `λ`.
    pub fn threshold(&self, lambda: f64) -> f64 {
        lambda.powf(self.mode.radius_exponent() + self.eps)
    }

    /// Log-spaced radii from the threshold to `π/2`; a threshold above `π/2`
    /// collapses to the single radius `π/2`.
    pub fn radii(&self, lambda: f64) -> Vec<f64> {
        let lo = self.threshold(lambda);
        if !(lo < FRAC_PI_2) || self.radii_count == 1 {
            return vec![lo.min(FRAC_PI_2)];
        }
        let mut radii = log_spaced(lo, FRAC_PI_2, self.radii_count);
        radii.dedup();
        radii
    }

    /// Sorted indices of the entries to scan.
    pub fn select(&self, spec: &PerturbedSpectrum) -> Result<Vec<usize>> {
        let mut kept: Vec<usize> = spec
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                e.lambda > 1.0
                    && self
                        .lambda_range
                        .is_none_or(|(lo, hi)| lo <= e.lambda && e.lambda <= hi)
            })
            .map(|(i, _)| i)
            .collect();
        for f in &self.filters {
            let pass = match f {
                Filter::Gap => gap_filter_2d(spec, self.eta)?,
                Filter::BrAvoid => br_avoid_filter(spec, self.eps, self.delta)?,
                Filter::LambdaPrime3d => lambda_prime_3d(spec)?,
            };
            kept = intersect(&kept, &pass);
        }
        Ok(kept)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub lambda: f64,
    pub filters_passed: Vec<Filter>,
    /// Max of `|μ − 1|` over the grid of centres and radii.
    pub sup_dev: f64,
    pub argmax_x: TorusPoint,
    pub argmax_r: f64,
    /// `2‖g_λ − g_{λ,L}‖`.
    pub defect_bar: f64,
    pub grid_n: usize,
    pub eps: f64,
    pub delta: f64,
    pub window: f64,
    pub modes: usize,
}

/// One report per selected `λ`, sorted by `λ`. Entries with an empty window
/// are skipped.
pub fn scan(spec: &PerturbedSpectrum, plan: &ScanPlan) -> Result<Vec<DiscrepancyReport>> {
    plan.validate()?;
    if spec.dim() != plan.mode.dim() {
        return Err(Error::invalid(format!(
            "mode {} needs a {}D spectrum",
            plan.mode,
            plan.mode.dim()
        )));
    }
    let selected = plan.select(spec)?;
    if selected.is_empty() {
        log::warn!("no eigenvalue passed the filters");
    }
    let results: Vec<Result<Option<DiscrepancyReport>>> = selected
        .par_iter()
        .map(|&i| scan_entry(spec, &spec.entries[i], plan))
        .collect();
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        if let Some(rep) = r? {
            reports.push(rep);
        }
    }
    reports.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(reports)
}

fn scan_entry(
    spec: &PerturbedSpectrum,
    entry: &SpectrumEntry,
    plan: &ScanPlan,
) -> Result<Option<DiscrepancyReport>> {
    let x0 = &spec.config.x0;
    let f = match TruncatedEigenfunction::from_entry(entry, plan.delta, x0.clone(), spec.dim()) {
        Ok(f) => f,
        Err(Error::EmptyWindow { lambda, window }) => {
            log::info!("skipping λ = {lambda}: no norm within {window}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let norms = norm_report(&f)?;
    let best = grid_discrepancy(&correlate(&f), x0, &plan.radii(f.lambda), plan.grid_n);
    Ok(Some(DiscrepancyReport {
        lambda: f.lambda,
        filters_passed: plan.filters.clone(),
        sup_dev: best.sup_dev,
        argmax_x: best.x,
        argmax_r: best.r,
        defect_bar: norms.defect_bar(),
        grid_n: plan.grid_n,
        eps: plan.eps,
        delta: plan.delta,
        window: f.window,
        modes: f.modes.len(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMax {
    pub sup_dev: f64,
    pub x: TorusPoint,
    pub r: f64,
}

/// Max of `|μ − 1|` over the centres `x0 + 2πj/n` (plus the antipode of `x0`
/// when `n` is odd) and the given radii. Ties keep the first hit.
pub fn grid_discrepancy(corr: &ModeCorrelation, x0: &[f64], radii: &[f64], n: usize) -> GridMax {
    let antipode: TorusPoint = x0.iter().map(|c| c + PI).collect();
    let mut best = GridMax {
        sup_dev: 0.0,
        x: x0.to_vec(),
        r: radii[0],
    };
    for &r in radii {
        let profile = RadialProfile::new(corr, x0, r);
        for (idx, mu) in profile.on_grid(n).into_iter().enumerate() {
            let dev = (mu - 1.0).abs();
            if dev > best.sup_dev {
                best = GridMax {
                    sup_dev: dev,
                    x: grid_point(x0, n, idx),
                    r,
                };
            }
        }
        if n % 2 == 1 {
            let dev = (profile.at(&antipode) - 1.0).abs();
            if dev > best.sup_dev {
                best = GridMax {
                    sup_dev: dev,
                    x: antipode.clone(),
                    r,
                };
            }
        }
    }
    best
}

fn header_note(plan: &ScanPlan, seed: u64) -> [String; 2] {
    [
        format!(
            "sup_dev is the maximum of |mu-1| over a uniform {0}^d grid of centres (plus x0 and its antipode) and {1} radii; it approximates the supremum over the torus",
            plan.grid_n, plan.radii_count
        ),
        format!(
            "mode={} eps={} delta={} eta={} seed={}",
            plan.mode, plan.eps, plan.delta, plan.eta, seed
        ),
    ]
}

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_report_csv<W: Write>(
    reports: &[DiscrepancyReport],
    plan: &ScanPlan,
    seed: u64,
    mut out: W,
) -> Result<()> {
    for line in header_note(plan, seed) {
        writeln!(out, "# {line}")?;
    }
    let d = plan.mode.dim().get();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["lambda".to_string(), "filters".into(), "sup_dev".into()];
    header.extend((1..=d).map(|i| format!("argmax_x{i}")));
    header.extend(["argmax_r", "defect_bar", "grid_n", "eps", "delta"].map(String::from));
    w.write_record(&header)?;
    for r in reports {
        let filters = if r.filters_passed.is_empty() {
            "none".to_string()
        } else {
            r.filters_passed
                .iter()
                .map(|f| f.name())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut row = vec![sig12(r.lambda), filters, sig12(r.sup_dev)];
        row.extend(r.argmax_x.iter().map(|&c| sig12(c)));
        row.extend([
            sig12(r.argmax_r),
            sig12(r.defect_bar),
            r.grid_n.to_string(),
            r.eps.to_string(),
            r.delta.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    note: String,
    mode: ScanMode,
    eta: f64,
    seed: u64,
    reports: &'a [DiscrepancyReport],
}

pub fn write_report_json<W: Write>(
    reports: &[DiscrepancyReport],
    plan: &ScanPlan,
    seed: u64,
    mut out: W,
) -> Result<()> {
    let [note, _] = header_note(plan, seed);
    let doc = JsonReport {
        note,
        mode: plan.mode,
        eta: plan.eta,
        seed,
        reports,
    };
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}
