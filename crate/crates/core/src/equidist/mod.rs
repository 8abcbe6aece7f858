//! Density-one filters on the perturbed spectrum, discrepancy scans of the
//! mass ratio, and exhaustive audits of the counting lemmas.

mod audit;
mod scan;

pub use audit::{
    audit_ab_mapping, audit_inner_products, audit_lemma_counts, audit_lemma_n0, audit_strips,
    AuditOutcome, LemmaCountAudit, StripAudit, STRIP_DELTA, STRIP_MAX_N, STRIP_ZETA_BOX,
};
pub use scan::{
    grid_discrepancy, scan, write_report_csv, write_report_json, DiscrepancyReport, GridMax,
    ScanMode, ScanPlan,
};

use crate::error::{Error, Result};
use crate::lattice::{
    a_set_member, br_census_table, four_adic_split, is_representable, Dim, LatticePoint, ShellCache,
};
use crate::spectrum::{nearest_norm, PerturbedSpectrum};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    Gap,
    BrAvoid,
    LambdaPrime3d,
}

impl Filter {
    pub fn name(self) -> &'static str {
        match self {
            Filter::Gap => "gap",
            Filter::BrAvoid => "br_avoid",
            Filter::LambdaPrime3d => "lambda_prime_3d",
        }
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(Filter::Gap),
            "br_avoid" => Ok(Filter::BrAvoid),
            "lambda_prime_3d" => Ok(Filter::LambdaPrime3d),
            _ => Err(Error::invalid(format!("unknown filter {s:?}"))),
        }
    }
}

fn require_dim(spec: &PerturbedSpectrum, dim: Dim, what: &str) -> Result<()> {
    if spec.dim() != dim {
        return Err(Error::invalid(format!("{what} needs a {dim}D spectrum")));
    }
    Ok(())
}

/// Indices of entries whose bracketing norms satisfy `n_{k+1} − n_k ≤ n_k^η`
/// with `n_k ≥ 2`.
pub fn gap_filter_2d(spec: &PerturbedSpectrum, eta: f64) -> Result<Vec<usize>> {
    require_dim(spec, Dim::Two, "gap filter")?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("η must be > 0, got {eta}")));
    }
    Ok(spec
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| match e.lower_norm {
            Some(lo) if lo >= 2 => (e.upper_norm - lo) as f64 <= (lo as f64).powf(eta),
            _ => false,
        })
        .map(|(i, _)| i)
        .collect())
}

/// Indices of positive `λ` with no `n ∈ BR(ε)` in `(λ − L, λ + L)`, `L = λ^δ`.
pub fn br_avoid_filter(spec: &PerturbedSpectrum, eps: f64, delta: f64) -> Result<Vec<usize>> {
    require_dim(spec, Dim::Two, "BR filter")?;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::invalid(format!("ε must lie in (0, 1/2), got {eps}")));
    }
    if !(delta > 0.0 && delta < eps / 3.0) {
        return Err(Error::invalid(format!(
            "δ must lie in (0, ε/3), got {delta}"
        )));
    }
    let top = spec.lambdas().fold(1.0, f64::max);
    let table = br_census_table(top + top.powf(delta) + 1.0)?;
    Ok(spec
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            if !(e.lambda > 0.0) {
                return false;
            }
            let l = e.lambda.powf(delta);
            let lo = (e.lambda - l).floor().max(0.0) as u64;
            let hi = (e.lambda + l).ceil() as u64;
            !(lo..=hi).any(|n| (n as f64 - e.lambda).abs() < l && table.is_br(n, eps))
        })
        .map(|(i, _)| i)
        .collect())
}

/// `Λ₀ = Λ''(ε/2)`.
pub fn lambda_zero_preset(spec: &PerturbedSpectrum, eps: f64, delta: f64) -> Result<Vec<usize>> {
    br_avoid_filter(spec, eps / 2.0, delta)
}

/// `χ_ζ(λ)`: some `ξ ∈ A_{ζ,δ}` has `||ξ|² − λ| ≤ λ^δ`.
pub fn chi_zeta(lambda: f64, zeta: &LatticePoint, delta: f64) -> Result<bool> {
    if zeta.dim() != Dim::Two {
        return Err(Error::invalid("χ_ζ is defined for planar ζ"));
    }
    if zeta.is_zero() {
        return Err(Error::invalid("ζ must be nonzero"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("λ must be positive, got {lambda}")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::invalid(format!(
            "δ must lie in (0, 1/2), got {delta}"
        )));
    }
    let l = lambda.powf(delta);
    let lo = (lambda - l).ceil().max(1.0) as u64;
    let hi = (lambda + l).floor() as u64;
    for n in lo..=hi {
        if !is_representable(n, Dim::Two) {
            continue;
        }
        for xi in &ShellCache::global().get(n, Dim::Two).points {
            if a_set_member(xi, zeta, delta)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormClass {
    /// `a > a_ζ`.
    N0,
    /// `a ≤ a_ζ`.
    N1,
}

/// Compare the 4-adic exponents of `n` and `|ζ|²`.
pub fn classify_norm(n: u64, zeta: &LatticePoint) -> Result<NormClass> {
    if n == 0 || !is_representable(n, Dim::Three) {
        return Err(Error::invalid(format!(
            "{n} is not a positive sum of three squares"
        )));
    }
    if zeta.is_zero() {
        return Err(Error::invalid("ζ must be nonzero"));
    }
    let a = four_adic_split(n)?.a;
    let a_zeta = four_adic_split(zeta.norm_sq() as u64)?.a;
    Ok(if a > a_zeta {
        NormClass::N0
    } else {
        NormClass::N1
    })
}

/// `n ∈ Ñ₁`: the 4-free part exceeds `n / log² n`.
pub fn tilde_n1_member(n: u64) -> Result<bool> {
    if n < 2 || !is_representable(n, Dim::Three) {
        return Err(Error::invalid(format!(
            "{n} must be a sum of three squares and ≥ 2"
        )));
    }
    let ln = (n as f64).ln();
    Ok(four_adic_split(n)?.n1 as f64 > n as f64 / (ln * ln))
}

/// Indices of `λ` whose nearest norm lies in `Ñ₁`.
pub fn lambda_prime_3d(spec: &PerturbedSpectrum) -> Result<Vec<usize>> {
    require_dim(spec, Dim::Three, "Λ' filter")?;
    let mut kept = Vec::new();
    for (i, e) in spec.entries.iter().enumerate() {
        let n = nearest_norm(e.lambda, Dim::Three);
        if n >= 2 && tilde_n1_member(n)? {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// `(kept, total)` for `Ñ₁` over `N₃ ∩ [2, X]`.
pub fn tilde_n1_census(x: u64) -> (u64, u64) {
    let mut kept = 0;
    let mut total = 0;
    for n in 2..=x {
        if is_representable(n, Dim::Three) {
            total += 1;
            if tilde_n1_member(n).unwrap_or(false) {
                kept += 1;
            }
        }
    }
    (kept, total)
}

/// Intersection of sorted index lists.
pub(crate) fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
