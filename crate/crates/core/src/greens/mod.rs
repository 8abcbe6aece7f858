//! Truncated Green's functions `G_{λ,L}` and the normalized eigenfunctions
//! built from them.
//!
//! `G_{λ,L}(x) = Σ_{||ξ|²−λ| < L} e^{i⟨x−x0, ξ⟩} / (|ξ|² − λ)`; its squared norm
//! is stored as `Σ 1/(|ξ|²−λ)²` (coefficient norm, no `(2π)^d` factor).

use crate::error::{Error, Result};
use crate::lattice::{is_representable, Dim, LatticePoint, ShellCache};
use crate::numeric::CompensatedSum;
use crate::spectrum::{resolvent_norm_sq_at, SeriesControl, SpectrumEntry, POLE_GUARD};
use crate::TorusPoint;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// Exponent `η` in the reported truncation bound `λ^η / (L ‖G_λ‖²)`.
pub const TAIL_ETA: f64 = 0.1;

/// Tolerance used for `‖G_λ‖²`.
pub const FULL_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub xi: LatticePoint,
    /// `1/(|ξ|² − λ)`.
    pub weight: f64,
}

/// `G_{λ,L}` with its coefficient data.
#[derive(Debug, Clone, Serialize)]
pub struct TruncatedEigenfunction {
    pub dim: Dim,
    pub lambda: f64,
    /// `λ = base + offset` exactly.
    pub base: u64,
    pub offset: f64,
    /// Window half-width `L`.
    pub window: f64,
    /// `δ` when `L = λ^δ`.
    pub delta: Option<f64>,
    pub x0: TorusPoint,
    pub modes: Vec<Mode>,
    /// `Σ weights²`.
    pub norm_sq: f64,
}

fn check_point(x: &[f64], dim: Dim, what: &str) -> Result<()> {
    if x.len() != dim.get() || x.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid(format!(
            "{what} must have {} finite coordinates",
            dim.get()
        )));
    }
    Ok(())
}

impl TruncatedEigenfunction {
    /// Window `||ξ|² − λ| < L` around `λ = base + offset`.
    pub fn with_window_at(
        base: u64,
        offset: f64,
        window: f64,
        x0: TorusPoint,
        dim: Dim,
    ) -> Result<Self> {
        check_point(&x0, dim, "x0")?;
        if !offset.is_finite() {
            return Err(Error::invalid("offset must be finite"));
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::invalid(format!("window must be > 0, got {window}")));
        }
        let lambda = base as f64 + offset;
        let b = base as f64;
        let dist = |n: u64| (n as f64 - b) - offset;
        let lo = (lambda - window).floor().max(0.0) as u64;
        let hi = (lambda + window).ceil().max(0.0) as u64;
        let mut modes = Vec::new();
        let mut norm = CompensatedSum::new();
        for n in lo..=hi {
            let t = dist(n);
            if t.abs() >= window || !is_representable(n, dim) {
                continue;
            }
            if t.abs() < POLE_GUARD {
                return Err(Error::PoleProximity {
                    lambda,
                    norm: n,
                    distance: t.abs(),
                });
            }
            let w = 1.0 / t;
            let shell = ShellCache::global().get(n, dim);
            norm.add(shell.multiplicity() as f64 * w * w);
            modes.extend(shell.points.iter().map(|&xi| Mode { xi, weight: w }));
        }
        if modes.is_empty() {
            return Err(Error::EmptyWindow { lambda, window });
        }
        Ok(Self {
            dim,
            lambda,
            base,
            offset,
            window,
            delta: None,
            x0,
            modes,
            norm_sq: norm.value(),
        })
    }

    /// Window `||ξ|² − λ| < L` for any real `λ` and `L > 0`.
    pub fn with_window(lambda: f64, window: f64, x0: TorusPoint, dim: Dim) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::invalid(format!("λ must be finite, got {lambda}")));
        }
        let base = lambda.max(0.0).round() as u64;
        Self::with_window_at(base, lambda - base as f64, window, x0, dim)
    }

    /// `L = λ^δ` around a solved eigenvalue.
    pub fn from_entry(entry: &SpectrumEntry, delta: f64, x0: TorusPoint, dim: Dim) -> Result<Self> {
        check_truncation_params(entry.lambda, delta)?;
        let mut f =
            Self::with_window_at(entry.base, entry.offset, entry.lambda.powf(delta), x0, dim)?;
        f.delta = Some(delta);
        Ok(f)
    }

    /// Largest `|ξ_i|` over the modes.
    pub fn max_coord(&self) -> i64 {
        self.modes.iter().map(|m| m.xi.max_abs()).max().unwrap_or(0)
    }

    /// `Σ |w_ξ|`.
    pub fn weight_l1(&self) -> f64 {
        self.modes.iter().map(|m| m.weight.abs()).sum()
    }

    /// Mode dump: a `lambda,L,norm_sq` record, then `xi_1,…,xi_d,weight` rows.
    pub fn write_modes_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["lambda", "L", "norm_sq"])?;
        w.write_record([
            format!("{:.15e}", self.lambda),
            format!("{:.15e}", self.window),
            format!("{:.15e}", self.norm_sq),
        ])?;
        let d = self.dim.get();
        let mut header: Vec<String> = (1..=d).map(|i| format!("xi_{i}")).collect();
        header.push("weight".into());
        w.write_record(&header)?;
        for m in &self.modes {
            let mut row: Vec<String> = m.xi.coords().iter().map(|c| c.to_string()).collect();
            row.push(format!("{:.15e}", m.weight));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_truncation_params(lambda: f64, delta: f64) -> Result<()> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("λ must exceed 1, got {lambda}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("δ must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `g_{λ,L}` data for `L = λ^δ`.
pub fn build_truncated(
    lambda: f64,
    delta: f64,
    x0: TorusPoint,
    dim: Dim,
) -> Result<TruncatedEigenfunction> {
    check_truncation_params(lambda, delta)?;
    let mut f = TruncatedEigenfunction::with_window(lambda, lambda.powf(delta), x0, dim)?;
    f.delta = Some(delta);
    Ok(f)
}

/// `‖G_λ‖² = Σ_ξ 1/(|ξ|² − λ)²`.
pub fn full_norm_sq(lambda: f64, dim: Dim, tol: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::invalid(format!("λ must be finite, got {lambda}")));
    }
    let base = lambda.max(0.0).round() as u64;
    resolvent_norm_sq_at(base, lambda - base as f64, dim, &SeriesControl::new(tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub lambda: f64,
    pub window: f64,
    /// `‖G_λ‖²`.
    pub full_norm_sq: f64,
    /// `‖G_{λ,L}‖²`.
    pub truncated_norm_sq: f64,
    /// `‖g_λ − g_{λ,L}‖² = 2(1 − ‖G_{λ,L}‖/‖G_λ‖)`.
    pub defect: f64,
    /// `λ^η / (L ‖G_λ‖²)` with `η = 0.1`.
    pub tail_bound: f64,
}

impl NormReport {
    /// Additive error bar `2‖g_λ − g_{λ,L}‖` on mass ratios.
    pub fn defect_bar(&self) -> f64 {
        2.0 * self.defect.max(0.0).sqrt()
    }
}

/// Norm data for an already built eigenfunction.
pub fn norm_report(f: &TruncatedEigenfunction) -> Result<NormReport> {
    let full = resolvent_norm_sq_at(f.base, f.offset, f.dim, &SeriesControl::new(FULL_NORM_TOL))?;
    Ok(NormReport {
        lambda: f.lambda,
        window: f.window,
        full_norm_sq: full,
        truncated_norm_sq: f.norm_sq,
        // G_{λ,L} is the orthogonal projection of G_λ onto the window, so
        // ⟨g_λ, g_{λ,L}⟩ = ‖G_{λ,L}‖/‖G_λ‖.
        defect: 2.0 * (1.0 - (f.norm_sq / full).sqrt()),
        tail_bound: f.lambda.abs().powf(TAIL_ETA) / f.window / full,
    })
}

pub fn truncation_defect(lambda: f64, delta: f64, dim: Dim) -> Result<NormReport> {
    norm_report(&build_truncated(lambda, delta, vec![0.0; dim.get()], dim)?)
}

/// Per-axis tables `e^{i k θ_j}` for `|k| ≤ kmax`.
pub(crate) struct PhaseTable {
    kmax: i64,
    axes: Vec<Vec<Complex64>>,
}

impl PhaseTable {
    pub(crate) fn new(theta: &[f64], kmax: i64) -> Self {
        let axes = theta
            .iter()
            .map(|&t| {
                (-kmax..=kmax)
                    .map(|k| Complex64::from_polar(1.0, k as f64 * t))
                    .collect()
            })
            .collect();
        Self { kmax, axes }
    }

    #[inline]
    pub(crate) fn phase(&self, xi: &LatticePoint) -> Complex64 {
        xi.coords()
            .iter()
            .zip(&self.axes)
            .map(|(&k, axis)| axis[(k + self.kmax) as usize])
            .product()
    }
}

/// `Σ_ξ w_ξ e^{i⟨x−x0, ξ⟩}` (unnormalized `G_{λ,L}`).
pub(crate) fn green_sum(f: &TruncatedEigenfunction, x: &[f64]) -> Complex64 {
    let theta: Vec<f64> = x.iter().zip(&f.x0).map(|(a, b)| a - b).collect();
    let table = PhaseTable::new(&theta, f.max_coord());
    f.modes.iter().map(|m| table.phase(&m.xi) * m.weight).sum()
}

/// `g_{λ,L}(x) = G_{λ,L}(x) / √norm_sq`, whose mean of `|g|²` over the torus is 1.
pub fn evaluate(f: &TruncatedEigenfunction, x: &[f64]) -> Result<Complex64> {
    check_point(x, f.dim, "x")?;
    Ok(green_sum(f, x) / f.norm_sq.sqrt())
}

/// `g_{λ,L}` normalized in `L²(T^d, dx)`, so that `∫ |g|² dx = 1` and the mean
/// of `|g|²` is `(2π)^{−d}`.
pub fn evaluate_lebesgue(f: &TruncatedEigenfunction, x: &[f64]) -> Result<Complex64> {
    Ok(evaluate(f, x)? / (2.0 * PI).powf(f.dim.get() as f64 / 2.0))
}

#[cfg(test)]
mod tests;
