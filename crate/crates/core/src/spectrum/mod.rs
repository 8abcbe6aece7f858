//! Spectral function of the point scatterer and the interlaced new eigenvalues.
//!
//! The new eigenvalues are the roots of
//!
//! `s(λ) = Σ_ξ (1/(|ξ|² − λ) − |ξ|²/(|ξ|⁴ + 1)) = c₀ tan(φ/2)`,
//!
//! one in every gap of `N_d` and one below zero. Because
//! `|ξ|²/(|ξ|⁴+1) = Re 1/(|ξ|² − i)`, both `s` and `c₀` are read off the
//! regularized resolvent `D(z) = Σ_ξ 1/(|ξ|² − z)`: `s(λ) = D(λ) − Re D(i)` and
//! `c₀ = Im D(i)`. See [`ewald`] for how `D` is evaluated.

mod ewald;

pub use ewald::SeriesControl;

use crate::error::{Error, Result};
use crate::lattice::{enumerate_norms, is_representable, Dim};
use crate::TorusPoint;
use ewald::{resolvent, resolvent_at_i, resolvent_derivative_offset, OffsetSeries};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// Minimum distance from a norm at which the spectral function is evaluated.
pub const POLE_GUARD: f64 = 1e-12;

/// Parameters of the scatterer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScattererConfig {
    pub dim: Dim,
    /// Extension parameter in `(−π, π)`.
    pub phi: f64,
    pub x0: TorusPoint,
    pub series_tolerance: f64,
}

impl ScattererConfig {
    pub fn new(dim: Dim, phi: f64, x0: TorusPoint, series_tolerance: f64) -> Result<Self> {
        let cfg = Self {
            dim,
            phi,
            x0,
            series_tolerance,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Scatterer at the origin with the default tolerance.
    pub fn at_origin(dim: Dim, phi: f64) -> Result<Self> {
        Self::new(dim, phi, vec![0.0; dim.get()], SeriesControl::default().tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi > -PI && self.phi < PI) {
            return Err(Error::invalid(format!(
                "φ must lie in (−π, π), got {}",
                self.phi
            )));
        }
        if !(self.series_tolerance > 0.0 && self.series_tolerance.is_finite()) {
            return Err(Error::invalid(format!(
                "series tolerance must be > 0, got {}",
                self.series_tolerance
            )));
        }
        if self.x0.len() != self.dim.get() || self.x0.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "x0 must have {} finite coordinates",
                self.dim.get()
            )));
        }
        Ok(())
    }

    pub fn series_control(&self) -> SeriesControl {
        SeriesControl::new(self.series_tolerance)
    }
}

/// `c₀ = Σ_ξ 1/(|ξ|⁴ + 1)`.
pub fn c0(dim: Dim, tol: f64) -> Result<f64> {
    c0_with(dim, &SeriesControl::new(tol))
}

pub fn c0_with(dim: Dim, ctrl: &SeriesControl) -> Result<f64> {
    ctrl.validate()?;
    Ok(resolvent_at_i(dim, ctrl).im)
}

fn check_pole(lambda: f64, dim: Dim) -> Result<()> {
    if !lambda.is_finite() {
        return Err(Error::invalid(format!("λ must be finite, got {lambda}")));
    }
    let n = nearest_norm(lambda, dim);
    let distance = (n as f64 - lambda).abs();
    if distance < POLE_GUARD {
        return Err(Error::PoleProximity {
            lambda,
            norm: n,
            distance,
        });
    }
    Ok(())
}

/// `s(λ)`.
pub fn spectral_function(lambda: f64, dim: Dim, tol: f64) -> Result<f64> {
    spectral_function_with(lambda, dim, &SeriesControl::new(tol))
}

pub fn spectral_function_with(lambda: f64, dim: Dim, ctrl: &SeriesControl) -> Result<f64> {
    ctrl.validate()?;
    check_pole(lambda, dim)?;
    let d = resolvent(dim, Complex64::new(lambda, 0.0), ctrl, false);
    Ok(d.re - resolvent_at_i(dim, ctrl).re)
}

/// `Σ_ξ 1/(|ξ|² − λ)² = s'(λ)`, the squared norm of the Green's function.
pub fn resolvent_norm_sq(lambda: f64, dim: Dim, ctrl: &SeriesControl) -> Result<f64> {
    ctrl.validate()?;
    check_pole(lambda, dim)?;
    Ok(resolvent(dim, Complex64::new(lambda, 0.0), ctrl, true).re)
}

/// [`resolvent_norm_sq`] at `λ = base + offset`, keeping full precision in
/// the pole distances.
pub fn resolvent_norm_sq_at(base: u64, offset: f64, dim: Dim, ctrl: &SeriesControl) -> Result<f64> {
    ctrl.validate()?;
    if !offset.is_finite() {
        return Err(Error::invalid("offset must be finite"));
    }
    let lambda = base as f64 + offset;
    let n = nearest_norm(lambda, dim);
    let distance = ((n as f64 - base as f64) - offset).abs();
    if distance < POLE_GUARD {
        return Err(Error::PoleProximity {
            lambda,
            norm: n,
            distance,
        });
    }
    Ok(resolvent_derivative_offset(dim, base, offset, ctrl))
}

/// Element of `N_d` closest to `λ`, the smaller one on a tie.
pub fn nearest_norm(lambda: f64, dim: Dim) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    let mut below = lambda.floor() as u64;
    while !is_representable(below, dim) {
        below -= 1;
    }
    let mut above = lambda.ceil() as u64;
    while !is_representable(above, dim) {
        above += 1;
    }
    if lambda - below as f64 <= above as f64 - lambda {
        below
    } else {
        above
    }
}

/// One new eigenvalue with the norms that bracket it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub lambda: f64,
    /// `None` for the root below zero.
    pub lower_norm: Option<u64>,
    pub upper_norm: u64,
    /// The root is `base + offset` exactly; `base` is whichever bracketing norm
    /// the root lies closer to.
    pub base: u64,
    pub offset: f64,
    /// `|s(λ) − c₀ tan(φ/2)|` at the returned root.
    pub residual: f64,
}

/// The new eigenvalues up to a ceiling, sorted ascending.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbedSpectrum {
    pub config: ScattererConfig,
    pub ceiling: f64,
    pub c0: f64,
    /// `c₀ tan(φ/2)`.
    pub target: f64,
    pub entries: Vec<SpectrumEntry>,
    /// Problems that did not abort the solve, e.g. no root found below zero.
    pub anomalies: Vec<String>,
}

impl PerturbedSpectrum {
    pub fn dim(&self) -> Dim {
        self.config.dim
    }

    pub fn lambdas(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.lambda)
    }

    /// The root below zero, when one was found.
    pub fn lambda0(&self) -> Option<&SpectrumEntry> {
        self.entries.first().filter(|e| e.lower_norm.is_none())
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    /// CSV with header `lambda,lower_norm,upper_norm,residual`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "lower_norm", "upper_norm", "residual"])?;
        for e in &self.entries {
            let lower = e
                .lower_norm
                .map_or_else(|| "-inf".to_string(), |n| n.to_string());
            w.write_record([
                format!("{:.15e}", e.lambda),
                lower,
                e.upper_norm.to_string(),
                format!("{:.3e}", e.residual),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// All new eigenvalues with `λ < max N_d ∩ [0, X]`: one per gap between
/// consecutive norms up to `X`, plus the root below zero.
pub fn solve_spectrum(x: f64, config: &ScattererConfig) -> Result<PerturbedSpectrum> {
    solve_spectrum_with(x, config, &config.series_control())
}

pub fn solve_spectrum_with(
    x: f64,
    config: &ScattererConfig,
    ctrl: &SeriesControl,
) -> Result<PerturbedSpectrum> {
    config.validate()?;
    ctrl.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!(
            "spectrum ceiling must be > 0, got {x}"
        )));
    }
    let dim = config.dim;
    let d_i = resolvent_at_i(dim, ctrl);
    let c0 = d_i.im;
    let target = c0 * (config.phi / 2.0).tan();
    let norms = enumerate_norms(x, dim)?;
    let gaps: Vec<(u64, u64)> = norms.intervals().collect();

    let mut entries = Vec::with_capacity(gaps.len() + 1);
    let mut anomalies = Vec::new();
    match solve_below_zero(dim, ctrl, d_i.re, target) {
        Ok(e) => entries.push(e),
        Err(err) => {
            log::warn!("no root below zero: {err}");
            anomalies.push(format!("no root below zero: {err}"));
        }
    }
    let roots = gaps
        .par_iter()
        .map(|&(lo, hi)| solve_gap(dim, lo, hi, ctrl, d_i.re, target))
        .collect::<Result<Vec<_>>>()?;
    entries.extend(roots);
    Ok(PerturbedSpectrum {
        config: config.clone(),
        ceiling: x,
        c0,
        target,
        entries,
        anomalies,
    })
}

const ROOT_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-10;
const BRACKET_SHRINKS: usize = 30;
const DOUBLINGS: usize = 60;

/// Bisection of an increasing `f` with `f(lo) < 0 < f(hi)`; returns the
/// root estimate and `|f|` there.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut best = (0.5 * (lo + hi), f64::INFINITY);
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v.abs() < best.1 {
            best = (mid, v.abs());
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= ROOT_TOL && v.abs() <= RESIDUAL_TOL {
            break;
        }
    }
    best
}

fn solve_gap(
    dim: Dim,
    lo_n: u64,
    hi_n: u64,
    ctrl: &SeriesControl,
    re_d_i: f64,
    target: f64,
) -> Result<SpectrumEntry> {
    let gap = (hi_n - lo_n) as f64;
    let re_max = hi_n as f64;
    let from_lower = OffsetSeries::new(dim, lo_n, re_max, ctrl, re_d_i);
    let half = 0.5 * gap;
    let mid_value = from_lower.value(half) - target;
    let entry = |base: u64, (u, residual): (f64, f64)| SpectrumEntry {
        lambda: base as f64 + u,
        lower_norm: Some(lo_n),
        upper_norm: hi_n,
        base,
        offset: u,
        residual,
    };
    if mid_value == 0.0 {
        return Ok(entry(lo_n, (half, 0.0)));
    }
    // Measure the offset from whichever end the root is nearer to.
    let (series, base, lo_u, hi_u) = if mid_value > 0.0 {
        (from_lower, lo_n, 0.0, half)
    } else {
        (
            OffsetSeries::new(dim, hi_n, re_max, ctrl, re_d_i),
            hi_n,
            -half,
            0.0,
        )
    };
    let f = |u: f64| series.value(u) - target;
    let mut gamma = (1e-6f64).min(gap / 10.0);
    for _ in 0..BRACKET_SHRINKS {
        let a = if lo_u == 0.0 { gamma } else { lo_u };
        let b = if hi_u == 0.0 { -gamma } else { hi_u };
        if f(a) < 0.0 && f(b) > 0.0 {
            return Ok(entry(base, bisect(f, a, b)));
        }
        gamma /= 10.0;
    }
    Err(Error::BracketFailure {
        lower: lo_n as f64,
        upper: hi_n as f64,
        reason: format!("no sign change within {gamma:e} of the poles"),
    })
}

fn solve_below_zero(
    dim: Dim,
    ctrl: &SeriesControl,
    re_d_i: f64,
    target: f64,
) -> Result<SpectrumEntry> {
    let series = OffsetSeries::new(dim, 0, 0.0, ctrl, re_d_i);
    let f = |u: f64| series.value(u) - target;
    let mut gamma = 1e-6;
    let mut shrinks = 0;
    while !(f(-gamma) > 0.0) {
        shrinks += 1;
        if shrinks > BRACKET_SHRINKS {
            return Err(Error::BracketFailure {
                lower: f64::NEG_INFINITY,
                upper: 0.0,
                reason: format!("s stays below the target up to −{gamma:e}"),
            });
        }
        gamma /= 10.0;
    }
    let mut left = -1.0;
    let mut doublings = 0;
    while !(f(left) < 0.0) {
        doublings += 1;
        if doublings > DOUBLINGS {
            return Err(Error::BracketFailure {
                lower: left,
                upper: -gamma,
                reason: format!("no sign change after {DOUBLINGS} doublings"),
            });
        }
        left *= 2.0;
    }
    let (u, residual) = bisect(f, left, -gamma);
    Ok(SpectrumEntry {
        lambda: u,
        lower_norm: None,
        upper_norm: 0,
        base: 0,
        offset: u,
        residual,
    })
}
