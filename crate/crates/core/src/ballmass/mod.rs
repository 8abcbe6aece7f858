//! Mass of `|g_{λ,L}|²` on balls `B_x(r)`.
//!
//! `|g|²` is a finite trigonometric sum, so its ball average is exactly
//! `μ(x, r) = 1 + (1/S0) Σ_{ζ≠0} ψ_d(r|ζ|) cos⟨x−x0, ζ⟩ S(ζ)`.

mod kernel;

pub use kernel::{ball_kernel, bessel_j1};

use crate::error::{Error, Result};
use crate::greens::{green_sum, PhaseTable, TruncatedEigenfunction};
use crate::lattice::{Dim, LatticePoint};
use crate::numeric::gauss_legendre;
use crate::TorusPoint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use std::f64::consts::PI;

/// Autocorrelation `S(ζ) = Σ_ξ w_ξ w_{ξ−ζ}` of the mode weights.
#[derive(Debug, Clone, Serialize)]
pub struct ModeCorrelation {
    pub dim: Dim,
    /// Sorted by `ζ`; contains `ζ = 0`.
    pub support: Vec<(LatticePoint, f64)>,
    /// `S(0)`.
    pub s0: f64,
}

impl ModeCorrelation {
    pub fn get(&self, zeta: &LatticePoint) -> f64 {
        self.support
            .binary_search_by(|(z, _)| z.cmp(zeta))
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    pub fn max_norm_sq(&self) -> i64 {
        self.support
            .iter()
            .map(|(z, _)| z.norm_sq())
            .max()
            .unwrap_or(0)
    }

    pub fn max_coord(&self) -> i64 {
        self.support
            .iter()
            .map(|(z, _)| z.max_abs())
            .max()
            .unwrap_or(0)
    }

    /// `(1/S0) Σ_{ζ≠0} |S(ζ)|`, a bound on `|μ − 1|`.
    pub fn triangle_bound(&self) -> f64 {
        self.support
            .iter()
            .filter(|(z, _)| !z.is_zero())
            .map(|(_, s)| s.abs())
            .sum::<f64>()
            / self.s0
    }
}

pub fn correlate(f: &TruncatedEigenfunction) -> ModeCorrelation {
    // T(ζ) over unordered pairs i < j; then S(ζ) = T(ζ) + T(−ζ) for ζ ≠ 0,
    // which makes S(−ζ) = S(ζ) hold exactly.
    let mut half: FxHashMap<LatticePoint, f64> = FxHashMap::default();
    for (i, a) in f.modes.iter().enumerate() {
        for b in &f.modes[i + 1..] {
            *half.entry(a.xi - b.xi).or_insert(0.0) += a.weight * b.weight;
        }
    }
    let s0: f64 = f.modes.iter().map(|m| m.weight * m.weight).sum();
    let mut support: Vec<(LatticePoint, f64)> = Vec::with_capacity(2 * half.len() + 1);
    support.push((LatticePoint::zero(f.dim), s0));
    for (&z, &t) in &half {
        let total = t + half.get(&-z).copied().unwrap_or(0.0);
        support.push((z, total));
        if !half.contains_key(&-z) {
            support.push((-z, total));
        }
    }
    support.sort_by_key(|a| a.0);
    ModeCorrelation {
        dim: f.dim,
        support,
        s0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassQuery {
    pub x: TorusPoint,
    pub r: f64,
}

impl MassQuery {
    pub fn new(x: TorusPoint, r: f64) -> Result<Self> {
        let q = Self { x, r };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < PI) {
            return Err(Error::invalid(format!(
                "radius must lie in (0, π), got {}",
                self.r
            )));
        }
        if self.x.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("query point must be finite"));
        }
        Ok(())
    }

    fn check(&self, dim: Dim) -> Result<()> {
        self.validate()?;
        if self.x.len() != dim.get() {
            return Err(Error::invalid(format!(
                "query point has {} coordinates, expected {}",
                self.x.len(),
                dim.get()
            )));
        }
        Ok(())
    }
}

/// Coefficients `ψ_d(r|ζ|) S(ζ)/S0` for one radius, ready for pointwise or
/// grid evaluation.
pub struct RadialProfile {
    pub dim: Dim,
    pub r: f64,
    x0: TorusPoint,
    kmax: i64,
    coeffs: Vec<(LatticePoint, f64)>,
}

impl RadialProfile {
    pub fn new(corr: &ModeCorrelation, x0: &[f64], r: f64) -> Self {
        let mut psi = vec![f64::NAN; corr.max_norm_sq() as usize + 1];
        let coeffs = corr
            .support
            .iter()
            .filter(|(z, _)| !z.is_zero())
            .map(|&(z, s)| {
                let slot = &mut psi[z.norm_sq() as usize];
                if slot.is_nan() {
                    *slot = ball_kernel(r * z.norm(), corr.dim);
                }
                (z, *slot * s / corr.s0)
            })
            .collect();
        Self {
            dim: corr.dim,
            r,
            x0: x0.to_vec(),
            kmax: corr.max_coord(),
            coeffs,
        }
    }

    fn theta(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.x0).map(|(a, b)| a - b).collect()
    }

    /// Unsymmetrized `1 + Σ c_ζ e^{i⟨x−x0,ζ⟩}`; the imaginary part cancels.
    pub fn complex_at(&self, x: &[f64]) -> Complex64 {
        let table = PhaseTable::new(&self.theta(x), self.kmax);
        let sum: Complex64 = self.coeffs.iter().map(|(z, c)| table.phase(z) * c).sum();
        sum + 1.0
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        let table = PhaseTable::new(&self.theta(x), self.kmax);
        1.0 + self
            .coeffs
            .iter()
            .map(|(z, c)| table.phase(z).re * c)
            .sum::<f64>()
    }

    /// `μ` at every point `x0 + 2πj/n`, `j ∈ {0..n−1}^d`, flattened with the
    /// first axis fastest (see [`grid_point`]).
    pub fn on_grid(&self, n: usize) -> Vec<f64> {
        let d = self.dim.get();
        let size = n.pow(d as u32);
        let mut folded = vec![Complex64::new(0.0, 0.0); size];
        let ni = n as i64;
        for (z, c) in &self.coeffs {
            let mut idx = 0usize;
            let mut stride = 1usize;
            for &k in z.coords() {
                idx += k.rem_euclid(ni) as usize * stride;
                stride *= n;
            }
            folded[idx] += c;
        }
        inverse_dft(&mut folded, n, d);
        folded.iter().map(|v| 1.0 + v.re).collect()
    }
}

/// Coordinates `x0 + 2πj/n` of flattened grid index `idx`.
pub fn grid_point(x0: &[f64], n: usize, idx: usize) -> TorusPoint {
    let mut rest = idx;
    x0.iter()
        .map(|&c| {
            let j = rest % n;
            rest /= n;
            c + 2.0 * PI * j as f64 / n as f64
        })
        .collect()
}

// In place `v[j] ← Σ_k v[k] e^{2πi⟨j,k⟩/n}`, one axis at a time.
fn inverse_dft(data: &mut [Complex64], n: usize, d: usize) {
    let twiddle: Vec<Complex64> = (0..n)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
        .collect();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut stride = 1;
    for _ in 0..d {
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + k * stride];
                }
                for j in 0..n {
                    data[base + j * stride] = line
                        .iter()
                        .enumerate()
                        .map(|(k, v)| v * twiddle[(j * k) % n])
                        .sum();
                }
            }
        }
        stride = block;
    }
}

/// Exact ball-average ratio `μ(x, r)`.
pub fn mass_ratio(f: &TruncatedEigenfunction, q: &MassQuery) -> Result<f64> {
    q.check(f.dim)?;
    Ok(RadialProfile::new(&correlate(f), &f.x0, q.r).at(&q.x))
}

/// The unsymmetrized sum behind [`mass_ratio`].
pub fn mass_ratio_complex(f: &TruncatedEigenfunction, q: &MassQuery) -> Result<Complex64> {
    q.check(f.dim)?;
    Ok(RadialProfile::new(&correlate(f), &f.x0, q.r).complex_at(&q.x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureEstimate {
    pub value: f64,
    /// `|Q(h) − Q(2h)|` plus a rounding floor.
    pub error_estimate: f64,
    pub h: f64,
}

/// Ball average of `|g_{λ,L}|²` by direct integration: midpoint rule in the
/// radius, exact trigonometric rules on each sphere.
pub fn mass_ratio_quadrature(
    f: &TruncatedEigenfunction,
    q: &MassQuery,
    h: f64,
) -> Result<QuadratureEstimate> {
    q.check(f.dim)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("step must be > 0, got {h}")));
    }
    if h > q.r / 50.0 {
        return Err(Error::StepTooCoarse { h, r: q.r });
    }
    if h > q.r / 200.0 {
        log::warn!("quadrature step {h} exceeds r/200 for r = {}", q.r);
    }
    let rings = (q.r / h).ceil() as usize;
    let fine = ball_mean(f, &q.x, q.r, rings);
    let coarse = ball_mean(f, &q.x, q.r, rings.div_ceil(2));
    Ok(QuadratureEstimate {
        value: fine,
        error_estimate: (fine - coarse).abs() + 1e-12,
        h: q.r / rings as f64,
    })
}

fn ball_mean(f: &TruncatedEigenfunction, x: &[f64], r: f64, rings: usize) -> f64 {
    let d = f.dim.get() as i32;
    let band = 2.0 * f.modes.iter().map(|m| m.xi.norm()).fold(0.0, f64::max);
    let step = r / rings as f64;
    let contributions: Vec<f64> = (0..rings)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (i as f64 * step, (i + 1) as f64 * step);
            let rho = 0.5 * (a + b);
            let shell_measure = (b.powi(d) - a.powi(d)) / d as f64;
            shell_measure * sphere_integral(f, x, rho, band)
        })
        .collect();
    let total: f64 = contributions.iter().sum();
    let unit_sphere = match f.dim {
        Dim::Two => 2.0 * PI,
        Dim::Three => 4.0 * PI,
    };
    total / (unit_sphere * r.powi(d) / d as f64) / f.norm_sq
}

// ∮ |G(x + ρω)|² dω over the unit sphere; exact for the band limit of |G|².
fn sphere_integral(f: &TruncatedEigenfunction, x: &[f64], rho: f64, band: f64) -> f64 {
    let degree = (rho * band).ceil() as usize + 24;
    let value_at = |omega: &[f64]| {
        let y: Vec<f64> = x.iter().zip(omega).map(|(a, b)| a + rho * b).collect();
        green_sum(f, &y).norm_sqr()
    };
    let n_phi = degree;
    let dphi = 2.0 * PI / n_phi as f64;
    match f.dim {
        Dim::Two => {
            (0..n_phi)
                .map(|j| {
                    let t = j as f64 * dphi;
                    value_at(&[t.cos(), t.sin()])
                })
                .sum::<f64>()
                * dphi
        }
        Dim::Three => {
            let (us, ws) = gauss_legendre(degree.div_ceil(2) + 1);
            let mut acc = 0.0;
            for (u, w) in us.iter().zip(&ws) {
                let s = (1.0 - u * u).max(0.0).sqrt();
                let ring: f64 = (0..n_phi)
                    .map(|j| {
                        let t = j as f64 * dphi;
                        value_at(&[s * t.cos(), s * t.sin(), *u])
                    })
                    .sum();
                acc += w * ring * dphi;
            }
            acc
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Ball average of `|g_{λ,L}|²` from uniform samples in `B_x(r)`.
pub fn mass_ratio_monte_carlo(
    f: &TruncatedEigenfunction,
    q: &MassQuery,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    q.check(f.dim)?;
    if samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let d = f.dim.get();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = Vec::with_capacity(samples);
    while offsets.len() < samples {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            offsets.push(v);
        }
    }
    let values: Vec<f64> = offsets
        .par_iter()
        .map(|v| {
            let y: Vec<f64> = q.x.iter().zip(v).map(|(a, b)| a + q.r * b).collect();
            green_sum(f, &y).norm_sqr() / f.norm_sq
        })
        .collect();
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}
