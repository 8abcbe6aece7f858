//! Heat-kernel splitting of the regularized lattice resolvent
//!
//! `D(z) = Σ_ξ 1/(|ξ|² − z)` (regularized by a `z`-independent constant).
//!
//! Writing `1/(m − z) = e^{−T(m−z)}/(m − z) + ∫_0^T e^{−t(m−z)} dt` and applying
//! Poisson summation to the theta function inside the integral gives
//!
//! `D(z) = Σ_ξ e^{−T(|ξ|²−z)}/(|ξ|²−z) + K_T(z) + J_T(z) + c_T`
//!
//! with `K_T(z) = π^{d/2} ∫_0^T t^{−d/2}(e^{tz} − 1) dt`,
//! `J_T(z) = ∫_0^T e^{tz} (π/t)^{d/2} (Θ̃(t) − 1) dt`,
//! `Θ̃(t) = (Σ_k e^{−π²k²/t})^d`, and `c_T = π ln T` (d=2) or `−2π^{3/2}T^{−1/2}`
//! (d=3). The result does not depend on `T`, and the lattice part converges
//! exponentially, so rigorous truncation is cheap.

use crate::lattice::{Dim, RepTable};
use crate::numeric::{ein, gauss_legendre, CompensatedSum};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

const T_MAX: f64 = 0.25;
/// Bound on `T·Re z` for positive `Re z`.
const KAPPA: f64 = 6.0;
/// `|Tz|` beyond which the closed forms for negative real `z` replace the series.
const SERIES_LIMIT: f64 = 8.0;

pub(crate) fn heat_time(re_z: f64) -> f64 {
    if re_z > 0.0 {
        T_MAX.min(KAPPA / re_z)
    } else {
        T_MAX
    }
}

/// Additive constant `c_T`.
pub(crate) fn reg_constant(dim: Dim, t: f64) -> f64 {
    match dim {
        Dim::Two => PI * t.ln(),
        Dim::Three => -2.0 * PI.powf(1.5) / t.sqrt(),
    }
}

/// `(K_T(z), K_T'(z))`.
pub(crate) fn k_terms(dim: Dim, z: Complex64, t: f64) -> (Complex64, Complex64) {
    if z.im == 0.0 && -z.re * t > SERIES_LIMIT {
        let (k, kp) = k_closed(dim, -z.re, t);
        (Complex64::new(k, 0.0), Complex64::new(kp, 0.0))
    } else {
        k_series(dim, z, t)
    }
}

// z = −a < 0.
fn k_closed(dim: Dim, a: f64, t: f64) -> (f64, f64) {
    let at = a * t;
    match dim {
        Dim::Two => (-PI * ein(at), PI * (-(-at).exp_m1()) / a),
        Dim::Three => {
            let pref = PI.powf(1.5);
            let erf = libm::erf(at.sqrt());
            let k = pref * (2.0 * (-(-at).exp_m1()) / t.sqrt() - 2.0 * (PI * a).sqrt() * erf);
            (k, pref * (PI / a).sqrt() * erf)
        }
    }
}

// K  = π^h T^{1−h} Σ_{k≥1} x^k / (k! (k+1−h))
// K' = π^h T^{2−h} Σ_{j≥0} x^j / (j! (j+2−h)),   x = Tz, h = d/2.
fn k_series(dim: Dim, z: Complex64, t: f64) -> (Complex64, Complex64) {
    let h = dim.get() as f64 / 2.0;
    let x = z * t;
    debug_assert!(
        x.norm() <= 4.0 * SERIES_LIMIT,
        "series used far outside its range"
    );
    let mut k_sum = Complex64::new(0.0, 0.0);
    let mut kp_sum = Complex64::new(1.0 / (2.0 - h), 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    for k in 1..400 {
        let kf = k as f64;
        pow = pow * x / kf;
        let a = pow / (kf + 1.0 - h);
        k_sum += a;
        kp_sum += pow / (kf + 2.0 - h);
        if kf > x.norm() && a.norm() <= 1e-18 * k_sum.norm().max(1e-300) {
            break;
        }
    }
    let pref = PI.powf(h);
    (
        k_sum * pref * t.powf(1.0 - h),
        kp_sum * pref * t.powf(2.0 - h),
    )
}

fn gl_nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(48))
}

/// `(J_T(z), J_T'(z))` by Gauss–Legendre on `[0, T]`. The integrand vanishes
/// to all orders at `t = 0`.
pub(crate) fn j_terms(dim: Dim, z: Complex64, t: f64) -> (Complex64, Complex64) {
    let d = dim.get() as i32;
    let h = d as f64 / 2.0;
    let (nodes, weights) = gl_nodes();
    let mut j = Complex64::new(0.0, 0.0);
    let mut jp = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        let s = 0.5 * t * (x + 1.0);
        let mut q = 0.0;
        for k in 1..50 {
            let term = (-PI * PI * (k * k) as f64 / s).exp();
            q += term;
            if term < 1e-300 {
                break;
            }
        }
        if q == 0.0 {
            continue;
        }
        let theta_minus_one = (d as f64 * (2.0 * q).ln_1p()).exp_m1();
        let f = (z * s).exp() * (PI / s).powf(h) * theta_minus_one * (0.5 * t * w);
        j += f;
        jp += f * s;
    }
    (j, jp)
}

/// Smallest `N` such that the lattice tail beyond `N` is below `tol`, for
/// `Re z ≤ re_z`.
///
/// With `A(X) = Σ_{m≤X} r_d(m) ≤ C_d 2^d X^{d/2}` and a decreasing summand
/// `f`, partial summation gives `Σ_{m>N} r_d(m) f(m) ≤ ∫_N^∞ A(X) |f'(X)| dX`,
/// and `∫_N^∞ X^p e^{−TX} dX ≤ N^p e^{−TN} / (T − p/N)`.
pub(crate) fn lattice_cutoff(dim: Dim, t: f64, re_z: f64, tol: f64, derivative: bool) -> u64 {
    let h = dim.get() as f64 / 2.0;
    let c = dim.unit_ball_volume() * 2f64.powi(dim.get() as i32);
    let lam = re_z.max(0.0);
    let ln_tol = tol.ln();
    let mut n = (lam + 1.0).max(2.0 * h / t).ceil();
    loop {
        let g = n - lam;
        let p = if derivative {
            t * t / g + 2.0 * t / (g * g) + 2.0 / (g * g * g)
        } else {
            t / g + 1.0 / (g * g)
        };
        let ln_bound = c.ln() + p.ln() + t * lam + h * n.ln() - t * n - (t - h / n).ln();
        if ln_bound < ln_tol {
            return n as u64;
        }
        n = (n * 1.02 + 1.0).ceil();
    }
}

/// Nonzero `(m, r_d(m))` pairs with `m ≤ n_max`.
pub(crate) fn shells_up_to(dim: Dim, n_max: u64) -> Vec<(u64, f64)> {
    let table: Arc<RepTable> = RepTable::shared(dim, n_max);
    table.counts()[..=n_max as usize]
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0)
        .map(|(m, &r)| (m as u64, r as f64))
        .collect()
}

/// Truncation and heat-time controls for the resolvent series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Bound on the truncated lattice tail.
    pub tol: f64,
    /// Multiplies the rigorous cutoff (`2.0` doubles it).
    pub cutoff_scale: f64,
    /// Fixed heat time `T`; chosen from `z` when `None`.
    pub heat_time: Option<f64>,
}

impl SeriesControl {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            cutoff_scale: 1.0,
            heat_time: None,
        }
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(crate::Error::invalid(format!(
                "series tolerance must be > 0, got {}",
                self.tol
            )));
        }
        if !(self.cutoff_scale >= 1.0 && self.cutoff_scale.is_finite()) {
            return Err(crate::Error::invalid("cutoff scale must be >= 1"));
        }
        if let Some(t) = self.heat_time {
            if !(t > 0.0 && t <= 1.0) {
                return Err(crate::Error::invalid(format!(
                    "heat time must lie in (0, 1], got {t}"
                )));
            }
        }
        Ok(())
    }

    fn time_for(&self, re_z: f64) -> f64 {
        self.heat_time.unwrap_or_else(|| heat_time(re_z))
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self::new(1e-11)
    }
}

/// `D(z)` or `D'(z)` for any `z` off the real norms.
pub(crate) fn resolvent(
    dim: Dim,
    z: Complex64,
    ctrl: &SeriesControl,
    derivative: bool,
) -> Complex64 {
    let t = ctrl.time_for(z.re);
    let cutoff = lattice_cutoff(dim, t, z.re, 0.5 * ctrl.tol, derivative);
    let n_max = (cutoff as f64 * ctrl.cutoff_scale).ceil() as u64;
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for (m, r) in shells_up_to(dim, n_max) {
        let w = m as f64 - z;
        let mut term = (-w * t).exp() / w * r;
        if derivative {
            term *= t + 1.0 / w;
        }
        re.add(term.re);
        im.add(term.im);
    }
    let (k, kp) = k_terms(dim, z, t);
    let (j, jp) = j_terms(dim, z, t);
    let lattice = Complex64::new(re.value(), im.value());
    if derivative {
        lattice + kp + jp
    } else {
        lattice + k + j + reg_constant(dim, t)
    }
}

/// `D'(λ)` at `λ = base + offset`, with pole distances formed as
/// `(m − base) − offset`.
pub(crate) fn resolvent_derivative_offset(
    dim: Dim,
    base: u64,
    offset: f64,
    ctrl: &SeriesControl,
) -> f64 {
    let lambda = base as f64 + offset;
    let t = ctrl.time_for(lambda);
    let cutoff = lattice_cutoff(dim, t, lambda, 0.5 * ctrl.tol, true);
    let n_max = (cutoff as f64 * ctrl.cutoff_scale).ceil() as u64;
    let b = base as f64;
    let mut acc = CompensatedSum::new();
    for (m, r) in shells_up_to(dim, n_max) {
        let w = (m as f64 - b) - offset;
        acc.add(r * (-t * w).exp() * (t / w + 1.0 / (w * w)));
    }
    let z = Complex64::new(lambda, 0.0);
    let (_, kp) = k_terms(dim, z, t);
    let (_, jp) = j_terms(dim, z, t);
    acc.value() + kp.re + jp.re
}

/// `D(i)`: its real part regularizes the spectral function and its imaginary
/// part is `c_0 = Σ_ξ 1/(|ξ|⁴ + 1)`.
pub(crate) fn resolvent_at_i(dim: Dim, ctrl: &SeriesControl) -> Complex64 {
    resolvent(dim, Complex64::new(0.0, 1.0), ctrl, false)
}

/// The spectral function on one gap `(base, base + gap)` in offset form
/// `λ = base + u`, so that pole distances `n − λ = (n − base) − u` keep full
/// relative precision near either end.
#[derive(Debug, Clone)]
pub(crate) struct OffsetSeries {
    dim: Dim,
    t: f64,
    base: f64,
    /// `(n − base, r_d(n) e^{−T(n−base)})`.
    terms: Vec<(f64, f64)>,
    /// `c_T − Re D(i)`.
    shift: f64,
}

impl OffsetSeries {
    /// Valid for `base + u ≤ re_max`.
    pub(crate) fn new(dim: Dim, base: u64, re_max: f64, ctrl: &SeriesControl, re_d_i: f64) -> Self {
        let t = ctrl.time_for(re_max);
        let cutoff = lattice_cutoff(dim, t, re_max, 0.5 * ctrl.tol, false);
        let n_max = (cutoff as f64 * ctrl.cutoff_scale).ceil() as u64;
        let b = base as f64;
        let terms = shells_up_to(dim, n_max)
            .into_iter()
            .map(|(m, r)| {
                let dn = m as f64 - b;
                (dn, r * (-t * dn).exp())
            })
            .collect();
        Self {
            dim,
            t,
            base: b,
            terms,
            shift: reg_constant(dim, t) - re_d_i,
        }
    }

    /// `s(base + u)`.
    pub(crate) fn value(&self, u: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for &(dn, a) in &self.terms {
            acc.add(a / (dn - u));
        }
        let z = Complex64::new(self.base + u, 0.0);
        let (k, _) = k_terms(self.dim, z, self.t);
        let (j, _) = j_terms(self.dim, z, self.t);
        (self.t * u).exp() * acc.value() + k.re + j.re + self.shift
    }
}
