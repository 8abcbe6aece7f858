use super::{is_representable, Dim, LatticePoint, LatticeShell, ShellCache, AB_SET_FACTOR};
use crate::error::{Error, Result};
use crate::numeric::ext_gcd;
use serde::Serialize;

fn check_nonzero(zeta: &LatticePoint) -> Result<()> {
    if zeta.is_zero() {
        return Err(Error::invalid("ζ must be nonzero"));
    }
    Ok(())
}

/// `#{ξ : |ξ|² = n, |⟨2ξ − ζ, ζ⟩| < bound}` in dimension 3.
pub fn strip_count(n: u64, zeta: &LatticePoint, bound: f64) -> Result<usize> {
    check_nonzero(zeta)?;
    if zeta.dim() != Dim::Three {
        return Err(Error::invalid("strip counts are defined for d = 3"));
    }
    if !(bound > 0.0) {
        return Err(Error::invalid(format!(
            "strip bound must be positive, got {bound}"
        )));
    }
    if !is_representable(n, Dim::Three) {
        return Err(Error::invalid(format!("{n} is not a sum of three squares")));
    }
    let shell = ShellCache::global().get(n, Dim::Three);
    Ok(strip_count_in_shell(&shell, zeta, bound))
}

/// Strip count over an already enumerated shell.
pub fn strip_count_in_shell(shell: &LatticeShell, zeta: &LatticePoint, bound: f64) -> usize {
    let z2 = zeta.norm_sq();
    shell
        .points
        .iter()
        .filter(|xi| ((2 * xi.dot(zeta) - z2).abs() as f64) < bound)
        .count()
}

/// Both routes for `#{ξ̃ ∈ Z² : ⟨ξ̃, ζ⟩ = l, |ξ̃| ≤ R}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InnerProductCount {
    pub parametric: u64,
    pub brute: u64,
}

impl InnerProductCount {
    pub fn agree(&self) -> bool {
        self.parametric == self.brute
    }

    pub fn value(&self) -> u64 {
        self.parametric
    }
}

fn check_plane(zeta: &LatticePoint) -> Result<()> {
    check_nonzero(zeta)?;
    if zeta.dim() != Dim::Two {
        return Err(Error::invalid("inner-product counts are defined for d = 2"));
    }
    Ok(())
}

#[inline]
fn in_disc(x: i128, y: i128, r_sq: f64) -> bool {
    ((x * x + y * y) as f64) <= r_sq
}

/// Walks the solution line `ξ̃₀ + k(−n/g, m/g)` of `m x + n y = l`.
pub fn inner_product_solutions_parametric(zeta: &LatticePoint, l: i64, r: f64) -> Result<u64> {
    check_plane(zeta)?;
    if !(r >= 0.0) {
        return Ok(0);
    }
    let [m, n, _] = zeta.raw();
    let (g, s, t) = ext_gcd(m, n);
    if l % g != 0 {
        return Ok(0);
    }
    let q = (l / g) as i128;
    let (x0, y0) = (s as i128 * q, t as i128 * q);
    let (vx, vy) = ((-n / g) as i128, (m / g) as i128);
    let v2 = (vx * vx + vy * vy) as f64;
    let r_sq = r * r;
    // |ξ̃₀ + k v|² ≤ R² is a quadratic in k; its real roots bracket the integer range.
    let b = (x0 * vx + y0 * vy) as f64;
    let c = (x0 * x0 + y0 * y0) as f64 - r_sq;
    let disc = b * b - v2 * c;
    if disc < 0.0 {
        return Ok(0);
    }
    let centre = -b / v2;
    let half = disc.sqrt() / v2;
    let k_lo = (centre - half).floor() as i128 - 1;
    let k_hi = (centre + half).ceil() as i128 + 1;
    Ok((k_lo..=k_hi)
        .filter(|&k| in_disc(x0 + k * vx, y0 + k * vy, r_sq))
        .count() as u64)
}

/// Scans the square `|x|, |y| ≤ R`.
pub fn inner_product_solutions_brute(zeta: &LatticePoint, l: i64, r: f64) -> Result<u64> {
    check_plane(zeta)?;
    if !(r >= 0.0) {
        return Ok(0);
    }
    let [m, n, _] = zeta.raw();
    let s = r.floor() as i64;
    let r_sq = r * r;
    let mut count = 0;
    for x in -s..=s {
        for y in -s..=s {
            if m * x + n * y == l && in_disc(x as i128, y as i128, r_sq) {
                count += 1;
            }
        }
    }
    Ok(count)
}

pub fn inner_product_solutions(zeta: &LatticePoint, l: i64, r: f64) -> Result<InnerProductCount> {
    Ok(InnerProductCount {
        parametric: inner_product_solutions_parametric(zeta, l, r)?,
        brute: inner_product_solutions_brute(zeta, l, r)?,
    })
}

fn check_ab(a: &LatticePoint, zeta: &LatticePoint, delta: f64) -> Result<()> {
    check_nonzero(zeta)?;
    if a.dim() != zeta.dim() {
        return Err(Error::invalid("ξ and ζ must share a dimension"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::invalid(format!(
            "δ must lie in (0, 1/2), got {delta}"
        )));
    }
    Ok(())
}

/// `ξ ∈ A_{ζ,δ}`: `0 < |⟨2ξ − ζ, ζ⟩| ≤ 3|ξ|^{2δ}`.
pub fn a_set_member(xi: &LatticePoint, zeta: &LatticePoint, delta: f64) -> Result<bool> {
    check_ab(xi, zeta, delta)?;
    let p = (2 * xi.dot(zeta) - zeta.norm_sq()).abs();
    Ok(p > 0 && p as f64 <= AB_SET_FACTOR * (xi.norm_sq() as f64).powf(delta))
}

/// `ξ̃ ∈ B_{ζ,δ}`: `0 < |⟨ξ̃, ζ⟩| ≤ 3|(ξ̃ + ζ)/2|^{2δ}`.
pub fn b_set_member(xi_t: &LatticePoint, zeta: &LatticePoint, delta: f64) -> Result<bool> {
    check_ab(xi_t, zeta, delta)?;
    let p = xi_t.dot(zeta).abs();
    let mid_sq = (*xi_t + *zeta).norm_sq() as f64 / 4.0;
    Ok(p > 0 && p as f64 <= AB_SET_FACTOR * mid_sq.powf(delta))
}
