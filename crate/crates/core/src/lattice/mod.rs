//! Lattice points on spheres in `Z^d`, the norm set `N_d`, and the
//! arithmetic filter sets built from them.

mod cache;
mod census;
mod geometry;
mod reps;

pub use cache::{ShellCache, CACHE_ENV};
pub use census::{
    br_census, br_census_table, br_membership, landau_constant, landau_count, min_pair_gap,
    min_pair_gap_sq, siegel_census, BrCensus, LandauConstant, LandauCount, MinGapTable,
    SiegelCensus,
};
pub use geometry::{
    a_set_member, b_set_member, inner_product_solutions, inner_product_solutions_brute,
    inner_product_solutions_parametric, strip_count, strip_count_in_shell, InnerProductCount,
};
pub use reps::{enumerate_norms, NormSequence, RepTable};

use crate::error::{Error, Result};
use crate::numeric::isqrt;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Neg, Sub};

/// Factor `3` in the definitions of the sets `A_{ζ,δ}` and `B_{ζ,δ}`.
pub const AB_SET_FACTOR: f64 = 3.0;

/// Factor `5` in the support bound `|ζ| ≤ 5√λ` for the correlation sums.
pub const ZETA_SUPPORT_FACTOR: f64 = 5.0;

/// Ambient dimension of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn get(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    /// Volume of the unit ball in `R^d`.
    pub fn unit_ball_volume(self) -> f64 {
        match self {
            Dim::Two => std::f64::consts::PI,
            Dim::Three => 4.0 * std::f64::consts::PI / 3.0,
        }
    }

    /// Volume of the torus `R^d / 2πZ^d`.
    pub fn torus_volume(self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.get() as i32)
    }
}

impl TryFrom<u32> for Dim {
    type Error = Error;

    fn try_from(d: u32) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(Error::invalid(format!(
                "dimension must be 2 or 3, got {other}"
            ))),
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

/// An integer vector of length 2 or 3.
///
/// Unused trailing coordinates are kept at zero so that derived ordering is
/// lexicographic within one dimension.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    dim: Dim,
    coords: [i64; 3],
}

impl LatticePoint {
    pub fn new2(x: i64, y: i64) -> Self {
        Self {
            dim: Dim::Two,
            coords: [x, y, 0],
        }
    }

    pub fn new3(x: i64, y: i64, z: i64) -> Self {
        Self {
            dim: Dim::Three,
            coords: [x, y, z],
        }
    }

    pub fn from_slice(coords: &[i64]) -> Result<Self> {
        match *coords {
            [x, y] => Ok(Self::new2(x, y)),
            [x, y, z] => Ok(Self::new3(x, y, z)),
            _ => Err(Error::invalid(format!(
                "lattice point needs 2 or 3 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn zero(dim: Dim) -> Self {
        Self {
            dim,
            coords: [0; 3],
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim.get()]
    }

    /// Raw coordinate array, trailing entries zero in dimension 2.
    #[inline]
    pub fn raw(&self) -> [i64; 3] {
        self.coords
    }

    #[inline]
    pub fn norm_sq(&self) -> i64 {
        let [x, y, z] = self.coords;
        x * x + y * y + z * z
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> i64 {
        debug_assert_eq!(self.dim, other.dim);
        let [a, b, c] = self.coords;
        let [x, y, z] = other.coords;
        a * x + b * y + c * z
    }

    pub fn is_zero(&self) -> bool {
        self.coords == [0; 3]
    }

    pub fn scale(&self, k: i64) -> Self {
        let [x, y, z] = self.coords;
        Self {
            dim: self.dim,
            coords: [k * x, k * y, k * z],
        }
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

impl Serialize for LatticePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl Add for LatticePoint {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let [a, b, c] = self.coords;
        let [x, y, z] = rhs.coords;
        Self {
            dim: self.dim,
            coords: [a + x, b + y, c + z],
        }
    }
}

impl Sub for LatticePoint {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for LatticePoint {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1)
    }
}

/// All lattice points of squared norm `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeShell {
    pub n: u64,
    pub dim: Dim,
    pub points: Vec<LatticePoint>,
}

impl LatticeShell {
    /// `r_d(n)`.
    pub fn multiplicity(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Every `ξ ∈ Z^d` with `|ξ|² = n`, in lexicographic order.
pub fn enumerate_shell(n: u64, dim: Dim) -> LatticeShell {
    let s = isqrt(n) as i64;
    let n_i = n as i64;
    let mut points = Vec::new();
    match dim {
        Dim::Two => {
            for x in -s..=s {
                for y in last_coordinates(n_i - x * x) {
                    points.push(LatticePoint::new2(x, y));
                }
            }
        }
        Dim::Three => {
            for x in -s..=s {
                let rx = n_i - x * x;
                let sy = isqrt(rx as u64) as i64;
                for y in -sy..=sy {
                    for z in last_coordinates(rx - y * y) {
                        points.push(LatticePoint::new3(x, y, z));
                    }
                }
            }
        }
    }
    LatticeShell { n, dim, points }
}

// Solutions t of t² = rest, ascending.
fn last_coordinates(rest: i64) -> impl Iterator<Item = i64> {
    let t = if rest < 0 {
        -1
    } else {
        isqrt(rest as u64) as i64
    };
    let hit = t >= 0 && t * t == rest;
    let (lo, hi) = match (hit, t) {
        (false, _) => (1, 0),
        (true, 0) => (0, 0),
        (true, t) => (-t, t),
    };
    [lo, hi].into_iter().take(if !hit {
        0
    } else if lo == hi {
        1
    } else {
        2
    })
}

/// `n = 4^a · n1` with `4 ∤ n1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourAdicSplit {
    pub a: u32,
    pub n1: u64,
}

impl FourAdicSplit {
    pub fn reconstruct(&self) -> u64 {
        4u64.pow(self.a) * self.n1
    }
}

pub fn four_adic_split(n: u64) -> Result<FourAdicSplit> {
    if n == 0 {
        return Err(Error::invalid("4-adic valuation of 0 is undefined"));
    }
    let mut a = 0;
    let mut n1 = n;
    while n1 % 4 == 0 {
        n1 /= 4;
        a += 1;
    }
    Ok(FourAdicSplit { a, n1 })
}

/// Whether `n` is a sum of `d` squares, i.e. `n ∈ N_d`.
pub fn is_representable(n: u64, dim: Dim) -> bool {
    if n == 0 {
        return true;
    }
    match dim {
        Dim::Two => sum_of_two_squares(n),
        Dim::Three => {
            let split = four_adic_split(n).expect("n > 0");
            split.n1 % 8 != 7
        }
    }
}

// Every prime p ≡ 3 (mod 4) must divide n to an even power.
fn sum_of_two_squares(mut n: u64) -> bool {
    while n % 2 == 0 {
        n /= 2;
    }
    let mut p = 3u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if p % 4 == 3 && e % 2 == 1 {
                return false;
            }
        }
        p += 2;
    }
    n % 4 != 3
}
