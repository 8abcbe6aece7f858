use super::Dim;
use crate::error::{Error, Result};
use crate::numeric::isqrt;
use std::sync::{Arc, OnceLock, RwLock};

/// Dense table of `r_d(n)` for `0 ≤ n ≤ max_n`.
#[derive(Debug, Clone)]
pub struct RepTable {
    dim: Dim,
    counts: Vec<u32>,
}

impl RepTable {
    pub fn new(dim: Dim, max_n: u64) -> Self {
        let r2 = two_square_counts(max_n);
        let counts = match dim {
            Dim::Two => r2,
            // r_3 = r_1 * r_2
            Dim::Three => {
                let len = r2.len();
                let mut r3 = r2.clone();
                let zmax = isqrt(max_n) as usize;
                for z in 1..=zmax {
                    let z2 = z * z;
                    for n in z2..len {
                        r3[n] += 2 * r2[n - z2];
                    }
                }
                r3
            }
        };
        Self { dim, counts }
    }

    /// A process-wide table covering at least `[0, max_n]`, grown geometrically.
    pub fn shared(dim: Dim, max_n: u64) -> Arc<RepTable> {
        static TABLES: OnceLock<[RwLock<Option<Arc<RepTable>>>; 2]> = OnceLock::new();
        let slot = &TABLES.get_or_init(Default::default)[dim.get() - 2];
        if let Some(t) = slot.read().expect("rep table lock").as_ref() {
            if t.max_n() >= max_n {
                return Arc::clone(t);
            }
        }
        let mut guard = slot.write().expect("rep table lock");
        match guard.as_ref() {
            Some(t) if t.max_n() >= max_n => Arc::clone(t),
            current => {
                let floor = current.map_or(1024, |t| 2 * t.max_n());
                let table = Arc::new(RepTable::new(dim, max_n.max(floor)));
                *guard = Some(Arc::clone(&table));
                table
            }
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn max_n(&self) -> u64 {
        self.counts.len() as u64 - 1
    }

    /// `r_d(n)`; panics when `n` is beyond the table.
    #[inline]
    pub fn get(&self, n: u64) -> u32 {
        self.counts[n as usize]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Represented norms `n ≤ max_n` (those with `r_d(n) > 0`).
    pub fn norms(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(n, _)| n as u64)
    }
}

fn two_square_counts(max_n: u64) -> Vec<u32> {
    let len = max_n as usize + 1;
    let mut counts = vec![0u32; len];
    let r = isqrt(max_n);
    for x in 0..=r {
        let x2 = x * x;
        let weight_x = if x == 0 { 1 } else { 2 };
        let ymax = isqrt(max_n - x2);
        for y in 0..=ymax {
            let weight_y = if y == 0 { 1 } else { 2 };
            counts[(x2 + y * y) as usize] += weight_x * weight_y;
        }
    }
    counts
}

/// The elements of `N_d` in `[0, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSequence {
    pub dim: Dim,
    pub upper: f64,
    pub norms: Vec<u64>,
}

impl NormSequence {
    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    /// Consecutive pairs `(n_k, n_{k+1})`.
    pub fn intervals(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.norms.windows(2).map(|w| (w[0], w[1]))
    }
}

pub fn enumerate_norms(upper: f64, dim: Dim) -> Result<NormSequence> {
    if !(upper >= 0.0) || !upper.is_finite() {
        return Err(Error::invalid(format!(
            "norm ceiling must be finite and >= 0, got {upper}"
        )));
    }
    let max_n = upper.floor() as u64;
    let table = RepTable::new(dim, max_n);
    Ok(NormSequence {
        dim,
        upper,
        norms: table.norms().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{enumerate_shell, is_representable};
    use super::*;

    #[test]
    fn norm_examples() {
        assert_eq!(enumerate_norms(3.0, Dim::Two).unwrap().norms, vec![0, 1, 2]);
        assert_eq!(
            enumerate_norms(3.0, Dim::Three).unwrap().norms,
            vec![0, 1, 2, 3]
        );
        assert_eq!(enumerate_norms(0.5, Dim::Two).unwrap().norms, vec![0]);
        assert_eq!(enumerate_norms(0.5, Dim::Three).unwrap().norms, vec![0]);
        assert!(enumerate_norms(-1.0, Dim::Two).is_err());
    }

    #[test]
    fn table_matches_shell_enumeration() {
        for dim in [Dim::Two, Dim::Three] {
            let table = RepTable::new(dim, 600);
            for n in 0..=600 {
                assert_eq!(
                    table.get(n) as usize,
                    enumerate_shell(n, dim).multiplicity()
                );
            }
        }
    }

    #[test]
    fn norm_sequence_invariants() {
        for dim in [Dim::Two, Dim::Three] {
            let seq = enumerate_norms(5000.0, dim).unwrap();
            assert_eq!(seq.norms[0], 0);
            assert!(seq.norms.windows(2).all(|w| w[0] < w[1]));
            for &n in seq.norms.iter().step_by(37) {
                assert!(enumerate_shell(n, dim).multiplicity() > 0);
                assert!(is_representable(n, dim));
            }
        }
    }

    #[test]
    fn cumulative_counts_match_disc_count() {
        // Σ_{n ≤ X} r_2(n) is the number of lattice points in the disc of radius √X.
        let table = RepTable::new(Dim::Two, 10_000);
        for x in [0u64, 1, 10, 99, 1000, 4567, 10_000] {
            let cumulative: u64 = table.counts()[..=x as usize]
                .iter()
                .map(|&c| c as u64)
                .sum();
            let r = isqrt(x) as i64;
            let mut disc = 0u64;
            for a in -r..=r {
                for b in -r..=r {
                    if (a * a + b * b) as u64 <= x {
                        disc += 1;
                    }
                }
            }
            assert_eq!(cumulative, disc, "X={x}");
        }
    }
}
