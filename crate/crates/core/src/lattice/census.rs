use super::{enumerate_shell, is_representable, Dim, RepTable};
use crate::error::{Error, Result};
use crate::numeric::isqrt;
use serde::Serialize;
use std::sync::OnceLock;

/// Landau–Ramanujan constant with the truncation data used to compute it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LandauConstant {
    pub value: f64,
    /// Largest prime included in the Euler product.
    pub prime_bound: u64,
    /// Upper bound on the relative error from the omitted primes.
    pub tail_bound: f64,
}

const LANDAU_PRIME_BOUND: u64 = 8_000_000;

/// `K = 2^{-1/2} ∏_{p ≡ 3 (4)} (1 − p^{-2})^{-1/2}`, computed once.
pub fn landau_constant() -> LandauConstant {
    static K: OnceLock<LandauConstant> = OnceLock::new();
    *K.get_or_init(|| {
        let p_max = LANDAU_PRIME_BOUND;
        let mut log_sum = crate::numeric::CompensatedSum::new();
        for p in primes_up_to(p_max) {
            if p % 4 == 3 {
                let inv = 1.0 / (p as f64 * p as f64);
                log_sum.add(-0.5 * (-inv).ln_1p());
            }
        }
        // π(x) < 1.25506 x / ln x gives Σ_{p>P} p^{-2} < 2.5102 / (P ln P), and
        // -ln(1 - u) ≤ u / (1 - u).
        let pf = p_max as f64;
        let prime_tail = 2.5102 / (pf * pf.ln());
        let log_tail = 0.5 * prime_tail / (1.0 - 1.0 / (pf * pf));
        LandauConstant {
            value: std::f64::consts::FRAC_1_SQRT_2 * log_sum.value().exp(),
            prime_bound: p_max,
            tail_bound: log_tail.exp_m1(),
        }
    })
}

fn primes_up_to(n: u64) -> impl Iterator<Item = u64> {
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut i = 2;
    while i * i <= n {
        if !composite[i] {
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
        i += 1;
    }
    composite
        .into_iter()
        .enumerate()
        .skip(2)
        .filter(|(_, c)| !c)
        .map(|(p, _)| p as u64)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LandauCount {
    pub x: f64,
    /// `#{n ∈ N_2 : 0 < n ≤ X}`.
    pub count: u64,
    /// `K X / √(ln X)`.
    pub prediction: f64,
}

impl LandauCount {
    pub fn ratio(&self) -> f64 {
        self.count as f64 / self.prediction
    }
}

pub fn landau_count(x: f64) -> Result<LandauCount> {
    if !(x >= 10.0) || !x.is_finite() {
        return Err(Error::invalid(format!(
            "Landau count needs finite X >= 10, got {x}"
        )));
    }
    let table = RepTable::new(Dim::Two, x.floor() as u64);
    let count = table.norms().filter(|&n| n > 0).count() as u64;
    Ok(LandauCount {
        x,
        count,
        prediction: landau_constant().value * x / x.ln().sqrt(),
    })
}

fn check_two_square_norm(n: u64) -> Result<()> {
    if n == 0 || !is_representable(n, Dim::Two) {
        return Err(Error::invalid(format!(
            "{n} is not a positive sum of two squares"
        )));
    }
    Ok(())
}

fn shell_min_gap_sq(points: &[[i64; 2]]) -> Option<u64> {
    let mut best: Option<u64> = None;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
            let g = (dx * dx + dy * dy) as u64;
            best = Some(best.map_or(g, |cur| cur.min(g)));
        }
    }
    best
}

/// Squared minimum distance between distinct points on the circle `|ξ|² = n`.
pub fn min_pair_gap_sq(n: u64) -> Result<Option<u64>> {
    check_two_square_norm(n)?;
    let pts: Vec<[i64; 2]> = enumerate_shell(n, Dim::Two)
        .points
        .iter()
        .map(|p| [p.raw()[0], p.raw()[1]])
        .collect();
    Ok(shell_min_gap_sq(&pts))
}

pub fn min_pair_gap(n: u64) -> Result<Option<f64>> {
    Ok(min_pair_gap_sq(n)?.map(|g| (g as f64).sqrt()))
}

// gap ≤ n^{1/2-ε}  ⇔  gap² ≤ n^{1-2ε}
fn br_test(n: u64, gap_sq: Option<u64>, eps: f64) -> bool {
    gap_sq.is_some_and(|g| (g as f64) <= (n as f64).powf(1.0 - 2.0 * eps))
}

fn check_br_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::invalid(format!(
            "BR parameter must lie in (0, 1/2), got {eps}"
        )));
    }
    Ok(())
}

/// Whether `n ∈ BR(ε)`.
pub fn br_membership(n: u64, eps: f64) -> Result<bool> {
    check_br_eps(eps)?;
    Ok(br_test(n, min_pair_gap_sq(n)?, eps))
}

/// Squared minimum pair gaps for every `n ∈ N_2 ∩ [1, X]`.
#[derive(Debug, Clone)]
pub struct MinGapTable {
    max_n: u64,
    /// Indexed by `n`; `None` when `n ∉ N_2` or the shell has fewer than two points.
    gaps: Vec<Option<u64>>,
    represented: Vec<bool>,
}

impl MinGapTable {
    pub fn max_n(&self) -> u64 {
        self.max_n
    }

    pub fn gap_sq(&self, n: u64) -> Option<u64> {
        self.gaps.get(n as usize).copied().flatten()
    }

    pub fn is_br(&self, n: u64, eps: f64) -> bool {
        n >= 1 && n <= self.max_n && br_test(n, self.gap_sq(n), eps)
    }

    pub fn census(&self, x: f64, eps: f64) -> Result<BrCensus> {
        check_br_eps(eps)?;
        let top = (x.floor() as u64).min(self.max_n);
        let mut br_count = 0;
        let mut total = 0;
        for n in 1..=top {
            if self.represented[n as usize] {
                total += 1;
                if self.is_br(n, eps) {
                    br_count += 1;
                }
            }
        }
        Ok(BrCensus {
            x,
            eps,
            br_count,
            total,
        })
    }
}

/// Build the gap table by bucketing every point of the disc `|ξ|² ≤ X`.
pub fn br_census_table(x: f64) -> Result<MinGapTable> {
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::invalid(format!(
            "census ceiling must be >= 1, got {x}"
        )));
    }
    let max_n = x.floor() as u64;
    let len = max_n as usize + 1;
    let counts = RepTable::new(Dim::Two, max_n);
    let mut offsets = vec![0usize; len + 1];
    for n in 0..len {
        offsets[n + 1] = offsets[n] + counts.get(n as u64) as usize;
    }
    let mut fill = offsets.clone();
    let mut pts = vec![[0i64; 2]; offsets[len]];
    let r = isqrt(max_n) as i64;
    for a in -r..=r {
        let ymax = isqrt(max_n - (a * a) as u64) as i64;
        for b in -ymax..=ymax {
            let n = (a * a + b * b) as usize;
            pts[fill[n]] = [a, b];
            fill[n] += 1;
        }
    }
    let gaps = (0..len)
        .map(|n| {
            if n == 0 {
                None
            } else {
                shell_min_gap_sq(&pts[offsets[n]..offsets[n + 1]])
            }
        })
        .collect();
    let represented = counts.counts().iter().map(|&c| c > 0).collect();
    Ok(MinGapTable {
        max_n,
        gaps,
        represented,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrCensus {
    pub x: f64,
    pub eps: f64,
    /// `#(BR(ε) ∩ [1, X])`.
    pub br_count: u64,
    /// `#(N_2 ∩ [1, X])`.
    pub total: u64,
}

impl BrCensus {
    pub fn density(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.br_count as f64 / self.total as f64
        }
    }
}

pub fn br_census(x: f64, eps: f64) -> Result<BrCensus> {
    check_br_eps(eps)?;
    if !(x >= 10.0) {
        return Err(Error::invalid(format!(
            "census ceiling must be >= 10, got {x}"
        )));
    }
    br_census_table(x)?.census(x, eps)
}

/// `log r_3(n) / log n` over `n ∈ N_3`, `4 ∤ n`, in a range.
#[derive(Debug, Clone, Serialize)]
pub struct SiegelCensus {
    pub lo: u64,
    pub hi: u64,
    pub band: (f64, f64),
    pub checked: u64,
    pub min_exponent: f64,
    pub max_exponent: f64,
    /// Norms whose exponent falls outside the band.
    pub exceptions: Vec<(u64, f64)>,
}

pub fn siegel_census(lo: u64, hi: u64, band: (f64, f64)) -> Result<SiegelCensus> {
    if lo < 2 || hi < lo {
        return Err(Error::invalid(format!("bad Siegel range [{lo}, {hi}]")));
    }
    let table = RepTable::new(Dim::Three, hi);
    let mut out = SiegelCensus {
        lo,
        hi,
        band,
        checked: 0,
        min_exponent: f64::INFINITY,
        max_exponent: f64::NEG_INFINITY,
        exceptions: Vec::new(),
    };
    for n in lo..=hi {
        let r = table.get(n);
        if n % 4 == 0 || r == 0 {
            continue;
        }
        let e = (r as f64).ln() / (n as f64).ln();
        out.checked += 1;
        out.min_exponent = out.min_exponent.min(e);
        out.max_exponent = out.max_exponent.max(e);
        if e < band.0 || e > band.1 {
            out.exceptions.push((n, e));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_gap_sq(n: u64) -> Option<u64> {
        let s = isqrt(n) as i64;
        let mut pts = Vec::new();
        for a in -s..=s {
            for b in -s..=s {
                if (a * a + b * b) as u64 == n {
                    pts.push((a, b));
                }
            }
        }
        let mut best = None;
        for p in &pts {
            for q in &pts {
                if p != q {
                    let g = ((p.0 - q.0).pow(2) + (p.1 - q.1).pow(2)) as u64;
                    best = Some(best.map_or(g, |b: u64| b.min(g)));
                }
            }
        }
        best
    }

    #[test]
    fn landau_constant_value() {
        let k = landau_constant();
        assert!(k.tail_bound < 1e-8);
        assert!(
            (k.value - 0.764_223_653_589_220_7).abs() < 1e-8,
            "{}",
            k.value
        );
    }

    #[test]
    fn landau_count_small() {
        let c = landau_count(10.0).unwrap();
        // 1, 2, 4, 5, 8, 9, 10
        assert_eq!(c.count, 7);
        assert!(landau_count(5.0).is_err());
    }

    #[test]
    fn min_gap_examples() {
        assert_eq!(min_pair_gap_sq(25).unwrap(), Some(2));
        assert_eq!(min_pair_gap(2).unwrap(), Some(2.0));
        assert_eq!(min_pair_gap_sq(8).unwrap(), brute_gap_sq(8));
        assert_eq!(min_pair_gap_sq(8).unwrap(), Some(16));
        assert!(min_pair_gap(3).is_err());
        assert!(min_pair_gap(0).is_err());
    }

    #[test]
    fn min_gap_matches_brute_force() {
        let table = br_census_table(3000.0).unwrap();
        for n in 1..=3000u64 {
            if is_representable(n, Dim::Two) {
                let expect = brute_gap_sq(n);
                assert_eq!(min_pair_gap_sq(n).unwrap(), expect, "n={n}");
                assert_eq!(table.gap_sq(n), expect, "n={n}");
            }
        }
    }

    #[test]
    fn br_examples() {
        assert!(!br_membership(25, 0.49).unwrap());
        assert!(br_membership(50, 0.1).unwrap());
        assert!(br_membership(50, 0.0).is_err());
        assert!(br_membership(50, 0.5).is_err());
    }

    #[test]
    fn br_census_properties() {
        let table = br_census_table(100_000.0).unwrap();
        let small = table.census(1000.0, 0.3).unwrap();
        let large = table.census(100_000.0, 0.3).unwrap();
        assert!(large.density() < small.density());
        assert_eq!(table.census(10.0, 0.3).unwrap().total, 7);
        let weak = table.census(20_000.0, 0.1).unwrap();
        let strong = table.census(20_000.0, 0.499).unwrap();
        assert!(strong.br_count <= weak.br_count);
        assert_eq!(br_census(20_000.0, 0.1).unwrap(), weak);
    }

    #[test]
    fn siegel_exponents_trend() {
        // The upper edge of the band is crossed often at this scale (the constant
        // in r_3 ≍ √n is large); the exceptions are reported and must thin out.
        let low = siegel_census(1000, 10_000, (0.3, 0.7)).unwrap();
        let high = siegel_census(10_000, 100_000, (0.3, 0.7)).unwrap();
        assert!(low.min_exponent > 0.3 && high.min_exponent > 0.3);
        assert!(high.max_exponent < low.max_exponent);
        let frac = |s: &SiegelCensus| s.exceptions.len() as f64 / s.checked as f64;
        assert!(frac(&high) < frac(&low));
    }
}
