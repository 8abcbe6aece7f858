use super::{chi_zeta, classify_norm, NormClass};
use crate::error::{Error, Result};
use crate::lattice::{
    a_set_member, b_set_member, four_adic_split, inner_product_solutions_parametric,
    is_representable, strip_count, Dim, LatticePoint,
};
use crate::spectrum::PerturbedSpectrum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditOutcome {
    pub name: String,
    pub checked: u64,
    pub violations: u64,
    /// A measured constant, reported but never asserted.
    pub measured: Option<f64>,
    pub note: String,
}

impl AuditOutcome {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn ball_points(dim: Dim, radius: i64) -> Vec<LatticePoint> {
    let r2 = radius * radius;
    let mut out = Vec::new();
    for x in -radius..=radius {
        for y in -radius..=radius {
            match dim {
                Dim::Two => {
                    if x * x + y * y <= r2 {
                        out.push(LatticePoint::new2(x, y));
                    }
                }
                Dim::Three => {
                    for z in -radius..=radius {
                        if x * x + y * y + z * z <= r2 {
                            out.push(LatticePoint::new3(x, y, z));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Both parts of the `N₀/N₁` lemma over `0 < |ξ| ≤ range_xi`, `0 < |ζ| ≤ range_zeta`
/// in dimension 3: equal norms `|ξ|² = |ξ−ζ|²` force `|ξ|² ∈ N₁^ζ`, and
/// `|ξ|² ∈ N₀^ζ` forces `||ξ|² − |ξ−ζ|²| ≥ 1`.
pub fn audit_lemma_n0(range_xi: i64, range_zeta: i64) -> Result<Vec<AuditOutcome>> {
    if range_xi < 1 || range_zeta < 1 {
        return Err(Error::invalid("audit ranges must be ≥ 1"));
    }
    let xis: Vec<LatticePoint> = ball_points(Dim::Three, range_xi)
        .into_iter()
        .filter(|p| !p.is_zero())
        .collect();
    let zetas: Vec<LatticePoint> = ball_points(Dim::Three, range_zeta)
        .into_iter()
        .filter(|p| !p.is_zero())
        .collect();
    let top = (range_xi.max(range_zeta) as u64).pow(2);
    let a: Vec<u32> = (0..=top)
        .map(|n| {
            if n == 0 {
                0
            } else {
                four_adic_split(n).map(|s| s.a).unwrap_or(0)
            }
        })
        .collect();
    let (mut eq_checked, mut eq_bad) = (0u64, 0u64);
    let (mut n0_checked, mut n0_bad) = (0u64, 0u64);
    let mut min_gap = i64::MAX;
    for z in &zetas {
        let z2 = z.norm_sq();
        let az = a[z2 as usize];
        for xi in &xis {
            let n = xi.norm_sq();
            let diff = 2 * xi.dot(z) - z2;
            if diff == 0 {
                eq_checked += 1;
                if classify_norm(n as u64, z)? != NormClass::N1 {
                    eq_bad += 1;
                }
            }
            if a[n as usize] > az {
                n0_checked += 1;
                min_gap = min_gap.min(diff.abs());
                if diff.abs() < 1 {
                    n0_bad += 1;
                }
            }
        }
    }
    let ranges = format!("|xi| <= {range_xi}, |zeta| <= {range_zeta}");
    Ok(vec![
        AuditOutcome {
            name: "lemma_n0_equal_norms".into(),
            checked: eq_checked,
            violations: eq_bad,
            measured: None,
            note: ranges.clone(),
        },
        AuditOutcome {
            name: "lemma_n0_separation".into(),
            checked: n0_checked,
            violations: n0_bad,
            measured: (min_gap != i64::MAX).then_some(min_gap as f64),
            note: format!("{ranges}; measured = min ||xi|^2 - |xi-zeta|^2| on N0"),
        },
    ])
}

/// `ξ ∈ A_{ζ,δ} ⇒ 2ξ − ζ ∈ B_{ζ,δ}`, and back for `ξ̃ ≡ ζ (mod 2)`, over
/// planar `|ξ|, |ζ| ≤ range`.
pub fn audit_ab_mapping(range: i64, deltas: &[f64]) -> Result<AuditOutcome> {
    let pts = ball_points(Dim::Two, range);
    let (mut checked, mut bad) = (0u64, 0u64);
    for &delta in deltas {
        for z in pts.iter().filter(|p| !p.is_zero()) {
            for xi in &pts {
                let image = xi.scale(2) - *z;
                let in_a = a_set_member(xi, z, delta)?;
                let in_b = b_set_member(&image, z, delta)?;
                checked += 1;
                if in_a != in_b {
                    bad += 1;
                }
            }
        }
    }
    Ok(AuditOutcome {
        name: "ab_mapping".into(),
        checked,
        violations: bad,
        measured: None,
        note: format!("|xi|, |zeta| <= {range}, delta in {deltas:?}"),
    })
}

/// Parametric solution counts of `⟨ξ̃, ζ⟩ = l`, `|ξ̃| ≤ R` against a histogram
/// of `⟨ξ̃, ζ⟩` over the whole disc.
pub fn audit_inner_products(range_zeta: i64, range_l: i64, radii: &[f64]) -> Result<AuditOutcome> {
    let zetas: Vec<LatticePoint> = ball_points(Dim::Two, range_zeta)
        .into_iter()
        .filter(|p| !p.is_zero())
        .collect();
    let (mut checked, mut bad) = (0u64, 0u64);
    let width = (2 * range_l + 1) as usize;
    for &r in radii {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("radius must be ≥ 0, got {r}")));
        }
        let s = r.floor() as i64;
        let disc: Vec<LatticePoint> = (-s..=s)
            .flat_map(|x| (-s..=s).map(move |y| LatticePoint::new2(x, y)))
            .filter(|p| p.norm_sq() as f64 <= r * r)
            .collect();
        for z in &zetas {
            let mut hist = vec![0u64; width];
            for p in &disc {
                let l = p.dot(z);
                if l.abs() <= range_l {
                    hist[(l + range_l) as usize] += 1;
                }
            }
            for l in -range_l..=range_l {
                checked += 1;
                if inner_product_solutions_parametric(z, l, r)? != hist[(l + range_l) as usize] {
                    bad += 1;
                }
            }
        }
    }
    Ok(AuditOutcome {
        name: "inner_product_solutions".into(),
        checked,
        violations: bad,
        measured: None,
        note: format!("|zeta| <= {range_zeta}, |l| <= {range_l}, R in {radii:?}"),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripAudit {
    pub samples: usize,
    /// `max strip_count / (L λ^{0.1})` over the first `samples` pairs.
    pub max_ratio: f64,
    /// The same over twice as many pairs (a superset).
    pub max_ratio_doubled: f64,
    pub argmax_n: u64,
    pub argmax_zeta: LatticePoint,
    pub seed: u64,
}

impl StripAudit {
    pub fn growth(&self) -> f64 {
        self.max_ratio_doubled / self.max_ratio
    }
}

pub const STRIP_MAX_N: u64 = 2000;
pub const STRIP_ZETA_BOX: i64 = 10;
pub const STRIP_DELTA: f64 = 0.04;

/// Strip counts for random `n ∈ N₃ ∩ [2, 2000]` and `0 < |ζ|_∞ ≤ 10`, with
/// `λ = n + 1/2`, `L = λ^{0.04}` and strip half-width `2L`.
pub fn audit_strips(samples: usize, seed: u64) -> Result<StripAudit> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let norms: Vec<u64> = (2..=STRIP_MAX_N)
        .filter(|&n| is_representable(n, Dim::Three))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(2 * samples);
    while draws.len() < 2 * samples {
        let n = norms[rng.gen_range(0..norms.len())];
        let b = STRIP_ZETA_BOX;
        let z = LatticePoint::new3(
            rng.gen_range(-b..=b),
            rng.gen_range(-b..=b),
            rng.gen_range(-b..=b),
        );
        if !z.is_zero() {
            draws.push((n, z));
        }
    }
    let mut ratios = Vec::with_capacity(draws.len());
    for &(n, z) in &draws {
        let lambda = n as f64 + 0.5;
        let l = lambda.powf(STRIP_DELTA);
        let count = strip_count(n, &z, 2.0 * l)?;
        ratios.push(count as f64 / (l * lambda.powf(0.1)));
    }
    let argmax =
        |upto: usize| (0..upto).fold(0, |best, i| if ratios[i] > ratios[best] { i } else { best });
    let first = argmax(samples);
    let all = argmax(2 * samples);
    Ok(StripAudit {
        samples,
        max_ratio: ratios[first],
        max_ratio_doubled: ratios[all],
        argmax_n: draws[all].0,
        argmax_zeta: draws[all].1,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCountAudit {
    pub x: f64,
    pub zeta: LatticePoint,
    pub delta: f64,
    /// `#{λ ∈ Λ₀ ∩ (0, X] : χ_ζ(λ)}`.
    pub count: usize,
    /// `#(Λ₀ ∩ (0, X])`.
    pub candidates: usize,
    /// `X^{1/2 + 2δ} / |ζ|`.
    pub bound: f64,
}

impl LemmaCountAudit {
    pub fn ratio(&self) -> f64 {
        self.count as f64 / self.bound
    }
}

/// Count the `λ` of the index set `lambda0` (typically `Λ₀`) up to `X` near
/// which `A_{ζ,δ}` has a point.
pub fn audit_lemma_counts(
    spec: &PerturbedSpectrum,
    lambda0: &[usize],
    x: f64,
    zeta: &LatticePoint,
    delta: f64,
) -> Result<LemmaCountAudit> {
    if spec.dim() != Dim::Two {
        return Err(Error::invalid("λ-proximity counts need a 2D spectrum"));
    }
    let mut count = 0;
    let mut candidates = 0;
    for &i in lambda0 {
        let lambda = spec
            .entries
            .get(i)
            .ok_or_else(|| Error::invalid(format!("index {i} outside the spectrum")))?
            .lambda;
        if !(lambda > 0.0 && lambda <= x) {
            continue;
        }
        candidates += 1;
        if chi_zeta(lambda, zeta, delta)? {
            count += 1;
        }
    }
    Ok(LemmaCountAudit {
        x,
        zeta: *zeta,
        delta,
        count,
        candidates,
        bound: x.powf(0.5 + 2.0 * delta) / zeta.norm(),
    })
}
