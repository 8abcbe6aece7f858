use super::*;
use crate::lattice::{br_membership, enumerate_norms, LatticePoint};
use crate::spectrum::{solve_spectrum, ScattererConfig, SpectrumEntry};
use std::f64::consts::PI;

// Spectrum with one λ at the centre of every gap; filters only look at
// λ and its bracketing norms.
fn midpoint_spectrum(dim: Dim, ceiling: f64) -> PerturbedSpectrum {
    let norms = enumerate_norms(ceiling, dim).unwrap();
    let entries = norms
        .intervals()
        .map(|(lo, hi)| SpectrumEntry {
            lambda: 0.5 * (lo + hi) as f64,
            lower_norm: Some(lo),
            upper_norm: hi,
            base: lo,
            offset: 0.5 * (hi - lo) as f64,
            residual: 0.0,
        })
        .collect();
    PerturbedSpectrum {
        config: ScattererConfig::at_origin(dim, 0.0).unwrap(),
        ceiling,
        c0: 1.0,
        target: 0.0,
        entries,
        anomalies: vec![],
    }
}

#[test]
fn gap_filter_is_nested_and_dense() {
    let spec = midpoint_spectrum(Dim::Two, 5000.0);
    let all = spec
        .entries
        .iter()
        .filter(|e| e.lower_norm.unwrap() >= 2)
        .count();
    assert_eq!(gap_filter_2d(&spec, 1.0).unwrap().len(), all);
    let low = gap_filter_2d(&spec, 0.1).unwrap();
    let high = gap_filter_2d(&spec, 0.3).unwrap();
    assert!(low.len() < high.len());
    assert_eq!(intersect(&low, &high), low);
    // Direct census of gaps in N₂.
    let mut kept = 0;
    let mut prev = None;
    for n in 0..=5001u64 {
        if is_representable(n, Dim::Two) {
            if let Some(p) = prev {
                if n as f64 <= 5000.0 && p >= 2 && (n - p) as f64 <= (p as f64).powf(0.2) {
                    kept += 1;
                }
            }
            prev = Some(n);
        }
    }
    let filtered = gap_filter_2d(&spec, 0.2).unwrap();
    assert_eq!(filtered.len(), kept);
    assert!(filtered.len() as f64 / spec.entries.len() as f64 > 0.5);
    assert!(gap_filter_2d(&midpoint_spectrum(Dim::Three, 50.0), 0.2).is_err());
}

#[test]
fn br_filter_against_direct_membership() {
    let spec = midpoint_spectrum(Dim::Two, 5000.0);
    let (eps, delta) = (0.3, 0.05);
    let kept = br_avoid_filter(&spec, eps, delta).unwrap();
    let direct: Vec<usize> = spec
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            let l = e.lambda.powf(delta);
            let lo = (e.lambda - l).ceil().max(1.0) as u64;
            let hi = (e.lambda + l).floor() as u64;
            !(lo..=hi).any(|n| {
                (n as f64 - e.lambda).abs() < l
                    && is_representable(n, Dim::Two)
                    && br_membership(n, eps).unwrap()
            })
        })
        .map(|(i, _)| i)
        .collect();
    assert_eq!(kept, direct);
    let rejected = 1.0 - kept.len() as f64 / spec.entries.len() as f64;
    assert!(rejected < 0.5, "rejected {rejected}");
    // n = 1 carries no close pair.
    assert!(kept.contains(&1));
    assert_eq!(
        lambda_zero_preset(&spec, eps, 0.04).unwrap(),
        br_avoid_filter(&spec, eps / 2.0, 0.04).unwrap()
    );
    assert!(br_avoid_filter(&spec, 0.3, 0.1).is_err());
}

fn chi_brute(lambda: f64, zeta: &LatticePoint, delta: f64) -> bool {
    let l = lambda.powf(delta);
    let r = (lambda + l).sqrt().ceil() as i64;
    let [m, n, _] = zeta.raw();
    let z2 = zeta.norm_sq();
    for x in -r..=r {
        for y in -r..=r {
            let s = (x * x + y * y) as f64;
            if (s - lambda).abs() > l {
                continue;
            }
            let p = (2 * (x * m + y * n) - z2).abs();
            if p > 0 && p as f64 <= 3.0 * s.powf(delta) {
                return true;
            }
        }
    }
    false
}

#[test]
fn chi_zeta_matches_brute_force() {
    let spec = solve_spectrum(200.0, &ScattererConfig::at_origin(Dim::Two, 0.0).unwrap()).unwrap();
    let zetas: Vec<LatticePoint> = (-10..=10i64)
        .flat_map(|x| (-10..=10i64).map(move |y| LatticePoint::new2(x, y)))
        .filter(|z| !z.is_zero() && z.norm_sq() <= 100)
        .collect();
    let mut hits = 0;
    for lambda in spec.lambdas().filter(|&l| l > 0.0) {
        for z in &zetas {
            let fast = chi_zeta(lambda, z, 0.2).unwrap();
            assert_eq!(fast, chi_brute(lambda, z, 0.2), "λ={lambda} ζ={z:?}");
            hits += fast as usize;
            if fast {
                assert!(chi_zeta(lambda, z, 0.3).unwrap());
            }
        }
    }
    assert!(hits > 0);
    // 20 and 25 are consecutive in N₂.
    assert!(!chi_zeta(22.5, &LatticePoint::new2(1, 0), 0.01).unwrap());
    assert!(chi_zeta(5.0, &LatticePoint::zero(Dim::Two), 0.2).is_err());
}

#[test]
fn classification_examples() {
    assert_eq!(
        classify_norm(4, &LatticePoint::new3(1, 0, 0)).unwrap(),
        NormClass::N0
    );
    assert_eq!(
        classify_norm(2, &LatticePoint::new3(2, 0, 0)).unwrap(),
        NormClass::N1
    );
    assert!(classify_norm(7, &LatticePoint::new3(1, 0, 0)).is_err());
    assert!(classify_norm(4, &LatticePoint::zero(Dim::Three)).is_err());
}

#[test]
fn tilde_n1_examples() {
    assert!(tilde_n1_member(65536).is_ok_and(|b| !b));
    // ln²2 < 1, so n = 2 falls outside.
    assert!(!tilde_n1_member(2).unwrap());
    for n in (3..500u64).filter(|n| n % 4 != 0 && is_representable(*n, Dim::Three)) {
        assert!(tilde_n1_member(n).unwrap());
    }
    assert!(tilde_n1_member(7).is_err());
    assert!(tilde_n1_member(1).is_err());
    let (kept, total) = tilde_n1_census(10_000);
    assert!(kept as f64 / total as f64 > 0.9);
}

#[test]
fn lambda_prime_filter() {
    let spec = midpoint_spectrum(Dim::Three, 2000.0);
    let kept = lambda_prime_3d(&spec).unwrap();
    assert!(kept.len() as f64 / spec.entries.len() as f64 > 0.8);
    // λ = 9.5 sits between 9 and 10; nearest norm 9 is odd.
    let i = spec.entries.iter().position(|e| e.lambda == 9.5).unwrap();
    assert!(kept.contains(&i));
    assert!(lambda_prime_3d(&midpoint_spectrum(Dim::Two, 50.0)).is_err());
}

#[test]
fn plan_validation() {
    assert!(ScanPlan::new(ScanMode::TwoD, 0.3, 0.2).is_err());
    assert!(ScanPlan::new(ScanMode::TwoD, 0.3, 0.04).is_ok());
    assert!(ScanPlan::new(ScanMode::ThreeDAll, 0.3, 0.29).is_ok());
    assert!(ScanPlan::new(ScanMode::ThreeDAll, 0.3, 0.3).is_err());
    assert!(ScanPlan::new(ScanMode::ThreeDFiltered, 0.3, 0.02).is_err());
    assert!(ScanPlan::new(ScanMode::ThreeDFiltered, 0.3, 0.01).is_ok());
    let mut p = ScanPlan::new(ScanMode::TwoD, 0.3, 0.04).unwrap();
    p.filters.push(Filter::LambdaPrime3d);
    assert!(p.validate().is_err());
    assert_eq!("3d-all".parse::<ScanMode>().unwrap(), ScanMode::ThreeDAll);
    assert!("4d".parse::<ScanMode>().is_err());
}

#[test]
fn radii_are_log_spaced_and_capped() {
    let p = ScanPlan::new(ScanMode::TwoD, 0.3, 0.04).unwrap();
    let r = p.radii(1000.0);
    assert_eq!(r.len(), 16);
    assert!((r[0] - 1000f64.powf(-0.2)).abs() < 1e-12);
    assert!((r[15] - PI / 2.0).abs() < 1e-12);
    let q = ScanPlan::new(ScanMode::ThreeDAll, 0.3, 0.04).unwrap();
    assert_eq!(q.radii(1e6), vec![PI / 2.0]);
}

#[test]
fn filter_order_does_not_matter() {
    let spec = midpoint_spectrum(Dim::Two, 3000.0);
    let mut a = ScanPlan::new(ScanMode::TwoD, 0.3, 0.04).unwrap();
    let b_sel = {
        let mut b = a.clone();
        b.filters = vec![Filter::BrAvoid, Filter::Gap];
        b.select(&spec).unwrap()
    };
    assert_eq!(a.select(&spec).unwrap(), b_sel);
    let gap = gap_filter_2d(&spec, a.eta).unwrap();
    a.filters = vec![];
    assert!(intersect(&a.select(&spec).unwrap(), &gap).len() >= b_sel.len());
}

#[test]
fn constant_window_has_no_discrepancy() {
    let f = crate::greens::TruncatedEigenfunction::with_window(-0.5, 1.0, vec![0.0, 0.0], Dim::Two)
        .unwrap();
    let corr = crate::ballmass::correlate(&f);
    let best = grid_discrepancy(&corr, &f.x0, &[0.1, 1.0, 1.5], 24);
    assert_eq!(best.sup_dev, 0.0);
}

#[test]
fn refined_grid_never_lowers_sup() {
    let f = crate::greens::build_truncated(300.3, 0.3, vec![0.2, -0.1], Dim::Two).unwrap();
    let corr = crate::ballmass::correlate(&f);
    let radii = [0.05, 0.3, 1.0];
    for n in [7, 12, 24] {
        let coarse = grid_discrepancy(&corr, &f.x0, &radii, n);
        let fine = grid_discrepancy(&corr, &f.x0, &radii, 2 * n);
        assert!(fine.sup_dev >= coarse.sup_dev - 1e-12);
        assert!(coarse.sup_dev > 0.0);
        let p = crate::ballmass::MassQuery::new(coarse.x.clone(), coarse.r).unwrap();
        let mu = crate::ballmass::mass_ratio(&f, &p).unwrap();
        assert!(((mu - 1.0).abs() - coarse.sup_dev).abs() < 1e-10);
    }
}

fn scan_csv(spec: &PerturbedSpectrum, plan: &ScanPlan, threads: usize) -> String {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let reports = pool.install(|| scan(spec, plan)).unwrap();
    let mut buf = Vec::new();
    write_report_csv(&reports, plan, 17, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn scan_report_is_deterministic_and_well_formed() {
    let spec = solve_spectrum(400.0, &ScattererConfig::at_origin(Dim::Two, 0.5).unwrap()).unwrap();
    let mut plan = ScanPlan::new(ScanMode::TwoD, 0.3, 0.04).unwrap();
    plan.lambda_range = Some((50.0, 400.0));
    let a = scan_csv(&spec, &plan, 1);
    let b = scan_csv(&spec, &plan, 3);
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert!(lines[0].starts_with("# "));
    assert!(lines[1].contains("seed=17"));
    assert_eq!(
        lines[2],
        "lambda,filters,sup_dev,argmax_x1,argmax_x2,argmax_r,defect_bar,grid_n,eps,delta"
    );
    assert!(lines.len() > 20);
    assert!(lines[3].contains("\"gap,br_avoid\""));
    let reports = scan(&spec, &plan).unwrap();
    for r in &reports {
        assert!(r.sup_dev >= 0.0 && r.defect_bar >= 0.0);
        assert!((50.0..=400.0).contains(&r.lambda));
    }
    let mut json = Vec::new();
    write_report_json(&reports, &plan, 17, &mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), reports.len());
    assert_eq!(v["seed"], 17);
}

#[test]
fn scan_3d_modes() {
    let spec = solve_spectrum(
        120.0,
        &ScattererConfig::at_origin(Dim::Three, -1.0).unwrap(),
    )
    .unwrap();
    let mut all = ScanPlan::new(ScanMode::ThreeDAll, 0.3, 0.04).unwrap();
    all.lambda_range = Some((20.0, 120.0));
    let mut filtered = ScanPlan::new(ScanMode::ThreeDFiltered, 0.3, 0.01).unwrap();
    filtered.lambda_range = all.lambda_range;
    let a = scan(&spec, &all).unwrap();
    let b = scan(&spec, &filtered).unwrap();
    assert!(!a.is_empty() && !b.is_empty());
    assert!(b
        .iter()
        .all(|r| r.filters_passed == vec![Filter::LambdaPrime3d]));
    let wrong = ScanPlan::new(ScanMode::TwoD, 0.3, 0.04).unwrap();
    assert!(scan(&spec, &wrong).is_err());
}

#[test]
fn small_range_audits_pass() {
    for a in audit_lemma_n0(10, 6).unwrap() {
        assert!(a.passed(), "{a:?}");
        assert!(a.checked > 0);
    }
    let ab = audit_ab_mapping(8, &[0.1, 0.25]).unwrap();
    assert!(ab.passed() && ab.checked > 0);
    let ip = audit_inner_products(6, 20, &[0.0, 3.5, 12.0]).unwrap();
    assert!(ip.passed(), "{ip:?}");
}

#[test]
fn strip_audit_is_nested() {
    let s = audit_strips(50, 3).unwrap();
    assert!(s.max_ratio.is_finite() && s.max_ratio > 0.0);
    assert!(s.max_ratio_doubled >= s.max_ratio);
    assert_eq!(audit_strips(50, 3).unwrap(), s);
}

#[test]
fn lemma_counts_are_bounded_and_monotone() {
    let spec = solve_spectrum(600.0, &ScattererConfig::at_origin(Dim::Two, 0.0).unwrap()).unwrap();
    let l0 = lambda_zero_preset(&spec, 0.3, 0.04).unwrap();
    let z = LatticePoint::new2(1, 1);
    let mut last = 0;
    for delta in [0.05, 0.1, 0.2, 0.3] {
        let a = audit_lemma_counts(&spec, &l0, 600.0, &z, delta).unwrap();
        assert!(a.count <= a.candidates);
        assert!(a.count >= last);
        last = a.count;
    }
}
