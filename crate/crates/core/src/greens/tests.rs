use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn origin(dim: Dim) -> TorusPoint {
    vec![0.0; dim.get()]
}

#[test]
fn two_shell_window() {
    // L = 2 around 26.5 keeps n = 25 (r₂ = 12) and n = 26 (r₂ = 8).
    let delta = 2f64.ln() / 26.5f64.ln();
    let f = build_truncated(26.5, delta, origin(Dim::Two), Dim::Two).unwrap();
    assert!((f.window - 2.0).abs() < 1e-12);
    assert_eq!(f.modes.len(), 20);
    let expect = 12.0 / 1.5f64.powi(2) + 8.0 / 0.5f64.powi(2);
    assert!((f.norm_sq - expect).abs() < 1e-12);
}

#[test]
fn single_shell_window() {
    let f = TruncatedEigenfunction::with_window(25.3, 0.5, origin(Dim::Two), Dim::Two).unwrap();
    assert!(f.modes.iter().all(|m| m.xi.norm_sq() == 25));
    assert!((f.norm_sq - 12.0 / 0.3f64.powi(2)).abs() < 1e-9);
}

#[test]
fn modes_are_symmetric_and_inside_window() {
    for dim in [Dim::Two, Dim::Three] {
        let f = build_truncated(301.7, 0.4, origin(dim), dim).unwrap();
        let set: std::collections::HashMap<_, _> =
            f.modes.iter().map(|m| (m.xi, m.weight.to_bits())).collect();
        for m in &f.modes {
            assert_eq!(set[&(-m.xi)], m.weight.to_bits());
            assert!((m.xi.norm_sq() as f64 - f.lambda).abs() < f.window);
        }
        let direct: f64 = f.modes.iter().map(|m| m.weight * m.weight).sum();
        assert!((direct - f.norm_sq).abs() < 1e-12 * f.norm_sq);
    }
}

#[test]
fn validation_and_errors() {
    let o = origin(Dim::Two);
    assert!(build_truncated(1.0, 0.2, o.clone(), Dim::Two).is_err());
    assert!(build_truncated(10.5, 0.0, o.clone(), Dim::Two).is_err());
    assert!(build_truncated(10.5, 1.0, o.clone(), Dim::Two).is_err());
    assert!(matches!(
        build_truncated(25.0, 0.2, o.clone(), Dim::Two),
        Err(Error::PoleProximity { norm: 25, .. })
    ));
    // Neither 22 nor 23 is a sum of two squares.
    assert!(matches!(
        build_truncated(22.5, 0.1, o.clone(), Dim::Two),
        Err(Error::EmptyWindow { .. })
    ));
    assert!(build_truncated(10.5, 0.2, vec![0.0; 3], Dim::Two).is_err());
}

#[test]
fn constant_eigenfunction_window() {
    let f = TruncatedEigenfunction::with_window(-0.5, 1.0, origin(Dim::Two), Dim::Two).unwrap();
    assert_eq!(f.modes.len(), 1);
    assert!(f.modes[0].xi.is_zero());
    assert!((f.norm_sq - 4.0).abs() < 1e-15);
}

#[test]
fn full_norm_matches_shell_sum() {
    let lambda = 10.5;
    let table = crate::lattice::RepTable::new(Dim::Two, 1_000_000);
    let brute: f64 = (0..=1_000_000u64)
        .filter(|&n| table.get(n) > 0)
        .map(|n| table.get(n) as f64 / (n as f64 - lambda).powi(2))
        .sum();
    let full = full_norm_sq(lambda, Dim::Two, 1e-12).unwrap();
    assert!((full - brute).abs() < 1e-4 * full, "{full} vs {brute}");
    let mut doubled = SeriesControl::new(1e-12);
    doubled.cutoff_scale = 2.0;
    let again = resolvent_norm_sq_at(10, 0.5, Dim::Two, &doubled).unwrap();
    assert!((again - full).abs() < 1e-6 * full);
}

#[test]
fn defect_identity_and_ordering() {
    for dim in [Dim::Two, Dim::Three] {
        for lambda in [50.5, 173.25, 999.9] {
            let r1 = truncation_defect(lambda, 0.1, dim).unwrap();
            let r3 = truncation_defect(lambda, 0.3, dim).unwrap();
            for r in [r1, r3] {
                assert!(r.truncated_norm_sq <= r.full_norm_sq);
                let expect = 2.0 * (1.0 - r.truncated_norm_sq.sqrt() / r.full_norm_sq.sqrt());
                assert!((r.defect - expect).abs() < 1e-12);
                assert!((0.0..=2.0).contains(&r.defect));
            }
            assert!(r3.defect <= r1.defect);
        }
    }
}

#[test]
fn defect_vanishes_for_huge_window() {
    let f = TruncatedEigenfunction::with_window(10.5, 2e5, origin(Dim::Two), Dim::Two).unwrap();
    let r = norm_report(&f).unwrap();
    assert!(r.defect >= 0.0 && r.defect < 1e-6, "{}", r.defect);
}

#[test]
fn evaluation_symmetries() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for dim in [Dim::Two, Dim::Three] {
        let x0: TorusPoint = (0..dim.get())
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let f = build_truncated(130.4, 0.3, x0.clone(), dim).unwrap();
        let at_x0 = evaluate(&f, &x0).unwrap();
        let expect: f64 = f.modes.iter().map(|m| m.weight).sum::<f64>() / f.norm_sq.sqrt();
        assert!((at_x0.re - expect).abs() < 1e-12 && at_x0.im.abs() < 1e-12);
        let bound = 1e-10 * f.weight_l1() / f.norm_sq.sqrt();
        for _ in 0..20 {
            let t: Vec<f64> = (0..dim.get()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let plus: Vec<f64> = x0.iter().zip(&t).map(|(a, b)| a + b).collect();
            let minus: Vec<f64> = x0.iter().zip(&t).map(|(a, b)| a - b).collect();
            let gp = evaluate(&f, &plus).unwrap();
            let gm = evaluate(&f, &minus).unwrap();
            assert!((gp - gm.conj()).norm() < 1e-12);
            assert!(gp.im.abs() <= bound, "{} > {bound}", gp.im);
        }
    }
}

#[test]
fn monte_carlo_mean_of_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for dim in [Dim::Two, Dim::Three] {
        let f = build_truncated(211.7, 0.35, origin(dim), dim).unwrap();
        let samples = 100_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..dim.get())
                .map(|_| rng.gen_range(0.0..2.0 * PI))
                .collect();
            acc += evaluate_lebesgue(&f, &x).unwrap().norm_sqr();
        }
        let mean = acc / samples as f64;
        let expect = (2.0 * PI).powi(-(dim.get() as i32));
        assert!(
            (mean / expect - 1.0).abs() < 0.02,
            "d={dim}: {mean} vs {expect}"
        );
    }
}

// Uniform grids with more than 2·max|ξ_i| points per axis integrate every
// product of two modes exactly.
#[test]
fn parseval_on_exact_grid() {
    for (dim, lambda, per_axis) in [(Dim::Two, 402.3, 1000usize), (Dim::Three, 97.6, 100)] {
        let f = build_truncated(lambda, 0.3, origin(dim), dim).unwrap();
        assert!(per_axis as i64 > 2 * f.max_coord());
        let h = 2.0 * PI / per_axis as f64;
        let total = per_axis.pow(dim.get() as u32);
        let mut acc = CompensatedSum::new();
        let mut x = vec![0.0; dim.get()];
        for idx in 0..total {
            let mut r = idx;
            for c in x.iter_mut() {
                *c = (r % per_axis) as f64 * h;
                r /= per_axis;
            }
            acc.add(green_sum(&f, &x).norm_sqr());
        }
        let mean = acc.value() / total as f64;
        assert!(
            (mean / f.norm_sq - 1.0).abs() < 1e-3,
            "d={dim}: {mean} vs {}",
            f.norm_sq
        );
    }
}

#[test]
fn mode_dump_format() {
    let f = TruncatedEigenfunction::with_window(25.3, 0.5, origin(Dim::Two), Dim::Two).unwrap();
    let mut buf = Vec::new();
    f.write_modes_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,L,norm_sq");
    assert_eq!(lines[2], "xi_1,xi_2,weight");
    assert_eq!(lines.len(), 3 + 12);
    assert!(lines[3].starts_with("-5,0,"));
}
