use std::f64::consts::PI;

use extlab_core::broad::CapDecomposition;
use extlab_core::experiments::*;
use extlab_core::extension::Curve;
use extlab_core::fractal::{frostman_segment, generate_weight, WeightKind};
use extlab_core::grid::WeightSet;
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Map;

/// `|μ̂(Rξ)|` for the uniform measure on `[0, 1] × {0}`, integrated over the
/// circle with composite Simpson on `n` panels.
fn segment_mean_oracle(radius: f64, p: f64, n: usize) -> f64 {
    let modulus = |t: f64| {
        let s = radius * t.cos();
        if s.abs() < 1e-12 {
            1.0
        } else {
            (2.0 * (0.5 * s).sin() / s).abs()
        }
    };
    let h = 2.0 * PI / n as f64;
    let mut acc = modulus(0.0).powf(p) + modulus(2.0 * PI).powf(p);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * modulus(k as f64 * h).powf(p);
    }
    (acc * h / 3.0).powf(1.0 / p)
}

#[test]
fn segment_means_match_sinc_oracle() {
    for radius in [16.0, 64.0] {
        let mu = frostman_segment((40.0 * radius) as usize).unwrap();
        for p in [1.8, 2.0] {
            let got = circular_means(&mu, radius, p).unwrap();
            let want = segment_mean_oracle(radius, p, 400_000);
            assert!((got - want).abs() <= 1e-4 * want, "R={radius} p={p}: {got} vs {want}");
        }
    }
}

#[test]
fn knapp_means_decay_like_r_to_minus_half_over_p() {
    for p in [1.8, 2.0] {
        let fit = sigma_p_fit(MeasureFamily::Knapp, p, &[64.0, 128.0, 256.0, 512.0]).unwrap();
        let target = -1.0 / (2.0 * p);
        assert!((fit.slope - target).abs() <= 0.05, "p={p}: slope {}", fit.slope);
    }
}

#[test]
fn gauss_field_matches_exponential_sum() {
    let row = gauss_row(3, 2).unwrap();
    assert_eq!(row.radius, 729.0);
    assert!(row.oracle_error <= ORACLE_TOLERANCE, "{}", row.oracle_error);
    assert!(row.pointwise_share >= 0.5);
}

#[test]
fn noisy_power_law_recovers_exponent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pairs: Vec<(f64, f64)> = (0..12)
        .map(|k| {
            let x = 2f64.powi(k + 4);
            (x, x.powf(1.0 / 6.0) * (1.0 + rng.gen_range(-0.05..0.05)))
        })
        .collect();
    let fit = exponent_fit(&pairs).unwrap();
    assert!((0.14..=0.19).contains(&fit.slope), "{}", fit.slope);
}

fn weight(radius: f64, seed: u64) -> WeightSet {
    generate_weight(WeightKind::RandomKatzTao, radius, seed, &Map::new()).unwrap()
}

#[test]
fn ratios_are_homogeneous() {
    let radius = 64.0;
    let grid = grid_for(radius, Curve::Parabola, 1.0);
    let f = random_density(grid, radius, 5).unwrap();
    let g = f.scaled(Complex::new(-2.5, 1.5));
    let w = weight(radius, 2);
    let range = ExponentRange::Theorem;
    let pairs = [
        (
            weighted_l2_ratio(&f, &w, 8.0, 2, Curve::Parabola).unwrap(),
            weighted_l2_ratio(&g, &w, 8.0, 2, Curve::Parabola).unwrap(),
        ),
        (
            weighted_lq_ratio(&f, &w, 8.0, 2, CRITICAL_EXPONENT, range, Curve::Parabola).unwrap(),
            weighted_lq_ratio(&g, &w, 8.0, 2, CRITICAL_EXPONENT, range, Curve::Parabola).unwrap(),
        ),
        (
            mt_ratio(&f, &w, CRITICAL_EXPONENT, range, Curve::Parabola).unwrap(),
            mt_ratio(&g, &w, CRITICAL_EXPONENT, range, Curve::Parabola).unwrap(),
        ),
    ];
    for (a, b) in pairs {
        assert!(a > 0.0);
        assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
    }
}

#[test]
fn zero_density_gives_zero_ratios() {
    let radius = 64.0;
    let f = random_density(grid_for(radius, Curve::Parabola, 1.0), radius, 1).unwrap().scaled(Complex::new(0.0, 0.0));
    let w = weight(radius, 3);
    assert_eq!(weighted_l2_ratio(&f, &w, 8.0, 2, Curve::Parabola).unwrap(), 0.0);
    assert_eq!(mt_ratio(&f, &w, 4.0, ExponentRange::Theorem, Curve::Parabola).unwrap(), 0.0);
}

#[test]
fn single_cap_has_no_broad_part() {
    let radius = 64.0;
    let caps = CapDecomposition::disjoint(8.0).unwrap();
    let w = weight(radius, 4);
    for seed in 0..4 {
        let f = single_cap_density(grid_for(radius, Curve::Parabola, 1.0), radius, &caps, seed).unwrap();
        assert!(f.l2_norm() > 0.0);
        assert_eq!(weighted_l2_ratio(&f, &w, 8.0, 2, Curve::Parabola).unwrap(), 0.0);
    }
}

#[test]
fn maximal_ratio_is_homogeneous() {
    let radius = 32.0;
    let f = random_density(maximal_grid(radius, Curve::Parabola), radius, 9).unwrap();
    let a = maximal_schrodinger_norm(&f, radius, 3.6, 3.6 / 1.6, MaximalVariant::Schrodinger).unwrap();
    let b = maximal_schrodinger_norm(&f.scaled(Complex::new(0.0, 3.0)), radius, 3.6, 3.6 / 1.6, MaximalVariant::Schrodinger)
        .unwrap();
    assert!((a.ratio - b.ratio).abs() <= 1e-10 * a.ratio);
}

#[test]
fn tube_weight_counts_a_planted_line() {
    let radius = 128.0;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let angle: f64 = rng.gen_range(0.0..PI);
        let (s, c) = angle.sin_cos();
        let n = 60;
        let line: Vec<[f64; 2]> = (0..n).map(|k| [c * (k as f64 - 30.0), s * (k as f64 - 30.0)]).collect();
        let t = mt_weight(&WeightSet::new(radius, line).unwrap()).unwrap();
        assert_eq!(t.count, n, "angle {angle}");
    }
}

#[test]
fn finer_angles_agree_on_gauss_rational() {
    let w = generate_weight(WeightKind::GaussRational, 729.0, 0, &Map::new()).unwrap();
    let coarse = mt_weight(&w).unwrap().count as f64;
    let fine = mt_weight_with(&w, 1.0 / (16.0 * 729.0), 0.5).unwrap().count as f64;
    assert!(fine >= coarse && fine <= 1.5 * coarse, "{coarse} vs {fine}");
}

#[test]
fn reports_are_reproducible() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::WeightedL2, vec![0, 1]);
    cfg.radii = vec![64.0, 128.0];
    let render = || {
        let mut buf = Vec::new();
        run_experiment(&cfg).unwrap().table.write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tube_weight_is_monotone(cells in prop::collection::btree_set((-15i32..15, -15i32..15), 1..40), extra in (-15i32..15, -15i32..15)) {
        let pts: Vec<[f64; 2]> = cells.iter().map(|&(a, b)| [a as f64, b as f64]).collect();
        let before = mt_weight(&WeightSet::new(32.0, pts.clone()).unwrap()).unwrap().count;
        let mut more = pts;
        if !cells.contains(&extra) {
            more.push([extra.0 as f64, extra.1 as f64]);
        }
        let after = mt_weight(&WeightSet::new(32.0, more).unwrap()).unwrap().count;
        prop_assert!(after >= before);
    }
}
