use std::f64::consts::PI;
use std::sync::Arc;

use extlab_core::extension::{extension_evaluate, extension_values, schrodinger_evaluate, Curve};
use extlab_core::grid::{density_lp_norm, FrequencyGrid, SampledDensity, SpatialPointSet};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = Complex<f64>;

fn random_density(n: usize, seed: u64) -> SampledDensity<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SampledDensity::from_fn(FrequencyGrid::unit(n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .unwrap()
}

fn points(radius: f64, count: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| [rng.gen_range(-radius..radius), rng.gen_range(-radius..radius) * 0.7]).collect()
}

/// `∫_{-1}^{1} e^{i(x₁ξ + x₂ξ²)} dξ` by composite Simpson on `n` panels.
fn simpson_oracle(x: [f64; 2], n: usize) -> C64 {
    let g = |xi: f64| C64::from_polar(1.0, x[0] * xi + x[1] * xi * xi);
    let h = 2.0 / n as f64;
    let mut acc = g(-1.0) + g(1.0);
    for k in 1..n {
        acc += g(-1.0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * (h / 3.0)
}

#[test]
fn indicator_matches_closed_form_and_quadrature() {
    let f = SampledDensity::from_fn(FrequencyGrid::unit(8000), |_| C64::new(1.0, 0.0)).unwrap();
    let axis: Vec<[f64; 2]> = (1..=20).map(|k| [k as f64, 0.0]).collect();
    for (x, v) in axis.iter().zip(extension_values(&f, Curve::Parabola, &axis).unwrap()) {
        let sinc = 2.0 * x[0].sin() / x[0];
        assert!((v - sinc).norm() <= 1e-5, "x={x:?}: {v} vs {sinc}");
    }
    let pts = points(20.0, 30, 3);
    for (x, v) in pts.iter().zip(extension_values(&f, Curve::Parabola, &pts).unwrap()) {
        let o = simpson_oracle(*x, 200_000);
        assert!((v - o).norm() <= 1e-5, "x={x:?}: {v} vs {o}");
    }
}

#[test]
fn schrodinger_is_the_parabola_bit_for_bit() {
    let f = random_density(3000, 8);
    let xs = [-12.0, -3.5, 0.0, 7.25];
    let ts = [-5.0, 0.0, 2.5];
    let u = schrodinger_evaluate(&f, &xs, &ts).unwrap();
    let pts: Vec<[f64; 2]> = xs.iter().flat_map(|&x| ts.iter().map(move |&t| [x, t])).collect();
    let e = extension_values(&f, Curve::Parabola, &pts).unwrap();
    assert_eq!(u.values(), &e[..]);
}

#[test]
fn trivial_bound_holds() {
    for seed in 0..10 {
        let f = random_density(2000, seed);
        let bound = density_lp_norm(&f, 1.0).unwrap();
        for curve in [Curve::Parabola, Curve::CircleGraph] {
            let vals = extension_values(&f, curve, &points(30.0, 50, seed + 100)).unwrap();
            assert!(vals.iter().all(|v| v.norm() <= bound * (1.0 + 1e-12)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn extension_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in (-3.0..3.0f64, -3.0..3.0f64), b in (-3.0..3.0f64, -3.0..3.0f64)) {
        let (a, b) = (C64::new(a.0, a.1), C64::new(b.0, b.1));
        let f = random_density(1500, s1);
        let g = random_density(1500, s2);
        let pts = points(20.0, 25, s1 ^ s2);
        let combo = f.scaled(a).add(&g.scaled(b)).unwrap();
        let lhs = extension_values(&combo, Curve::Parabola, &pts).unwrap();
        let ef = extension_values(&f, Curve::Parabola, &pts).unwrap();
        let eg = extension_values(&g, Curve::Parabola, &pts).unwrap();
        for k in 0..pts.len() {
            let scale = a.norm() * ef[k].norm() + b.norm() * eg[k].norm() + 1e-300;
            prop_assert!((lhs[k] - (a * ef[k] + b * eg[k])).norm() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn modulation_translates_x1(seed in 0u64..1000, shift in -10.0..10.0f64) {
        let f = random_density(2000, seed);
        let g = f.modulated(|xi| C64::from_polar(1.0, shift * xi));
        let pts = points(15.0, 20, seed + 7);
        let moved: Vec<[f64; 2]> = pts.iter().map(|x| [x[0] + shift, x[1]]).collect();
        let a = extension_values(&g, Curve::Parabola, &pts).unwrap();
        let b = extension_values(&f, Curve::Parabola, &moved).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u.norm() - v.norm()).abs() <= 1e-9 * (1.0 + v.norm()));
        }
    }
}

#[test]
fn evaluate_keeps_the_point_set() {
    let f = random_density(1000, 1);
    let set = Arc::new(SpatialPointSet::new(8.0, vec![[1.0, 2.0], [-3.0, 0.5]], PI).unwrap());
    let field = extension_evaluate(&f, Curve::Parabola, &set).unwrap();
    assert!(Arc::ptr_eq(field.points(), &set));
    assert_eq!(field.len(), 2);
}
