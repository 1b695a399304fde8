use extlab_core::fractal::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Map;

fn uniform_points(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect()
}

/// Half uniform, half packed into a few δ-clusters.
fn clustered_points(n: usize, delta: f64, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hubs: Vec<[f64; 2]> = (0..4).map(|_| [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)]).collect();
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]
            } else {
                let h = hubs[i % hubs.len()];
                [h[0] + rng.gen_range(-delta..delta), h[1] + rng.gen_range(-delta..delta)]
            }
        })
        .collect()
}

/// Every center against every point, every radius.
fn brute_katz_tao(pts: &[[f64; 2]], delta: f64) -> f64 {
    let mut radii = Vec::new();
    let mut r = delta;
    while r < 1.0 - 1e-9 {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(1.0);
    let mut best = 0.0f64;
    for &r in &radii {
        for c in pts {
            let n = pts.iter().filter(|p| (p[0] - c[0]).hypot(p[1] - c[1]) < r * (1.0 - 1e-9)).count();
            best = best.max(n as f64 / (r / delta));
        }
    }
    best
}

#[test]
fn katz_tao_matches_brute_force() {
    let delta = 1.0 / 32.0;
    for seed in 0..20 {
        let pts = if seed % 2 == 0 { uniform_points(200, seed) } else { clustered_points(200, delta, seed) };
        let fast = katz_tao_constant(&pts, delta, 1.0).unwrap();
        let slow = brute_katz_tao(&pts, delta);
        assert_eq!(fast, slow, "seed {seed}");
    }
}

#[test]
fn refinement_succeeds_on_clustered_inputs() {
    let delta = 1.0 / 64.0;
    for seed in 0..10 {
        let pts = clustered_points(300, delta, 100 + seed);
        let out = random_refine(&pts, delta, seed).unwrap();
        assert!(out.attempts <= REFINE_ATTEMPTS);
        assert!((0.25..=4.0).contains(&out.mass_ratio));
        assert!(out.katz_tao <= REFINE_C0 * (1.0 / delta).ln());
    }
}

#[test]
fn refinement_is_seed_deterministic() {
    let pts = clustered_points(200, 1.0 / 32.0, 9);
    let a = random_refine(&pts, 1.0 / 32.0, 4).unwrap();
    let b = random_refine(&pts, 1.0 / 32.0, 4).unwrap();
    assert_eq!(a.points, b.points);
}

#[test]
fn gauss_weight_is_katz_tao_up_to_log() {
    for q0 in [3u32, 4] {
        let r = f64::from(q0).powi(6);
        let w = generate_weight(WeightKind::GaussRational, r, 0, &Map::new()).unwrap();
        let c = w.katz_tao_c().unwrap();
        assert!(c <= 4.0 * r.ln(), "q0={q0} C={c}");
    }
}

#[test]
fn tube_weight_saturates_katz_tao() {
    let w = generate_weight(WeightKind::Tube, 256.0, 5, &Map::new()).unwrap();
    let c = w.katz_tao_c().unwrap();
    assert!((1.0..=2.0).contains(&c), "C={c}");
    assert!((w.gamma().unwrap() - std::f64::consts::PI * c).abs() < 1e-12);
}

#[test]
fn random_katz_tao_respects_its_constant() {
    let mut params = Map::new();
    params.insert("constant".into(), 3.0.into());
    params.insert("count".into(), 200.into());
    let w = generate_weight(WeightKind::RandomKatzTao, 256.0, 11, &params).unwrap();
    assert_eq!(w.len(), 200);
    assert!(w.katz_tao_c().unwrap() <= 3.0 + 1e-12);
}

#[test]
fn weight_files_round_trip() {
    let w = generate_weight(WeightKind::Bush, 64.0, 3, &Map::new()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    w.save(dir.path(), "bush").unwrap();
    let back = extlab_core::WeightSet::load(dir.path(), "bush").unwrap();
    assert_eq!(back.len(), w.len());
    for (a, b) in back.centers().iter().zip(w.centers()) {
        assert!((a[0] - b[0]).abs() <= 1e-12 * b[0].abs().max(1.0));
        assert!((a[1] - b[1]).abs() <= 1e-12 * b[1].abs().max(1.0));
    }
    assert_eq!(back.seed(), Some(3));
}

#[test]
fn measure_csv_lists_every_atom() {
    let mu = frostman_segment(16).unwrap();
    let mut buf = Vec::new();
    mu.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,re,im,mass"));
    assert_eq!(text.lines().count(), 17);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn katz_tao_is_monotone_under_subsets(seed in 0u64..1000, keep in 10usize..80) {
        let pts = uniform_points(80, seed);
        let delta = 1.0 / 16.0;
        let all = katz_tao_constant(&pts, delta, 1.0).unwrap();
        let part = katz_tao_constant(&pts[..keep], delta, 1.0).unwrap();
        prop_assert!(part <= all);
        prop_assert!(part >= 1.0);
    }

    #[test]
    fn frostman_constant_scales_with_concentration(cells in 8usize..256) {
        let c = check_frostman(&frostman_segment(cells).unwrap());
        prop_assert!((1.0..=2.0 + 1e-9).contains(&c), "C_F={}", c);
    }
}
