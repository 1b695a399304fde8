use std::f64::consts::PI;

use extlab_core::incidence::*;
use proptest::prelude::*;

const D6: f64 = 1.0 / 64.0;

fn segment_shading(delta: f64, lo: f64, hi: f64) -> LineShading {
    let line = Line::new(0.0, 0.0);
    let n = ((hi - lo) / delta).round() as usize;
    let balls = (0..n).map(|k| line.point(lo + (k as f64 + 0.5) * delta)).collect();
    LineShading::new(delta, vec![ShadedLine { line, balls }], TwoEnds::default()).unwrap()
}

/// Pixel-by-pixel scan against every ball.
fn brute_union(ly: &LineShading) -> f64 {
    let d = ly.delta();
    let p = 0.5 * d;
    let origin = -1.0 - 2.0 * d;
    let n = (2.0 * (1.0 + 2.0 * d) / p).ceil() as usize;
    let balls: Vec<[f64; 2]> = ly.lines().iter().flat_map(|s| s.balls.iter().copied()).collect();
    let mut filled = 0usize;
    for j in 0..n {
        let y = origin + (j as f64 + 0.5) * p;
        for i in 0..n {
            let x = origin + (i as f64 + 0.5) * p;
            if balls.iter().any(|c| (x - c[0]).powi(2) + (y - c[1]).powi(2) < d * d) {
                filled += 1;
            }
        }
    }
    filled as f64 * p * p
}

#[test]
fn full_shading_density_is_half_pi() {
    let ly = single_line(D6, Line::new(0.3, 0.0)).unwrap();
    let lambda = density(&ly).unwrap();
    assert!((lambda - 1.570_796_326_794_9).abs() < 1e-9, "λ={lambda}");
}

#[test]
fn halving_the_balls_halves_density() {
    let ly = single_line(D6, Line::new(0.0, 0.0)).unwrap();
    let mut lines = ly.lines().to_vec();
    lines[0].balls = lines[0].balls.iter().step_by(2).copied().collect();
    let half = LineShading::new(D6, lines, TwoEnds::default()).unwrap();
    assert!((density(&half).unwrap() - 0.5 * density(&ly).unwrap()).abs() < 1e-12);
}

#[test]
fn an_empty_line_makes_density_zero() {
    let mut lines = bush(D6, 4, [0.0, 0.0]).unwrap().lines().to_vec();
    lines[2].balls.clear();
    let ly = LineShading::new(D6, lines, TwoEnds::default()).unwrap();
    assert_eq!(density(&ly).unwrap(), 0.0);
}

#[test]
fn concentrated_shading_is_not_two_ends() {
    let ly = segment_shading(D6, 0.0, 0.05);
    assert_eq!(two_ends_statistic(&ly, 0.5).unwrap(), 1.0);
    assert!(!is_two_ends(&ly, 1.0).unwrap());
}

#[test]
fn uniform_unit_segment_statistic_is_delta_to_eps1() {
    let ly = segment_shading(D6, -0.5, 0.5);
    let s = two_ends_statistic(&ly, 0.5).unwrap();
    assert!((1.0 / 16.0..=1.0 / 4.0).contains(&s), "statistic={s}");
}

#[test]
fn two_end_clusters_split_mass() {
    let line = Line::new(0.0, 0.0);
    let balls: Vec<[f64; 2]> = (0..5).flat_map(|k| [line.point(-0.9 + k as f64 * D6), line.point(0.8 + k as f64 * D6)]).collect();
    let ly = LineShading::new(D6, vec![ShadedLine { line, balls }], TwoEnds::default()).unwrap();
    assert_eq!(two_ends_statistic(&ly, 0.5).unwrap(), 0.5);
}

#[test]
fn single_line_ratio_is_delta_power() {
    let ly = single_line(D6, Line::new(1.1, 0.2)).unwrap();
    let rec = furstenberg_ratio(&ly, 0.5).unwrap();
    assert!((rec.union - rec.total).abs() < 1e-15);
    assert!((rec.ratio - D6.powf(-0.25)).abs() < 1e-9, "ratio={}", rec.ratio);
}

#[test]
fn bush_union_matches_pixel_scan_and_ratio_bound() {
    let ly = bush(D6, 64, [0.05, -0.1]).unwrap();
    let rec = furstenberg_ratio(&ly, 0.5).unwrap();
    assert!((rec.union - brute_union(&ly)).abs() < 1e-12);
    assert!(rec.ratio >= 0.25, "ratio={}", rec.ratio);
}

#[test]
fn random_two_ends_ratio_stays_above_a_tenth() {
    for seed in 0..10 {
        let ly = random_two_ends(D6, 64, 0.5, seed).unwrap();
        let rec = furstenberg_ratio(&ly, 0.5).unwrap();
        assert!(rec.ratio >= 0.1, "seed {seed}: ratio={}", rec.ratio);
    }
}

#[test]
fn train_tracks_are_valid() {
    let ly = train_tracks(D6, 3).unwrap();
    assert_eq!(ly.lines().len(), 64);
    let rec = furstenberg_ratio(&ly, 0.5).unwrap();
    assert!(rec.union <= rec.total);
    assert!(rec.ratio > 0.0);
}

#[test]
fn rotation_changes_ratio_by_under_five_percent() {
    let ly = random_two_ends(D6, 64, 0.5, 7).unwrap();
    let base = furstenberg_ratio(&ly, 0.5).unwrap().ratio;
    for phi in [0.1, 0.77, 2.0] {
        let turned = furstenberg_ratio(&ly.rotated(phi), 0.5).unwrap().ratio;
        assert!((turned / base - 1.0).abs() < 0.05, "phi={phi}: {turned} vs {base}");
    }
}

#[test]
fn raster_exports_pgm() {
    let ly = bush(1.0 / 32.0, 8, [0.0, 0.0]).unwrap();
    let mut buf = Vec::new();
    ly.raster().write_pgm(&mut buf).unwrap();
    assert!(buf.starts_with(b"P5\n"));
}

fn spread_angles(m: usize) -> Vec<f64> {
    (0..m).map(|k| PI * (k as f64 + 0.5) / m as f64).collect()
}

#[test]
fn disjoint_tube_families_count_fully() {
    let balls: Vec<[f64; 2]> = (0..6).map(|k| [-0.75 + 0.3 * k as f64, 0.1 * k as f64]).collect();
    let fam = DualTubeFamily::through_balls(D6, balls, 8, |_| spread_angles(8));
    let rec = dual_tube_count(&fam, 0.5).unwrap();
    assert_eq!(rec.distinct_tubes, 48);
    assert!(rec.distinct_tubes as f64 >= rec.lower);
}

#[test]
fn shared_bush_counts_once() {
    let balls = vec![[0.0, 0.0], [0.1 * D6, 0.0]];
    let mut fam = DualTubeFamily::through_balls(D6, balls, 8, |_| spread_angles(8));
    let shared = fam.tubes[0].clone();
    fam.tubes[1] = shared;
    let rec = dual_tube_count(&fam, 0.5).unwrap();
    assert_eq!(rec.distinct_tubes, 8);
}

#[test]
fn dual_preconditions_are_enforced() {
    let balls = vec![[0.0, 0.0], [0.5, 0.5]];
    let few = DualTubeFamily::through_balls(D6, balls.clone(), 9, |_| spread_angles(8));
    assert!(dual_tube_count(&few, 0.5).is_err());
    let narrow = DualTubeFamily::through_balls(D6, balls.clone(), 4, |_| vec![0.1, 0.12, 0.14, 0.16]);
    assert!(dual_tube_count(&narrow, 0.5).is_err());
    let mut missing = DualTubeFamily::through_balls(D6, balls, 8, |_| spread_angles(8));
    missing.tubes[1][0] = Line::new(0.3, 0.9);
    assert!(dual_tube_count(&missing, 0.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn union_grows_with_shading_and_never_exceeds_total(seed in 0u64..500, extra in 1usize..20) {
        let ly = random_two_ends(1.0 / 32.0, 16, 0.3, seed).unwrap();
        let base = furstenberg_ratio(&ly, 0.5).unwrap();
        prop_assert!(base.union <= base.total + 1e-15);
        let mut lines = ly.lines().to_vec();
        let line = lines[0].line;
        let c = line.half_chord();
        for k in 0..extra {
            lines[0].balls.push(line.point(-c + c * k as f64 / extra as f64));
        }
        let grown = LineShading::new(ly.delta(), lines, TwoEnds::default()).unwrap();
        prop_assert!(grown.raster().filled() >= ly.raster().filled());
    }
}
