use extlab_core::broad::{ath_largest, CapDecomposition, CapFields};
use extlab_core::extension::Curve;
use extlab_core::grid::{FrequencyGrid, SampledDensity};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C64 = Complex<f64>;

fn fields(seed: u64, k: f64, scale: C64) -> CapFields<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = SampledDensity::from_fn(FrequencyGrid::unit(4000), |_| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let pts: Vec<[f64; 2]> = (0..40).map(|_| [rng.gen_range(-30.0..30.0), rng.gen_range(-20.0..20.0)]).collect();
    CapFields::evaluate(&f, Curve::Parabola, &CapDecomposition::disjoint(k).unwrap(), &pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn broad_decreases_in_a_and_is_dominated(seed in 0u64..10_000, k in prop::sample::select(vec![2.0, 4.0, 8.0])) {
        let fields = fields(seed, k, C64::new(1.0, 0.0));
        let max = fields.max();
        let mut prev = fields.broad(1).unwrap();
        prop_assert_eq!(&prev, &max);
        for a in 2..=6 {
            let next = fields.broad(a).unwrap();
            for (n, p) in next.iter().zip(&prev) {
                prop_assert!(n <= p);
            }
            prev = next;
        }
        for j in 0..fields.point_count() {
            let sum: f64 = fields.at(j).iter().sum();
            prop_assert!(max[j] <= sum);
        }
    }

    #[test]
    fn broad_scales_with_modulus(seed in 0u64..10_000, re in -4.0..4.0f64, im in -4.0..4.0f64) {
        let c = C64::new(re, im);
        let base = fields(seed, 4.0, C64::new(1.0, 0.0)).broad(2).unwrap();
        let scaled = fields(seed, 4.0, c).broad(2).unwrap();
        for (s, b) in scaled.iter().zip(&base) {
            prop_assert!((s - c.norm() * b).abs() <= 1e-12 * (c.norm() * b).max(1e-12));
        }
    }

    #[test]
    fn ath_largest_matches_sorting(v in prop::collection::vec(0.0..100.0f64, 0..25), a in 1usize..8) {
        let mut sorted = v.clone();
        sorted.sort_by(|x, y| y.total_cmp(x));
        let want = sorted.get(a - 1).copied().unwrap_or(0.0);
        prop_assert_eq!(ath_largest(&v, a).unwrap(), want);
    }
}

#[test]
fn zero_a_is_rejected() {
    assert!(ath_largest(&[1.0f64, 2.0], 0).is_err());
}
