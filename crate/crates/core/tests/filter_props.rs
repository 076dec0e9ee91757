use proptest::prelude::*;

use detfilter::error_model::{analyze, analyze_inexact_inputs, det_expansion_scheme};
use detfilter::exact::{exact_det_sign, IntMatrix};
use detfilter::predicates::{Filter, FilterVerdict, PointSet, PredicateKind};
use detfilter::{Dyadic, PrecisionConfig, RoundedBound};

fn grid_points(n: usize, pitch: u32) -> impl Strategy<Value = Vec<i64>> {
    let h = 1i64 << pitch;
    prop::collection::vec(-h..=h, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn certified_whichside_signs_are_exact(
        delta in 2usize..=4,
        bits in 5u32..=20,
        seed in any::<u64>(),
    ) {
        let pitch = bits - 1;
        let h = 1i64 << pitch;
        // Small multiples of a random row keep near-degenerate cases common.
        let mut s = seed;
        let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); ((s >> 33) as i64).rem_euclid(2 * h + 1) - h };
        let mut c: Vec<i64> = (0..delta * delta).map(|_| next()).collect();
        if seed % 3 == 0 {
            for j in 0..delta { c[j] = c[delta + j].clamp(-h, h); }
        }
        let ps = PointSet::new(delta, pitch, c.clone()).unwrap();
        let f = Filter::new(PredicateKind::WhichSide, delta, PrecisionConfig::new(bits).unwrap()).unwrap();
        if let FilterVerdict::Certified { sign, .. } = f.classify(&ps).unwrap() {
            let rows: Vec<Vec<i64>> = c.chunks(delta).map(|r| r.to_vec()).collect();
            prop_assert_eq!(sign, exact_det_sign(&IntMatrix::from_rows(&rows).unwrap()));
        }
    }

    #[test]
    fn certified_insphere_signs_are_exact(delta in 1usize..=3, c in grid_points(12, 6)) {
        let n = (delta + 1) * delta;
        let ps = PointSet::new(delta, 6, c[..n].to_vec()).unwrap();
        let f = Filter::new(PredicateKind::Insphere, delta, PrecisionConfig::new(24).unwrap()).unwrap();
        if let FilterVerdict::Certified { sign, .. } = f.classify(&ps).unwrap() {
            prop_assert_eq!(sign, PredicateKind::Insphere.exact_sign(&ps).unwrap());
        }
    }

    #[test]
    fn decide_always_returns_exact_sign(c in grid_points(9, 3)) {
        let ps = PointSet::new(3, 3, c).unwrap();
        let f = Filter::new(PredicateKind::WhichSide, 3, PrecisionConfig::new(8).unwrap()).unwrap();
        let (sign, _) = f.decide(&ps).unwrap();
        prop_assert_eq!(sign, PredicateKind::WhichSide.exact_sign(&ps).unwrap());
    }

    #[test]
    fn threshold_scales_with_precision(delta in 2usize..=6, bits in 10u32..=53) {
        let s = det_expansion_scheme(delta, RoundedBound::unit()).unwrap();
        let lo = PrecisionConfig::new(bits).unwrap();
        let coeff = analyze(&s, &lo).error_coefficient(&lo);
        let hi = PrecisionConfig::new(53).unwrap();
        prop_assert_eq!(coeff, analyze(&s, &hi).error_coefficient(&hi));
    }

    #[test]
    fn inexact_inputs_only_add_error(delta in 2usize..=5, k in 60i64..=80) {
        let s = det_expansion_scheme(delta, RoundedBound::unit()).unwrap();
        let cfg = PrecisionConfig::new(53).unwrap();
        let eps = Dyadic::pow2(-k);
        let base = analyze(&s, &cfg);
        let inexact = analyze_inexact_inputs(&s, &eps, &cfg).unwrap();
        prop_assert!(inexact.error() > base.error());
        prop_assert_eq!(inexact.magnitude(), base.magnitude());
    }
}

#[test]
fn threshold_coefficient_scaling_examples() {
    let s = det_expansion_scheme(2, RoundedBound::unit()).unwrap();
    let cfg = PrecisionConfig::new(24).unwrap();
    assert_eq!(analyze(&s, &cfg).error(), &(Dyadic::from_int(2) * Dyadic::pow2(-24)));
}
