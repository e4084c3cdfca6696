use coalab::analytics::{
    absorption_cdf, block_tail_via_duality, edgeworth_d, edgeworth_d_stirling, fixation_transition,
    gumbel_limit_cdf, hitting_probability, HittingMethod, TimePoint, TransitionFormula,
};
use coalab::combinatorics::{rational_from_f64, rational_to_f64, stirling_first, stirling_second};
use coalab::limits::neveu_laplace_fd;
use coalab::rng::substream;
use coalab::simulate::{ks_distance, sample_block_decrement};
use coalab::spectral::{closed_form_decomposition, verify_decomposition, GeneratorKind};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn tp(t: f64) -> TimePoint {
    TimePoint::new(t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stirling_matrices_are_inverse(n in 1usize..40, m in 1usize..40) {
        let mut acc = num_bigint::BigInt::zero();
        for k in 0..=n.max(m) {
            acc += stirling_first(n, k).unwrap() * stirling_second(k, m).unwrap();
        }
        prop_assert_eq!(acc.is_one(), n == m);
        prop_assert!(n == m || acc.is_zero());
    }

    #[test]
    fn spectral_verification_holds(n in 1usize..16, k in 0usize..3) {
        let dec = closed_form_decomposition(GeneratorKind::ALL[k], n).unwrap();
        prop_assert!(verify_decomposition(&dec).passed());
    }

    #[test]
    fn transition_probabilities_are_probabilities(i in 1usize..12, t in 0.0f64..5.0) {
        let mut total = 0.0;
        for j in i..=i + 40 {
            let p = fixation_transition(i, j, tp(t), TransitionFormula::Binomial).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            total += p;
        }
        prop_assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn branching_property(i in 2usize..5, j in 2usize..21, t in 0.05f64..3.0) {
        // the law from i is the law from i−1 convolved with the law from 1
        let f = |a: usize, b: usize| fixation_transition(a, b, tp(t), TransitionFormula::Binomial).unwrap();
        let conv: f64 = (1..j).map(|k| f(i - 1, k) * f(1, j - k)).sum();
        prop_assert!((conv - f(i, j)).abs() < 1e-13);
    }

    #[test]
    fn hitting_shift_invariance(i in 1usize..20, d in 0usize..25) {
        let a = hitting_probability(i, i + d, HittingMethod::StirlingDouble).unwrap();
        let b = hitting_probability(1, d + 1, HittingMethod::Convolution).unwrap();
        prop_assert_eq!(a.exact(), b.exact());
    }

    #[test]
    fn absorption_monotone(n in 2u64..400, i in 1u64..6, t in 0.01f64..5.0, dt in 0.01f64..1.0) {
        prop_assume!(i < n);
        let a = absorption_cdf(n, i, t).unwrap();
        prop_assert!(absorption_cdf(n, i, t + dt).unwrap() >= a - 1e-12);
        prop_assert!(absorption_cdf(n, i + 1, t).unwrap() >= a - 1e-12);
        let dual = block_tail_via_duality(n, i, tp(t)).unwrap();
        prop_assert!((a - dual).abs() < 1e-10);
    }

    #[test]
    fn gumbel_limit_is_a_cdf(i in 1u32..8, x in -5.0f64..10.0, dx in 0.0f64..2.0) {
        let a = gumbel_limit_cdf(i, x);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(gumbel_limit_cdf(i, x + dx) >= a);
        prop_assert!(gumbel_limit_cdf(i + 1, x) >= a);
    }

    #[test]
    fn edgeworth_d_forms(k in 0u32..6, i in 1u32..6, x in -2.0f64..2.0) {
        let a = edgeworth_d(k, i, x);
        let b = edgeworth_d_stirling(k, i, x).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn laplace_fd_bounded_and_monotone(
        t1 in 0.0f64..1.0, gap in 0.01f64..2.0,
        l1 in 0.0f64..5.0, l2 in 0.0f64..5.0, bump in 0.0f64..1.0,
    ) {
        let times = [t1, t1 + gap];
        let v = neveu_laplace_fd(&times, &[l1, l2]).unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(neveu_laplace_fd(&times, &[l1 + bump, l2]).unwrap() <= v);
        prop_assert!(neveu_laplace_fd(&times, &[l1, l2 + bump]).unwrap() <= v);
    }

    #[test]
    fn decrement_in_range(i in 2u64..10_000, seed in 0u64..1000) {
        let mut rng = substream(seed, 0);
        for _ in 0..20 {
            let m = sample_block_decrement(i, &mut rng);
            prop_assert!(m >= 1 && m <= i - 1);
        }
    }

    #[test]
    fn ks_is_bounded(v in proptest::collection::vec(-3.0f64..3.0, 1..50)) {
        let d = ks_distance(&v, |x| 1.0 / (1.0 + (-x).exp())).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn rational_round_trip(x in proptest::num::f64::NORMAL) {
        prop_assert_eq!(rational_to_f64(&rational_from_f64(x).unwrap()), x);
    }
}
