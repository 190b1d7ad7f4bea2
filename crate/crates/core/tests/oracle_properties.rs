use osborne::generate::strongly_connected;
use osborne::model::f_value;
use osborne::oracle::{brute_minimize, brute_minimize_from};
use osborne::{run_strict, NullSink, ScalingVector};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn minimizer_is_unique_up_to_shift(
        n in 2usize..=8,
        seed in any::<u64>(),
        start in prop::collection::vec(-4.0f64..4.0, 8),
    ) {
        let a = strongly_connected(n, 0.4, 1.0, 1e3, seed);
        let from_zero = brute_minimize(&a, 1e-12).unwrap();
        let from_start =
            brute_minimize_from(&a, &ScalingVector::from(start[..n].to_vec()), 1e-12).unwrap();
        prop_assert!(from_zero.gradient_norm <= 1e-12 * from_zero.f);
        prop_assert_eq!(from_zero.x.get(0), 0.0);
        for i in 0..n {
            prop_assert!((from_zero.x.get(i) - from_start.x.get(i)).abs() <= 1e-8);
        }
        prop_assert!((from_zero.f - from_start.f).abs() <= 1e-10 * from_zero.f);
    }

    #[test]
    fn strict_result_is_never_below_the_optimum(
        n in 2usize..=10,
        seed in any::<u64>(),
    ) {
        let a = strongly_connected(n, 0.3, 1.0, 1e3, seed);
        let opt = brute_minimize(&a, 1e-12).unwrap();
        let out = run_strict(&a, 0.1, &mut NullSink).unwrap();
        let f = f_value(&a, &out.x).unwrap();
        prop_assert!(f >= opt.f * (1.0 - 1e-12));
    }
}
