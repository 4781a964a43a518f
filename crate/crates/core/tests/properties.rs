use introdet::bigmat::{gen_random, IntMatrix};
use introdet::modfield::{lu_det_mod_p, PrimeSampler};
use introdet::{bareiss_det, determinant, dixon_solve, hadamard_bound, lif, smith_form, CraState, DetOptions, LifConfig};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn small_matrix() -> impl Strategy<Value = IntMatrix> {
    (1usize..7).prop_flat_map(|n| {
        prop::collection::vec(-20i64..=20, n * n).prop_map(move |v| {
            IntMatrix::new(n, n, v.into_iter().map(BigInt::from).collect()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn determinant_matches_bareiss(a in small_matrix(), seed in any::<u64>()) {
        let opts = DetOptions { seed, ..Default::default() };
        prop_assert_eq!(determinant(&a, &opts).unwrap().det, bareiss_det(&a).unwrap());
    }

    #[test]
    fn random_matrices_match_bareiss(n in 2usize..24, lambda in 1u64..64, seed in any::<u64>()) {
        let a = gen_random(n, lambda, seed);
        let opts = DetOptions { seed, ..Default::default() };
        prop_assert_eq!(determinant(&a, &opts).unwrap().det, bareiss_det(&a).unwrap());
    }

    #[test]
    fn cra_stays_in_symmetric_range(a in small_matrix(), seed in any::<u64>()) {
        let h = hadamard_bound(&a).unwrap();
        let mut st = CraState::new(h);
        let mut sampler = PrimeSampler::default_window(seed);
        for _ in 0..4 {
            let p = sampler.sample().unwrap();
            st.update(p, lu_det_mod_p(&a, p)).unwrap();
            let half = st.modulus() / 2u32;
            prop_assert!(st.current().abs() <= half);
            prop_assert!((st.current() - lu_det_mod_p(&a, p) as i64).is_multiple_of(&BigInt::from(p)));
        }
    }

    #[test]
    fn divisor_replay_matches_fresh_run(a in small_matrix(), seed in any::<u64>(), k in 1u64..50) {
        let det = bareiss_det(&a).unwrap();
        let k = BigInt::from(k);
        prop_assume!(!det.is_zero() && det.is_multiple_of(&k));
        let h = hadamard_bound(&a).unwrap();
        let mut sampler = PrimeSampler::default_window(seed);
        let primes: Vec<u64> = (0..3).map(|_| sampler.sample().unwrap()).collect();

        let mut replayed = CraState::new(h.clone());
        for &p in &primes {
            replayed.update(p, lu_det_mod_p(&a, p)).unwrap();
        }
        replayed.set_divisor(k.clone()).unwrap();

        let mut fresh = CraState::new(h);
        fresh.set_divisor(k).unwrap();
        for &p in &primes {
            fresh.update(p, lu_det_mod_p(&a, p)).unwrap();
        }
        prop_assert_eq!(replayed.current(), fresh.current());
        prop_assert_eq!(replayed.stability(), fresh.stability());
        prop_assert_eq!(replayed.modulus(), fresh.modulus());
    }

    #[test]
    fn lif_divides_largest_invariant_factor(a in small_matrix(), seed in any::<u64>()) {
        let sf = smith_form(&a);
        prop_assume!(sf.rank() == a.rows());
        let s = lif(&a, &LifConfig::new(2, BigInt::from(1u64 << 20)).unwrap(), seed).unwrap();
        prop_assert!(s.is_positive());
        prop_assert!(sf.largest().is_multiple_of(&s));
    }

    #[test]
    fn dixon_solution_is_exact(a in small_matrix(), seed in any::<u64>(), b0 in -100i64..100) {
        prop_assume!(!bareiss_det(&a).unwrap().is_zero());
        let b: Vec<BigInt> = (0..a.rows()).map(|i| BigInt::from(b0 + i as i64)).collect();
        let mut sampler = PrimeSampler::default_window(seed);
        let x = dixon_solve(&a, &b, &mut sampler).unwrap();
        prop_assert!(x.solves(&a, &b));
        prop_assert!(x.denominator >= BigInt::one());
    }
}
