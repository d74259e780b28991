use num_rational::Rational64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bingap_core::csp::{
    brute_force_pi2, brute_force_value, eval_constraint, gen, reduce_e4_to_e3, satisfied_count, Assignment, Formula,
};
use bingap_core::lattice::{binary_cvp, cvp_search, CvpOptions, DenseMatrix, PNorm, Target, GUARD};
use bingap_core::verifier::extract_assignment;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn any_p() -> impl Strategy<Value = PNorm> {
    prop_oneof![Just(PNorm::ONE), Just(PNorm::TWO), Just(PNorm::new(3.0).unwrap()), Just(PNorm::INF)]
}

#[test]
fn e4_to_e3_value_identity_is_exact_up_to_three_constraints() {
    let one = Rational64::from_integer(1);
    let mut count = 0;
    for m in 1..=3 {
        for phi in gen::all_formulas(4, 4, m) {
            let (v, _) = brute_force_value(&phi).unwrap();
            let (v3, _) = brute_force_value(&reduce_e4_to_e3(&phi).unwrap()).unwrap();
            assert_eq!(v3, (one + v) / 2, "{phi:?}");
            count += 1;
        }
    }
    assert_eq!(count, 16 + 16 * 16 + 16 * 16 * 16);
}

proptest! {
    #[test]
    fn nae_is_complement_invariant(seed in any::<u64>(), k in 3usize..=4, n in 4usize..=8) {
        let mut r = rng(seed);
        let phi = gen::random_formula(&mut r, k, n, 1).unwrap();
        let a = Assignment::new((0..n).map(|_| r.gen()).collect());
        let c = &phi.constraints()[0];
        prop_assert_eq!(eval_constraint(c, &a).unwrap(), eval_constraint(c, &a.complement()).unwrap());
    }

    #[test]
    fn value_lies_in_unit_interval_and_is_one_iff_satisfiable(
        seed in any::<u64>(), n in 3usize..=7, m in 1usize..=8,
    ) {
        let phi = gen::random_formula(&mut rng(seed), 3, n, m).unwrap();
        let (v, best) = brute_force_value(&phi).unwrap();
        prop_assert!(v >= Rational64::from_integer(0) && v <= Rational64::from_integer(1));
        prop_assert_eq!(Rational64::new(satisfied_count(&phi, &best).unwrap() as i64, m as i64), v);
        let satisfiable = (0..1u64 << n)
            .any(|i| satisfied_count(&phi, &Assignment::from_index(i, n)).unwrap() == m);
        prop_assert_eq!(v == Rational64::from_integer(1), satisfiable);
    }

    #[test]
    fn pi2_without_universals_is_satisfiability(seed in any::<u64>(), n in 3usize..=6, m in 1usize..=6) {
        let phi = gen::random_formula(&mut rng(seed), 3, n, m).unwrap();
        let q = Formula::quantified(n, 0, phi.constraints().to_vec()).unwrap();
        let (v, _) = brute_force_value(&phi).unwrap();
        prop_assert_eq!(brute_force_pi2(&q).unwrap(), v == Rational64::from_integer(1));
    }

    #[test]
    fn extraction_never_beats_the_optimum(seed in any::<u64>(), n in 3usize..=6, m in 1usize..=6) {
        let mut r = rng(seed);
        let phi = gen::random_formula(&mut r, 3, n, m).unwrap();
        let x: Vec<u8> = (0..n).map(|_| r.gen_range(0..=1)).collect();
        let ex = extract_assignment(&x, &phi).unwrap();
        let (v, _) = brute_force_value(&phi).unwrap();
        prop_assert!(ex.claimed <= v);
    }

    #[test]
    fn integer_distance_never_exceeds_binary_distance(
        entries in prop::collection::vec(-2i64..=2, 9),
        t in prop::collection::vec(-3.0f64..3.0, 3),
        p in any_p(),
    ) {
        let rows: Vec<Vec<f64>> = entries.chunks(3).map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let b = DenseMatrix::from_rows(&rows).unwrap();
        let Ok(int) = cvp_search(&b, Target::Point(&t), p, None, &CvpOptions::default()) else {
            // singular basis
            return Ok(());
        };
        let bin = binary_cvp(&b, &t, p).unwrap();
        prop_assert!(int.dist <= bin.dist + GUARD);
    }
}
