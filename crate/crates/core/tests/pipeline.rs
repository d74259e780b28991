use bingap_core::csp::{brute_force_pi2, brute_force_value, parse_formula, serialize_formula};
use bingap_core::lattice::{binary_cvp, cvp_search, mu_lower_bound, CvpOptions, PNorm, Target, GUARD};
use bingap_core::reduction::{
    build_a_prime, parse_instance, reduce_sat_to_crp, serialize_instance, special_targets, PI2_THRESHOLD,
};
use bingap_core::verifier::{bundled_pi2_instances, certify_np_instance};

#[test]
fn satisfiable_formula_lands_within_threshold() {
    let phi = parse_formula("nae 3 4 3\n1 -2 3\n2 3 -4\n-1 2 4\n").unwrap();
    assert_eq!(brute_force_value(&phi).unwrap().0, 1.into());
    for p in [PNorm::ONE, PNorm::TWO, PNorm::new(5.0).unwrap()] {
        let inst = reduce_sat_to_crp(&phi, p, 1.0, 15.0 / 16.0).unwrap();
        let back = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(back.matrix.data(), inst.matrix.data());
        assert_eq!(serialize_formula(&back.source), serialize_formula(&phi));

        let half = vec![0.5; 12];
        let d = cvp_search(&back.matrix, Target::Coefficients(&half), p, None, &CvpOptions::default())
            .unwrap()
            .dist;
        assert!(d <= inst.threshold_r * (1.0 + 1e-9), "p = {p}: {d} > {}", inst.threshold_r);
        assert!(certify_np_instance(&phi, p, 1.0, 15.0 / 16.0).unwrap().passed());
    }
}

#[test]
fn point_and_coefficient_targets_agree() {
    let phi = parse_formula("nae 3 3 2\n1 2 3\n1 2 -3\n").unwrap();
    let p = PNorm::TWO;
    let inst = reduce_sat_to_crp(&phi, p, 1.0, 15.0 / 16.0).unwrap();
    let w = vec![0.5; 9];
    let t = inst.matrix.mul_vec(&w);
    let by_coeffs = cvp_search(&inst.matrix, Target::Coefficients(&w), p, None, &CvpOptions::default()).unwrap();
    let by_point = cvp_search(&inst.matrix, Target::Point(&t), p, None, &CvpOptions::default()).unwrap();
    assert!((by_coeffs.dist - by_point.dist).abs() < 1e-9);
}

#[test]
fn quantified_gap_through_public_solvers() {
    for (name, phi) in bundled_pi2_instances().unwrap() {
        let truth = brute_force_pi2(&phi).unwrap();
        let inst = build_a_prime(&phi).unwrap();
        let targets: Vec<Vec<f64>> = special_targets(&phi).unwrap().into_iter().map(|t| t.coeffs).collect();
        let worst_binary = targets
            .iter()
            .map(|w| binary_cvp(&inst.matrix, &inst.matrix.mul_vec(w), PNorm::INF).unwrap().dist)
            .fold(0.0, f64::max);
        if truth {
            assert!(worst_binary <= PI2_THRESHOLD + GUARD, "{name}: {worst_binary}");
        } else {
            let lb = mu_lower_bound(&inst.matrix, PNorm::INF, &targets).unwrap();
            assert!(lb.value >= 1.5 - GUARD, "{name}: integer distance {}", lb.value);
        }
    }
}
