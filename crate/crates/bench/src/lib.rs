//! Deterministic fixtures shared by the benchmarks.

use bingap_core::csp::{Constraint, Formula};
use bingap_core::lattice::DenseMatrix;

/// The 2×2 unimodular basis with target (5, 3/2) used as a CVP smoke case.
pub fn unimodular_example() -> (DenseMatrix, Vec<f64>) {
    let b = DenseMatrix::from_rows(&[vec![3.0, 4.0], vec![1.0, 1.0]]).expect("valid basis");
    (b, vec![5.0, 1.5])
}

/// NAE-E3 formula over `n ≥ 3` variables whose constraint i is
/// (v_i, ¬v_{i+1}, v_{i+2}) with indices taken cyclically.
pub fn cyclic_formula(n: usize, m: usize) -> Formula {
    let cs = (0..m)
        .map(|i| {
            let v = |k: usize| ((i + k) % n + 1) as i64;
            Constraint::from_signed(&[v(0), -v(1), v(2)]).expect("distinct variables")
        })
        .collect();
    Formula::new(n, cs).expect("variables in range")
}

/// Quantified version of [`cyclic_formula`] with `n_universal` universal variables.
pub fn cyclic_quantified(n: usize, n_universal: usize, m: usize) -> Formula {
    let phi = cyclic_formula(n, m);
    Formula::quantified(n, n_universal, phi.constraints().to_vec()).expect("split in range")
}
