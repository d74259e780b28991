//! The 3×3 gadget matrix and its rounding and distance properties.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{approx_le, DenseMatrix, PNorm};

/// The gadget matrix. It fixes the all-ones vector and has |det| = 4.
pub const G: [[i64; 3]; 3] = [[1, 1, -1], [1, -1, 1], [-1, 1, 1]];

pub fn gadget_matrix() -> DenseMatrix {
    let rows: Vec<Vec<f64>> = G.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    DenseMatrix::from_rows(&rows).expect("3×3 gadget is well formed")
}

/// G·v for real v.
pub fn apply(v: &[f64; 3]) -> [f64; 3] {
    crate::lattice::apply_g(v)
}

/// G·z for integer z.
pub fn apply_int(z: &[i64; 3]) -> [i64; 3] {
    let mut out = [0; 3];
    for (a, row) in G.iter().enumerate() {
        out[a] = row.iter().zip(z).map(|(g, x)| g * x).sum();
    }
    out
}

/// Bound on ‖G(u − z)‖_p^p guaranteed by the rounding (‖·‖_∞ for p = ∞).
pub fn rounding_bound(p: PNorm) -> f64 {
    if p.is_infinite() {
        4.0 / 3.0
    } else {
        2.0 + (4.0f64 / 3.0).powf(p.value())
    }
}

/// A binary rounding z of a point u ∈ [0,1]³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GadgetRounding {
    pub z: [u8; 3],
    /// ‖G(u − z)‖_p^p, or ‖G(u − z)‖_∞ when p = ∞.
    pub discrepancy_pow: f64,
    /// 1ᵀ(u − z)
    pub sum_dev: f64,
}

impl GadgetRounding {
    fn evaluate(u: &[f64; 3], z: [u8; 3], p: PNorm) -> Self {
        let d = [u[0] - z[0] as f64, u[1] - z[1] as f64, u[2] - z[2] as f64];
        GadgetRounding {
            z,
            discrepancy_pow: p.norm_pow(&apply(&d)),
            sum_dev: d.iter().sum(),
        }
    }

    /// Whether all three rounding properties hold for sign `b`.
    pub fn is_valid(&self, b: i8, p: PNorm) -> bool {
        const EPS: f64 = 1e-12;
        approx_le(self.discrepancy_pow, rounding_bound(p))
            && b as f64 * self.sum_dev >= -EPS
            && self.sum_dev.abs() <= 2.0 + EPS
    }
}

fn check_unit_cube(u: &[f64; 3]) -> Result<()> {
    if u.iter().all(|x| (0.0..=1.0).contains(x)) {
        Ok(())
    } else {
        Err(Error::input(format!("gadget rounding needs u ∈ [0,1]³, got {u:?}")))
    }
}

/// Binary vectors of length 3 in lexicographic order.
pub fn binary_triples() -> impl Iterator<Item = [u8; 3]> {
    (0u8..8).map(|i| [i >> 2 & 1, i >> 1 & 1, i & 1])
}

/// Every binary z satisfying the three rounding properties for (u, b, p),
/// in lexicographic order.
pub fn valid_roundings(u: &[f64; 3], b: i8, p: PNorm) -> Result<Vec<GadgetRounding>> {
    check_unit_cube(u)?;
    if b != 1 && b != -1 {
        return Err(Error::input(format!("sign b must be ±1, got {b}")));
    }
    Ok(binary_triples()
        .map(|z| GadgetRounding::evaluate(u, z, p))
        .filter(|r| r.is_valid(b, p))
        .collect())
}

/// Lexicographically smallest binary z with
/// ‖G(u − z)‖_p^p ≤ 2 + (4/3)^p, b·1ᵀ(u − z) ≥ 0 and |1ᵀ(u − z)| ≤ 2.
pub fn gadget_round(u: &[f64; 3], b: i8, p: PNorm) -> Result<GadgetRounding> {
    valid_roundings(u, b, p)?.into_iter().next().ok_or_else(|| {
        Error::LemmaViolation(format!("no binary rounding of u = {u:?} for b = {b}, p = {p}"))
    })
}

/// Case-analysis rounding. Guarantees only the discrepancy bound.
pub fn gadget_case_round(u: &[f64; 3]) -> [u8; 3] {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
    let s = [u[order[0]], u[order[1]], u[order[2]]];
    let sorted_z = if s.iter().sum::<f64>() >= 2.0 {
        [0, 1, 1]
    } else if -s[0] + s[1] + s[2] <= 4.0 / 3.0 {
        [0, 0, 0]
    } else {
        [0, 0, 1]
    };
    let mut z = [0u8; 3];
    for (k, &i) in order.iter().enumerate() {
        z[i] = sorted_z[k];
    }
    z
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterClass {
    /// z = 0 or z = 1.
    BinaryLike,
    Far,
}

/// ‖G(½·1 − z)‖_p^p (‖·‖_∞ for p = ∞) and whether z is 0 or 1.
///
/// Since G1 = 1, 2G(½·1 − z) = 1 − 2Gz is an integer vector, so the value is
/// an integer power sum divided by 2^p.
pub fn gadget_center_distance(z: &[i64; 3], p: PNorm) -> (f64, CenterClass) {
    let gz = apply_int(z);
    let v: Vec<f64> = gz.iter().map(|&g| (1 - 2 * g) as f64).collect();
    let value = if p.is_infinite() {
        p.norm_pow(&v) / 2.0
    } else if p.value().fract() == 0.0 && p.value() <= 64.0 {
        let k = p.value() as i32;
        v.iter().map(|x| x.abs().powi(k)).sum::<f64>() / 2f64.powi(k)
    } else {
        p.norm_pow(&v) / 2f64.powf(p.value())
    };
    let class = if z.iter().all(|&x| x == z[0]) && (z[0] == 0 || z[0] == 1) {
        CenterClass::BinaryLike
    } else {
        CenterClass::Far
    };
    (value, class)
}

/// (value for z ∈ {0, 1}, lower bound for every other integer z).
pub fn center_bounds(p: PNorm) -> (f64, f64) {
    if p.is_infinite() {
        (0.5, 1.5)
    } else {
        let q = p.value();
        (3.0 / 2f64.powf(q), (2.0 + 3f64.powf(q)) / 2f64.powf(q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ps() -> [PNorm; 4] {
        [PNorm::ONE, PNorm::TWO, PNorm::new(3.0).unwrap(), PNorm::INF]
    }

    #[test]
    fn matrix_facts() {
        let g = gadget_matrix();
        assert_eq!(g.mul_vec(&[1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(g.mul_vec(&[0.0; 3]), vec![0.0; 3]);
        let det = G[0][0] * (G[1][1] * G[2][2] - G[1][2] * G[2][1])
            - G[0][1] * (G[1][0] * G[2][2] - G[1][2] * G[2][0])
            + G[0][2] * (G[1][0] * G[2][1] - G[1][1] * G[2][0]);
        assert_eq!(det.abs(), 4);
        // G⁻¹ = (G + J)/4, whose rows have absolute sums 1
        for (a, row) in G.iter().enumerate() {
            let mut sum = 0;
            for b in 0..3 {
                let inv4 = row[b] + 1;
                sum += inv4.abs();
                let col: i64 = (0..3).map(|k| (G[a][k] + 1) * G[k][b]).sum();
                assert_eq!(col, if a == b { 4 } else { 0 });
            }
            assert_eq!(sum, 4);
        }
    }

    #[test]
    fn rounding_examples() {
        let r = gadget_round(&[0.0; 3], 1, PNorm::TWO).unwrap();
        assert_eq!(r.z, [0, 0, 0]);
        assert_eq!(r.discrepancy_pow, 0.0);
        assert_eq!(r.sum_dev, 0.0);
        for p in ps() {
            for b in [1, -1] {
                assert!(gadget_round(&[1.0; 3], b, p).is_ok());
            }
            let case1 = GadgetRounding::evaluate(&[1.0; 3], [0, 1, 1], p);
            assert!(approx_le(case1.discrepancy_pow, rounding_bound(p)));
        }
        assert!(gadget_round(&[1.5, 0.0, 0.0], 1, PNorm::TWO).is_err());
        assert!(gadget_round(&[0.5; 3], 0, PNorm::TWO).is_err());
    }

    #[test]
    fn case_round_examples() {
        assert_eq!(gadget_case_round(&[0.9, 0.8, 0.7]), [1, 1, 0]);
        assert_eq!(gadget_case_round(&[0.1, 0.1, 0.1]), [0, 0, 0]);
        assert_eq!(gadget_case_round(&[0.05, 0.9, 0.95]), [0, 0, 1]);
        assert_eq!(gadget_case_round(&[0.95, 0.9, 0.05]), [1, 0, 0]);
    }

    #[test]
    fn case_round_on_grid() {
        let g = 40;
        for i in 0..=g {
            for j in 0..=g {
                for k in 0..=g {
                    let u = [i as f64 / g as f64, j as f64 / g as f64, k as f64 / g as f64];
                    let z = gadget_case_round(&u);
                    for p in ps() {
                        let r = GadgetRounding::evaluate(&u, z, p);
                        assert!(approx_le(r.discrepancy_pow, rounding_bound(p)), "u = {u:?}, p = {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn random_roundings_exist() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20_000 {
            let u = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            let b = if rng.gen::<bool>() { 1 } else { -1 };
            for p in ps() {
                gadget_round(&u, b, p).unwrap();
            }
        }
    }

    #[test]
    fn permutation_invariance_in_sup_norm() {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let x = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let base = PNorm::INF.norm(&apply(&x));
            for pi in perms {
                let px = [x[pi[0]], x[pi[1]], x[pi[2]]];
                assert!((PNorm::INF.norm(&apply(&px)) - base).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn center_distance_examples() {
        assert_eq!(gadget_center_distance(&[0, 0, 0], PNorm::TWO), (0.75, CenterClass::BinaryLike));
        assert_eq!(gadget_center_distance(&[0, 0, 1], PNorm::TWO), (2.75, CenterClass::Far));
        assert_eq!(gadget_center_distance(&[1, 1, 1], PNorm::INF), (0.5, CenterClass::BinaryLike));
    }

    #[test]
    fn center_distance_classification_is_exhaustive() {
        for p in [PNorm::ONE, PNorm::TWO, PNorm::new(5.0).unwrap(), PNorm::INF] {
            let (at_binary, far) = center_bounds(p);
            for a in -3..=4 {
                for b in -3..=4 {
                    for c in -3..=4 {
                        let (v, class) = gadget_center_distance(&[a, b, c], p);
                        // independent evaluation on the real matrix
                        let d = [0.5 - a as f64, 0.5 - b as f64, 0.5 - c as f64];
                        assert!((p.norm_pow(&apply(&d)) - v).abs() <= 1e-9 * v.max(1.0));
                        match class {
                            CenterClass::BinaryLike => assert_eq!(v, at_binary),
                            CenterClass::Far => assert!(v >= far, "z = {:?}, p = {p}", [a, b, c]),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn binary_image_of_integer_box() {
        let mut hits = Vec::new();
        for a in -3..=3 {
            for b in -3..=3 {
                for c in -3..=3 {
                    let g = apply_int(&[a, b, c]);
                    if g.iter().all(|&x| x == 0 || x == 1) {
                        hits.push(g);
                    }
                }
            }
        }
        hits.sort();
        assert_eq!(hits, vec![[0, 0, 0], [1, 1, 1]]);
    }
}
