use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance for norm comparisons.
pub const REL_TOL: f64 = 1e-9;

/// Guard band for strict inequalities in lemma checks.
pub const GUARD: f64 = 1e-7;

/// An ℓ_p norm, p ∈ [1, ∞].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PNorm(f64);

impl PNorm {
    pub const ONE: PNorm = PNorm(1.0);
    pub const TWO: PNorm = PNorm(2.0);
    pub const INF: PNorm = PNorm(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::input(format!("p must lie in [1, ∞], got {p}")));
        }
        Ok(PNorm(p))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }

    /// Σ|v_i|^p, or max|v_i| when p = ∞.
    ///
    /// Every additive identity in the reduction is stated on this quantity.
    pub fn norm_pow(&self, v: &[f64]) -> f64 {
        if self.is_infinite() {
            v.iter().fold(0.0, |m, x| m.max(x.abs()))
        } else if self.0 == 1.0 {
            v.iter().map(|x| x.abs()).sum()
        } else if self.0 == 2.0 {
            v.iter().map(|x| x * x).sum()
        } else {
            v.iter().map(|x| x.abs().powf(self.0)).sum()
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.from_pow(self.norm_pow(v))
    }

    /// Converts a `norm_pow` value back to a norm.
    pub fn from_pow(&self, x: f64) -> f64 {
        if self.is_infinite() || self.0 == 1.0 {
            x
        } else if self.0 == 2.0 {
            x.sqrt()
        } else {
            x.powf(1.0 / self.0)
        }
    }

    /// Converts a norm to its `norm_pow` value.
    pub fn to_pow(&self, r: f64) -> f64 {
        if self.is_infinite() || self.0 == 1.0 {
            r
        } else {
            r.powf(self.0)
        }
    }

    /// Smallest c with ‖v‖₂ ≤ c·‖v‖_p for all v of the given dimension.
    pub fn l2_factor(&self, dim: usize) -> f64 {
        let e = if self.is_infinite() { 0.5 } else { (0.5 - 1.0 / self.0).max(0.0) };
        (dim.max(1) as f64).powf(e)
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" | "Inf" => Ok(PNorm::INF),
            t => PNorm::new(
                t.parse::<f64>()
                    .map_err(|_| Error::input(format!("bad norm `{t}`")))?,
            ),
        }
    }
}

impl Serialize for PNorm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

pub fn lp_norm(v: &[f64], p: PNorm) -> f64 {
    p.norm(v)
}

pub fn lp_norm_pow(v: &[f64], p: PNorm) -> f64 {
    p.norm_pow(v)
}

/// Whether x ⊙ y has a non-positive and a non-negative coordinate.
pub fn sgndiff(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::input(format!("sgndiff on lengths {} and {}", x.len(), y.len())));
    }
    let mut nonpos = false;
    let mut nonneg = false;
    for (a, b) in x.iter().zip(y) {
        let prod = a * b;
        nonpos |= prod <= 0.0;
        nonneg |= prod >= 0.0;
    }
    Ok(nonpos && nonneg)
}

/// `a ≤ b` up to [`REL_TOL`] relative to the larger magnitude (absolute near 0).
pub fn approx_le(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs()).max(1.0)
}

pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn norm_examples() {
        let v = [1.5, -0.5, -0.5];
        assert!((lp_norm_pow(&v, PNorm::TWO) - 11.0 / 4.0).abs() < 1e-15);
        assert_eq!(lp_norm(&[0.0; 4], PNorm::new(3.0).unwrap()), 0.0);
        assert_eq!(lp_norm(&[1.0, 1.0, -1.0], PNorm::INF), 1.0);
        assert!(PNorm::new(0.5).is_err());
        assert!(PNorm::new(f64::NAN).is_err());
        assert_eq!("inf".parse::<PNorm>().unwrap(), PNorm::INF);
        assert_eq!("2.5".parse::<PNorm>().unwrap().value(), 2.5);
    }

    #[test]
    fn sgndiff_examples() {
        assert!(sgndiff(&[1.0, -1.0], &[1.0, 1.0]).unwrap());
        assert!(!sgndiff(&[1.0, 1.0], &[1.0, 1.0]).unwrap());
        assert!(sgndiff(&[0.0, 5.0], &[1.0, 1.0]).unwrap());
        assert!(sgndiff(&[1.0], &[1.0, 2.0]).is_err());
    }

    fn any_p() -> impl Strategy<Value = PNorm> {
        prop_oneof![
            Just(PNorm::ONE),
            Just(PNorm::TWO),
            Just(PNorm::INF),
            (1.0f64..20.0).prop_map(|p| PNorm::new(p).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn triangle_and_homogeneity(
            v in prop::collection::vec(-100.0f64..100.0, 1..8),
            w in prop::collection::vec(-100.0f64..100.0, 8),
            s in -10.0f64..10.0,
            p in any_p(),
        ) {
            let w = &w[..v.len()];
            let sum: Vec<f64> = v.iter().zip(w).map(|(a, b)| a + b).collect();
            let lhs = lp_norm(&sum, p);
            let rhs = lp_norm(&v, p) + lp_norm(w, p);
            prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
            let sv: Vec<f64> = v.iter().map(|x| s * x).collect();
            let a = lp_norm(&sv, p);
            let b = s.abs() * lp_norm(&v, p);
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0));
        }

        #[test]
        fn l2_factor_bounds_l2(v in prop::collection::vec(-10.0f64..10.0, 1..10), p in any_p()) {
            let c = p.l2_factor(v.len());
            prop_assert!(lp_norm(&v, PNorm::TWO) <= c * lp_norm(&v, p) * (1.0 + 1e-12) + 1e-12);
        }

        // If sgndiff(x, y) and max|x_i y_i| ≤ r then |⟨x, y⟩| ≤ r(n − 1).
        #[test]
        fn sgndiff_inner_product_bound(
            pairs in prop::collection::vec((-6i64..=6, -6i64..=6), 1..9),
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            if sgndiff(&x, &y).unwrap() {
                let r = x.iter().zip(&y).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max);
                let ip: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
                prop_assert!(ip.abs() <= r * (x.len() as f64 - 1.0));
            }
        }
    }
}
