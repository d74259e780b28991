//! Lattice instances built from NAE-E3-SAT formulas, and the approximation
//! factor of the finite-p reduction.
//!
//! For a formula with m constraints over n variables the basis is
//!
//! ```text
//! A_p(φ) = [ B/3  B/3  B/3 ]
//!          [    G ⊗ D_p    ]
//! ```
//!
//! with B the signed incidence matrix and D_p = diag(deg(v_j)^{1/p}); D_∞ = I.
//! Quantified formulas get two extra row blocks and n' extra columns tying
//! the universal variables to a trailing coordinate (see [`BlockLayout`]).

use serde::{Deserialize, Serialize};

use crate::csp::{parse_formula, serialize_formula, Formula};
use crate::error::{Error, Result};
use crate::gadget::gadget_matrix;
use crate::lattice::{parse_matrix, serialize_matrix, BlockLayout, DenseMatrix, PNorm};

/// Largest number of universal variables for which all special targets are
/// materialized.
pub const MAX_SPECIAL_UNIVERSAL: usize = 20;

/// Threshold of the quantified instance under ℓ_∞.
pub const PI2_THRESHOLD: f64 = 4.0 / 3.0;

/// Gap of the quantified instance under ℓ_∞.
pub const PI2_GAMMA: f64 = 9.0 / 8.0;

/// A lattice instance together with the formula it encodes.
#[derive(Clone, Debug)]
pub struct ReductionInstance {
    /// Carries the block layout, see [`DenseMatrix::layout`].
    pub matrix: DenseMatrix,
    pub threshold_r: f64,
    pub p: PNorm,
    pub gamma: f64,
    pub source: Formula,
}

impl ReductionInstance {
    pub fn layout(&self) -> &BlockLayout {
        self.matrix.layout().expect("reduction matrices carry a layout")
    }
}

fn require_e3(phi: &Formula) -> Result<()> {
    match phi.arity() {
        Some(3) | None => Ok(()),
        Some(k) => Err(Error::input(format!("expected an E3 formula, got arity {k}"))),
    }
}

/// m×n matrix with B[i][j] = sign of v_j's literal in constraint i.
pub fn incidence_matrix(phi: &Formula) -> Result<DenseMatrix> {
    require_e3(phi)?;
    let mut b = DenseMatrix::zeros(phi.num_constraints(), phi.num_vars());
    for (i, c) in phi.constraints().iter().enumerate() {
        for l in c.literals() {
            b.set(i, l.var() - 1, l.sign() as f64);
        }
    }
    Ok(b)
}

fn scales(phi: &Formula, p: PNorm) -> Vec<f64> {
    phi.degrees()
        .iter()
        .map(|&d| {
            if p.is_infinite() {
                1.0
            } else {
                (d as f64).powf(1.0 / p.value())
            }
        })
        .collect()
}

/// diag(deg(v_j)^{1/p}), or the identity for p = ∞.
pub fn degree_matrix(phi: &Formula, p: PNorm) -> DenseMatrix {
    DenseMatrix::diag(&scales(phi, p))
}

fn layout_for(phi: &Formula, p: PNorm, n_universal: usize) -> BlockLayout {
    BlockLayout {
        n: phi.num_vars(),
        constraints: phi
            .constraints()
            .iter()
            .map(|c| c.literals().iter().map(|l| (l.var() - 1, l.sign())).collect())
            .collect(),
        degrees: phi.degrees(),
        scales: scales(phi, p),
        n_universal,
    }
}

/// Variables that occur in no constraint. Their gadget block is zero, so
/// A_p(φ) loses full column rank for finite p.
pub fn unused_variables(phi: &Formula) -> Vec<usize> {
    phi.degrees()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(j, _)| j + 1)
        .collect()
}

/// The (m+3n)×3n basis A_p(φ), with its block layout attached.
pub fn build_a(phi: &Formula, p: PNorm) -> Result<DenseMatrix> {
    let (m, n) = (phi.num_constraints(), phi.num_vars());
    let b3 = incidence_matrix(phi)?.scaled(1.0 / 3.0);
    let mut a = DenseMatrix::zeros(m + 3 * n, 3 * n);
    for k in 0..3 {
        a.place(0, k * n, &b3);
    }
    a.place(m, 0, &gadget_matrix().kron(&degree_matrix(phi, p)));
    a.refresh_structure();
    a.with_layout(layout_for(phi, p, 0))
}

fn ln_sum_exp(terms: &[f64]) -> f64 {
    let hi = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + terms.iter().map(|t| (t - hi).exp()).sum::<f64>().ln()
}

fn finite_p(p: PNorm, what: &str) -> Result<f64> {
    if p.is_infinite() {
        Err(Error::input(format!("{what} is defined for finite p only")))
    } else {
        Ok(p.value())
    }
}

/// (ε m (4/3)^p + (1−ε) m 2^p + 3m(2 + (4/3)^p))^{1/p}, evaluated in log
/// space so that large p does not overflow.
pub fn threshold_r(m: usize, eps: f64, p: PNorm) -> Result<f64> {
    let q = finite_p(p, "the distance threshold")?;
    if m == 0 {
        return Err(Error::input("the distance threshold needs m ≥ 1"));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::input(format!("ε must lie in [0, 1], got {eps}")));
    }
    let l43 = q * (4.0f64 / 3.0).ln();
    let ln = ln_sum_exp(&[
        eps.ln() + l43,
        (1.0 - eps).ln() + q * 2f64.ln(),
        3f64.ln() + ln_sum_exp(&[2f64.ln(), l43]),
    ]);
    Ok(((m as f64).ln() / q + ln / q).exp())
}

/// The finite-p approximation factor
/// ((δ·10/2^p + (1−δ)((3/2)^p + 9/2^p)) / (ε(4/3)^p + (1−ε)2^p + 3(2+(4/3)^p)))^{1/p}.
pub fn gamma(delta: f64, eps: f64, p: PNorm) -> Result<f64> {
    let q = finite_p(p, "the approximation factor")?;
    if !(delta > 0.0 && delta <= eps && eps <= 1.0) {
        return Err(Error::input(format!("need 0 < δ ≤ ε ≤ 1, got δ = {delta}, ε = {eps}")));
    }
    let l2 = 2f64.ln();
    let l43 = q * (4.0f64 / 3.0).ln();
    let num = ln_sum_exp(&[
        delta.ln() + 10f64.ln() - q * l2,
        (1.0 - delta).ln() + ln_sum_exp(&[q * 1.5f64.ln(), 9f64.ln() - q * l2]),
    ]);
    let den = ln_sum_exp(&[
        eps.ln() + l43,
        (1.0 - eps).ln() + q * l2,
        3f64.ln() + ln_sum_exp(&[l2, l43]),
    ]);
    Ok(((num - den) / q).exp())
}

/// γ(p) = ((9^p + 159·3^p) / (8^{p+2} + 96·6^p))^{1/p}, the factor at
/// δ = 15/16 and ε = 1.
pub fn gamma_closed_form(p: PNorm) -> Result<f64> {
    let q = finite_p(p, "the approximation factor")?;
    let num = ln_sum_exp(&[q * 9f64.ln(), 159f64.ln() + q * 3f64.ln()]);
    let den = ln_sum_exp(&[(q + 2.0) * 8f64.ln(), 96f64.ln() + q * 6f64.ln()]);
    Ok(((num - den) / q).exp())
}

fn gamma_at(p: f64) -> f64 {
    gamma_closed_form(PNorm::new(p).expect("p ≥ 1")).expect("finite p")
}

/// The p ∈ [1, 100] with γ(p) = 1, by bisection down to an interval of width `tol`.
pub fn find_p0(tol: f64) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::input(format!("tolerance must be positive, got {tol}")));
    }
    let (mut lo, mut hi) = (1.0f64, 100.0f64);
    debug_assert!(gamma_at(lo) < 1.0 && gamma_at(hi) > 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gamma_at(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `steps` samples (p, γ(p)) with p log-spaced over [pmin, pmax].
pub fn gamma_curve(pmin: f64, pmax: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    if pmin.is_nan() || pmin < 1.0 || !pmax.is_finite() || pmax < pmin {
        return Err(Error::input(format!("need 1 ≤ pmin ≤ pmax < ∞, got [{pmin}, {pmax}]")));
    }
    if steps == 0 {
        return Err(Error::input("the curve needs at least one sample"));
    }
    let (a, b) = (pmin.ln(), pmax.ln());
    (0..steps)
        .map(|i| {
            let p = if steps == 1 {
                pmin
            } else if i + 1 == steps {
                pmax
            } else {
                (a + (b - a) * i as f64 / (steps - 1) as f64).exp()
            };
            Ok((p, gamma_closed_form(PNorm::new(p)?)?))
        })
        .collect()
}

/// The instance (A_p(φ), r) with threshold built for completeness ε and
/// gap γ(δ, ε, p).
pub fn reduce_sat_to_crp(phi: &Formula, p: PNorm, eps: f64, delta: f64) -> Result<ReductionInstance> {
    if phi.num_constraints() == 0 {
        return Err(Error::input("the formula has no constraints"));
    }
    let threshold_r = threshold_r(phi.num_constraints(), eps, p)?;
    let gamma = gamma(delta, eps, p)?;
    Ok(ReductionInstance {
        matrix: build_a(phi, p)?,
        threshold_r,
        p,
        gamma,
        source: phi.clone(),
    })
}

/// The (m+3n+2n')×(3n+n') basis for a quantified formula under ℓ_∞,
/// with threshold 4/3 and gap 9/8.
pub fn build_a_prime(phi: &Formula) -> Result<ReductionInstance> {
    let nu = match phi.universal() {
        Some(u) if u > 0 => u,
        _ => return Err(Error::input("the quantified reduction needs at least one universal variable")),
    };
    let (m, n) = (phi.num_constraints(), phi.num_vars());
    let top = build_a(phi, PNorm::INF)?;
    let mut a = DenseMatrix::zeros(m + 3 * n + 2 * nu, 3 * n + nu);
    a.place(0, 0, &top);
    let mid = m + 3 * n;
    for i in 0..nu {
        for k in 0..3 {
            a.set(mid + i, k * n + i, 2.0 / 3.0);
        }
        a.set(mid + i, 3 * n + i, -2.0);
        a.set(mid + nu + i, 3 * n + i, 8.0 / 3.0);
    }
    a.refresh_structure();
    Ok(ReductionInstance {
        matrix: a.with_layout(layout_for(phi, PNorm::INF, nu))?,
        threshold_r: PI2_THRESHOLD,
        p: PNorm::INF,
        gamma: PI2_GAMMA,
        source: phi.clone(),
    })
}

/// A target (½·1, w*) of the quantified instance and the universal
/// assignment it encodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecialTarget {
    /// ψ_A(v_i) for i = 1..=n'.
    pub universal: Vec<bool>,
    /// Coefficient vector of length 3n + n'; w*_i = 1/3 encodes ψ_A(v_i) = 0.
    pub coeffs: Vec<f64>,
}

/// All 2^{n'} special targets, ordered lexicographically by ψ_A.
pub fn special_targets(phi: &Formula) -> Result<Vec<SpecialTarget>> {
    let nu = match phi.universal() {
        Some(u) if u > 0 => u,
        _ => return Err(Error::input("special targets need at least one universal variable")),
    };
    if nu > MAX_SPECIAL_UNIVERSAL {
        return Err(Error::resource(format!(
            "2^{nu} special targets exceed the cap of 2^{MAX_SPECIAL_UNIVERSAL}"
        )));
    }
    let n = phi.num_vars();
    Ok((0..1u64 << nu)
        .map(|idx| {
            let universal: Vec<bool> = (0..nu).map(|i| idx >> (nu - 1 - i) & 1 == 1).collect();
            let mut coeffs = vec![0.5; 3 * n];
            coeffs.extend(universal.iter().map(|&b| if b { 2.0 / 3.0 } else { 1.0 / 3.0 }));
            SpecialTarget { universal, coeffs }
        })
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceHeader {
    m: usize,
    n: usize,
    n_prime: usize,
    p: String,
    r: f64,
    gamma: f64,
    formula: String,
}

/// One line of JSON `{m, n, n_prime, p, r, gamma, formula}` followed by the
/// matrix in text form.
pub fn serialize_instance(inst: &ReductionInstance) -> String {
    let header = InstanceHeader {
        m: inst.source.num_constraints(),
        n: inst.source.num_vars(),
        n_prime: inst.layout().n_universal,
        p: inst.p.to_string(),
        r: inst.threshold_r,
        gamma: inst.gamma,
        formula: serialize_formula(&inst.source),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    out.push_str(&serialize_matrix(&inst.matrix));
    out
}

/// Inverse of [`serialize_instance`]. The block layout is rebuilt from the
/// embedded formula and the matrix is checked against a fresh construction.
pub fn parse_instance(text: &str) -> Result<ReductionInstance> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let header: InstanceHeader =
        serde_json::from_str(first).map_err(|e| Error::parse(1, format!("bad instance header: {e}")))?;
    let p: PNorm = header.p.parse()?;
    let source = parse_formula(&header.formula)?;
    let matrix = parse_matrix(rest).map_err(|e| match e {
        Error::Parse { line, message } => Error::parse(line + 1, message),
        other => other,
    })?;
    let fresh = if header.n_prime > 0 {
        build_a_prime(&source)?.matrix
    } else {
        build_a(&source, p)?
    };
    if fresh.rows() != matrix.rows() || fresh.cols() != matrix.cols() {
        return Err(Error::input("matrix dimensions do not match the embedded formula"));
    }
    if fresh.data().iter().zip(matrix.data()).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0)) {
        return Err(Error::input("matrix entries do not match the embedded formula"));
    }
    if header.m != source.num_constraints() || header.n != source.num_vars() {
        return Err(Error::input("instance header disagrees with the embedded formula"));
    }
    Ok(ReductionInstance {
        matrix: fresh,
        threshold_r: header.r,
        p,
        gamma: header.gamma,
        source,
    })
}
