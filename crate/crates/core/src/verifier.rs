//! Instance-level checks of the reductions against brute-force oracles.
//!
//! Each check compares a lattice quantity with an exact CSP or exhaustive
//! lattice computation and records failures with witnesses. Suites bundle
//! checks into [`VerificationReport`]s; randomized trials draw from a
//! ChaCha8 stream selected by trial index, so reports do not depend on
//! thread scheduling.

use std::time::Instant;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::csp::{
    brute_force_pi2, brute_force_value, formula_value, gen, parse_formula, Assignment, Formula,
};
use crate::error::{Error, Result};
use crate::gadget::{
    self, center_bounds, gadget_case_round, gadget_center_distance, gadget_round, rounding_bound,
    CenterClass,
};
use crate::lattice::{
    approx_eq, approx_le, cvp_search, sgndiff, CvpOptions, DenseMatrix, PNorm, Strategy, Target, GUARD, REL_TOL,
};
use crate::reduction::{build_a, build_a_prime, gamma, special_targets, threshold_r};

/// Most witnesses kept per report.
pub const MAX_WITNESSES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub input: Value,
    pub observed: Value,
    pub bound: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub lemma_id: String,
    pub trials: u64,
    pub failures: u64,
    /// Trials whose decisive quantity fell inside the guard band.
    pub inconclusive: u64,
    pub seed: Option<u64>,
    pub parameters: Value,
    pub witnesses: Vec<Witness>,
    /// Wall-clock time, recorded only on request so that reports are
    /// reproducible byte for byte.
    pub timing_ms: Option<u64>,
}

impl VerificationReport {
    pub fn new(lemma_id: &str, seed: Option<u64>, parameters: Value) -> Self {
        VerificationReport {
            lemma_id: lemma_id.to_string(),
            trials: 0,
            failures: 0,
            inconclusive: 0,
            seed,
            parameters,
            witnesses: Vec::new(),
            timing_ms: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.inconclusive == 0
    }

    fn absorb(&mut self, o: Outcome) {
        self.trials += 1;
        match o {
            Outcome::Pass => {}
            Outcome::Inconclusive => self.inconclusive += 1,
            Outcome::Fail(w) => {
                self.failures += 1;
                if self.witnesses.len() < MAX_WITNESSES {
                    self.witnesses.push(*w);
                }
            }
        }
    }

    fn absorb_all(&mut self, outcomes: impl IntoIterator<Item = Outcome>) {
        for o in outcomes {
            self.absorb(o);
        }
    }
}

/// Result of one trial.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Pass,
    Inconclusive,
    Fail(Box<Witness>),
}

impl Outcome {
    fn fail(input: Value, observed: Value, bound: Value) -> Self {
        Outcome::Fail(Box::new(Witness { input, observed, bound }))
    }

    fn check(ok: bool, input: impl FnOnce() -> Value, observed: Value, bound: Value) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::fail(input(), observed, bound)
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass)
    }
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn formula_json(phi: &Formula) -> Value {
    Value::String(crate::csp::serialize_formula(phi))
}

fn finite(p: PNorm, what: &str) -> Result<()> {
    if p.is_infinite() {
        Err(Error::input(format!(
            "{what} is stated for finite p; the distance threshold has no p = ∞ form"
        )))
    } else {
        Ok(())
    }
}

fn pow(x: f64, p: PNorm) -> f64 {
    p.to_pow(x)
}

// ---------------------------------------------------------------------------
// structural identity

/// The three evaluations of ‖A y‖_p^p.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    /// Dense matrix-vector product.
    pub dense: f64,
    /// (1/3^p)‖B y^sum‖_p^p + Σ_j deg(v_j)‖G y_j‖_p^p
    pub blockwise: f64,
    /// Σ_i (|b_i·y^sum/3|^p + Σ_{j ∈ C_i} ‖G y_j‖_p^p)
    pub per_constraint: f64,
    pub ok: bool,
}

fn triple(y: &[f64], n: usize, j: usize) -> [f64; 3] {
    [y[j], y[n + j], y[2 * n + j]]
}

/// Per-constraint terms |b_i·y^sum/3|^p + Σ_{j ∈ C_i} ‖G y_j‖_p^p.
pub fn per_constraint_terms(phi: &Formula, p: PNorm, y: &[f64]) -> Vec<f64> {
    let n = phi.num_vars();
    phi.constraints()
        .iter()
        .map(|c| {
            let top: f64 = c
                .literals()
                .iter()
                .map(|l| {
                    let t = triple(y, n, l.var() - 1);
                    l.sign() as f64 * (t[0] + t[1] + t[2])
                })
                .sum::<f64>()
                / 3.0;
            let gad: f64 = c
                .vars()
                .map(|v| p.norm_pow(&gadget::apply(&triple(y, n, v - 1))))
                .sum();
            p.norm_pow(&[top]) + gad
        })
        .collect()
}

/// Evaluates ‖A y‖_p^p densely, blockwise and per constraint.
pub fn check_structural_identity(phi: &Formula, p: PNorm, y: &[f64]) -> Result<IdentityCheck> {
    finite(p, "the structural identity")?;
    let n = phi.num_vars();
    if y.len() != 3 * n {
        return Err(Error::input(format!("y has length {}, expected {}", y.len(), 3 * n)));
    }
    let a = build_a(phi, p)?;
    let dense = p.norm_pow(&a.mul_vec(y));
    let q = p.value();
    let ysum: Vec<f64> = (0..n).map(|j| y[j] + y[n + j] + y[2 * n + j]).collect();
    let b: Vec<f64> = phi
        .constraints()
        .iter()
        .map(|c| c.literals().iter().map(|l| l.sign() as f64 * ysum[l.var() - 1]).sum())
        .collect();
    let deg = phi.degrees();
    let blockwise = p.norm_pow(&b) / 3f64.powf(q)
        + (0..n)
            .map(|j| deg[j] as f64 * p.norm_pow(&gadget::apply(&triple(y, n, j))))
            .sum::<f64>();
    let per_constraint: f64 = per_constraint_terms(phi, p, y).iter().sum();
    let ok = approx_eq(dense, blockwise) && approx_eq(dense, per_constraint);
    Ok(IdentityCheck {
        dense,
        blockwise,
        per_constraint,
        ok,
    })
}

// ---------------------------------------------------------------------------
// completeness

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletenessCheck {
    /// Binary coefficients, three blocks of n.
    pub x: Vec<u8>,
    /// ‖A(w − x)‖_p^p
    pub achieved_pow: f64,
    /// (ε(4/3)^p + (1−ε)2^p + 3(2+(4/3)^p))·m with ε = val_ψ(φ)
    pub bound_pow: f64,
    pub eps: Rational64,
    /// Constraints whose top-row term exceeds (4/3)^p (satisfied) or 2^p.
    pub bad_rows: Vec<usize>,
    pub ok: bool,
}

/// Rounds w triple by triple with the sign b_j = 1 − 2ψ(v_j) and checks the
/// resulting distance against the completeness bound.
pub fn check_completeness(phi: &Formula, psi: &Assignment, p: PNorm, w: &[f64]) -> Result<CompletenessCheck> {
    finite(p, "the completeness bound")?;
    let (n, m) = (phi.num_vars(), phi.num_constraints());
    if w.len() != 3 * n {
        return Err(Error::input(format!("w has length {}, expected {}", w.len(), 3 * n)));
    }
    let eps = formula_value(phi, psi)?;
    let mut x = vec![0u8; 3 * n];
    for j in 0..n {
        let b = if psi.value(j + 1) { -1 } else { 1 };
        let r = gadget_round(&triple(w, n, j), b, p)?;
        for k in 0..3 {
            x[k * n + j] = r.z[k];
        }
    }
    let y: Vec<f64> = w.iter().zip(&x).map(|(a, &b)| a - b as f64).collect();
    let a = build_a(phi, p)?;
    let achieved_pow = p.norm_pow(&a.mul_vec(&y));
    let q = p.value();
    let e = *eps.numer() as f64 / *eps.denom() as f64;
    let f43 = (4.0f64 / 3.0).powf(q);
    let bound_pow = (e * f43 + (1.0 - e) * 2f64.powf(q) + 3.0 * (2.0 + f43)) * m as f64;
    let bad_rows: Vec<usize> = phi
        .constraints()
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            let sat = crate::csp::eval_constraint(c, psi).unwrap_or(false);
            let cap = if sat { f43 } else { 2f64.powf(q) };
            let top: f64 = a.row(*i).iter().zip(&y).map(|(u, v)| u * v).sum();
            !approx_le(p.norm_pow(&[top]), cap)
        })
        .map(|(i, _)| i)
        .collect();
    let ok = approx_le(achieved_pow, bound_pow) && bad_rows.is_empty();
    Ok(CompletenessCheck {
        x,
        achieved_pow,
        bound_pow,
        eps,
        bad_rows,
        ok,
    })
}

// ---------------------------------------------------------------------------
// rounding dominance

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundingCheck {
    /// x′ ∈ {0,1}^n; the rounded coefficients are (x′, x′, x′).
    pub x_prime: Vec<u8>,
    /// ‖A(½·1 − x)‖_p
    pub rounded: f64,
    /// ‖A(½·1 − y)‖_p
    pub original: f64,
    pub ok: bool,
}

/// x′_j = 0 if y^sum_j ≤ 1, else 1.
pub fn round_to_binary(y: &[i64], n: usize) -> Vec<u8> {
    (0..n).map(|j| u8::from(y[j] + y[n + j] + y[2 * n + j] > 1)).collect()
}

/// Rounds integer coefficients y to (x′, x′, x′) and checks the distance
/// from A·½1 does not grow.
pub fn round_coefficients(y: &[i64], phi: &Formula, p: PNorm) -> Result<RoundingCheck> {
    let n = phi.num_vars();
    if y.len() != 3 * n {
        return Err(Error::input(format!("y has length {}, expected {}", y.len(), 3 * n)));
    }
    let a = build_a(phi, p)?;
    let x_prime = round_to_binary(y, n);
    let dist = |c: &dyn Fn(usize) -> f64| {
        let v: Vec<f64> = (0..3 * n).map(|k| 0.5 - c(k)).collect();
        p.norm(&a.mul_vec(&v))
    };
    let rounded = dist(&|k| x_prime[k % n] as f64);
    let original = dist(&|k| y[k] as f64);
    Ok(RoundingCheck {
        ok: approx_le(rounded, original),
        x_prime,
        rounded,
        original,
    })
}

// ---------------------------------------------------------------------------
// assignment extraction

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtractCheck {
    pub assignment: Vec<u8>,
    /// Constraints i with sgndiff(b_i, ½·1 − x′) on the constraint's support.
    pub sgndiff_rows: Vec<usize>,
    /// sgndiff_rows.len() / m
    pub claimed: Rational64,
    /// val_ψ(φ)
    pub satisfied: Rational64,
    pub ok: bool,
}

/// Reads x′ as an assignment and checks every sgndiff row is satisfied.
pub fn extract_assignment(x_prime: &[u8], phi: &Formula) -> Result<ExtractCheck> {
    if x_prime.len() != phi.num_vars() || x_prime.iter().any(|&b| b > 1) {
        return Err(Error::input("x′ must be a binary vector of length n"));
    }
    let psi = Assignment::from_bits(x_prime);
    let mut rows = Vec::new();
    let mut ok = true;
    for (i, c) in phi.constraints().iter().enumerate() {
        let b: Vec<f64> = c.literals().iter().map(|l| l.sign() as f64).collect();
        let h: Vec<f64> = c.vars().map(|v| 0.5 - x_prime[v - 1] as f64).collect();
        if sgndiff(&b, &h)? {
            rows.push(i);
            ok &= crate::csp::eval_constraint(c, &psi)?;
        }
    }
    let m = phi.num_constraints() as i64;
    Ok(ExtractCheck {
        assignment: x_prime.to_vec(),
        claimed: Rational64::new(rows.len() as i64, m),
        sgndiff_rows: rows,
        satisfied: formula_value(phi, &psi)?,
        ok,
    })
}

// ---------------------------------------------------------------------------
// finite-p instance certification

/// Right-hand side δ′m·10/2^p + (1−δ′)m(9/2^p + (3/2)^p).
pub fn soundness_bound_pow(m: usize, delta: f64, p: PNorm) -> f64 {
    let q = p.value();
    let m = m as f64;
    delta * m * 10.0 / 2f64.powf(q) + (1.0 - delta) * m * (9.0 / 2f64.powf(q) + 1.5f64.powf(q))
}

/// Levels δ′ swept by [`certify_np_instance`]: k/48 and k/m.
pub fn delta_grid(m: usize) -> Vec<Rational64> {
    let mut g: Vec<Rational64> = (1..=48).map(|k| Rational64::new(k, 48)).collect();
    g.extend((1..=m as i64).map(|k| Rational64::new(k, m as i64)));
    g.sort();
    g.dedup();
    g
}

fn ratio_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Certifies the finite-p reduction on one formula. See the module docs of
/// [`crate::reduction`] for the construction.
///
/// Checks: completeness at ½·1 and a few 1/6-grid points when val(φ) ≥ ε;
/// d > γ(δ,ε,p)·r ⇒ val(φ) < δ; for every δ′ in [`delta_grid`],
/// d^p ≤ [`soundness_bound_pow`] ⇒ val(φ) ≥ δ′; rounding and extraction of
/// the closest vector; and, for small n, agreement of the structured and
/// generic CVP searches.
pub fn certify_np_instance(phi: &Formula, p: PNorm, eps: f64, delta: f64) -> Result<VerificationReport> {
    finite(p, "finite-p certification")?;
    let (n, m) = (phi.num_vars(), phi.num_constraints());
    if n > 8 || m > 12 {
        return Err(Error::resource(format!(
            "certification is limited to n ≤ 8 and m ≤ 12, got n = {n}, m = {m}"
        )));
    }
    let r = threshold_r(m, eps, p)?;
    let g = gamma(delta, eps, p)?;
    let mut report = VerificationReport::new(
        "np-instance",
        None,
        json!({"formula": formula_json(phi), "p": p, "eps": eps, "delta": delta, "r": r, "gamma": g}),
    );
    let a = build_a(phi, p)?;
    let half = vec![0.5; 3 * n];
    let cvp = cvp_search(&a, Target::Coefficients(&half), p, None, &CvpOptions::default())?;
    let d = cvp.dist;
    let (val, witness) = brute_force_value(phi)?;
    let input = || json!({"formula": formula_json(phi), "p": p});

    // completeness side
    if ratio_f64(val) >= eps - 1e-12 {
        let mut ws = vec![half.clone()];
        ws.extend((0..4).map(|k| (0..3 * n).map(|i| ((i * 5 + k * 3) % 7) as f64 / 6.0).collect()));
        for w in &ws {
            let c = check_completeness(phi, &witness, p, w)?;
            report.absorb(Outcome::check(
                c.ok && approx_le(c.achieved_pow, pow(r, p)),
                || json!({"formula": formula_json(phi), "p": p, "w": w}),
                json!({"achieved_pow": c.achieved_pow, "bad_rows": c.bad_rows}),
                json!({"bound_pow": pow(r, p)}),
            ));
        }
        report.absorb(Outcome::check(
            approx_le(d, r),
            input,
            json!({"d": d}),
            json!({"r": r}),
        ));
    }

    // gap side
    let gr = g * r;
    let o = if d > gr * (1.0 + GUARD) {
        Outcome::check(ratio_f64(val) < delta, input, json!({"d": d, "val": val.to_string()}), json!({"gamma_r": gr, "delta": delta}))
    } else if d > gr * (1.0 - GUARD) {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };
    report.absorb(o);

    // soundness sweep
    let dp = pow(d, p);
    for dl in delta_grid(m) {
        let bound = soundness_bound_pow(m, ratio_f64(dl), p);
        let o = if val >= dl || dp > bound * (1.0 + GUARD) {
            Outcome::Pass
        } else if dp > bound * (1.0 - GUARD) {
            Outcome::Inconclusive
        } else {
            Outcome::fail(
                json!({"formula": formula_json(phi), "p": p, "delta_prime": dl.to_string()}),
                json!({"d_pow": dp, "val": val.to_string()}),
                json!({"bound_pow": bound}),
            )
        };
        report.absorb(o);
    }

    // rounding and extraction of the minimizer
    let rc = round_coefficients(&cvp.coeffs, phi, p)?;
    report.absorb(Outcome::check(
        rc.ok,
        || json!({"formula": formula_json(phi), "p": p, "y": cvp.coeffs}),
        json!({"rounded": rc.rounded}),
        json!({"original": rc.original}),
    ));
    let ex = extract_assignment(&rc.x_prime, phi)?;
    report.absorb(Outcome::check(
        ex.ok && ex.claimed <= val,
        || json!({"formula": formula_json(phi), "x_prime": rc.x_prime}),
        json!({"claimed": ex.claimed.to_string()}),
        json!({"val": val.to_string()}),
    ));

    // second search strategy
    if n <= 3 {
        let opts = CvpOptions {
            strategy: Strategy::Generic,
            ..CvpOptions::default()
        };
        let alt = cvp_search(&a, Target::Coefficients(&half), p, Some(d), &opts)?;
        report.absorb(Outcome::check(
            (alt.dist - d).abs() <= 1e-9 * d.max(1.0),
            input,
            json!({"generic": alt.dist}),
            json!({"structured": d}),
        ));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// quantified instance certification

/// Residual scale: 3·A′ is integral and 6·w′ is integral for every special
/// and 1/6-grid target, so residuals are 18·A′(w′ − x′).
pub const PI2_SCALE: i64 = 18;
/// 18 · 4/3
pub const PI2_YES_SCALED: i64 = 24;
/// 18 · 3/2
pub const PI2_NO_SCALED: i64 = 27;

struct ExactInstance {
    /// 3·A′, row-major.
    m: Vec<Vec<i64>>,
    n: usize,
    nu: usize,
}

impl ExactInstance {
    fn new(a: &DenseMatrix, n: usize, nu: usize) -> Result<Self> {
        let mut m = Vec::with_capacity(a.rows());
        for r in 0..a.rows() {
            let row: Vec<i64> = a.row(r).iter().map(|&x| (3.0 * x).round() as i64).collect();
            if a.row(r).iter().zip(&row).any(|(&x, &k)| (3.0 * x - k as f64).abs() > 1e-9) {
                return Err(Error::input("3·A′ is not integral"));
            }
            m.push(row);
        }
        Ok(ExactInstance { m, n, nu })
    }

    fn cols(&self) -> usize {
        3 * self.n + self.nu
    }

    /// max_r |(3A′)(W − 6x)|_r
    fn residual(&self, w6: &[i64], x: &[i64]) -> i64 {
        let d: Vec<i64> = w6.iter().zip(x).map(|(w, x)| w - 6 * x).collect();
        self.m
            .iter()
            .map(|row| row.iter().zip(&d).map(|(a, b)| a * b).sum::<i64>().abs())
            .max()
            .unwrap_or(0)
    }

    /// Exact binary minimum and its colexicographically smallest minimizer.
    fn binary_min(&self, w6: &[i64]) -> (i64, Vec<i64>) {
        let c = self.cols();
        let mut best = (i64::MAX, Vec::new());
        for idx in 0u64..1 << c {
            let x: Vec<i64> = (0..c).map(|i| (idx >> i & 1) as i64).collect();
            let r = self.residual(w6, &x);
            if r < best.0 {
                best = (r, x);
            }
        }
        best
    }

    /// Every integer x with residual ≤ limit.
    ///
    /// Since ‖G⁻¹‖_∞ = 1, the gadget rows bound each coordinate of a triple:
    /// |W − 6x| ≤ limit/3; the last row block bounds the trailing
    /// coordinates: |W* − 6x*| ≤ limit/8. Each triple is pre-filtered on its
    /// own gadget rows and the full residual is checked on the dense matrix.
    fn ball(&self, w6: &[i64], limit: i64) -> Vec<(Vec<i64>, i64)> {
        let (n, nu) = (self.n, self.nu);
        let range = |w: i64, h: i64| ((w - h) as f64 / 6.0).ceil() as i64..=((w + h) as f64 / 6.0).floor() as i64;
        let mut per_var: Vec<Vec<[i64; 3]>> = Vec::with_capacity(n);
        for j in 0..n {
            let wj = [w6[j], w6[n + j], w6[2 * n + j]];
            let mut list = Vec::new();
            for z0 in range(wj[0], limit / 3) {
                for z1 in range(wj[1], limit / 3) {
                    for z2 in range(wj[2], limit / 3) {
                        let d = [wj[0] - 6 * z0, wj[1] - 6 * z1, wj[2] - 6 * z2];
                        let g = gadget::apply_int(&d);
                        if g.iter().all(|v| (3 * v).abs() <= limit) {
                            list.push([z0, z1, z2]);
                        }
                    }
                }
            }
            per_var.push(list);
        }
        let trailing: Vec<Vec<i64>> = (0..nu)
            .map(|i| range(w6[3 * n + i], limit / 8).filter(|x| 8 * (w6[3 * n + i] - 6 * x).abs() <= limit).collect())
            .collect();
        let mut out = Vec::new();
        let mut x = vec![0i64; self.cols()];
        self.ball_rec(0, &per_var, &trailing, w6, limit, &mut x, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn ball_rec(
        &self,
        j: usize,
        per_var: &[Vec<[i64; 3]>],
        trailing: &[Vec<i64>],
        w6: &[i64],
        limit: i64,
        x: &mut Vec<i64>,
        out: &mut Vec<(Vec<i64>, i64)>,
    ) {
        let n = self.n;
        if j == n + self.nu {
            let r = self.residual(w6, x);
            if r <= limit {
                out.push((x.clone(), r));
            }
            return;
        }
        if j < n {
            for z in &per_var[j] {
                x[j] = z[0];
                x[n + j] = z[1];
                x[2 * n + j] = z[2];
                self.ball_rec(j + 1, per_var, trailing, w6, limit, x, out);
            }
        } else {
            for &t in &trailing[j - n] {
                x[3 * n + j - n] = t;
                self.ball_rec(j + 1, per_var, trailing, w6, limit, x, out);
            }
        }
    }
}

fn scaled_target(w: &[f64]) -> Result<Vec<i64>> {
    w.iter()
        .map(|&x| {
            let k = (6.0 * x).round();
            if (6.0 * x - k).abs() > 1e-9 {
                Err(Error::input("exact certification needs targets on the 1/6 grid"))
            } else {
                Ok(k as i64)
            }
        })
        .collect()
}

/// Per-target data gathered by [`certify_pi2_instance`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pi2Target {
    pub universal: Vec<bool>,
    /// Exact binary minimum, scaled by 18.
    pub binary_min_scaled: i64,
    /// Exact integer minimum scaled by 18, when it is at most 27.
    pub integer_min_scaled: Option<i64>,
    /// Floating-point integer CVP distance.
    pub cvp_dist: f64,
}

/// Outcome of certifying one quantified formula.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pi2Certificate {
    pub truth: bool,
    /// `Some(true)` when every special target is within 4/3 of a binary
    /// combination, `Some(false)` when some target is at distance ≥ 3/2 from
    /// the lattice, `None` if neither.
    pub lattice_says: Option<bool>,
    pub targets: Vec<Pi2Target>,
    pub report: VerificationReport,
}

/// Certifies the quantified reduction on one formula with n′ ≤ 3, n ≤ 4,
/// m ≤ 4, in exact integer arithmetic.
///
/// `samples` extra targets on the 1/6 grid are drawn from `rng` and checked
/// for a binary combination within 4/3 on YES instances.
pub fn certify_pi2_instance_with<R: Rng>(phi: &Formula, samples: usize, rng: &mut R) -> Result<Pi2Certificate> {
    let nu = phi.universal().unwrap_or(0);
    let (n, m) = (phi.num_vars(), phi.num_constraints());
    if nu > 3 || n > 4 || m > 4 {
        return Err(Error::resource(format!(
            "exact certification is limited to n′ ≤ 3, n ≤ 4, m ≤ 4, got n′ = {nu}, n = {n}, m = {m}"
        )));
    }
    let inst = build_a_prime(phi)?;
    let truth = brute_force_pi2(phi)?;
    let exact = ExactInstance::new(&inst.matrix, n, nu)?;
    let mut report = VerificationReport::new("pi2-instance", None, json!({"formula": formula_json(phi)}));
    let input = |extra: Value| json!({"formula": formula_json(phi), "target": extra});

    let mut targets = Vec::new();
    for t in special_targets(phi)? {
        let w6 = scaled_target(&t.coeffs)?;
        let (bmin, _) = exact.binary_min(&w6);
        let ball = exact.ball(&w6, PI2_NO_SCALED);
        let imin = ball.iter().map(|(_, r)| *r).min();
        // closeness below 3/2 forces binary coefficients
        let non_binary: Vec<&(Vec<i64>, i64)> = ball
            .iter()
            .filter(|(x, r)| *r < PI2_NO_SCALED && x.iter().any(|&v| v != 0 && v != 1))
            .collect();
        report.absorb(Outcome::check(
            non_binary.is_empty(),
            || input(json!(t.universal)),
            json!({"non_binary": non_binary}),
            json!({"scaled_limit": PI2_NO_SCALED}),
        ));
        let cvp = cvp_search(&inst.matrix, Target::Coefficients(&t.coeffs), PNorm::INF, None, &CvpOptions::default())?;
        let agree = match imin {
            Some(k) => (cvp.dist - k as f64 / PI2_SCALE as f64).abs() <= 1e-9,
            None => cvp.dist > 1.5 - 1e-9,
        };
        report.absorb(Outcome::check(
            agree && imin.is_none_or(|k| k <= bmin),
            || input(json!(t.universal)),
            json!({"cvp_dist": cvp.dist}),
            json!({"integer_min_scaled": imin, "binary_min_scaled": bmin}),
        ));
        targets.push(Pi2Target {
            universal: t.universal,
            binary_min_scaled: bmin,
            integer_min_scaled: imin,
            cvp_dist: cvp.dist,
        });
    }

    let yes = targets.iter().all(|t| t.binary_min_scaled <= PI2_YES_SCALED);
    let no = targets.iter().any(|t| t.integer_min_scaled.is_none_or(|k| k >= PI2_NO_SCALED));
    let lattice_says = match (yes, no) {
        (true, false) => Some(true),
        (false, true) => Some(false),
        _ => None,
    };
    report.absorb(Outcome::check(
        lattice_says == Some(truth),
        || json!({"formula": formula_json(phi)}),
        json!({"lattice": lattice_says, "targets": targets}),
        json!({"brute_force": truth}),
    ));

    if truth {
        // binary rounding within 4/3 away from the special targets, sampled
        for _ in 0..samples {
            let w: Vec<f64> = (0..3 * n + nu).map(|_| rng.gen_range(0..=6) as f64 / 6.0).collect();
            let w6 = scaled_target(&w)?;
            let (bmin, _) = exact.binary_min(&w6);
            report.absorb(Outcome::check(
                bmin <= PI2_YES_SCALED,
                || input(json!(w)),
                json!({"binary_min_scaled": bmin}),
                json!({"scaled_limit": PI2_YES_SCALED}),
            ));
        }
    }
    Ok(Pi2Certificate {
        truth,
        lattice_says,
        targets,
        report,
    })
}

/// [`certify_pi2_instance_with`] without sampled targets.
pub fn certify_pi2_instance(phi: &Formula) -> Result<VerificationReport> {
    Ok(certify_pi2_instance_with(phi, 0, &mut ChaCha8Rng::seed_from_u64(0))?.report)
}

/// Small quantified formulas shipped with the crate: (name, formula).
pub fn bundled_pi2_instances() -> Result<Vec<(&'static str, Formula)>> {
    const FILES: &[(&str, &str)] = &[
        ("yes-1-3-1", include_str!("../data/pi2/yes-1-3-1.nae")),
        ("yes-1-4-3", include_str!("../data/pi2/yes-1-4-3.nae")),
        ("yes-2-4-2", include_str!("../data/pi2/yes-2-4-2.nae")),
        ("yes-2-4-3", include_str!("../data/pi2/yes-2-4-3.nae")),
        ("no-2-3-2", include_str!("../data/pi2/no-2-3-2.nae")),
        ("no-2-3-3", include_str!("../data/pi2/no-2-3-3.nae")),
        ("no-2-4-2", include_str!("../data/pi2/no-2-4-2.nae")),
        ("no-2-4-3", include_str!("../data/pi2/no-2-4-3.nae")),
    ];
    FILES.iter().map(|(name, text)| Ok((*name, parse_formula(text)?))).collect()
}

// ---------------------------------------------------------------------------
// suites

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Gadget,
    Identity,
    Completeness,
    Rounding,
    Np,
    Pi2,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gadget" => Suite::Gadget,
            "identity" => Suite::Identity,
            "completeness" => Suite::Completeness,
            "rounding" => Suite::Rounding,
            "np" => Suite::Np,
            "pi2" => Suite::Pi2,
            "all" => Suite::All,
            _ => return Err(Error::input(format!("unknown suite `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Randomized trials; `None` uses each suite's default.
    pub trials: Option<u64>,
    pub seed: u64,
    /// Norms; `None` uses each suite's default.
    pub ps: Option<Vec<PNorm>>,
    /// Record wall-clock time in each report.
    pub timing: bool,
}

impl VerifyOptions {
    fn ps_or(&self, default: &[f64]) -> Vec<PNorm> {
        self.ps.clone().unwrap_or_else(|| {
            default
                .iter()
                .map(|&p| if p.is_infinite() { PNorm::INF } else { PNorm::new(p).expect("p ≥ 1") })
                .collect()
        })
    }

    fn finite_ps(&self, default: &[f64], suite: &str) -> Result<Vec<PNorm>> {
        let ps = self.ps_or(default);
        if ps.iter().any(PNorm::is_infinite) {
            return Err(Error::input(format!(
                "suite `{suite}` needs finite p: its distance threshold is defined for p < ∞ only"
            )));
        }
        Ok(ps)
    }
}

fn p_list(ps: &[PNorm]) -> Value {
    json!(ps)
}

fn timed<F: FnOnce() -> Result<VerificationReport>>(opts: &VerifyOptions, f: F) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut r = f()?;
    if opts.timing {
        r.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(r)
}

/// Grid resolution for the rounding-existence check (g + 1 points per axis).
pub const GADGET_GRID: usize = 20;

/// Binary rounding on a grid and on random points, the case-analysis
/// rounding, and the distance classification of G(½·1 − z).
pub fn suite_gadget(opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    let ps = opts.ps_or(&[1.0, 2.0, 3.0, f64::INFINITY]);
    let trials = opts.trials.unwrap_or(100_000);
    let seed = opts.seed;

    let grid = timed(opts, || {
        let mut rep = VerificationReport::new(
            "gadget-rounding-grid",
            None,
            json!({"grid": GADGET_GRID, "b": [1, -1], "p": p_list(&ps)}),
        );
        let g = GADGET_GRID;
        let outcomes: Vec<Outcome> = (0..(g + 1).pow(3))
            .into_par_iter()
            .flat_map_iter(|idx| {
                let u = [
                    (idx / ((g + 1) * (g + 1))) as f64 / g as f64,
                    (idx / (g + 1) % (g + 1)) as f64 / g as f64,
                    (idx % (g + 1)) as f64 / g as f64,
                ];
                let ps = &ps;
                [1i8, -1].into_iter().flat_map(move |b| ps.iter().map(move |&p| rounding_outcome(&u, b, p)))
            })
            .collect();
        rep.absorb_all(outcomes);
        Ok(rep)
    })?;

    let random = timed(opts, || {
        let mut rep = VerificationReport::new("gadget-rounding-random", Some(seed), json!({"p": p_list(&ps)}));
        let outcomes: Vec<Outcome> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let u = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                let b = if rng.gen::<bool>() { 1 } else { -1 };
                let p = ps[(t % ps.len() as u64) as usize];
                rounding_outcome(&u, b, p)
            })
            .collect();
        rep.absorb_all(outcomes);
        Ok(rep)
    })?;

    let case = timed(opts, || {
        let g = 40;
        let mut rep =
            VerificationReport::new("gadget-case-round", None, json!({"grid": g, "p": p_list(&ps)}));
        let outcomes: Vec<Outcome> = (0..(g + 1) * (g + 1) * (g + 1))
            .into_par_iter()
            .flat_map_iter(|idx| {
                let u = [
                    (idx / ((g + 1) * (g + 1))) as f64 / g as f64,
                    (idx / (g + 1) % (g + 1)) as f64 / g as f64,
                    (idx % (g + 1)) as f64 / g as f64,
                ];
                let z = gadget_case_round(&u);
                let d = [u[0] - z[0] as f64, u[1] - z[1] as f64, u[2] - z[2] as f64];
                let gd = gadget::apply(&d);
                ps.iter()
                    .map(|&p| {
                        let v = p.norm_pow(&gd);
                        Outcome::check(
                            approx_le(v, rounding_bound(p)),
                            || json!({"u": u, "p": p}),
                            json!({"z": z, "discrepancy_pow": v}),
                            json!(rounding_bound(p)),
                        )
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        rep.absorb_all(outcomes);
        Ok(rep)
    })?;

    let center = timed(opts, || {
        let cps = opts.ps_or(&[1.0, 2.0, 5.0, f64::INFINITY]);
        let mut rep = VerificationReport::new(
            "gadget-center-distance",
            None,
            json!({"box": [-3, 4], "p": p_list(&cps)}),
        );
        for &p in &cps {
            rep.absorb_all(center_distance_outcomes(p));
        }
        Ok(rep)
    })?;

    Ok(vec![grid, random, case, center])
}

fn rounding_outcome(u: &[f64; 3], b: i8, p: PNorm) -> Outcome {
    match gadget_round(u, b, p) {
        Ok(r) => Outcome::check(
            r.is_valid(b, p),
            || json!({"u": u, "b": b, "p": p}),
            json!(r),
            json!({"discrepancy_pow": rounding_bound(p), "sum_dev": 2}),
        ),
        Err(e) => Outcome::fail(json!({"u": u, "b": b, "p": p}), json!(e.to_string()), json!("some binary z")),
    }
}

/// One outcome per z ∈ {−3..4}³: z ∈ {0, 1} attains the binary value exactly,
/// every other z is at least the far bound.
pub fn center_distance_outcomes(p: PNorm) -> Vec<Outcome> {
    let (at, far) = center_bounds(p);
    let mut out = Vec::with_capacity(512);
    for a in -3..=4 {
        for b in -3..=4 {
            for c in -3..=4 {
                let z = [a, b, c];
                let (v, class) = gadget_center_distance(&z, p);
                let ok = match class {
                    CenterClass::BinaryLike => approx_eq(v, at),
                    CenterClass::Far => v >= far * (1.0 - REL_TOL),
                };
                out.push(Outcome::check(ok, || json!({"z": z, "p": p}), json!({"value": v, "class": class}), json!({"binary": at, "far": far})));
            }
        }
    }
    out
}

fn random_shape(rng: &mut ChaCha8Rng, nmax: usize, mmax: usize) -> Result<Formula> {
    let n = rng.gen_range(3..=nmax);
    let m = rng.gen_range(1..=mmax);
    gen::random_formula(rng, 3, n, m)
}

/// ‖A y‖_p^p evaluated three ways on random formulas and vectors.
pub fn suite_identity(opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    let ps = opts.finite_ps(&[1.0, 2.0, 3.0, 5.0], "identity")?;
    let trials = opts.trials.unwrap_or(10_000);
    let seed = opts.seed;
    let rep = timed(opts, || {
        let mut rep = VerificationReport::new(
            "structural-identity",
            Some(seed),
            json!({"p": p_list(&ps), "n": [3, 6], "m": [1, 8], "y": [-2.0, 2.0]}),
        );
        let outcomes: Vec<Result<Outcome>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let phi = random_shape(&mut rng, 6, 8)?;
                let p = ps[(t % ps.len() as u64) as usize];
                let y: Vec<f64> = (0..3 * phi.num_vars()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let c = check_structural_identity(&phi, p, &y)?;
                Ok(Outcome::check(
                    c.ok,
                    || json!({"formula": formula_json(&phi), "p": p, "y": y}),
                    json!(c),
                    json!({"rel_tol": REL_TOL}),
                ))
            })
            .collect();
        rep.absorb_all(outcomes.into_iter().collect::<Result<Vec<_>>>()?);
        Ok(rep)
    })?;
    Ok(vec![rep])
}

/// Completeness on planted formulas with w on the 1/6 grid.
pub fn suite_completeness(opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    let ps = opts.finite_ps(&[1.0, 2.0, 5.0], "completeness")?;
    let trials = opts.trials.unwrap_or(1_000);
    let seed = opts.seed;
    let rep = timed(opts, || {
        let mut rep = VerificationReport::new(
            "completeness",
            Some(seed),
            json!({"p": p_list(&ps), "n": [3, 6], "m": [1, 8], "w_grid": 6, "eps": 1}),
        );
        let outcomes: Vec<Result<Outcome>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let n = rng.gen_range(3..=6);
                let m = rng.gen_range(1..=8);
                let (phi, psi) = gen::planted_formula(&mut rng, 3, n, m)?;
                let p = ps[(t % ps.len() as u64) as usize];
                let w: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(0..=6) as f64 / 6.0).collect();
                let c = check_completeness(&phi, &psi, p, &w)?;
                let r = threshold_r(m, 1.0, p)?;
                let achieved = p.from_pow(c.achieved_pow);
                Ok(Outcome::check(
                    c.ok && c.eps == Rational64::from_integer(1) && approx_le(achieved, r),
                    || json!({"formula": formula_json(&phi), "psi": psi.to_string(), "p": p, "w": w}),
                    json!({"achieved": achieved, "x": c.x, "bad_rows": c.bad_rows}),
                    json!({"r": r}),
                ))
            })
            .collect();
        rep.absorb_all(outcomes.into_iter().collect::<Result<Vec<_>>>()?);
        Ok(rep)
    })?;
    Ok(vec![rep])
}

/// Rounding dominance on random integer coefficients in {−2..3}, plus the
/// extraction check on each rounded vector.
pub fn suite_rounding(opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    let ps = opts.finite_ps(&[1.0, 2.0], "rounding")?;
    let trials = opts.trials.unwrap_or(10_000);
    let seed = opts.seed;
    let mut reports = Vec::new();
    let results: Vec<Result<(Outcome, Outcome)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let phi = random_shape(&mut rng, 6, 8)?;
            let p = ps[(t % ps.len() as u64) as usize];
            let y: Vec<i64> = (0..3 * phi.num_vars()).map(|_| rng.gen_range(-2..=3)).collect();
            let rc = round_coefficients(&y, &phi, p)?;
            let dom = Outcome::check(
                rc.ok,
                || json!({"formula": formula_json(&phi), "p": p, "y": y}),
                json!({"rounded": rc.rounded}),
                json!({"original": rc.original}),
            );
            let ex = extract_assignment(&rc.x_prime, &phi)?;
            let val = if phi.num_vars() <= 16 { Some(brute_force_value(&phi)?.0) } else { None };
            let ext = Outcome::check(
                ex.ok && val.is_none_or(|v| ex.claimed <= v),
                || json!({"formula": formula_json(&phi), "x_prime": rc.x_prime}),
                json!({"claimed": ex.claimed.to_string(), "satisfied": ex.satisfied.to_string()}),
                json!({"val": val.map(|v| v.to_string())}),
            );
            Ok((dom, ext))
        })
        .collect();
    let start = Instant::now();
    let pairs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut dom = VerificationReport::new(
        "rounding-dominance",
        Some(seed),
        json!({"p": p_list(&ps), "n": [3, 6], "m": [1, 8], "y": [-2, 3]}),
    );
    let mut ext = VerificationReport::new("assignment-extraction", Some(seed), json!({"p": p_list(&ps)}));
    for (a, b) in pairs {
        dom.absorb(a);
        ext.absorb(b);
    }
    if opts.timing {
        let ms = start.elapsed().as_millis() as u64;
        dom.timing_ms = Some(ms);
        ext.timing_ms = Some(ms);
    }
    reports.push(dom);
    reports.push(ext);
    Ok(reports)
}

/// Formulas with every variable used, drawn for the random part of the NP suite.
fn random_covering_formula(rng: &mut ChaCha8Rng) -> Result<Formula> {
    loop {
        let n = rng.gen_range(4..=5);
        let m = rng.gen_range(2..=5);
        let phi = gen::random_formula(rng, 3, n, m)?;
        if phi.degrees().iter().all(|&d| d > 0) {
            return Ok(phi);
        }
    }
}

fn merge_into(target: &mut VerificationReport, r: VerificationReport) {
    target.trials += r.trials;
    target.failures += r.failures;
    target.inconclusive += r.inconclusive;
    for w in r.witnesses {
        if target.witnesses.len() < MAX_WITNESSES {
            target.witnesses.push(w);
        }
    }
}

/// Finite-p certification on every E3 formula with n = 3 and m ≤ 2, and on
/// random formulas with n ∈ {4, 5}.
pub fn suite_np(opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    let ps = opts.finite_ps(&[1.0, 2.0], "np")?;
    let trials = opts.trials.unwrap_or(100);
    let seed = opts.seed;
    let (eps, delta) = (1.0, 15.0 / 16.0);

    let exhaustive = timed(opts, || {
        let mut rep = VerificationReport::new(
            "np-soundness-exhaustive",
            None,
            json!({"p": p_list(&ps), "n": 3, "m": [1, 2], "eps": eps, "delta": delta}),
        );
        let formulas: Vec<Formula> = (1..=2).flat_map(|m| gen::all_formulas(3, 3, m)).collect();
        let jobs: Vec<(usize, PNorm)> =
            (0..formulas.len()).flat_map(|i| ps.iter().map(move |&p| (i, p))).collect();
        let reports: Vec<Result<VerificationReport>> = jobs
            .par_iter()
            .map(|&(i, p)| certify_np_instance(&formulas[i], p, eps, delta))
            .collect();
        for r in reports {
            merge_into(&mut rep, r?);
        }
        Ok(rep)
    })?;

    let random = timed(opts, || {
        let mut rep = VerificationReport::new(
            "np-soundness-random",
            Some(seed),
            json!({"p": p_list(&ps), "n": [4, 5], "m": [2, 5], "eps": eps, "delta": delta}),
        );
        let reports: Vec<Result<VerificationReport>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(seed, t);
                let phi = random_covering_formula(&mut rng)?;
                let p = ps[(t % ps.len() as u64) as usize];
                certify_np_instance(&phi, p, eps, delta)
            })
            .collect();
        for r in reports {
            merge_into(&mut rep, r?);
        }
        Ok(rep)
    })?;
    Ok(vec![exhaustive, random])
}

/// Every quantified formula with n′ = 1, n = 3 and m ≤ 2.
pub fn exhaustive_pi2_formulas() -> Vec<Formula> {
    (1..=2)
        .flat_map(|m| gen::all_formulas(3, 3, m))
        .map(|f| Formula::quantified(3, 1, f.constraints().to_vec()).expect("n′ ≤ n"))
        .collect()
}

/// Quantified certification on the bundled instances and exhaustively on
/// n′ = 1, n = 3, m ≤ 2.
pub fn suite_pi2(opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    if let Some(ps) = &opts.ps {
        if ps.iter().any(|p| !p.is_infinite()) {
            return Err(Error::input("suite `pi2` is defined for p = ∞ only"));
        }
    }
    let seed = opts.seed;
    let samples = opts.trials.unwrap_or(16) as usize;
    let run = |id: &str, formulas: Vec<(String, Formula)>, params: Value| {
        timed(opts, || {
            let mut rep = VerificationReport::new(id, Some(seed), params);
            let certs: Vec<Result<Pi2Certificate>> = formulas
                .par_iter()
                .enumerate()
                .map(|(i, (_, f))| certify_pi2_instance_with(f, samples, &mut trial_rng(seed, i as u64)))
                .collect();
            for c in certs {
                merge_into(&mut rep, c?.report);
            }
            Ok(rep)
        })
    };
    let bundled: Vec<(String, Formula)> =
        bundled_pi2_instances()?.into_iter().map(|(n, f)| (n.to_string(), f)).collect();
    let names: Vec<&String> = bundled.iter().map(|(n, _)| n).collect();
    let params = json!({"instances": names, "p": "inf", "samples": samples});
    let b = run("pi2-bundled", bundled.clone(), params)?;
    let ex: Vec<(String, Formula)> = exhaustive_pi2_formulas().into_iter().map(|f| (String::new(), f)).collect();
    let e = run("pi2-exhaustive", ex, json!({"n_prime": 1, "n": 3, "m": [1, 2], "p": "inf", "samples": samples}))?;
    Ok(vec![b, e])
}

/// Runs one suite, or all of them in a fixed order.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    match suite {
        Suite::Gadget => suite_gadget(opts),
        Suite::Identity => suite_identity(opts),
        Suite::Completeness => suite_completeness(opts),
        Suite::Rounding => suite_rounding(opts),
        Suite::Np => suite_np(opts),
        Suite::Pi2 => suite_pi2(opts),
        Suite::All => {
            // `--p` applies only where it is meaningful for every suite
            let mut out = Vec::new();
            for s in [Suite::Gadget, Suite::Identity, Suite::Completeness, Suite::Rounding, Suite::Np, Suite::Pi2] {
                out.extend(run_suite(s, opts)?);
            }
            Ok(out)
        }
    }
}
