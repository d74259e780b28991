//! ℓ_p lattice geometry: norms, closest-vector search over integer and
//! binary coefficients, and lower bounds on the covering radius and on
//! linear discrepancy.
//!
//! Whenever several coefficient vectors attain the same distance (within
//! [`REL_TOL`]) the colexicographically smallest one is returned, i.e. the
//! one that is smallest when compared from the last coordinate backwards.

mod generic;
mod matrix;
mod norm;
mod structured;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

pub(crate) use matrix::apply_g;
pub use matrix::{parse_matrix, serialize_matrix, BlockLayout, DenseMatrix, Structure};
pub use norm::{approx_eq, approx_le, lp_norm, lp_norm_pow, sgndiff, PNorm, GUARD, REL_TOL};

use crate::error::{Error, Result};

/// Default cap on search-tree nodes.
pub const DEFAULT_NODE_CAP: u64 = 100_000_000;

/// Default cap on columns for exhaustive binary search.
pub const DEFAULT_BINARY_CAP: usize = 24;

/// Default cap on binary evaluations in a grid search.
pub const DEFAULT_GRID_CAP: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Integer,
    Binary,
}

/// A closest-vector answer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvpResult {
    pub coeffs: Vec<i64>,
    /// ‖B·coeffs − t‖_p
    pub dist: f64,
    pub domain: Domain,
    /// Optimality is guaranteed among all coefficient vectors within this
    /// distance of the target. Infinite for exhaustive binary search.
    pub certified_radius: f64,
    pub nodes: u64,
}

/// Colexicographic order: compare the last coordinate first.
pub fn colex_cmp(a: &[i64], b: &[i64]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

/// Best point seen so far in `norm_pow` units.
pub(crate) struct Incumbent {
    coeffs: Option<Vec<i64>>,
    cost: f64,
    limit: f64,
}

impl Incumbent {
    fn new(limit: f64) -> Self {
        Incumbent {
            coeffs: None,
            cost: f64::INFINITY,
            limit,
        }
    }

    /// Costs up to this value may still improve or tie the incumbent.
    pub(crate) fn bound(&self) -> f64 {
        let base = if self.coeffs.is_some() { self.cost } else { self.limit };
        base + REL_TOL * base.abs().max(1e-12)
    }

    pub(crate) fn offer(&mut self, x: &[i64], cost: f64) {
        if cost > self.bound() {
            return;
        }
        let replace = match &self.coeffs {
            None => true,
            Some(cur) => {
                let tie = (cost - self.cost).abs() <= REL_TOL * self.cost.abs().max(1e-12);
                if tie {
                    colex_cmp(x, cur) == Ordering::Less
                } else {
                    cost < self.cost
                }
            }
        };
        if replace {
            self.coeffs = Some(x.to_vec());
            self.cost = cost;
        }
    }
}

/// How [`cvp_search`] chooses its enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Block branch and bound when the matrix carries a reduction layout and
    /// the target is given by coefficients, generic enumeration otherwise.
    #[default]
    Auto,
    Generic,
    Structured,
}

#[derive(Clone, Copy, Debug)]
pub struct CvpOptions {
    pub node_cap: u64,
    pub strategy: Strategy,
}

impl Default for CvpOptions {
    fn default() -> Self {
        CvpOptions {
            node_cap: DEFAULT_NODE_CAP,
            strategy: Strategy::Auto,
        }
    }
}

/// A CVP target: a point, or coefficients w with target B·w.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Point(&'a [f64]),
    Coefficients(&'a [f64]),
}

/// Exact closest vector over x ∈ Zⁿ for a point target, searching within
/// `initial_radius` (widened if the ball turns out to be empty).
pub fn cvp_enumerate(b: &DenseMatrix, t: &[f64], p: PNorm, initial_radius: f64) -> Result<CvpResult> {
    cvp_search(b, Target::Point(t), p, Some(initial_radius), &CvpOptions::default())
}

/// Exact closest vector over x ∈ Zⁿ.
///
/// With `initial_radius = None` the search starts from the nearest-plane
/// rounding (generic) or coordinate rounding (structured). If no lattice
/// point lies within the radius it is doubled until one does, and
/// `certified_radius` reports the radius actually searched.
pub fn cvp_search(
    b: &DenseMatrix,
    target: Target<'_>,
    p: PNorm,
    initial_radius: Option<f64>,
    opts: &CvpOptions,
) -> Result<CvpResult> {
    if let Some(r) = initial_radius {
        if r.is_nan() || r < 0.0 {
            return Err(Error::input(format!("search radius must be non-negative, got {r}")));
        }
    }
    let structured = match (opts.strategy, b.layout(), target) {
        (Strategy::Generic, _, _) => None,
        (_, Some(l), Target::Coefficients(w)) => Some((l, w)),
        (Strategy::Structured, _, _) => {
            return Err(Error::input(
                "structured search needs a reduction layout and a coefficient target",
            ))
        }
        _ => None,
    };
    match structured {
        Some((layout, w)) => structured_search(b, layout, w, p, initial_radius, opts.node_cap),
        None => {
            let point = match target {
                Target::Point(t) => t.to_vec(),
                Target::Coefficients(w) => {
                    check_len(w, b.cols(), "coefficient target")?;
                    b.mul_vec(w)
                }
            };
            generic_search(b, &point, p, initial_radius, opts.node_cap)
        }
    }
}

fn check_len(v: &[f64], want: usize, what: &str) -> Result<()> {
    if v.len() != want {
        return Err(Error::input(format!("{what} has length {}, expected {want}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::input(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn finish(inc: Incumbent, p: PNorm, radius: f64, nodes: u64) -> Option<CvpResult> {
    inc.coeffs.map(|coeffs| CvpResult {
        coeffs,
        dist: p.from_pow(inc.cost),
        domain: Domain::Integer,
        certified_radius: radius,
        nodes,
    })
}

fn attach_partial(e: Error, inc: Incumbent, p: PNorm, radius: f64, nodes: u64) -> Error {
    match e {
        Error::Resource { message, .. } => Error::Resource {
            message,
            partial: finish(inc, p, radius, nodes).map(Box::new),
        },
        other => other,
    }
}

const MAX_WIDENINGS: usize = 64;

fn generic_search(
    b: &DenseMatrix,
    t: &[f64],
    p: PNorm,
    initial_radius: Option<f64>,
    node_cap: u64,
) -> Result<CvpResult> {
    check_len(t, b.rows(), "target")?;
    let f = generic::factor(b, t)?;
    let mut radius = match initial_radius {
        Some(r) => r,
        None => {
            let x = f.babai();
            let resid: Vec<f64> = b.mul_int(&x).iter().zip(t).map(|(a, b)| a - b).collect();
            p.norm(&resid)
        }
    };
    let mut nodes = 0;
    for _ in 0..MAX_WIDENINGS {
        let mut inc = Incumbent::new(p.to_pow(radius));
        match generic::enumerate(b, t, p, &f, &mut inc, node_cap.saturating_sub(nodes)) {
            Ok(k) => nodes += k,
            Err(e) => return Err(attach_partial(e, inc, p, radius, node_cap)),
        }
        if let Some(res) = finish(inc, p, radius, nodes) {
            return Ok(res);
        }
        radius = if radius > 0.0 { 2.0 * radius } else { 1.0 };
    }
    Err(Error::resource("no lattice point found after repeatedly widening the radius"))
}

fn structured_search(
    b: &DenseMatrix,
    layout: &BlockLayout,
    w: &[f64],
    p: PNorm,
    initial_radius: Option<f64>,
    node_cap: u64,
) -> Result<CvpResult> {
    check_len(w, b.cols(), "coefficient target")?;
    let mut radius = match initial_radius {
        Some(r) => r,
        None => {
            let x: Vec<i64> = w.iter().map(|v| v.round() as i64).collect();
            let y: Vec<f64> = w.iter().zip(&x).map(|(a, &b)| a - b as f64).collect();
            p.from_pow(layout.norm_pow(&y, p))
        }
    };
    let mut nodes = 0;
    for _ in 0..MAX_WIDENINGS {
        let mut inc = Incumbent::new(p.to_pow(radius));
        match structured::enumerate(layout, w, p, &mut inc, node_cap.saturating_sub(nodes)) {
            Ok(k) => nodes += k,
            Err(e) => return Err(attach_partial(e, inc, p, radius, node_cap)),
        }
        if let Some(mut res) = finish(inc, p, radius, nodes) {
            // report the distance evaluated on the matrix itself
            let y: Vec<f64> = w.iter().zip(&res.coeffs).map(|(a, &b)| a - b as f64).collect();
            res.dist = p.norm(&b.mul_vec(&y));
            return Ok(res);
        }
        radius = if radius > 0.0 { 2.0 * radius } else { 1.0 };
    }
    Err(Error::resource("no lattice point found after repeatedly widening the radius"))
}

/// Exact minimum of ‖Bx − t‖_p over x ∈ {0,1}ⁿ.
pub fn binary_cvp(b: &DenseMatrix, t: &[f64], p: PNorm) -> Result<CvpResult> {
    binary_cvp_capped(b, t, p, DEFAULT_BINARY_CAP)
}

pub fn binary_cvp_capped(b: &DenseMatrix, t: &[f64], p: PNorm, cap: usize) -> Result<CvpResult> {
    check_len(t, b.rows(), "target")?;
    let n = b.cols();
    if n > cap || n > 62 {
        return Err(Error::resource(format!(
            "binary search over {n} columns exceeds the cap of {cap}"
        )));
    }
    let cols: Vec<Vec<f64>> = (0..n).map(|c| b.column(c)).collect();
    let (cost, index) = binary_scan(&cols, t, p);
    Ok(CvpResult {
        coeffs: (0..n).map(|i| ((index >> i) & 1) as i64).collect(),
        dist: p.from_pow(cost),
        domain: Domain::Binary,
        certified_radius: f64::INFINITY,
        nodes: 1 << n,
    })
}

/// Gray-code walk over {0,1}ⁿ. Bit i of the returned index is x_i, so
/// integer order on indices is colexicographic order on x.
fn binary_scan(cols: &[Vec<f64>], t: &[f64], p: PNorm) -> (f64, u64) {
    let n = cols.len();
    let mut resid: Vec<f64> = t.iter().map(|v| -v).collect();
    let mut best = (p.norm_pow(&resid), 0u64);
    let mut gray = 0u64;
    for k in 1..(1u64 << n) {
        let bit = k.trailing_zeros() as usize;
        gray ^= 1 << bit;
        let sign = if gray >> bit & 1 == 1 { 1.0 } else { -1.0 };
        for (r, c) in resid.iter_mut().zip(&cols[bit]) {
            *r += sign * c;
        }
        let cost = p.norm_pow(&resid);
        let tie = (cost - best.0).abs() <= REL_TOL * best.0.abs().max(1e-12);
        if (tie && gray < best.1) || (!tie && cost < best.0) {
            best = (cost, gray);
        }
    }
    // recompute the winner without accumulated rounding
    let mut exact: Vec<f64> = t.iter().map(|v| -v).collect();
    for (i, c) in cols.iter().enumerate() {
        if best.1 >> i & 1 == 1 {
            for (r, v) in exact.iter_mut().zip(c) {
                *r += v;
            }
        }
    }
    (p.norm_pow(&exact), best.1)
}

/// A lower bound on a max-min quantity together with the maximizing target.
#[derive(Clone, Debug, Serialize)]
pub struct LowerBound {
    pub value: f64,
    /// Coefficient vector w of the maximizing target B·w.
    pub witness: Vec<f64>,
    /// The inner minimizer at the witness.
    pub closest: CvpResult,
}

/// max over w ∈ {0, 1/g, …, 1}^cols of the binary distance from B·w, a lower
/// bound on lindisc_p(B).
pub fn lindisc_grid_lb(b: &DenseMatrix, p: PNorm, g: u32) -> Result<LowerBound> {
    lindisc_grid_lb_capped(b, p, g, DEFAULT_GRID_CAP)
}

pub fn lindisc_grid_lb_capped(b: &DenseMatrix, p: PNorm, g: u32, cap: u64) -> Result<LowerBound> {
    if g == 0 {
        return Err(Error::input("grid resolution must be positive"));
    }
    let n = b.cols();
    let points = (g as u64 + 1).checked_pow(n as u32);
    let work = points.and_then(|pts| pts.checked_mul(1u64 << n.min(63)));
    let points = match (points, work) {
        (Some(pts), Some(w)) if w <= cap && n <= DEFAULT_BINARY_CAP => pts,
        _ => {
            return Err(Error::resource(format!(
                "grid of resolution {g} over {n} columns exceeds the evaluation cap of {cap}"
            )))
        }
    };
    let cols: Vec<Vec<f64>> = (0..n).map(|c| b.column(c)).collect();
    let grid_point = |idx: u64| -> Vec<f64> {
        // colexicographic: the first coordinate varies fastest
        let mut rem = idx;
        (0..n)
            .map(|_| {
                let k = rem % (g as u64 + 1);
                rem /= g as u64 + 1;
                k as f64 / g as f64
            })
            .collect()
    };
    let (cost, idx) = (0..points)
        .into_par_iter()
        .map(|idx| {
            let w = grid_point(idx);
            (binary_scan(&cols, &b.mul_vec(&w), p).0, idx)
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, c| {
                let tie = (a.0 - c.0).abs() <= REL_TOL * a.0.abs().max(c.0.abs()).max(1e-12);
                if (tie && a.1 <= c.1) || (!tie && a.0 > c.0) {
                    a
                } else {
                    c
                }
            },
        );
    let witness = grid_point(idx);
    let closest = binary_cvp(b, &b.mul_vec(&witness), p)?;
    debug_assert!(approx_eq(p.to_pow(closest.dist), cost));
    Ok(LowerBound {
        value: closest.dist,
        witness,
        closest,
    })
}

/// max over the supplied coefficient targets w ∈ [0,1]ⁿ of dist_p(B·w, L(B)),
/// a lower bound on the covering radius μ_p(L(B)).
pub fn mu_lower_bound(b: &DenseMatrix, p: PNorm, targets: &[Vec<f64>]) -> Result<LowerBound> {
    mu_lower_bound_with(b, p, targets, &CvpOptions::default())
}

pub fn mu_lower_bound_with(
    b: &DenseMatrix,
    p: PNorm,
    targets: &[Vec<f64>],
    opts: &CvpOptions,
) -> Result<LowerBound> {
    if targets.is_empty() {
        return Err(Error::input("at least one target is required"));
    }
    let mut best: Option<LowerBound> = None;
    for w in targets {
        check_len(w, b.cols(), "coefficient target")?;
        if w.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::input("targets must lie in [0,1]^n"));
        }
        let res = cvp_search(b, Target::Coefficients(w), p, None, opts)?;
        let better = match &best {
            None => true,
            Some(cur) => res.dist > cur.value && !approx_eq(res.dist, cur.value),
        };
        if better {
            best = Some(LowerBound {
                value: res.dist,
                witness: w.clone(),
                closest: res,
            });
        }
    }
    Ok(best.expect("targets is non-empty"))
}
