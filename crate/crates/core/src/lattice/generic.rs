//! Bounded enumeration for an arbitrary full-column-rank basis.
//!
//! With B = QR, ‖Bx − t‖₂² = ‖Rx − Qᵀt‖₂² + ‖(I − QQᵀ)t‖₂². The ℓ_p budget is
//! converted to an ℓ₂ budget (‖v‖₂ ≤ c·‖v‖_p), coordinates are fixed from
//! the last to the first, and each one ranges over the integers allowed by
//! the remaining ℓ₂ budget. Leaves are scored by the exact ℓ_p distance.

use nalgebra::DMatrix;

use super::{DenseMatrix, Incumbent, PNorm};
use crate::error::{Error, Result};

pub(crate) struct Factored {
    /// Upper-triangular, cols × cols, row-major.
    r: Vec<Vec<f64>>,
    /// Qᵀt
    c: Vec<f64>,
    /// Squared distance from t to the column span.
    orth2: f64,
}

pub(crate) fn factor(b: &DenseMatrix, t: &[f64]) -> Result<Factored> {
    let (rows, cols) = (b.rows(), b.cols());
    if t.len() != rows {
        return Err(Error::input(format!("target has length {}, expected {rows}", t.len())));
    }
    if cols > rows {
        return Err(Error::input(format!("a {rows}×{cols} matrix cannot have full column rank")));
    }
    let qr = DMatrix::from_row_slice(rows, cols, b.data()).qr();
    let r = qr.r();
    let q = qr.q();
    let diag_max = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if cols > 0 && (0..cols).any(|i| r[(i, i)].abs() <= 1e-10 * diag_max.max(1e-300)) {
        return Err(Error::input("basis is not of full column rank"));
    }
    let c: Vec<f64> = (0..cols)
        .map(|i| (0..rows).map(|k| q[(k, i)] * t[k]).sum())
        .collect();
    let t2: f64 = t.iter().map(|x| x * x).sum();
    let c2: f64 = c.iter().map(|x| x * x).sum();
    Ok(Factored {
        r: (0..cols).map(|i| (0..cols).map(|j| r[(i, j)]).collect()).collect(),
        c,
        orth2: (t2 - c2).max(0.0),
    })
}

impl Factored {
    fn center(&self, i: usize, x: &[i64]) -> f64 {
        let tail: f64 = (i + 1..x.len()).map(|l| self.r[i][l] * x[l] as f64).sum();
        (self.c[i] - tail) / self.r[i][i]
    }

    /// Nearest-plane rounding.
    pub(crate) fn babai(&self) -> Vec<i64> {
        let n = self.c.len();
        let mut x = vec![0i64; n];
        for i in (0..n).rev() {
            x[i] = self.center(i, &x).round() as i64;
        }
        x
    }
}

struct Search<'a> {
    b: &'a DenseMatrix,
    t: &'a [f64],
    p: PNorm,
    f: &'a Factored,
    l2_factor: f64,
    x: Vec<i64>,
    nodes: u64,
    node_cap: u64,
}

impl Search<'_> {
    fn l2_budget(&self, inc: &Incumbent) -> f64 {
        let r = self.l2_factor * self.p.from_pow(inc.bound());
        r * r * (1.0 + 1e-9) + 1e-12 - self.f.orth2
    }

    fn descend(&mut self, i: usize, partial2: f64, inc: &mut Incumbent) -> Result<()> {
        let rii = self.f.r[i][i];
        let center = self.f.center(i, &self.x);
        let budget = self.l2_budget(inc) - partial2;
        if budget < 0.0 {
            return Ok(());
        }
        let hw = budget.sqrt() / rii.abs();
        let lo = (center - hw).ceil() as i64;
        let hi = (center + hw).floor() as i64;
        let mut order: Vec<i64> = (lo..=hi).collect();
        order.sort_by(|a, b| {
            let da = (*a as f64 - center).abs();
            let db = (*b as f64 - center).abs();
            da.total_cmp(&db).then(a.cmp(b))
        });
        for v in order {
            self.nodes += 1;
            if self.nodes > self.node_cap {
                return Err(Error::resource(format!(
                    "enumeration exceeded the node cap of {}",
                    self.node_cap
                )));
            }
            let d = rii * (v as f64 - center);
            let p2 = partial2 + d * d;
            if p2 > self.l2_budget(inc) {
                continue;
            }
            self.x[i] = v;
            if i == 0 {
                let bx = self.b.mul_int(&self.x);
                let resid: Vec<f64> = bx.iter().zip(self.t).map(|(a, b)| a - b).collect();
                inc.offer(&self.x, self.p.norm_pow(&resid));
            } else {
                self.descend(i - 1, p2, inc)?;
            }
        }
        self.x[i] = 0;
        Ok(())
    }
}

/// Offers every x ∈ Zⁿ with ‖Bx − t‖_p within the incumbent's bound.
/// Returns the number of nodes visited.
pub(crate) fn enumerate(
    b: &DenseMatrix,
    t: &[f64],
    p: PNorm,
    f: &Factored,
    inc: &mut Incumbent,
    node_cap: u64,
) -> Result<u64> {
    let n = b.cols();
    if n == 0 {
        inc.offer(&[], p.norm_pow(t));
        return Ok(1);
    }
    let mut s = Search {
        b,
        t,
        p,
        f,
        l2_factor: p.l2_factor(b.rows()),
        x: vec![0; n],
        nodes: 0,
        node_cap,
    };
    s.descend(n - 1, 0.0, inc)?;
    Ok(s.nodes)
}
