//! Branch and bound over the block structure of a reduction matrix.
//!
//! ‖A(w − x)‖_p^p splits into one term per constraint row (a function of
//! the block sums y^sum), one gadget term s_j^p‖G(w_j − x_j)‖_p^p per
//! variable, and for quantified layouts two rows per universal variable.
//! Variables are fixed one triple at a time. A triple only ranges over
//! z ∈ Z³ whose own gadget term fits in the budget; since G⁻¹ = (G + J)/4
//! has ℓ_∞ operator norm 1 this is a finite box around w_j. A constraint
//! row is charged as soon as its last variable is fixed, and the unfixed
//! variables are bounded below by their cheapest gadget term.

use std::cmp::Ordering;

use super::{BlockLayout, Incumbent, PNorm};
use crate::error::{Error, Result};
use crate::lattice::matrix::apply_g;

struct Candidate {
    z: [i64; 3],
    cost: f64,
}

struct Trailing {
    x: i64,
    cost: f64,
}

fn colex3(a: &[i64; 3], b: &[i64; 3]) -> Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

struct Search<'a> {
    layout: &'a BlockLayout,
    w: &'a [f64],
    p: PNorm,
    wsum: Vec<f64>,
    cands: Vec<Vec<Candidate>>,
    trailing: Vec<Vec<Trailing>>,
    /// suffix_lb[j]: lower bound on everything owned by variables j..n.
    suffix_lb: Vec<f64>,
    /// Constraints whose highest variable is j.
    completes_at: Vec<Vec<usize>>,
    x: Vec<i64>,
    ysum: Vec<f64>,
    nodes: u64,
    node_cap: u64,
}

impl Search<'_> {
    fn agg(&self, a: f64, b: f64) -> f64 {
        if self.p.is_infinite() {
            a.max(b)
        } else {
            a + b
        }
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(Error::resource(format!(
                "structured enumeration exceeded the node cap of {}",
                self.node_cap
            )));
        }
        Ok(())
    }

    fn constraint_cost(&self, j: usize, base: f64) -> f64 {
        let mut acc = base;
        for &i in &self.completes_at[j] {
            let v = self.layout.constraint_row(i, &self.ysum);
            acc = self.agg(acc, self.p.norm_pow(&[v]));
        }
        acc
    }

    fn visit(&mut self, j: usize, partial: f64, inc: &mut Incumbent) -> Result<()> {
        let n = self.layout.n;
        if j == n {
            inc.offer(&self.x, partial);
            return Ok(());
        }
        let rest = self.suffix_lb[j + 1];
        for ci in 0..self.cands[j].len() {
            self.tick()?;
            let (z, cost) = (self.cands[j][ci].z, self.cands[j][ci].cost);
            let p1 = self.agg(partial, cost);
            if self.agg(p1, rest) > inc.bound() {
                break;
            }
            self.x[j] = z[0];
            self.x[n + j] = z[1];
            self.x[2 * n + j] = z[2];
            self.ysum[j] = self.wsum[j] - (z[0] + z[1] + z[2]) as f64;

            if j < self.layout.n_universal {
                for ti in 0..self.trailing[j].len() {
                    self.tick()?;
                    let (xs, bc) = (self.trailing[j][ti].x, self.trailing[j][ti].cost);
                    let p2 = self.agg(p1, bc);
                    if self.agg(p2, rest) > inc.bound() {
                        break;
                    }
                    let ys = self.w[3 * n + j] - xs as f64;
                    let mid = 2.0 / 3.0 * self.ysum[j] - 2.0 * ys;
                    let p3 = self.constraint_cost(j, self.agg(p2, self.p.norm_pow(&[mid])));
                    if self.agg(p3, rest) > inc.bound() {
                        continue;
                    }
                    self.x[3 * n + j] = xs;
                    self.visit(j + 1, p3, inc)?;
                }
            } else {
                let p3 = self.constraint_cost(j, p1);
                if self.agg(p3, rest) > inc.bound() {
                    continue;
                }
                self.visit(j + 1, p3, inc)?;
            }
        }
        Ok(())
    }
}

/// Offers every integer coefficient vector x with ‖A(w − x)‖_p within the
/// incumbent's bound. Returns the number of nodes visited.
pub(crate) fn enumerate(
    layout: &BlockLayout,
    w: &[f64],
    p: PNorm,
    inc: &mut Incumbent,
    node_cap: u64,
) -> Result<u64> {
    let n = layout.n;
    let nu = layout.n_universal;
    if w.len() != layout.cols() {
        return Err(Error::input(format!(
            "coefficient target has length {}, expected {}",
            w.len(),
            layout.cols()
        )));
    }
    let radius = p.from_pow(inc.bound());
    if !radius.is_finite() {
        return Err(Error::input("structured enumeration needs a finite search radius"));
    }

    let mut cands = Vec::with_capacity(n);
    for j in 0..n {
        let s = layout.scales[j];
        if s <= 0.0 {
            return Err(Error::input(format!(
                "variable v{} has degree 0, so the basis is not of full column rank",
                j + 1
            )));
        }
        let wj = layout.triple(w, j);
        let hw = radius / s;
        let range = |c: f64| ((c - hw).ceil() as i64)..=((c + hw).floor() as i64);
        let mut list = Vec::new();
        for z0 in range(wj[0]) {
            for z1 in range(wj[1]) {
                for z2 in range(wj[2]) {
                    let z = [z0, z1, z2];
                    let d = [wj[0] - z0 as f64, wj[1] - z1 as f64, wj[2] - z2 as f64];
                    let g = apply_g(&d);
                    let cost = p.norm_pow(&[s * g[0], s * g[1], s * g[2]]);
                    if cost <= inc.bound() {
                        list.push(Candidate { z, cost });
                    }
                }
            }
        }
        list.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(colex3(&a.z, &b.z)));
        cands.push(list);
    }

    let mut trailing = Vec::with_capacity(nu);
    for i in 0..nu {
        let ws = w[3 * n + i];
        let hw = 3.0 * radius / 8.0;
        let mut list: Vec<Trailing> = (((ws - hw).ceil() as i64)..=((ws + hw).floor() as i64))
            .map(|x| Trailing {
                x,
                cost: p.norm_pow(&[8.0 / 3.0 * (ws - x as f64)]),
            })
            .collect();
        list.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.x.cmp(&b.x)));
        trailing.push(list);
    }

    let mut completes_at = vec![Vec::new(); n];
    for (i, c) in layout.constraints.iter().enumerate() {
        if let Some(&(last, _)) = c.iter().max_by_key(|(v, _)| *v) {
            completes_at[last].push(i);
        }
    }

    let mut search = Search {
        layout,
        w,
        p,
        wsum: (0..n).map(|j| w[j] + w[n + j] + w[2 * n + j]).collect(),
        cands,
        trailing,
        suffix_lb: vec![0.0; n + 1],
        completes_at,
        x: vec![0; layout.cols()],
        ysum: vec![0.0; n],
        nodes: 0,
        node_cap,
    };
    if search.cands.iter().any(Vec::is_empty) || search.trailing.iter().any(Vec::is_empty) {
        return Ok(0);
    }
    for j in (0..n).rev() {
        let mut own = search.cands[j][0].cost;
        if j < nu {
            own = search.agg(own, search.trailing[j][0].cost);
        }
        search.suffix_lb[j] = search.agg(own, search.suffix_lb[j + 1]);
    }
    search.visit(0, 0.0, inc)?;
    Ok(search.nodes)
}
