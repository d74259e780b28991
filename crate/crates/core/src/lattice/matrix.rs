use std::fmt::Write as _;

use serde::Serialize;

use super::norm::PNorm;
use crate::error::{Error, Result};
use crate::gadget::G;

/// Row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    structure: Structure,
}

/// What is known exactly about a matrix's entries.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum Structure {
    #[default]
    General,
    /// Every entry is an integer.
    Integer,
    /// Every entry is an integer multiple of 1/3.
    Thirds,
    /// The block matrix produced by the covering-radius reduction.
    Reduction(Box<BlockLayout>),
}

/// Block description of a reduction matrix
///
/// ```text
/// [ B/3  B/3  B/3 |  0  ]   m rows
/// [    G ⊗ D      |  0  ]   3n rows
/// [ ⅔I   ⅔I   ⅔I  | -2I ]   n' rows   (quantified only)
/// [  0    0    0  | 8/3 I]  n' rows   (quantified only)
/// ```
///
/// where `B` is the m×n signed incidence matrix, `D = diag(scales)` and the
/// `⅔I` blocks sit on the first n' columns of each n-column group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockLayout {
    pub n: usize,
    /// Per constraint row: (0-based variable, sign ±1).
    pub constraints: Vec<Vec<(usize, i8)>>,
    pub degrees: Vec<u32>,
    /// Diagonal of D.
    pub scales: Vec<f64>,
    pub n_universal: usize,
}

impl BlockLayout {
    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn rows(&self) -> usize {
        self.m() + 3 * self.n + 2 * self.n_universal
    }

    pub fn cols(&self) -> usize {
        3 * self.n + self.n_universal
    }

    /// Componentwise sum y¹ + y² + y³ of the three n-blocks.
    pub fn block_sum(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|j| y[j] + y[n + j] + y[2 * n + j]).collect()
    }

    /// The triple (y¹_j, y²_j, y³_j).
    pub fn triple(&self, y: &[f64], j: usize) -> [f64; 3] {
        [y[j], y[self.n + j], y[2 * self.n + j]]
    }

    /// Row value of constraint `i` applied to the block sums.
    pub fn constraint_row(&self, i: usize, ysum: &[f64]) -> f64 {
        self.constraints[i]
            .iter()
            .map(|&(j, s)| s as f64 * ysum[j])
            .sum::<f64>()
            / 3.0
    }

    /// Computes A·y block by block, in the same row order as the dense matrix.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let (n, m, nu) = (self.n, self.m(), self.n_universal);
        let ysum = self.block_sum(y);
        let mut out = Vec::with_capacity(self.rows());
        out.extend((0..m).map(|i| self.constraint_row(i, &ysum)));
        let mut gadget = vec![0.0; 3 * n];
        for j in 0..n {
            let gy = apply_g(&self.triple(y, j));
            for a in 0..3 {
                gadget[a * n + j] = self.scales[j] * gy[a];
            }
        }
        out.extend(gadget);
        out.extend((0..nu).map(|i| 2.0 / 3.0 * ysum[i] - 2.0 * y[3 * n + i]));
        out.extend((0..nu).map(|i| 8.0 / 3.0 * y[3 * n + i]));
        out
    }

    /// ‖A·y‖_p^p (or ‖A·y‖_∞ for p = ∞) as the sum over blocks:
    /// the constraint part ‖B·y^sum‖_p^p / 3^p plus Σ_j s_j^p·‖G·y_j‖_p^p,
    /// plus the quantifier rows when present.
    pub fn norm_pow(&self, y: &[f64], p: PNorm) -> f64 {
        let (n, m, nu) = (self.n, self.m(), self.n_universal);
        let ysum = self.block_sum(y);
        let top: Vec<f64> = (0..m)
            .map(|i| self.constraints[i].iter().map(|&(j, s)| s as f64 * ysum[j]).sum())
            .collect();
        let mid: Vec<f64> = (0..nu).map(|i| 2.0 / 3.0 * ysum[i] - 2.0 * y[3 * n + i]).collect();
        let bot: Vec<f64> = (0..nu).map(|i| 8.0 / 3.0 * y[3 * n + i]).collect();
        if p.is_infinite() {
            let mut best = p.norm_pow(&top) / 3.0;
            for j in 0..n {
                best = best.max(self.scales[j] * p.norm_pow(&apply_g(&self.triple(y, j))));
            }
            best.max(p.norm_pow(&mid)).max(p.norm_pow(&bot))
        } else {
            let pv = p.value();
            let mut total = p.norm_pow(&top) / 3f64.powf(pv);
            for j in 0..n {
                total += self.scales[j].powf(pv) * p.norm_pow(&apply_g(&self.triple(y, j)));
            }
            total + p.norm_pow(&mid) + p.norm_pow(&bot)
        }
    }
}

pub(crate) fn apply_g(v: &[f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (a, row) in G.iter().enumerate() {
        out[a] = row.iter().zip(v).map(|(&g, x)| g as f64 * x).sum();
    }
    out
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::input(format!(
                "{} entries do not fill a {rows}×{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("matrix entries must be finite"));
        }
        let structure = detect_structure(&data);
        Ok(DenseMatrix {
            rows,
            cols,
            data,
            structure,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::input("ragged rows"));
        }
        DenseMatrix::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
            structure: Structure::Integer,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m.structure = detect_structure(&m.data);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Writes an entry. The structure tag is not updated; call
    /// [`DenseMatrix::refresh_structure`] after a batch of writes.
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn layout(&self) -> Option<&BlockLayout> {
        match &self.structure {
            Structure::Reduction(l) => Some(l),
            _ => None,
        }
    }

    pub fn refresh_structure(&mut self) {
        self.structure = detect_structure(&self.data);
    }

    /// Attaches a block layout. Its dimensions must match the matrix.
    pub fn with_layout(mut self, layout: BlockLayout) -> Result<Self> {
        if layout.rows() != self.rows || layout.cols() != self.cols {
            return Err(Error::input("block layout does not match matrix dimensions"));
        }
        self.structure = Structure::Reduction(Box::new(layout));
        Ok(self)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must equal column count");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul_int(&self, x: &[i64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must equal column count");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, &b)| a * b as f64).sum())
            .collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t.structure = detect_structure(&t.data);
        t
    }

    /// Kronecker product self ⊗ other.
    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = DenseMatrix::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.set(i * other.rows + k, j * other.cols + l, a * other.get(k, l));
                    }
                }
            }
        }
        out.structure = detect_structure(&out.data);
        out
    }

    /// Copies `block` into `self` with its top-left corner at (r0, c0).
    pub fn place(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.set(r0 + r, c0 + c, block.get(r, c));
            }
        }
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= s);
        out.structure = detect_structure(&out.data);
        out
    }
}

fn is_integral(x: f64) -> bool {
    x == x.round()
}

fn detect_structure(data: &[f64]) -> Structure {
    if data.iter().all(|&x| is_integral(x)) {
        Structure::Integer
    } else if data.iter().all(|&x| (3.0 * x - (3.0 * x).round()).abs() < 1e-12) {
        Structure::Thirds
    } else {
        Structure::General
    }
}

/// `matrix <rows> <cols>` followed by row-major entries with 17 significant
/// digits, one row per line.
pub fn serialize_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("matrix {} {}\n", m.rows, m.cols);
    for r in 0..m.rows {
        for (c, x) in m.row(r).iter().enumerate() {
            if c > 0 {
                out.push(' ');
            }
            write!(out, "{x:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`serialize_matrix`]. Blank lines and `#` comments are
/// skipped; entries may be split over lines arbitrarily.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing matrix header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let (rows, cols) = match toks.as_slice() {
        ["matrix", r, c] => {
            let r = r.parse::<usize>().map_err(|_| Error::parse(hline, "bad row count"))?;
            let c = c.parse::<usize>().map_err(|_| Error::parse(hline, "bad column count"))?;
            (r, c)
        }
        _ => return Err(Error::parse(hline, "header must be `matrix <rows> <cols>`")),
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut last = hline;
    for (line, body) in lines {
        last = line;
        for t in body.split_whitespace() {
            let x = t
                .parse::<f64>()
                .map_err(|_| Error::parse(line, format!("bad entry `{t}`")))?;
            data.push(x);
        }
    }
    if data.len() != rows * cols {
        return Err(Error::parse(
            last,
            format!("expected {} entries, found {}", rows * cols, data.len()),
        ));
    }
    DenseMatrix::new(rows, cols, data).map_err(|e| Error::parse(last, e.to_string()))
}
