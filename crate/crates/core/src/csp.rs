//! NAE-Ek-SAT formulas, plain and ∀∃-quantified.
//!
//! A constraint is satisfied iff its k literal values are not all equal. All
//! formula values are exact rationals. Exhaustive searches index assignments
//! by an integer whose most significant bit is variable 1, so iterating the
//! index upward walks assignments in lexicographic order.

use std::fmt;

use num_rational::Rational64;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default cap on the number of variables for exhaustive search.
pub const DEFAULT_VAR_CAP: usize = 24;

/// A possibly negated variable. Variables are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    var: usize,
    negated: bool,
}

impl Literal {
    pub fn new(var: usize, sign: i8) -> Result<Self> {
        if var == 0 {
            return Err(Error::input("variable indices start at 1"));
        }
        match sign {
            1 => Ok(Literal { var, negated: false }),
            -1 => Ok(Literal { var, negated: true }),
            _ => Err(Error::input(format!("literal sign must be ±1, got {sign}"))),
        }
    }

    pub fn pos(var: usize) -> Self {
        assert!(var >= 1);
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        assert!(var >= 1);
        Literal { var, negated: true }
    }

    /// Parses the signed-integer form used by the text format (`-3` is ¬v3).
    pub fn from_signed(x: i64) -> Result<Self> {
        if x == 0 {
            return Err(Error::input("literal 0 is not allowed"));
        }
        Literal::new(x.unsigned_abs() as usize, if x > 0 { 1 } else { -1 })
    }

    pub fn var(&self) -> usize {
        self.var
    }

    pub fn sign(&self) -> i8 {
        if self.negated {
            -1
        } else {
            1
        }
    }

    pub fn is_negated(&self) -> bool {
        self.negated
    }

    pub fn negate(self) -> Self {
        Literal {
            var: self.var,
            negated: !self.negated,
        }
    }

    pub fn to_signed(&self) -> i64 {
        self.var as i64 * self.sign() as i64
    }

    /// Value of the literal when its variable takes `value`.
    pub fn eval(&self, value: bool) -> bool {
        value != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬v{}", self.var)
        } else {
            write!(f, "v{}", self.var)
        }
    }
}

/// An ordered list of k literals over k distinct variables, k ∈ {3, 4}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    literals: Vec<Literal>,
}

impl Constraint {
    pub fn new(literals: Vec<Literal>) -> Result<Self> {
        let k = literals.len();
        if !(3..=4).contains(&k) {
            return Err(Error::input(format!("constraint arity must be 3 or 4, got {k}")));
        }
        for (i, a) in literals.iter().enumerate() {
            if literals[..i].iter().any(|b| b.var == a.var) {
                return Err(Error::input(format!("variable v{} repeated in a constraint", a.var)));
            }
        }
        Ok(Constraint { literals })
    }

    pub fn from_signed(lits: &[i64]) -> Result<Self> {
        Constraint::new(lits.iter().map(|&x| Literal::from_signed(x)).collect::<Result<_>>()?)
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn arity(&self) -> usize {
        self.literals.len()
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.literals.iter().map(|l| l.var)
    }

    pub fn max_var(&self) -> usize {
        self.vars().max().unwrap_or(0)
    }
}

/// A NAE-Ek-SAT formula over variables `1..=n`.
///
/// When `universal` is `Some(n')`, variables `1..=n'` are universally and the
/// rest existentially quantified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    n: usize,
    constraints: Vec<Constraint>,
    universal: Option<usize>,
}

impl Formula {
    pub fn new(n: usize, constraints: Vec<Constraint>) -> Result<Self> {
        Formula::build(n, constraints, None)
    }

    pub fn quantified(n: usize, n_universal: usize, constraints: Vec<Constraint>) -> Result<Self> {
        Formula::build(n, constraints, Some(n_universal))
    }

    fn build(n: usize, constraints: Vec<Constraint>, universal: Option<usize>) -> Result<Self> {
        if let Some(u) = universal {
            if u > n {
                return Err(Error::input(format!("{u} universal variables exceed n = {n}")));
            }
        }
        if let Some(k) = constraints.first().map(Constraint::arity) {
            if constraints.iter().any(|c| c.arity() != k) {
                return Err(Error::input("all constraints must have the same arity"));
            }
        }
        for c in &constraints {
            if c.max_var() > n {
                return Err(Error::input(format!(
                    "variable v{} out of range 1..={n}",
                    c.max_var()
                )));
            }
        }
        Ok(Formula {
            n,
            constraints,
            universal,
        })
    }

    /// Builds a formula from rows of signed integers.
    pub fn from_signed(n: usize, rows: &[&[i64]]) -> Result<Self> {
        Formula::new(n, rows.iter().map(|r| Constraint::from_signed(r)).collect::<Result<_>>()?)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Arity shared by all constraints, or `None` for an empty formula.
    pub fn arity(&self) -> Option<usize> {
        self.constraints.first().map(Constraint::arity)
    }

    pub fn universal(&self) -> Option<usize> {
        self.universal
    }

    pub fn is_quantified(&self) -> bool {
        self.universal.is_some()
    }

    /// Drops the quantifier split.
    pub fn unquantified(&self) -> Formula {
        Formula {
            universal: None,
            ..self.clone()
        }
    }

    /// `deg[j-1]` = number of constraints mentioning `v_j`.
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n];
        for c in &self.constraints {
            for v in c.vars() {
                deg[v - 1] += 1;
            }
        }
        deg
    }
}

/// A 0/1 value for each of the variables `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Assignment { bits }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        Assignment {
            bits: bits.iter().map(|&b| b != 0).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Assignment { bits: vec![false; n] }
    }

    /// Assignment number `index` in lexicographic order over `n` variables.
    pub fn from_index(index: u64, n: usize) -> Self {
        Assignment {
            bits: (1..=n).map(|j| (index >> (n - j)) & 1 == 1).collect(),
        }
    }

    pub fn index(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Value of variable `var` (1-based).
    pub fn value(&self, var: usize) -> bool {
        self.bits[var - 1]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn as_u8(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| b as u8).collect()
    }

    pub fn complement(&self) -> Self {
        Assignment {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

pub fn eval_constraint(c: &Constraint, a: &Assignment) -> Result<bool> {
    if c.max_var() > a.len() {
        return Err(Error::input(format!(
            "assignment of length {} does not cover v{}",
            a.len(),
            c.max_var()
        )));
    }
    Ok(eval_unchecked(c, a))
}

fn eval_unchecked(c: &Constraint, a: &Assignment) -> bool {
    let mut lits = c.literals.iter().map(|l| l.eval(a.value(l.var)));
    let first = lits.next().unwrap_or(false);
    lits.any(|v| v != first)
}

/// Number of constraints satisfied by `a`.
pub fn satisfied_count(phi: &Formula, a: &Assignment) -> Result<usize> {
    check_len(phi, a)?;
    Ok(phi.constraints.iter().filter(|c| eval_unchecked(c, a)).count())
}

/// Exact fraction of constraints satisfied by `a`.
pub fn formula_value(phi: &Formula, a: &Assignment) -> Result<Rational64> {
    if phi.constraints.is_empty() {
        return Err(Error::input("value of a formula with no constraints is undefined"));
    }
    let sat = satisfied_count(phi, a)?;
    Ok(Rational64::new(sat as i64, phi.constraints.len() as i64))
}

fn check_len(phi: &Formula, a: &Assignment) -> Result<()> {
    if a.len() != phi.n {
        return Err(Error::input(format!(
            "assignment length {} does not match n = {}",
            a.len(),
            phi.n
        )));
    }
    Ok(())
}

/// Constraint as bitmasks over an assignment index (variable 1 is the most
/// significant of `n` bits).
#[derive(Clone, Copy)]
struct PackedConstraint {
    pos: u64,
    neg: u64,
}

impl PackedConstraint {
    fn pack(phi: &Formula) -> Vec<PackedConstraint> {
        let n = phi.n;
        phi.constraints
            .iter()
            .map(|c| {
                let mut pc = PackedConstraint { pos: 0, neg: 0 };
                for l in &c.literals {
                    let bit = 1u64 << (n - l.var);
                    if l.negated {
                        pc.neg |= bit;
                    } else {
                        pc.pos |= bit;
                    }
                }
                pc
            })
            .collect()
    }

    #[inline]
    fn satisfied(&self, index: u64) -> bool {
        let mask = self.pos | self.neg;
        let lits = ((index & self.pos) | (!index & self.neg)) & mask;
        lits != 0 && lits != mask
    }
}

fn count_packed(packed: &[PackedConstraint], index: u64) -> usize {
    packed.iter().filter(|c| c.satisfied(index)).count()
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n > 62 {
        return Err(Error::resource(format!(
            "exhaustive search over {n} variables exceeds the cap of {cap}"
        )));
    }
    Ok(())
}

/// `val(φ)` by exhaustive search with the default cap.
pub fn brute_force_value(phi: &Formula) -> Result<(Rational64, Assignment)> {
    brute_force_value_capped(phi, DEFAULT_VAR_CAP)
}

/// Exact maximum of `val_ψ(φ)` over all assignments, with the
/// lexicographically smallest maximizer.
pub fn brute_force_value_capped(phi: &Formula, cap: usize) -> Result<(Rational64, Assignment)> {
    if phi.constraints.is_empty() {
        return Err(Error::input("value of a formula with no constraints is undefined"));
    }
    check_cap(phi.n, cap)?;
    let packed = PackedConstraint::pack(phi);
    let total = 1u64 << phi.n;
    let m = packed.len();

    // Chunks are scanned in parallel; the reduction keeps (max count, min index)
    // so the answer does not depend on how the range was split.
    const CHUNK: u64 = 1 << 14;
    let chunks = total.div_ceil(CHUNK);
    let (best_count, best_index) = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * CHUNK;
            let hi = (lo + CHUNK).min(total);
            let mut best = (0usize, lo);
            for idx in lo..hi {
                let c = count_packed(&packed, idx);
                if c > best.0 {
                    best = (c, idx);
                    if c == m {
                        break;
                    }
                }
            }
            best
        })
        .reduce(
            || (0, u64::MAX),
            |a, b| {
                if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
                    a
                } else {
                    b
                }
            },
        );
    Ok((
        Rational64::new(best_count as i64, m as i64),
        Assignment::from_index(best_index, phi.n),
    ))
}

/// Whether every assignment of the universal variables extends to a
/// satisfying assignment.
pub fn brute_force_pi2(phi: &Formula) -> Result<bool> {
    Ok(pi2_refutation(phi)?.is_none())
}

/// A universal assignment (over `v_1..v_{n'}`) with no satisfying existential
/// completion, if one exists. The lexicographically smallest is returned.
pub fn pi2_refutation(phi: &Formula) -> Result<Option<Vec<bool>>> {
    pi2_refutation_capped(phi, DEFAULT_VAR_CAP)
}

pub fn pi2_refutation_capped(phi: &Formula, cap: usize) -> Result<Option<Vec<bool>>> {
    let nu = phi
        .universal
        .ok_or_else(|| Error::input("∀∃ evaluation needs a quantified formula"))?;
    check_cap(phi.n, cap)?;
    let packed = PackedConstraint::pack(phi);
    let ne = phi.n - nu;
    let refuted = (0..1u64 << nu).into_par_iter().find_first(|&u| {
        !(0..1u64 << ne).any(|e| {
            let idx = (u << ne) | e;
            packed.iter().all(|c| c.satisfied(idx))
        })
    });
    Ok(refuted.map(|u| (1..=nu).map(|j| (u >> (nu - j)) & 1 == 1).collect()))
}

/// Splits each 4-ary constraint `{l1,l2,l3,l4}` into `{l1,l2,s}` and
/// `{l3,l4,¬s}` with a fresh variable `s = n + i` for constraint `i`.
///
/// A quantifier split is preserved; the fresh variables are existential.
pub fn reduce_e4_to_e3(phi: &Formula) -> Result<Formula> {
    if phi.constraints.iter().any(|c| c.arity() != 4) {
        return Err(Error::input("E4→E3 reduction needs every constraint to have 4 literals"));
    }
    let n = phi.n;
    let mut out = Vec::with_capacity(2 * phi.constraints.len());
    for (i, c) in phi.constraints.iter().enumerate() {
        let s = Literal::pos(n + i + 1);
        let l = &c.literals;
        out.push(Constraint::new(vec![l[0], l[1], s])?);
        out.push(Constraint::new(vec![l[2], l[3], s.negate()])?);
    }
    Formula::build(n + phi.constraints.len(), out, phi.universal)
}

/// Parses the text format:
///
/// ```text
/// # comment
/// nae <k> <n> <m>
/// 1 -2 3
/// ```
///
/// or `ae-nae <k> <nA> <nE> <m>` for a quantified formula.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let num = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::parse(hline, format!("expected a non-negative integer, got `{s}`")))
    };
    let (k, n, universal, m) = match toks.as_slice() {
        ["nae", k, n, m] => (num(k)?, num(n)?, None, num(m)?),
        ["ae-nae", k, na, ne, m] => {
            let na = num(na)?;
            (num(k)?, na + num(ne)?, Some(na), num(m)?)
        }
        _ => {
            return Err(Error::parse(
                hline,
                "header must be `nae <k> <n> <m>` or `ae-nae <k> <nA> <nE> <m>`",
            ))
        }
    };
    if !(3..=4).contains(&k) {
        return Err(Error::parse(hline, format!("arity must be 3 or 4, got {k}")));
    }

    let mut constraints = Vec::with_capacity(m);
    for (line, body) in lines.by_ref().take(m) {
        let lits = body
            .split_whitespace()
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| Error::parse(line, format!("bad literal `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if lits.len() != k {
            return Err(Error::parse(line, format!("expected {k} literals, got {}", lits.len())));
        }
        if let Some(&bad) = lits.iter().find(|&&x| x == 0 || x.unsigned_abs() as usize > n) {
            return Err(Error::parse(line, format!("literal {bad} out of range for n = {n}")));
        }
        let c = Constraint::from_signed(&lits).map_err(|e| Error::parse(line, e.to_string()))?;
        constraints.push(c);
    }
    if constraints.len() != m {
        return Err(Error::parse(
            text.lines().count().max(1),
            format!("expected {m} constraints, found {}", constraints.len()),
        ));
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, "trailing content after the last constraint"));
    }
    Formula::build(n, constraints, universal).map_err(|e| Error::parse(hline, e.to_string()))
}

/// Canonical text form; `parse_formula` inverts it.
///
/// An empty formula has no arity of its own and is written with k = 3.
pub fn serialize_formula(phi: &Formula) -> String {
    let k = phi.arity().unwrap_or(3);
    let m = phi.constraints.len();
    let mut out = match phi.universal {
        Some(u) => format!("ae-nae {k} {u} {} {m}\n", phi.n - u),
        None => format!("nae {k} {} {m}\n", phi.n),
    };
    for c in &phi.constraints {
        let row: Vec<String> = c.literals.iter().map(|l| l.to_signed().to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_formula(self))
    }
}

/// Random formula generators.
pub mod gen {
    use super::*;

    fn random_constraint<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize) -> Constraint {
        let lits = sample(rng, n, k)
            .into_iter()
            .map(|v| if rng.gen::<bool>() { Literal::pos(v + 1) } else { Literal::neg(v + 1) })
            .collect();
        Constraint { literals: lits }
    }

    fn check_shape(k: usize, n: usize) -> Result<()> {
        if !(3..=4).contains(&k) || n < k {
            return Err(Error::input(format!("cannot draw {k}-ary constraints over {n} variables")));
        }
        Ok(())
    }

    /// Uniform random NAE-Ek-SAT formula with `m` constraints.
    pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize, m: usize) -> Result<Formula> {
        check_shape(k, n)?;
        let cs = (0..m).map(|_| random_constraint(rng, k, n)).collect();
        Formula::new(n, cs)
    }

    /// Random formula with `n'` universal variables.
    pub fn random_quantified<R: Rng + ?Sized>(
        rng: &mut R,
        k: usize,
        n: usize,
        n_universal: usize,
        m: usize,
    ) -> Result<Formula> {
        check_shape(k, n)?;
        let cs = (0..m).map(|_| random_constraint(rng, k, n)).collect();
        Formula::quantified(n, n_universal, cs)
    }

    /// Formula satisfied by a hidden assignment, which is returned alongside.
    ///
    /// The assignment is drawn first and constraints are rejection-sampled
    /// until they are satisfied by it, so `val(φ) = 1`.
    pub fn planted_formula<R: Rng + ?Sized>(
        rng: &mut R,
        k: usize,
        n: usize,
        m: usize,
    ) -> Result<(Formula, Assignment)> {
        check_shape(k, n)?;
        let a = Assignment::new((0..n).map(|_| rng.gen()).collect());
        let mut cs = Vec::with_capacity(m);
        while cs.len() < m {
            let c = random_constraint(rng, k, n);
            if eval_unchecked(&c, &a) {
                cs.push(c);
            }
        }
        Ok((Formula::new(n, cs)?, a))
    }

    /// Every k-ary constraint over `n` variables, variables in increasing
    /// order, sign patterns in binary order.
    pub fn all_constraints(k: usize, n: usize) -> Vec<Constraint> {
        let mut out = Vec::new();
        let mut vars: Vec<usize> = (1..=k).collect();
        if k == 0 || n < k {
            return out;
        }
        loop {
            for signs in 0..1u32 << k {
                let lits = vars
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| Literal { var: v, negated: (signs >> (k - 1 - i)) & 1 == 1 })
                    .collect();
                out.push(Constraint { literals: lits });
            }
            // next k-combination of 1..=n
            let mut i = k;
            while i > 0 && vars[i - 1] == n - k + i {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            vars[i - 1] += 1;
            for j in i..k {
                vars[j] = vars[j - 1] + 1;
            }
        }
        out
    }

    /// All ordered `m`-tuples of k-ary constraints over `n` variables.
    pub fn all_formulas(k: usize, n: usize, m: usize) -> impl Iterator<Item = Formula> {
        let pool = all_constraints(k, n);
        let base = pool.len();
        let count = base.checked_pow(m as u32).unwrap_or(usize::MAX);
        (0..count).map(move |mut idx| {
            let mut cs = Vec::with_capacity(m);
            for _ in 0..m {
                cs.push(pool[idx % base].clone());
                idx /= base;
            }
            cs.reverse();
            Formula { n, constraints: cs, universal: None }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn a(bits: &[u8]) -> Assignment {
        Assignment::from_bits(bits)
    }

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn constraint_evaluation() {
        let c = Constraint::from_signed(&[1, 2, 3]).unwrap();
        assert!(eval_constraint(&c, &a(&[1, 0, 1])).unwrap());
        assert!(!eval_constraint(&c, &a(&[0, 0, 0])).unwrap());
        let c = Constraint::from_signed(&[1, -2, 3]).unwrap();
        assert!(eval_constraint(&c, &a(&[1, 1, 1])).unwrap());
        assert!(matches!(eval_constraint(&c, &a(&[1, 1])), Err(Error::Input(_))));
    }

    #[test]
    fn formula_values() {
        let phi = Formula::from_signed(3, &[&[1, 2, 3]]).unwrap();
        assert_eq!(formula_value(&phi, &a(&[1, 0, 0])).unwrap(), r(1, 1));
        assert_eq!(formula_value(&phi, &a(&[0, 0, 0])).unwrap(), r(0, 1));
        let phi = Formula::from_signed(3, &[&[1, 2, 3], &[-1, -2, -3]]).unwrap();
        assert_eq!(formula_value(&phi, &a(&[1, 1, 0])).unwrap(), r(1, 1));
        let empty = Formula::new(3, vec![]).unwrap();
        assert!(matches!(formula_value(&empty, &a(&[0, 0, 0])), Err(Error::Input(_))));
    }

    #[test]
    fn brute_force_single_constraint() {
        let phi = Formula::from_signed(3, &[&[1, 2, 3]]).unwrap();
        let (v, w) = brute_force_value(&phi).unwrap();
        assert_eq!(v, r(1, 1));
        assert_eq!(w, a(&[0, 0, 1]));

        let dup = Formula::from_signed(3, &[&[1i64, 2, 3][..]; 5]).unwrap();
        assert_eq!(brute_force_value(&dup).unwrap().0, r(1, 1));
    }

    #[test]
    fn brute_force_respects_cap() {
        let phi = Formula::from_signed(30, &[&[1, 2, 30]]).unwrap();
        assert!(matches!(brute_force_value(&phi), Err(Error::Resource { .. })));
        assert!(brute_force_value_capped(&phi, 10).is_err());
    }

    /// Second enumerator: recursive, independent of the bitmask packing.
    fn recursive_best(phi: &Formula, bits: &mut Vec<bool>) -> usize {
        if bits.len() == phi.num_vars() {
            let asg = Assignment::new(bits.clone());
            return phi.constraints().iter().filter(|c| eval_constraint(c, &asg).unwrap()).count();
        }
        let mut best = 0;
        for b in [false, true] {
            bits.push(b);
            best = best.max(recursive_best(phi, bits));
            bits.pop();
        }
        best
    }

    #[test]
    fn brute_force_matches_recursive_enumerator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let phi = gen::random_formula(&mut rng, 3, 4, 6).unwrap();
            let (v, w) = brute_force_value(&phi).unwrap();
            let best = recursive_best(&phi, &mut Vec::new());
            assert_eq!(v, r(best as i64, 6));
            assert_eq!(formula_value(&phi, &w).unwrap(), v);
        }
    }

    #[test]
    fn pi2_basics() {
        // n' = 0 reduces to satisfiability
        let phi = Formula::quantified(3, 0, vec![Constraint::from_signed(&[1, 2, 3]).unwrap()]).unwrap();
        assert!(brute_force_pi2(&phi).unwrap());

        // u1=u2=0 forces e1 = 1 and ¬e1 = 1
        let phi = Formula::quantified(
            3,
            2,
            vec![
                Constraint::from_signed(&[1, 2, 3]).unwrap(),
                Constraint::from_signed(&[1, 2, -3]).unwrap(),
            ],
        )
        .unwrap();
        assert!(!brute_force_pi2(&phi).unwrap());
        assert_eq!(pi2_refutation(&phi).unwrap(), Some(vec![false, false]));

        // with every variable universal, a satisfying set of branches is needed
        let phi = Formula::quantified(3, 3, vec![Constraint::from_signed(&[1, 2, 3]).unwrap()]).unwrap();
        assert!(!brute_force_pi2(&phi).unwrap());

        let plain = Formula::from_signed(3, &[&[1, 2, 3]]).unwrap();
        assert!(matches!(brute_force_pi2(&plain), Err(Error::Input(_))));
        assert!(Constraint::from_signed(&[1, 2, -2]).is_err());
    }

    #[test]
    fn e4_to_e3_shape() {
        let phi = Formula::from_signed(4, &[&[1, 2, 3, 4]]).unwrap();
        let out = reduce_e4_to_e3(&phi).unwrap();
        assert_eq!(out, Formula::from_signed(5, &[&[1, 2, 5], &[3, 4, -5]]).unwrap());
        assert_eq!(brute_force_value(&out).unwrap().0, r(1, 1));
        let e3 = Formula::from_signed(3, &[&[1, 2, 3]]).unwrap();
        assert!(matches!(reduce_e4_to_e3(&e3), Err(Error::Input(_))));
    }

    #[test]
    fn e4_to_e3_value_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let half = r(1, 2);
        for m in 1..=3 {
            for _ in 0..100 {
                let phi = gen::random_formula(&mut rng, 4, 4, m).unwrap();
                let out = reduce_e4_to_e3(&phi).unwrap();
                assert_eq!(out.num_vars(), 4 + m);
                assert_eq!(out.num_constraints(), 2 * m);
                let v = brute_force_value(&phi).unwrap().0;
                let v3 = brute_force_value(&out).unwrap().0;
                assert_eq!(v3, half * (r(1, 1) + v));
            }
        }
    }

    #[test]
    fn planted_formulas_are_satisfied() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (phi, asg) = gen::planted_formula(&mut rng, 3, 6, 8).unwrap();
            assert_eq!(formula_value(&phi, &asg).unwrap(), r(1, 1));
            assert_eq!(brute_force_value(&phi).unwrap().0, r(1, 1));
        }
    }

    #[test]
    fn nae4_random_satisfaction_is_seven_eighths() {
        for c in gen::all_constraints(4, 4) {
            let sat = (0..16)
                .filter(|&i| eval_constraint(&c, &Assignment::from_index(i, 4)).unwrap())
                .count();
            assert_eq!(sat, 14);
        }
    }

    #[test]
    fn degrees_sum_to_km() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let phi = gen::random_formula(&mut rng, 3, 7, 9).unwrap();
        assert_eq!(phi.degrees().iter().sum::<u32>(), 27);
    }

    #[test]
    fn all_constraints_counts() {
        assert_eq!(gen::all_constraints(3, 3).len(), 8);
        assert_eq!(gen::all_constraints(3, 4).len(), 4 * 8);
        assert_eq!(gen::all_formulas(3, 3, 2).count(), 64);
    }

    #[test]
    fn parse_examples() {
        let phi = parse_formula("nae 3 3 1\n1 -2 3").unwrap();
        assert_eq!(phi.constraints()[0].literals(), &[Literal::pos(1), Literal::neg(2), Literal::pos(3)]);
        let q = parse_formula("ae-nae 3 1 2 1\n1 2 3").unwrap();
        assert_eq!(q.universal(), Some(1));
        assert_eq!(q.num_vars(), 3);
        match parse_formula("nae 3 3 1\n1 1 2") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("nae 3 3 1\n# c\n1 2", 3),
            ("nae 3 3 1\n1 2 4", 2),
            ("nae 3 3 2\n1 2 3\n1 2 0", 3),
            ("nae 5 6 1\n1 2 3 4 5", 1),
            ("sat 3 3 1", 1),
        ];
        for (text, want) in cases {
            match parse_formula(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn canonical_serialization() {
        let text = "# comment\nnae   3 4 2\n\n 1 -2  3\n-4 2 1\n";
        let phi = parse_formula(text).unwrap();
        assert_eq!(serialize_formula(&phi), "nae 3 4 2\n1 -2 3\n-4 2 1\n");
        let q = parse_formula("ae-nae 3 1 2 1\n1 2 3\n").unwrap();
        assert_eq!(serialize_formula(&q), "ae-nae 3 1 2 1\n1 2 3\n");
    }
}
