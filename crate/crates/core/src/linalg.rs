//! Exact linear algebra over the rationals and bigraded chain complexes.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::poly::Q;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("d^2 != 0 from homological degree {0}")]
    NotAComplex(i64),
    #[error("differential from degree {0} does not preserve the quantum grading")]
    NotGraded(i64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// A sparse vector: index -> nonzero rational.
pub type SparseVec = BTreeMap<usize, Q>;

pub fn add_to(v: &mut SparseVec, index: usize, c: &Q) {
    if c.is_zero() {
        return;
    }
    let slot = v.entry(index).or_insert_with(Q::zero);
    *slot += c;
    if slot.is_zero() {
        v.remove(&index);
    }
}

/// Sparse matrix stored by columns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub columns: Vec<SparseVec>,
}

impl SparseMatrix {
    pub fn zero(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            columns: vec![SparseVec::new(); n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SparseMatrix::zero(n, n);
        for i in 0..n {
            m.columns[i].insert(i, Q::one());
        }
        m
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn add_entry(&mut self, row: usize, col: usize, c: &Q) {
        add_to(&mut self.columns[col], row, c);
    }

    pub fn get(&self, row: usize, col: usize) -> Q {
        self.columns[col].get(&row).cloned().unwrap_or_else(Q::zero)
    }

    pub fn apply(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&c, x) in v {
            for (&r, y) in &self.columns[c] {
                add_to(&mut out, r, &(x * y));
            }
        }
        out
    }

    /// `self * other`.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        SparseMatrix {
            n_rows: self.n_rows,
            columns: other.columns.iter().map(|c| self.apply(c)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| c.is_empty())
    }

    pub fn scale(&self, s: &Q) -> SparseMatrix {
        SparseMatrix {
            n_rows: self.n_rows,
            columns: self
                .columns
                .iter()
                .map(|c| {
                    if s.is_zero() {
                        SparseVec::new()
                    } else {
                        c.iter().map(|(&r, x)| (r, x * s)).collect()
                    }
                })
                .collect(),
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut t = SparseMatrix::zero(self.n_cols(), self.n_rows);
        for (c, col) in self.columns.iter().enumerate() {
            for (&r, x) in col {
                t.columns[r].insert(c, x.clone());
            }
        }
        t
    }

    pub fn to_dense(&self) -> QMatrix {
        let mut rows = vec![vec![Q::zero(); self.n_cols()]; self.n_rows];
        for (c, col) in self.columns.iter().enumerate() {
            for (&r, x) in col {
                rows[r][c] = x.clone();
            }
        }
        QMatrix { rows, n_cols: self.n_cols() }
    }

    /// Rank by sparse exact elimination over the rationals.
    pub fn rank(&self) -> usize {
        let mut pivots: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for col in &self.columns {
            let mut v = col.clone();
            while let Some((&r, x)) = v.iter().next() {
                match pivots.get(&r) {
                    Some(p) => {
                        let factor = x.clone();
                        for (&i, y) in p {
                            add_to(&mut v, i, &(-(&factor * y)));
                        }
                    }
                    None => {
                        let inv = x.recip();
                        let normalized = v.iter().map(|(&i, y)| (i, y * &inv)).collect();
                        pivots.insert(r, normalized);
                        break;
                    }
                }
            }
        }
        pivots.len()
    }

    /// Restriction to the given rows and columns, reindexed.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut row_index = BTreeMap::new();
        for (k, &r) in rows.iter().enumerate() {
            row_index.insert(r, k);
        }
        SparseMatrix {
            n_rows: rows.len(),
            columns: cols
                .iter()
                .map(|&c| {
                    self.columns[c]
                        .iter()
                        .filter_map(|(r, x)| row_index.get(r).map(|&k| (k, x.clone())))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Dense rational matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    pub rows: Vec<Vec<Q>>,
    pub n_cols: usize,
}

impl QMatrix {
    pub fn from_ints(rows: &[&[i64]]) -> Self {
        let n_cols = rows.first().map_or(0, |r| r.len());
        QMatrix {
            rows: rows
                .iter()
                .map(|r| r.iter().map(|&x| Q::from_integer(BigInt::from(x))).collect())
                .collect(),
            n_cols,
        }
    }

    pub fn zero(n_rows: usize, n_cols: usize) -> Self {
        QMatrix {
            rows: vec![vec![Q::zero(); n_cols]; n_rows],
            n_cols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zero(n, n);
        for i in 0..n {
            m.rows[i][i] = Q::one();
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zero(self.n_cols, self.n_rows());
        for (r, row) in self.rows.iter().enumerate() {
            for (c, x) in row.iter().enumerate() {
                t.rows[c][r] = x.clone();
            }
        }
        t
    }

    /// Rank by fraction-free (Bareiss) elimination after clearing
    /// denominators row by row.
    pub fn rank(&self) -> usize {
        let mut a: Vec<Vec<BigInt>> = self
            .rows
            .iter()
            .map(|row| {
                let l = row
                    .iter()
                    .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                row.iter()
                    .map(|x| x.numer() * (&l / x.denom()))
                    .collect()
            })
            .collect();
        let (m, n) = (a.len(), self.n_cols);
        let mut rank = 0;
        let mut prev = BigInt::one();
        for col in 0..n {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| !a[r][col].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            for r in rank + 1..m {
                for c in col + 1..n {
                    let v = &a[rank][col] * &a[r][c] - &a[r][col] * &a[rank][c];
                    a[r][c] = v / &prev;
                }
                a[r][col] = BigInt::zero();
            }
            prev = a[rank][col].clone();
            rank += 1;
        }
        rank
    }
}

/// A finitely supported table `(i, j) -> dimension`. Serializes as a list
/// of `[i, j, dim]` triples.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BigradedDimTable {
    pub dims: BTreeMap<(i64, i64), usize>,
}

impl Serialize for BigradedDimTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.triples().serialize(s)
    }
}

impl BigradedDimTable {
    pub fn get(&self, i: i64, j: i64) -> usize {
        self.dims.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn insert(&mut self, i: i64, j: i64, dim: usize) {
        if dim > 0 {
            self.dims.insert((i, j), dim);
        } else {
            self.dims.remove(&(i, j));
        }
    }

    /// The table with every quantum degree negated.
    pub fn q_mirror(&self) -> BigradedDimTable {
        BigradedDimTable {
            dims: self.dims.iter().map(|(&(i, j), &d)| ((i, -j), d)).collect(),
        }
    }

    pub fn total_dimension(&self) -> usize {
        self.dims.values().sum()
    }

    /// `sum dim * t^i q^j`.
    pub fn poincare(&self) -> Poincare {
        Poincare {
            terms: self.dims.iter().map(|(&k, &d)| (k, d as i64)).collect(),
        }
    }

    /// `sum (-1)^i dim * q^j`.
    pub fn euler_characteristic(&self) -> Laurent {
        let mut l = Laurent::zero();
        for (&(i, j), &d) in &self.dims {
            let s = if i.rem_euclid(2) == 0 { 1 } else { -1 };
            l.add_term(j, s * d as i64);
        }
        l
    }

    /// Rows `[i, j, dim]` in order.
    pub fn triples(&self) -> Vec<[i64; 3]> {
        self.dims.iter().map(|(&(i, j), &d)| [i, j, d as i64]).collect()
    }
}

impl fmt::Display for BigradedDimTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dims.is_empty() {
            return writeln!(f, "(zero)");
        }
        let is: Vec<i64> = self.dims.keys().map(|k| k.0).collect();
        let js: Vec<i64> = self.dims.keys().map(|k| k.1).collect();
        let (imin, imax) = (*is.iter().min().unwrap(), *is.iter().max().unwrap());
        let (jmin, jmax) = (*js.iter().min().unwrap(), *js.iter().max().unwrap());
        write!(f, "{:>5} |", "j\\i")?;
        for i in imin..=imax {
            write!(f, "{i:>4}")?;
        }
        writeln!(f)?;
        writeln!(f, "{}", "-".repeat(7 + 4 * (imax - imin + 1) as usize))?;
        for j in (jmin..=jmax).rev() {
            if (imin..=imax).all(|i| self.get(i, j) == 0) {
                continue;
            }
            write!(f, "{j:>5} |")?;
            for i in imin..=imax {
                match self.get(i, j) {
                    0 => write!(f, "{:>4}", ".")?,
                    d => write!(f, "{d:>4}")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A Laurent polynomial in `q` with integer coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Laurent {
    pub terms: BTreeMap<i64, i64>,
}

impl Laurent {
    pub fn zero() -> Self {
        Laurent::default()
    }

    pub fn monomial(exp: i64, c: i64) -> Self {
        let mut l = Laurent::zero();
        l.add_term(exp, c);
        l
    }

    pub fn add_term(&mut self, exp: i64, c: i64) {
        if c == 0 {
            return;
        }
        let slot = self.terms.entry(exp).or_insert(0);
        *slot += c;
        if *slot == 0 {
            self.terms.remove(&exp);
        }
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let mut out = self.clone();
        for (&e, &c) in &other.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        let mut out = Laurent::zero();
        for (&e1, &c1) in &self.terms {
            for (&e2, &c2) in &other.terms {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: usize) -> Laurent {
        (0..n).fold(Laurent::monomial(0, 1), |acc, _| acc.mul(self))
    }

    /// `q -> q^{-1}`.
    pub fn invert_q(&self) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|(&e, &c)| (-e, c)).collect(),
        }
    }
}

fn write_coeff(f: &mut fmt::Formatter<'_>, first: bool, c: i64, has_var: bool) -> fmt::Result {
    let abs = c.abs();
    match (first, c < 0) {
        (true, true) => write!(f, "-")?,
        (false, true) => write!(f, " - ")?,
        (false, false) => write!(f, " + ")?,
        (true, false) => {}
    }
    if abs != 1 || !has_var {
        write!(f, "{abs}")?;
        if has_var {
            write!(f, "*")?;
        }
    }
    Ok(())
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (&e, &c)) in self.terms.iter().enumerate() {
            write_coeff(f, k == 0, c, e != 0)?;
            match e {
                0 => {}
                1 => write!(f, "q")?,
                _ => write!(f, "q^{e}")?,
            }
        }
        Ok(())
    }
}

/// A Laurent polynomial in `t` and `q`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Poincare {
    pub terms: BTreeMap<(i64, i64), i64>,
}

impl Poincare {
    /// Specializes `t = -1`.
    pub fn at_t_minus_one(&self) -> Laurent {
        let mut l = Laurent::zero();
        for (&(i, j), &c) in &self.terms {
            l.add_term(j, if i.rem_euclid(2) == 0 { c } else { -c });
        }
        l
    }
}

impl fmt::Display for Poincare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (&(i, j), &c)) in self.terms.iter().enumerate() {
            write_coeff(f, k == 0, c, i != 0 || j != 0)?;
            let mut parts = Vec::new();
            match i {
                0 => {}
                1 => parts.push("t".to_string()),
                _ => parts.push(format!("t^{i}")),
            }
            match j {
                0 => {}
                1 => parts.push("q".to_string()),
                _ => parts.push(format!("q^{j}")),
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// A cochain complex of graded vector spaces with `d : C^i -> C^{i+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BigradedComplex {
    /// Quantum degree of every basis vector, per homological degree.
    pub groups: BTreeMap<i64, Vec<i64>>,
    /// `d^i`, with rows indexed by the basis of `C^{i+1}`.
    pub differentials: BTreeMap<i64, SparseMatrix>,
}

impl BigradedComplex {
    pub fn dim(&self, i: i64) -> usize {
        self.groups.get(&i).map_or(0, |g| g.len())
    }

    pub fn differential(&self, i: i64) -> SparseMatrix {
        self.differentials
            .get(&i)
            .cloned()
            .unwrap_or_else(|| SparseMatrix::zero(self.dim(i + 1), self.dim(i)))
    }

    /// Chain-group dimensions by bidegree.
    pub fn chain_table(&self) -> BigradedDimTable {
        let mut t = BigradedDimTable::default();
        for (&i, qs) in &self.groups {
            for &j in qs {
                t.insert(i, j, t.get(i, j) + 1);
            }
        }
        t
    }

    /// Checks `d^2 = 0`, shapes, and that every entry preserves the quantum degree.
    pub fn check(&self) -> Result<(), LinalgError> {
        for (&i, d) in &self.differentials {
            if d.n_cols() != self.dim(i) || d.n_rows != self.dim(i + 1) {
                return Err(LinalgError::Dimension(format!(
                    "d^{i} is {}x{} but C^{i} and C^{} have dimensions {} and {}",
                    d.n_rows,
                    d.n_cols(),
                    i + 1,
                    self.dim(i),
                    self.dim(i + 1)
                )));
            }
            let src = &self.groups[&i];
            let tgt = self.groups.get(&(i + 1)).cloned().unwrap_or_default();
            for (c, col) in d.columns.iter().enumerate() {
                if col.keys().any(|&r| tgt[r] != src[c]) {
                    return Err(LinalgError::NotGraded(i));
                }
            }
            if let Some(next) = self.differentials.get(&(i + 1)) {
                if !next.mul(d).is_zero() {
                    return Err(LinalgError::NotAComplex(i));
                }
            }
        }
        Ok(())
    }

    /// Homology dimensions, computed blockwise in each quantum degree.
    pub fn homology(&self) -> Result<BigradedDimTable, LinalgError> {
        self.check()?;
        let block_rank = |i: i64, j: i64| -> usize {
            let Some(d) = self.differentials.get(&i) else {
                return 0;
            };
            let cols: Vec<usize> = indices_with(&self.groups[&i], j);
            let rows: Vec<usize> = self
                .groups
                .get(&(i + 1))
                .map(|g| indices_with(g, j))
                .unwrap_or_default();
            if cols.is_empty() || rows.is_empty() {
                return 0;
            }
            d.submatrix(&rows, &cols).rank()
        };
        let mut table = BigradedDimTable::default();
        let chains = self.chain_table();
        for (&(i, j), &dim) in &chains.dims {
            let out_rank = block_rank(i, j);
            let in_rank = if self.groups.contains_key(&(i - 1)) {
                block_rank(i - 1, j)
            } else {
                0
            };
            table.insert(i, j, dim - out_rank - in_rank);
        }
        Ok(table)
    }
}

fn indices_with(qs: &[i64], j: i64) -> Vec<usize> {
    qs.iter()
        .enumerate()
        .filter(|(_, &x)| x == j)
        .map(|(k, _)| k)
        .collect()
}
