//! Graded Koszul matrix factorizations.
//!
//! A factorization is a tensor product of rows `(a_i, b_i)`, each the
//! two-term factorization `R --a--> R --b--> R`. The free module has basis
//! `|alpha>` for bit strings `alpha`, stored as a `u64` with bit `i` for
//! row `i`. The differential follows the Koszul sign rule
//! `d|alpha> = sum_i (-1)^{alpha_0 + ... + alpha_{i-1}} (a_i or b_i) |alpha +- e_i>`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::poly::{q, MultiPoly, PolyError, Substitution, Var, Q};

pub type State = u64;

/// Largest number of rows a state bit string can index.
pub const MAX_ROWS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KoszulError {
    #[error("factorization has nonzero potential {0}")]
    NonzeroPotential(String),
    #[error(transparent)]
    NotLinearIn(#[from] PolyError),
    #[error("cannot scale a row by zero")]
    ZeroScalar,
    #[error("row {0} is out of range")]
    RowOutOfRange(usize),
    #[error("factorization has {0} rows; at most {MAX_ROWS} are supported")]
    TooManyRows(usize),
}

/// One factor `R{shift} --a--> R{shift + inner} --b--> R{shift}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KoszulRow {
    pub a: MultiPoly,
    pub b: MultiPoly,
    /// Quantum shift of the `|0>` summand.
    pub shift: i64,
    /// Quantum shift of `|1>` relative to `|0>`.
    pub inner: i64,
}

impl KoszulRow {
    /// A row whose differentials are homogeneous of degree 3; the inner
    /// shift is read off from whichever entry is nonzero.
    pub fn new(a: MultiPoly, b: MultiPoly, shift: i64) -> Self {
        let inner = if let Ok(Some(da)) = a.q_degree() {
            3 - da
        } else if let Ok(Some(db)) = b.q_degree() {
            db - 3
        } else {
            0
        };
        KoszulRow { a, b, shift, inner }
    }

    pub fn with_inner(a: MultiPoly, b: MultiPoly, shift: i64, inner: i64) -> Self {
        KoszulRow { a, b, shift, inner }
    }

    pub fn potential(&self) -> MultiPoly {
        &self.a * &self.b
    }

    pub fn substitute(&self, s: &Substitution) -> KoszulRow {
        KoszulRow {
            a: self.a.substitute(s),
            b: self.b.substitute(s),
            shift: self.shift,
            inner: self.inner,
        }
    }

    fn entry(&self, bit: bool) -> &MultiPoly {
        if bit {
            &self.b
        } else {
            &self.a
        }
    }
}

/// A vector of the free module: state -> nonzero polynomial coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Chain {
    terms: BTreeMap<State, MultiPoly>,
}

impl Chain {
    pub fn zero() -> Self {
        Chain::default()
    }

    pub fn basis(state: State) -> Self {
        Chain::term(state, MultiPoly::one())
    }

    pub fn term(state: State, p: MultiPoly) -> Self {
        let mut c = Chain::zero();
        c.add(state, p);
        c
    }

    pub fn add(&mut self, state: State, p: MultiPoly) {
        if p.is_zero() {
            return;
        }
        let slot = self.terms.entry(state).or_default();
        *slot += &p;
        if slot.is_zero() {
            self.terms.remove(&state);
        }
    }

    pub fn add_chain(&mut self, other: &Chain) {
        for (&s, p) in &other.terms {
            self.add(s, p.clone());
        }
    }

    pub fn scale(&self, p: &MultiPoly) -> Chain {
        let mut out = Chain::zero();
        for (&s, c) in &self.terms {
            out.add(s, c * p);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, state: State) -> MultiPoly {
        self.terms.get(&state).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (State, &MultiPoly)> {
        self.terms.iter().map(|(&s, p)| (s, p))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn substitute(&self, s: &Substitution) -> Chain {
        let mut out = Chain::zero();
        for (&st, p) in &self.terms {
            out.add(st, p.substitute(s));
        }
        out
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (s, p)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({p})|{s:b}>")?;
        }
        Ok(())
    }
}

fn parity_below(state: State, j: usize) -> bool {
    let mask = if j >= 64 { u64::MAX } else { (1u64 << j) - 1 };
    (state & mask).count_ones() % 2 == 1
}

fn parity_from(state: State, j: usize) -> bool {
    if j >= 64 {
        return false;
    }
    (state >> j).count_ones() % 2 == 1
}

/// Removes bit `j`, shifting higher bits down.
pub fn remove_bit(state: State, j: usize) -> State {
    let low = state & ((1u64 << j) - 1);
    let high = if j + 1 >= 64 { 0 } else { (state >> (j + 1)) << j };
    low | high
}

/// Inserts `bit` at position `j`, shifting higher bits up.
pub fn insert_bit(state: State, j: usize, bit: bool) -> State {
    let low = state & ((1u64 << j) - 1);
    let high = (state >> j) << (j + 1);
    low | high | ((bit as u64) << j)
}

fn sign_poly(negative: bool, p: &MultiPoly) -> MultiPoly {
    if negative {
        -p
    } else {
        p.clone()
    }
}

/// A graded Koszul matrix factorization.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KoszulMF {
    pub rows: Vec<KoszulRow>,
    pub global_shift: i64,
    /// The `<1>` shift of the Z/2 grading.
    pub z2_shift: u8,
}

impl KoszulMF {
    pub fn new(rows: Vec<KoszulRow>) -> Self {
        KoszulMF {
            rows,
            global_shift: 0,
            z2_shift: 0,
        }
    }

    pub fn empty() -> Self {
        KoszulMF::default()
    }

    /// `C_2(L^i_j)`: `(z_i^2 + z_i z_j + z_j^2, z_i - z_j)`, `|1>` shifted by -1.
    pub fn arc(i: Var, j: Var) -> Self {
        KoszulMF::new(vec![arc_row(i, j)])
    }

    /// `C_2(E^{ij}_{kl})`.
    pub fn wide_edge(i: Var, j: Var, k: Var, l: Var) -> Self {
        KoszulMF::new(wide_edge_rows(i, j, k, l).to_vec())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_states(&self) -> Result<u64, KoszulError> {
        if self.rows.len() >= MAX_ROWS {
            return Err(KoszulError::TooManyRows(self.rows.len()));
        }
        Ok(1u64 << self.rows.len())
    }

    /// Rows concatenated, shifts added.
    pub fn tensor(&self, other: &KoszulMF) -> KoszulMF {
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        KoszulMF {
            rows,
            global_shift: self.global_shift + other.global_shift,
            z2_shift: (self.z2_shift + other.z2_shift) % 2,
        }
    }

    pub fn potential(&self) -> MultiPoly {
        let mut w = MultiPoly::zero();
        for r in &self.rows {
            w += &r.potential();
        }
        w
    }

    /// Quantum degree of the basis vector `|alpha>`.
    pub fn state_degree(&self, state: State) -> i64 {
        self.global_shift
            + self
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| r.shift + if state >> i & 1 == 1 { r.inner } else { 0 })
                .sum::<i64>()
    }

    /// Z/2 degree of `|alpha>`.
    pub fn state_parity(&self, state: State) -> u8 {
        ((state.count_ones() as u8) + self.z2_shift) % 2
    }

    pub fn apply_differential(&self, chain: &Chain) -> Chain {
        let mut out = Chain::zero();
        for (s, p) in chain.iter() {
            for (i, row) in self.rows.iter().enumerate() {
                let bit = s >> i & 1 == 1;
                let e = row.entry(bit);
                if e.is_zero() {
                    continue;
                }
                let sign = parity_below(s, i);
                out.add(s ^ (1 << i), sign_poly(sign, &(e * p)));
            }
        }
        out
    }

    /// The two differentials as matrices between the even and odd parts.
    pub fn differential(&self) -> Result<(PolyMatrix, PolyMatrix), KoszulError> {
        let n = self.n_states()?;
        let even: Vec<State> = (0..n).filter(|&s| self.state_parity(s) == 0).collect();
        let odd: Vec<State> = (0..n).filter(|&s| self.state_parity(s) == 1).collect();
        let d0 = PolyMatrix::from_map(&odd, &even, |s| self.apply_differential(&Chain::basis(s)));
        let d1 = PolyMatrix::from_map(&even, &odd, |s| self.apply_differential(&Chain::basis(s)));
        Ok((d0, d1))
    }

    pub fn substitute(&self, s: &Substitution) -> KoszulMF {
        KoszulMF {
            rows: self.rows.iter().map(|r| r.substitute(s)).collect(),
            global_shift: self.global_shift,
            z2_shift: self.z2_shift,
        }
    }

    /// Replaces row `j` by `(c a_j, c^{-1} b_j)`.
    pub fn scale_row(&self, j: usize, c: &Q) -> Result<KoszulMF, KoszulError> {
        if c.is_zero() {
            return Err(KoszulError::ZeroScalar);
        }
        if j >= self.rows.len() {
            return Err(KoszulError::RowOutOfRange(j));
        }
        let mut out = self.clone();
        out.rows[j].a = out.rows[j].a.scale(c);
        out.rows[j].b = out.rows[j].b.scale(&c.recip());
        Ok(out)
    }

    /// Drops row `j` using the linear entry on `side`, substituting `t`
    /// away everywhere else.
    pub fn eliminate_row(
        &self,
        j: usize,
        side: Side,
        t: Var,
    ) -> Result<(KoszulMF, Elimination), KoszulError> {
        if j >= self.rows.len() {
            return Err(KoszulError::RowOutOfRange(j));
        }
        let w = self.potential();
        if !w.is_zero() {
            return Err(KoszulError::NonzeroPotential(w.to_string()));
        }
        let row = &self.rows[j];
        let entry = match side {
            Side::A => &row.a,
            Side::B => &row.b,
        };
        let (lambda, rest) = entry.linear_split(t)?;
        let image = rest.scale(&(-lambda.recip()));
        let pi = Substitution::single(t, image.clone());
        let mut others: Vec<KoszulRow> = self.rows.clone();
        others.remove(j);
        let reduced = KoszulMF {
            rows: others.iter().map(|r| r.substitute(&pi)).collect(),
            global_shift: self.global_shift
                + row.shift
                + match side {
                    Side::A => row.inner,
                    Side::B => 0,
                },
            z2_shift: match side {
                Side::A => (self.z2_shift + 1) % 2,
                Side::B => self.z2_shift,
            },
        };
        let quotients = others
            .iter()
            .map(|r| {
                [false, true].map(|bit| {
                    let e = r.entry(bit);
                    (e - &e.substitute(&pi))
                        .div_linear(t, &image)
                        .expect("difference of an entry and its image is divisible by t - c")
                })
            })
            .collect();
        let elim = Elimination {
            row: j,
            side,
            var: t,
            lambda,
            image,
            pi,
            quotients,
        };
        Ok((reduced, elim))
    }

    /// Debug dump: one `(a | b) {shift}` line per row, then the shifts.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!("({} | {}) {{{}}}\n", r.a, r.b, r.shift));
        }
        out.push_str(&format!(
            "global {{{}}} z2_shift <{}>\n",
            self.global_shift, self.z2_shift
        ));
        out
    }
}

/// `(z_i^2 + z_i z_j + z_j^2, z_i - z_j)` with `|1>` shifted by -1.
pub fn arc_row(i: Var, j: Var) -> KoszulRow {
    let (zi, zj) = (MultiPoly::var(i), MultiPoly::var(j));
    let a = &(&(&zi * &zi) + &(&zi * &zj)) + &(&zj * &zj);
    KoszulRow::with_inner(a, &zi - &zj, 0, -1)
}

/// The two rows of `C_2(E^{ij}_{kl})`.
pub fn wide_edge_rows(i: Var, j: Var, k: Var, l: Var) -> [KoszulRow; 2] {
    let (zi, zj, zk, zl) = (
        MultiPoly::var(i),
        MultiPoly::var(j),
        MultiPoly::var(k),
        MultiPoly::var(l),
    );
    let row1 = KoszulRow::with_inner(
        (&zk + &zl).scale(&q(-3)),
        &(&zi * &zj) - &(&zk * &zl),
        0,
        1,
    );
    let row2 = KoszulRow::with_inner(
        crate::poly::wide_edge_u(&zi, &zj, &zk, &zl),
        &(&(&zi + &zj) - &zk) - &zl,
        -1,
        -1,
    );
    [row1, row2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Side {
    /// Eliminate using `a_j`: keeps the `|1>` half of the row.
    A,
    /// Eliminate using `b_j`: keeps the `|0>` half of the row.
    B,
}

/// One application of the elimination lemma, with its two chain maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub row: usize,
    pub side: Side,
    pub var: Var,
    /// Coefficient of `var` in the eliminated entry.
    pub lambda: Q,
    /// `pi(var)`.
    pub image: MultiPoly,
    pub pi: Substitution,
    /// `(e - pi(e)) / (t - c)` for the `|0>` and `|1>` entries of every
    /// remaining row.
    quotients: Vec<[MultiPoly; 2]>,
}

impl Elimination {
    /// The quasi-isomorphism onto the smaller factorization.
    pub fn forward(&self, chain: &Chain) -> Chain {
        let j = self.row;
        let mut out = Chain::zero();
        for (s, p) in chain.iter() {
            let bit = s >> j & 1 == 1;
            match self.side {
                Side::B if !bit => out.add(remove_bit(s, j), p.substitute(&self.pi)),
                Side::A if bit => {
                    let sign = parity_from(s, j + 1);
                    out.add(remove_bit(s, j), sign_poly(sign, &p.substitute(&self.pi)));
                }
                _ => {}
            }
        }
        out
    }

    /// A chain-map section of [`Elimination::forward`].
    pub fn backward(&self, chain: &Chain) -> Chain {
        self.backward_mod(chain, &|p| p)
    }

    /// [`Elimination::backward`] followed by a ring map applied to every
    /// coefficient; `reduce` must be a ring homomorphism (possibly onto a
    /// quotient) for the result to equal `reduce(backward(chain))`.
    pub fn backward_mod(&self, chain: &Chain, reduce: &dyn Fn(MultiPoly) -> MultiPoly) -> Chain {
        let j = self.row;
        let inv = self.lambda.recip();
        // Q = (d_N - pi(d_N)) / (t - c), scaled by 1/lambda, per row and bit
        let scaled: Vec<[MultiPoly; 2]> = self
            .quotients
            .iter()
            .map(|q| [reduce(q[0].scale(&inv)), reduce(q[1].scale(&inv))])
            .collect();
        let mut out = Chain::zero();
        for (s, p) in chain.iter() {
            match self.side {
                Side::B => out.add(insert_bit(s, j, false), p.clone()),
                Side::A => out.add(insert_bit(s, j, true), sign_poly(parity_from(s, j), p)),
            }
            for (i, q) in scaled.iter().enumerate() {
                let q = &q[(s >> i & 1) as usize];
                if q.is_zero() {
                    continue;
                }
                let s2 = s ^ (1 << i);
                let term = reduce(q * p);
                let sign = parity_below(s, i)
                    ^ match self.side {
                        Side::B => !parity_below(s2, j),
                        Side::A => s.count_ones() % 2 == 1,
                    };
                let target = insert_bit(s2, j, self.side == Side::B);
                out.add(target, sign_poly(sign, &term));
            }
        }
        out
    }
}

/// A sequence of eliminations from a factorization down to a reduced one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Reduction {
    pub steps: Vec<Elimination>,
}

impl Reduction {
    pub fn forward(&self, chain: &Chain) -> Chain {
        self.steps.iter().fold(chain.clone(), |c, e| e.forward(&c))
    }

    pub fn backward(&self, chain: &Chain) -> Chain {
        self.steps.iter().rev().fold(chain.clone(), |c, e| e.backward(&c))
    }

    /// See [`Elimination::backward_mod`].
    pub fn backward_mod(&self, chain: &Chain, reduce: &dyn Fn(MultiPoly) -> MultiPoly) -> Chain {
        self.steps
            .iter()
            .rev()
            .fold(chain.clone(), |c, e| e.backward_mod(&c, reduce))
    }

    /// Composite substitution: the image of `v` after every step.
    pub fn image_of(&self, v: Var) -> MultiPoly {
        self.steps
            .iter()
            .fold(MultiPoly::var(v), |p, e| p.substitute(&e.pi))
    }
}

/// A dense polynomial matrix with labelled rows and columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    pub row_states: Vec<State>,
    pub col_states: Vec<State>,
    pub entries: Vec<Vec<MultiPoly>>,
}

impl PolyMatrix {
    pub fn from_map(rows: &[State], cols: &[State], f: impl Fn(State) -> Chain) -> Self {
        let mut entries = vec![vec![MultiPoly::zero(); cols.len()]; rows.len()];
        for (c, &s) in cols.iter().enumerate() {
            let image = f(s);
            for (t, p) in image.iter() {
                let r = rows
                    .iter()
                    .position(|&x| x == t)
                    .expect("image lies in the target basis");
                entries[r][c] = p.clone();
            }
        }
        PolyMatrix {
            row_states: rows.to_vec(),
            col_states: cols.to_vec(),
            entries,
        }
    }

    pub fn mul(&self, other: &PolyMatrix) -> PolyMatrix {
        assert_eq!(self.col_states, other.row_states);
        let mut entries = vec![vec![MultiPoly::zero(); other.col_states.len()]; self.row_states.len()];
        for (r, row) in entries.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                for k in 0..self.col_states.len() {
                    let x = &self.entries[r][k];
                    let y = &other.entries[k][c];
                    if !x.is_zero() && !y.is_zero() {
                        *slot += &(x * y);
                    }
                }
            }
        }
        PolyMatrix {
            row_states: self.row_states.clone(),
            col_states: other.col_states.clone(),
            entries,
        }
    }

    pub fn is_scalar(&self, p: &MultiPoly) -> bool {
        self.row_states == self.col_states
            && self.entries.iter().enumerate().all(|(r, row)| {
                row.iter()
                    .enumerate()
                    .all(|(c, x)| if r == c { x == p } else { x.is_zero() })
            })
    }
}

/// A morphism of factorizations given by its images of basis vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MFMorphism {
    pub source: KoszulMF,
    pub target: KoszulMF,
    pub q_degree: i64,
    columns: BTreeMap<State, Chain>,
}

impl MFMorphism {
    pub fn from_columns(
        source: KoszulMF,
        target: KoszulMF,
        q_degree: i64,
        columns: BTreeMap<State, Chain>,
    ) -> Self {
        MFMorphism {
            source,
            target,
            q_degree,
            columns,
        }
    }

    pub fn identity(mf: &KoszulMF) -> Result<Self, KoszulError> {
        let n = mf.n_states()?;
        let columns = (0..n).map(|s| (s, Chain::basis(s))).collect();
        Ok(MFMorphism::from_columns(mf.clone(), mf.clone(), 0, columns))
    }

    pub fn column(&self, state: State) -> Chain {
        self.columns.get(&state).cloned().unwrap_or_default()
    }

    pub fn apply(&self, chain: &Chain) -> Chain {
        let mut out = Chain::zero();
        for (s, p) in chain.iter() {
            out.add_chain(&self.column(s).scale(p));
        }
        out
    }

    /// Applies `id (x) self (x) id` where `self` acts on rows
    /// `offset .. offset + source.n_rows()`. The morphism is even, so no
    /// Koszul signs arise.
    pub fn apply_local(&self, offset: usize, chain: &Chain) -> Chain {
        let width = self.source.n_rows();
        assert_eq!(width, self.target.n_rows(), "local morphisms preserve the row count");
        let mask = ((1u64 << width) - 1) << offset;
        let mut out = Chain::zero();
        for (s, p) in chain.iter() {
            let local = (s & mask) >> offset;
            let rest = s & !mask;
            for (t, c) in self.column(local).iter() {
                out.add(rest | (t << offset), c * p);
            }
        }
        out
    }

    pub fn compose(&self, first: &MFMorphism) -> MFMorphism {
        let columns = first
            .columns
            .iter()
            .map(|(&s, c)| (s, self.apply(c)))
            .collect();
        MFMorphism::from_columns(
            first.source.clone(),
            self.target.clone(),
            self.q_degree + first.q_degree,
            columns,
        )
    }

    /// Checks `d_target . f = f . d_source` on every basis vector.
    pub fn commutes_with_differentials(&self) -> Result<bool, KoszulError> {
        let n = self.source.n_states()?;
        Ok((0..n).all(|s| {
            let lhs = self.target.apply_differential(&self.column(s));
            let rhs = self.apply(&self.source.apply_differential(&Chain::basis(s)));
            lhs == rhs
        }))
    }

    /// Checks that every nonzero entry has the recorded degree.
    pub fn is_homogeneous(&self) -> Result<bool, KoszulError> {
        for (&s, col) in &self.columns {
            let ds = self.source.state_degree(s);
            for (t, p) in col.iter() {
                let dt = self.target.state_degree(t);
                for (m, _) in p.terms() {
                    if dt + 2 * m.total_degree() as i64 - ds != self.q_degree {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Matrix of the even part (`f^0`) or odd part (`f^1`).
    pub fn matrix(&self, parity: u8) -> Result<PolyMatrix, KoszulError> {
        let src: Vec<State> = (0..self.source.n_states()?)
            .filter(|&s| self.source.state_parity(s) == parity)
            .collect();
        let tgt: Vec<State> = (0..self.target.n_states()?)
            .filter(|&s| self.target.state_parity(s) == parity)
            .collect();
        Ok(PolyMatrix::from_map(&tgt, &src, |s| self.column(s)))
    }
}

// local basis labels for the two-row factorizations of a crossing
const S00: State = 0b00;
const S11: State = 0b11;
/// `|01>`: first row 0, second row 1.
const S01: State = 0b10;
/// `|10>`: first row 1, second row 0.
const S10: State = 0b01;

/// Variables `(z_i, z_j, z_k, z_l)` around a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingVars {
    pub i: Var,
    pub j: Var,
    pub k: Var,
    pub l: Var,
}

impl CrossingVars {
    /// `C_2(Gamma_0) = C_2(L^j_k) (x) C_2(L^i_l)`.
    pub fn gamma0(&self) -> KoszulMF {
        KoszulMF::new(vec![arc_row(self.j, self.k), arc_row(self.i, self.l)])
    }

    /// `C_2(Gamma_1) = C_2(E^{ij}_{kl})`.
    pub fn gamma1(&self) -> KoszulMF {
        KoszulMF::wide_edge(self.i, self.j, self.k, self.l)
    }

    fn z(&self) -> (MultiPoly, MultiPoly, MultiPoly, MultiPoly) {
        (
            MultiPoly::var(self.i),
            MultiPoly::var(self.j),
            MultiPoly::var(self.k),
            MultiPoly::var(self.l),
        )
    }
}

fn column(entries: &[(State, MultiPoly)]) -> Chain {
    let mut c = Chain::zero();
    for (s, p) in entries {
        c.add(*s, p.clone());
    }
    c
}

/// `chi_0 : C_2(Gamma_0) -> C_2(Gamma_1)` given by `U^0`, `U^1`.
pub fn chi0(v: CrossingVars) -> MFMorphism {
    let (zi, zj, zk, zl) = v.z();
    let one = MultiPoly::one();
    let mut cols = BTreeMap::new();
    cols.insert(
        S00,
        column(&[
            (S00, &zi - &zk),
            (S11, &(&(&zi - &zj) - &zk.scale(&q(2))) - &zl),
        ]),
    );
    cols.insert(S11, column(&[(S11, one.clone())]));
    cols.insert(S01, column(&[(S01, zi.clone()), (S10, -&one)]));
    cols.insert(S10, column(&[(S01, -&zk), (S10, one)]));
    MFMorphism::from_columns(v.gamma0(), v.gamma1(), 1, cols)
}

/// `chi_1 : C_2(Gamma_1) -> C_2(Gamma_0)` given by `V^0`, `V^1`.
pub fn chi1(v: CrossingVars) -> MFMorphism {
    let (zi, zj, zk, zl) = v.z();
    let one = MultiPoly::one();
    let mut cols = BTreeMap::new();
    cols.insert(
        S00,
        column(&[
            (S00, one.clone()),
            (S11, &(&(&zj - &zi) + &zk.scale(&q(2))) + &zl),
        ]),
    );
    cols.insert(S11, column(&[(S11, &zi - &zk)]));
    cols.insert(S01, column(&[(S01, one.clone()), (S10, one.clone())]));
    cols.insert(S10, column(&[(S01, zk), (S10, zi)]));
    MFMorphism::from_columns(v.gamma1(), v.gamma0(), 1, cols)
}

/// `forward_target . f . backward_source` on the reduced bases.
pub fn transport(
    f: &MFMorphism,
    source: &Reduction,
    reduced_source: &KoszulMF,
    target: &Reduction,
    reduced_target: &KoszulMF,
) -> Result<MFMorphism, KoszulError> {
    let n = reduced_source.n_states()?;
    let columns = (0..n)
        .map(|s| {
            let up = source.backward(&Chain::basis(s));
            (s, target.forward(&f.apply(&up)))
        })
        .collect();
    Ok(MFMorphism::from_columns(
        reduced_source.clone(),
        reduced_target.clone(),
        f.q_degree,
        columns,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::q_frac;

    fn z(i: Var) -> MultiPoly {
        MultiPoly::var(i)
    }

    fn squares_closed() -> Vec<KoszulMF> {
        vec![
            // unknot with two marks
            KoszulMF::arc(0, 1).tensor(&KoszulMF::arc(1, 0)),
            // a wide edge closed by two arcs (two circles after deletion? no: one theta graph)
            KoszulMF::wide_edge(0, 1, 2, 3)
                .tensor(&KoszulMF::arc(2, 0))
                .tensor(&KoszulMF::arc(3, 1)),
            KoszulMF::wide_edge(0, 1, 2, 3)
                .tensor(&KoszulMF::arc(3, 0))
                .tensor(&KoszulMF::arc(2, 1)),
        ]
    }

    #[test]
    fn single_row_differentials() {
        let a = z(0);
        let b = &z(1) * &z(2);
        let m = KoszulMF::new(vec![KoszulRow::new(a.clone(), b.clone(), 0)]);
        let (d0, d1) = m.differential().unwrap();
        assert_eq!(d0.entries, vec![vec![a]]);
        assert_eq!(d1.entries, vec![vec![b]]);

        let l = KoszulMF::arc(0, 1);
        let (d0, d1) = l.differential().unwrap();
        assert_eq!(d0.entries[0][0].to_string(), "z1^2 + z1*z2 + z2^2");
        assert_eq!(d1.entries[0][0].to_string(), "z1 - z2");
    }

    #[test]
    fn d_squared_is_potential() {
        // expand the 4x4 matrices of two generic rows
        let r1 = KoszulRow::new(z(0), &z(1) * &z(1), 0);
        let r2 = KoszulRow::new(&z(2) * &z(0), z(1), 0);
        let m = KoszulMF::new(vec![r1, r2]);
        let w = m.potential();
        let (d0, d1) = m.differential().unwrap();
        assert!(d1.mul(&d0).is_scalar(&w));
        assert!(d0.mul(&d1).is_scalar(&w));
    }

    #[test]
    fn wide_edge_potential_and_degrees() {
        let e = KoszulMF::wide_edge(0, 1, 2, 3);
        let cubes = &(&(&z(0).pow(3) + &z(1).pow(3)) - &z(2).pow(3)) - &z(3).pow(3);
        assert_eq!(e.potential(), cubes);
        // printed shifts {1}, {-1}, {-2}
        assert_eq!(e.state_degree(0b01), 0);
        assert_eq!(e.state_degree(0b10), -2);
        assert_eq!(e.state_degree(0b00), -1);
        for s in 0..4u64 {
            for (t, p) in e.apply_differential(&Chain::basis(s)).iter() {
                for (m, _) in p.terms() {
                    assert_eq!(e.state_degree(t) + 2 * m.total_degree() as i64, e.state_degree(s) + 3);
                }
            }
        }
        let (d0, d1) = e.differential().unwrap();
        assert!(d1.mul(&d0).is_scalar(&cubes));
    }

    #[test]
    fn tensor_unit_and_potential() {
        let x = KoszulMF::arc(0, 1);
        assert_eq!(x.tensor(&KoszulMF::empty()), x);
        let y = KoszulMF::arc(2, 3);
        let t = x.tensor(&y);
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.potential(), &x.potential() + &y.potential());
    }

    #[test]
    fn closed_graphs_have_zero_potential() {
        for m in squares_closed() {
            assert!(m.potential().is_zero());
            let (d0, d1) = m.differential().unwrap();
            assert!(d1.mul(&d0).is_scalar(&MultiPoly::zero()));
        }
    }

    #[test]
    fn eliminate_unknot_row() {
        let m = KoszulMF::arc(0, 1).tensor(&KoszulMF::arc(1, 0));
        let (r, _) = m.eliminate_row(0, Side::B, 0).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].a, z(1).pow(2).scale(&q(3)));
        assert!(r.rows[0].b.is_zero());
    }

    #[test]
    fn eliminate_wide_edge_rows() {
        // C_2(E) with the outgoing ends closed onto the incoming ones
        let m = KoszulMF::wide_edge(0, 1, 2, 3);
        let w = MultiPoly::zero();
        // not closed: elimination refuses nonzero potential
        assert!(matches!(
            m.eliminate_row(0, Side::A, 3),
            Err(KoszulError::NonzeroPotential(_))
        ));
        let closed = m.tensor(&KoszulMF::arc(2, 0)).tensor(&KoszulMF::arc(3, 1));
        assert_eq!(closed.potential(), w);
        let (m1, _) = closed.eliminate_row(0, Side::A, 3).unwrap();
        let (m2, _) = m1.eliminate_row(0, Side::B, 1).unwrap();
        assert_eq!(m2.z2_shift, 1);
        assert_eq!(m2.global_shift, 0);
        assert_eq!(m2.rows.len(), 2);
        // z_l -> -z_k, z_j -> -z_i, so the closing arcs become L(z_k, z_i), L(-z_k, -z_i)
        assert_eq!(m2.rows[0].b, &z(2) - &z(0));
        assert_eq!(m2.rows[1].b, &z(0) - &z(2));
    }

    #[test]
    fn elimination_maps_are_chain_maps_and_sections() {
        let cases: Vec<(KoszulMF, usize, Side, Var)> = vec![
            (KoszulMF::arc(0, 1).tensor(&KoszulMF::arc(1, 0)), 0, Side::B, 0),
            (KoszulMF::arc(0, 1).tensor(&KoszulMF::arc(1, 0)), 1, Side::B, 1),
            (squares_closed()[1].clone(), 0, Side::A, 3),
            (squares_closed()[1].clone(), 1, Side::B, 1),
            (squares_closed()[2].clone(), 0, Side::A, 2),
            (squares_closed()[2].clone(), 3, Side::B, 2),
            (squares_closed()[2].clone(), 2, Side::B, 3),
        ];
        for (m, j, side, t) in cases {
            let (small, e) = m.eliminate_row(j, side, t).unwrap();
            for s in 0..m.n_states().unwrap() {
                let x = Chain::basis(s);
                // F d = d' F
                assert_eq!(
                    e.forward(&m.apply_differential(&x)),
                    small.apply_differential(&e.forward(&x)),
                    "forward, row {j} {side:?}"
                );
            }
            for s in 0..small.n_states().unwrap() {
                let y = Chain::basis(s);
                assert_eq!(
                    m.apply_differential(&e.backward(&y)),
                    e.backward(&small.apply_differential(&y)),
                    "backward, row {j} {side:?}"
                );
                assert_eq!(e.forward(&e.backward(&y)), y);
                // degree of B preserves the shifted grading
                let d = small.state_degree(s);
                for (t2, p) in e.backward(&y).iter() {
                    for (mono, _) in p.terms() {
                        assert_eq!(m.state_degree(t2) + 2 * mono.total_degree() as i64, d);
                    }
                }
            }
            for s in 0..m.n_states().unwrap() {
                let x = Chain::basis(s);
                let fx = e.forward(&x);
                assert_eq!(e.forward(&e.backward(&fx)), fx);
            }
        }
    }

    #[test]
    fn scale_row_examples() {
        let m = KoszulMF::new(vec![KoszulRow::new(z(0).pow(2).scale(&q(3)), MultiPoly::zero(), 0)]);
        let s = m.scale_row(0, &q_frac(1, 3)).unwrap();
        assert_eq!(s.rows[0].a, z(0).pow(2));
        let m = KoszulMF::arc(0, 1);
        let back = m.scale_row(0, &q(5)).unwrap().scale_row(0, &q_frac(1, 5)).unwrap();
        assert_eq!(back, m);
        assert_eq!(m.scale_row(0, &q(-2)).unwrap().potential(), m.potential());
        assert_eq!(m.scale_row(0, &q(0)), Err(KoszulError::ZeroScalar));
    }

    fn vars() -> CrossingVars {
        CrossingVars { i: 0, j: 1, k: 2, l: 3 }
    }

    #[test]
    fn chi_matrices_match_printed_forms() {
        let u = chi0(vars());
        let u1 = u.matrix(1).unwrap();
        // bases ordered {|01>, |10>}
        assert_eq!(u1.col_states, vec![S10, S01]);
        let idx = |st: State| u1.col_states.iter().position(|&x| x == st).unwrap();
        assert_eq!(u1.entries[idx(S01)][idx(S01)], z(0));
        assert_eq!(u1.entries[idx(S01)][idx(S10)], -&z(2));
        assert_eq!(u1.entries[idx(S10)][idx(S01)], -&MultiPoly::one());
        assert_eq!(u1.entries[idx(S10)][idx(S10)], MultiPoly::one());
    }

    #[test]
    fn chi_maps_commute_and_compose() {
        let v = vars();
        let (c0, c1) = (chi0(v), chi1(v));
        assert!(c0.commutes_with_differentials().unwrap());
        assert!(c1.commutes_with_differentials().unwrap());
        assert!(c0.is_homogeneous().unwrap());
        assert!(c1.is_homogeneous().unwrap());
        let zik = &z(0) - &z(2);
        for parity in 0..2 {
            assert!(c1.compose(&c0).matrix(parity).unwrap().is_scalar(&zik));
            assert!(c0.compose(&c1).matrix(parity).unwrap().is_scalar(&zik));
        }
    }

    #[test]
    fn transport_of_identity_is_identity() {
        let m = KoszulMF::arc(0, 1).tensor(&KoszulMF::arc(1, 0));
        let (small, e) = m.eliminate_row(0, Side::B, 0).unwrap();
        let red = Reduction { steps: vec![e] };
        let id = MFMorphism::identity(&m).unwrap();
        let t = transport(&id, &red, &small, &red, &small).unwrap();
        for s in 0..small.n_states().unwrap() {
            assert_eq!(t.column(s), Chain::basis(s));
        }
    }

    #[test]
    fn bit_helpers() {
        assert_eq!(remove_bit(0b1011, 1), 0b101);
        assert_eq!(insert_bit(0b101, 1, true), 0b1011);
        assert_eq!(insert_bit(0b101, 0, false), 0b1010);
        for s in 0..64u64 {
            for j in 0..6 {
                for b in [false, true] {
                    assert_eq!(remove_bit(insert_bit(s, j, b), j), s);
                }
            }
        }
    }

    #[test]
    fn dump_format() {
        let m = KoszulMF::arc(0, 1);
        assert_eq!(
            m.dump(),
            "(z1^2 + z1*z2 + z2^2 | z1 - z2) {0}\nglobal {0} z2_shift <0>\n"
        );
    }
}
