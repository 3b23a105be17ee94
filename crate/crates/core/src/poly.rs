//! Sparse multivariate polynomials over the rationals.
//!
//! Variables are the marked points of a diagram, indexed from zero and
//! printed as `z1, z2, ...`. Every variable has quantum degree 2.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational coefficient.
pub type Q = BigRational;

pub type Var = usize;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("q-degree of the zero polynomial is undefined")]
    ZeroPolynomial,
    #[error("polynomial {poly} is not linear in z{}", .var + 1)]
    NotLinearIn { poly: String, var: Var },
}

/// A monomial as a sorted list of `(variable, exponent)` with positive exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(Var, u32)>) -> Self {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort();
        let mut out: Vec<(Var, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => out.push((v, e)),
            }
        }
        Monomial(out)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Monomial with the variable `v` removed, and its exponent.
    pub fn split_off(&self, v: Var) -> (Monomial, u32) {
        let e = self.exponent(v);
        let rest = self.0.iter().copied().filter(|&(w, _)| w != v).collect();
        (Monomial(rest), e)
    }

    /// True when no variable appears with exponent above one.
    pub fn is_square_free(&self) -> bool {
        self.0.iter().all(|&(_, e)| e == 1)
    }

    // dense exponent vector compare used by the printing order
    fn grlex_key(&self) -> (std::cmp::Reverse<u32>, Vec<(Var, std::cmp::Reverse<u32>)>) {
        (
            std::cmp::Reverse(self.total_degree()),
            self.0.iter().map(|&(v, e)| (v, std::cmp::Reverse(e))).collect(),
        )
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, &(v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            write!(f, "z{}", v + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse polynomial in `Q[z_1, ..., z_m]`. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Monomial, Q>,
}

/// A ring homomorphism given on generators; unmapped variables are fixed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Substitution {
    map: BTreeMap<Var, MultiPoly>,
}

impl Substitution {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(v: Var, image: MultiPoly) -> Self {
        let mut map = BTreeMap::new();
        map.insert(v, image);
        Substitution { map }
    }

    pub fn insert(&mut self, v: Var, image: MultiPoly) {
        self.map.insert(v, image);
    }

    pub fn get(&self, v: Var) -> Option<&MultiPoly> {
        self.map.get(&v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &MultiPoly)> {
        self.map.iter().map(|(&v, p)| (v, p))
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(&v, p)| *p == MultiPoly::var(v))
    }
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(c: i64) -> Self {
        Self::constant(q(c))
    }

    pub fn var(v: Var) -> Self {
        Self::term(q(1), Monomial::var(v))
    }

    pub fn term(c: Q, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// Linear form `sum c_i z_{v_i}`.
    pub fn linear(coeffs: &[(i64, Var)]) -> Self {
        let mut p = Self::zero();
        for &(c, v) in coeffs {
            p.add_term(Monomial::var(v), q(c));
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> Q {
        self.terms.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&Monomial::one())
    }

    /// The constant value if the polynomial has no non-constant terms.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, c: &Q) -> MultiPoly {
        if c.is_zero() {
            return Self::zero();
        }
        MultiPoly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, c: &Q, m: &Monomial) -> MultiPoly {
        if c.is_zero() {
            return Self::zero();
        }
        MultiPoly {
            terms: self.terms.iter().map(|(n, a)| (n.mul(m), a * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> MultiPoly {
        let mut out = Self::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.terms.keys().flat_map(|m| m.vars()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.total_degree()).max()
    }

    /// Quantum degree `2 * total degree`, or `Ok(None)` when the polynomial
    /// mixes total degrees.
    pub fn q_degree(&self) -> Result<Option<i64>, PolyError> {
        let mut degs = self.terms.keys().map(|m| m.total_degree());
        let first = degs.next().ok_or(PolyError::ZeroPolynomial)?;
        if degs.all(|d| d == first) {
            Ok(Some(2 * first as i64))
        } else {
            Ok(None)
        }
    }

    pub fn substitute(&self, s: &Substitution) -> MultiPoly {
        if s.map.is_empty() {
            return self.clone();
        }
        let mut out = Self::zero();
        let mut power_cache: BTreeMap<(Var, u32), MultiPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut kept = Vec::new();
            let mut acc = MultiPoly::one();
            for &(v, e) in m.factors() {
                match s.map.get(&v) {
                    Some(img) => {
                        let pw = power_cache
                            .entry((v, e))
                            .or_insert_with(|| img.pow(e))
                            .clone();
                        acc = &acc * &pw;
                    }
                    None => kept.push((v, e)),
                }
            }
            let kept = Monomial(kept);
            out += &acc.mul_monomial(c, &kept);
        }
        out
    }

    /// For `self = alpha * t + rest` with rational `alpha != 0` and `t`
    /// absent from `rest`, the substitution `t -> -rest / alpha`.
    pub fn solve_linear(&self, t: Var) -> Result<Substitution, PolyError> {
        let (alpha, rest) = self.linear_split(t)?;
        let image = rest.scale(&(-alpha.recip()));
        Ok(Substitution::single(t, image))
    }

    /// Splits `self` as `alpha * t + rest`, failing unless `alpha` is a
    /// nonzero rational and `t` does not occur in `rest`.
    pub fn linear_split(&self, t: Var) -> Result<(Q, MultiPoly), PolyError> {
        let not_linear = || PolyError::NotLinearIn {
            poly: self.to_string(),
            var: t,
        };
        let mut alpha = None;
        let mut rest = MultiPoly::zero();
        for (m, c) in &self.terms {
            match m.exponent(t) {
                0 => rest.add_term(m.clone(), c.clone()),
                1 if m.factors().len() == 1 => alpha = Some(c.clone()),
                _ => return Err(not_linear()),
            }
        }
        let alpha = alpha.ok_or_else(not_linear)?;
        Ok((alpha, rest))
    }

    /// Exact quotient by `t - c` where `c` does not involve `t`.
    ///
    /// Returns `None` when the division leaves a remainder.
    pub fn div_linear(&self, t: Var, c: &MultiPoly) -> Option<MultiPoly> {
        debug_assert!(!c.contains_var(t));
        // collect coefficients of t^e as polynomials in the other variables
        let mut by_power: BTreeMap<u32, MultiPoly> = BTreeMap::new();
        for (m, a) in &self.terms {
            let (rest, e) = m.split_off(t);
            by_power.entry(e).or_default().add_term(rest, a.clone());
        }
        let top = match by_power.keys().next_back() {
            Some(&e) => e,
            None => return Some(MultiPoly::zero()),
        };
        // synthetic division from the top power down
        let mut quotient = MultiPoly::zero();
        let mut carry = MultiPoly::zero();
        for e in (1..=top).rev() {
            let coeff = by_power.remove(&e).unwrap_or_default();
            let qe = &coeff + &carry;
            // quotient coefficient of t^(e-1)
            let tpow = Monomial::from_pairs(vec![(t, e - 1)]);
            for (m, a) in qe.terms() {
                quotient.add_term(m.mul(&tpow), a.clone());
            }
            carry = c * &qe;
        }
        let remainder = &by_power.remove(&0).unwrap_or_default() + &carry;
        if remainder.is_zero() {
            Some(quotient)
        } else {
            None
        }
    }

    /// Drops every term in which one of `vars` has exponent at least two.
    pub fn truncate_squares(&self, vars: &[Var]) -> MultiPoly {
        MultiPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| vars.iter().all(|&v| m.exponent(v) < 2))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous component of the given total degree.
    pub fn homogeneous_part(&self, deg: u32) -> MultiPoly {
        MultiPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.total_degree() == deg)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut ordered: Vec<(&Monomial, &Q)> = self.terms.iter().collect();
        ordered.sort_by_key(|(m, _)| m.grlex_key());
        for (k, (m, c)) in ordered.into_iter().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            if k == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &'a MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&MultiPoly> for MultiPoly {
    fn add_assign(&mut self, rhs: &MultiPoly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl<'a> Sub<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &'a MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        MultiPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        -&self
    }
}

impl<'a> Mul<&'a MultiPoly> for &'a MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &'a MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (m, a) in &self.terms {
            for (n, b) in &rhs.terms {
                out.add_term(m.mul(n), a * b);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr<MultiPoly> for MultiPoly {
            type Output = MultiPoly;
            fn $f(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// The quadratic `u(z_i, z_j, z_k, z_l)` of the wide-edge factorization.
pub fn wide_edge_u(zi: &MultiPoly, zj: &MultiPoly, zk: &MultiPoly, zl: &MultiPoly) -> MultiPoly {
    let kl = zk + zl;
    let t1 = zi * &(&kl - zj);
    let t2 = zi * zi;
    let t3 = zj * &kl;
    let t4 = zj * zj;
    let t5 = &kl * &kl;
    &(&(&(&t1 + &t2) + &t3) + &t4) + &t5
}
