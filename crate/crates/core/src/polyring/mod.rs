//! Exact sparse multivariate polynomials over the rationals.
//!
//! Every polynomial lives in the ring `Q[m1, m2, ..., n]`: one time variable
//! `n` plus any number of reduction parameters `m1, m2, ...`. Terms are kept in
//! a `BTreeMap` keyed by graded-lexicographic monomials (time variable least
//! significant), so structural equality is mathematical equality.

pub(crate) mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use parse::parse_poly;

/// A variable of the polynomial ring.
///
/// Parameters sort before the time variable, and among themselves by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    /// Reduction parameter `m<index>`; indices start at 1.
    Param(u32),
    /// The time variable `n`.
    Time,
}

impl VarId {
    pub fn is_time(self) -> bool {
        matches!(self, VarId::Time)
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Param(i) => write!(f, "m{i}"),
            VarId::Time => f.write_str("n"),
        }
    }
}

/// Amount by which the time variable is shifted: a variable or a literal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Offset {
    Var(VarId),
    Int(BigInt),
}

impl Offset {
    pub fn param(index: u32) -> Self {
        Offset::Var(VarId::Param(index))
    }

    pub fn int(value: i64) -> Self {
        Offset::Int(BigInt::from(value))
    }

    pub fn as_poly(&self) -> RatPoly {
        match self {
            Offset::Var(v) => RatPoly::var(*v),
            Offset::Int(i) => RatPoly::constant(BigRational::from_integer(i.clone())),
        }
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offset::Var(v) => write!(f, "{v}"),
            Offset::Int(i) => write!(f, "{i}"),
        }
    }
}

/// A monomial: sorted `(variable, exponent)` pairs with positive exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<(VarId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: VarId, exp: u32) -> Self {
        if exp == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, exp)])
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, u32)>) -> Self {
        let mut acc: BTreeMap<VarId, u32> = BTreeMap::new();
        for (v, e) in pairs {
            *acc.entry(v).or_default() += e;
        }
        Monomial(acc.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: VarId) -> u32 {
        self.0.iter().find(|&&(w, _)| w == v).map_or(0, |&(_, e)| e)
    }

    pub fn pairs(&self) -> &[(VarId, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
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

    /// Splits off the power of `v`, returning `(exponent, rest)`.
    fn split(&self, v: VarId) -> (u32, Monomial) {
        let mut rest = Vec::with_capacity(self.0.len());
        let mut exp = 0;
        for &(w, e) in &self.0 {
            if w == v {
                exp = e;
            } else {
                rest.push((w, e));
            }
        }
        (exp, Monomial(rest))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: total degree first, then exponents compared
    /// variable by variable starting from `m1` and ending with `n`.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match self.degree().cmp(&other.degree()) {
            Equal => {}
            ord => return ord,
        }
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Equal,
                (Some(_), None) => return Greater,
                (None, Some(_)) => return Less,
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    Less => return Greater,
                    Greater => return Less,
                    Equal => match ea.cmp(&eb) {
                        Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

/// Exact polynomial with rational coefficients in canonical form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatPoly {
    terms: BTreeMap<Monomial, BigRational>,
}

impl RatPoly {
    pub fn zero() -> Self {
        RatPoly::default()
    }

    pub fn one() -> Self {
        RatPoly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = RatPoly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn int(c: i64) -> Self {
        RatPoly::constant(BigRational::from_integer(c.into()))
    }

    pub fn var(v: VarId) -> Self {
        RatPoly::monomial(BigRational::one(), Monomial::var(v, 1))
    }

    pub fn time() -> Self {
        RatPoly::var(VarId::Time)
    }

    pub fn param(index: u32) -> Self {
        RatPoly::var(VarId::Param(index))
    }

    pub fn monomial(c: BigRational, m: Monomial) -> Self {
        let mut p = RatPoly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    /// True when no variable occurs.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_constant() {
            Some(
                self.terms
                    .get(&Monomial::one())
                    .cloned()
                    .unwrap_or_else(BigRational::zero),
            )
        } else {
            None
        }
    }

    pub fn mentions(&self, v: VarId) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    /// Degree in `v`; the zero polynomial has degree 0.
    pub fn degree_in(&self, v: VarId) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn variables(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().map(|&(v, _)| v))
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Largest parameter index occurring, or 0.
    pub fn max_param(&self) -> u32 {
        self.variables()
            .into_iter()
            .filter_map(|v| match v {
                VarId::Param(i) => Some(i),
                VarId::Time => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: &BigRational) -> RatPoly {
        if c.is_zero() {
            return RatPoly::zero();
        }
        RatPoly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
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

    pub fn pow(&self, mut e: u32) -> RatPoly {
        let mut base = self.clone();
        let mut acc = RatPoly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Replaces every occurrence of `v` by `value` and expands.
    pub fn substitute(&self, v: VarId, value: &RatPoly) -> RatPoly {
        if !self.mentions(v) {
            return self.clone();
        }
        let mut powers: Vec<RatPoly> = vec![RatPoly::one()];
        let mut out = RatPoly::zero();
        for (m, c) in &self.terms {
            let (e, rest) = m.split(v);
            while powers.len() <= e as usize {
                let next = powers.last().expect("non-empty") * value;
                powers.push(next);
            }
            let piece = &RatPoly::monomial(c.clone(), rest) * &powers[e as usize];
            out += &piece;
        }
        out
    }

    /// Substitutes rational values for several variables at once.
    pub fn substitute_values(&self, values: &BTreeMap<VarId, BigRational>) -> RatPoly {
        let mut out = RatPoly::zero();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Vec::new();
            for &(v, e) in &m.0 {
                match values.get(&v) {
                    Some(x) => coeff *= pow_rational(x, e),
                    None => rest.push((v, e)),
                }
            }
            out.add_term(Monomial(rest), coeff);
        }
        out
    }

    /// `p(n) -> p(n + by)`, expanded. Shifting by the time variable is rejected.
    pub fn shift_time(&self, by: &Offset) -> Result<RatPoly> {
        if matches!(by, Offset::Var(VarId::Time)) {
            return Err(Error::ShiftByTime);
        }
        if !self.mentions(VarId::Time) {
            return Ok(self.clone());
        }
        let replacement = &RatPoly::time() + &by.as_poly();
        Ok(self.substitute(VarId::Time, &replacement))
    }

    /// Exact value at an integer point; every variable must be assigned.
    pub fn eval(&self, assignment: &BTreeMap<VarId, BigInt>) -> Result<BigRational> {
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut term = c.clone();
            for &(v, e) in &m.0 {
                let x = assignment
                    .get(&v)
                    .ok_or_else(|| Error::MissingVariable(v.to_string()))?;
                term *= BigRational::from_integer(num_traits::pow(x.clone(), e as usize));
            }
            total += term;
        }
        Ok(total)
    }

    /// Evaluates a polynomial in the time variable only, at integer `n`.
    pub fn eval_time(&self, n: i64) -> Result<BigRational> {
        let mut a = BTreeMap::new();
        a.insert(VarId::Time, BigInt::from(n));
        self.eval(&a)
    }

    /// Decides whether the polynomial maps every integer point to an integer.
    ///
    /// Each monomial `x^k` is rewritten in the binomial basis via
    /// `x^k = sum_j S(k, j) j! C(x, j)`; the polynomial is integer-valued iff
    /// every coefficient in the tensor binomial basis is an integer.
    pub fn is_integer_valued(&self) -> bool {
        self.binomial_coefficients()
            .values()
            .all(|c| c.is_integer())
    }

    /// Coefficients in the basis `prod_v C(v, j_v)`.
    pub fn binomial_coefficients(&self) -> BTreeMap<Vec<(VarId, u32)>, BigRational> {
        let mut out: BTreeMap<Vec<(VarId, u32)>, BigRational> = BTreeMap::new();
        for (m, c) in &self.terms {
            // Expand the product over the variables of this monomial.
            let mut partial: Vec<(Vec<(VarId, u32)>, BigInt)> = vec![(Vec::new(), BigInt::one())];
            for &(v, k) in &m.0 {
                let row = stirling_falling_row(k);
                let mut next = Vec::with_capacity(partial.len() * row.len());
                for (key, w) in &partial {
                    for (j, s) in row.iter().enumerate() {
                        if s.is_zero() {
                            continue;
                        }
                        let mut key = key.clone();
                        if j > 0 {
                            key.push((v, j as u32));
                        }
                        next.push((key, w * s));
                    }
                }
                partial = next;
            }
            for (key, w) in partial {
                let entry = out.entry(key).or_insert_with(BigRational::zero);
                *entry += c * BigRational::from_integer(w);
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// Binomial polynomial `C(p, k) = p (p-1) ... (p-k+1) / k!`.
    pub fn binomial(&self, k: u32) -> RatPoly {
        let mut acc = RatPoly::one();
        let mut fact = BigInt::one();
        for i in 0..k {
            acc = &acc * &(self - &RatPoly::int(i as i64));
            fact *= BigInt::from(i + 1);
        }
        acc.scale(&BigRational::new(BigInt::one(), fact))
    }

    /// Integer value of a constant polynomial, if it is one.
    pub fn as_integer(&self) -> Option<BigInt> {
        self.constant_value()
            .filter(|c| c.is_integer())
            .map(|c| c.to_integer())
    }

    pub fn to_i64(&self) -> Option<i64> {
        self.as_integer().and_then(|i| i.to_i64())
    }
}

fn pow_rational(x: &BigRational, e: u32) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

/// Row `k` of `S(k, j) * j!` for `j = 0..=k` (surjection counts).
fn stirling_falling_row(k: u32) -> Vec<BigInt> {
    let k = k as usize;
    // S(i, j) via the recurrence S(i, j) = j S(i-1, j) + S(i-1, j-1).
    let mut row = vec![BigInt::one()];
    for i in 1..=k {
        let mut next = vec![BigInt::zero(); i + 1];
        for j in 1..=i {
            let left = if j < row.len() {
                &row[j] * BigInt::from(j)
            } else {
                BigInt::zero()
            };
            next[j] = left + &row[j - 1];
        }
        row = next;
    }
    let mut fact = BigInt::one();
    for (j, s) in row.iter_mut().enumerate() {
        if j > 0 {
            fact *= BigInt::from(j);
        }
        *s *= &fact;
    }
    row
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            let abs = c.abs();
            if idx == 0 {
                if negative {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if negative { " - " } else { " + " })?;
            }
            let mut factors: Vec<String> = Vec::new();
            if !abs.is_one() || m.is_one() {
                factors.push(if abs.is_integer() {
                    abs.numer().to_string()
                } else {
                    format!("{}/{}", abs.numer(), abs.denom())
                });
            }
            for &(v, e) in &m.0 {
                factors.push(if e == 1 {
                    v.to_string()
                } else {
                    format!("{v}^{e}")
                });
            }
            f.write_str(&factors.join("*"))?;
        }
        Ok(())
    }
}

impl AddAssign<&RatPoly> for RatPoly {
    fn add_assign(&mut self, rhs: &RatPoly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl Add for &RatPoly {
    type Output = RatPoly;
    fn add(self, rhs: &RatPoly) -> RatPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for RatPoly {
    type Output = RatPoly;
    fn add(mut self, rhs: RatPoly) -> RatPoly {
        self += &rhs;
        self
    }
}

impl Neg for &RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        RatPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        -&self
    }
}

impl Sub for &RatPoly {
    type Output = RatPoly;
    fn sub(self, rhs: &RatPoly) -> RatPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Sub for RatPoly {
    type Output = RatPoly;
    fn sub(self, rhs: RatPoly) -> RatPoly {
        &self - &rhs
    }
}

impl Mul for &RatPoly {
    type Output = RatPoly;
    fn mul(self, rhs: &RatPoly) -> RatPoly {
        if self.is_zero() || rhs.is_zero() {
            return RatPoly::zero();
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        let mut out = RatPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for RatPoly {
    type Output = RatPoly;
    fn mul(self, rhs: RatPoly) -> RatPoly {
        &self * &rhs
    }
}

impl From<i64> for RatPoly {
    fn from(c: i64) -> Self {
        RatPoly::int(c)
    }
}

/// Exact integer division helper used by callers that need `value mod k`.
pub fn rational_to_i128(value: &BigRational) -> Result<i128> {
    if !value.is_integer() {
        return Err(Error::NonIntegerValue(value.to_string()));
    }
    value
        .to_integer()
        .to_i128()
        .ok_or_else(|| Error::NonIntegerValue(value.to_string()))
}

/// `value mod modulus` in `0..modulus` for an integral rational.
pub fn rational_mod(value: &BigRational, modulus: u64) -> Result<u64> {
    if !value.is_integer() {
        return Err(Error::NonIntegerValue(value.to_string()));
    }
    let m = BigInt::from(modulus);
    let r = value.to_integer().mod_floor(&m);
    Ok(r.to_u64().expect("residue fits"))
}
