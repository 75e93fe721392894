//! Unitriangular matrices with polynomial entries.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::polyring::{Offset, RatPoly, VarId};

/// Upper unitriangular `dim x dim` matrix over `Q[m1, m2, ..., n]`.
///
/// Only the strictly upper entries are stored, row by row; the diagonal is
/// implicitly 1 and everything below it 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UTMatrix {
    dim: usize,
    upper: Vec<RatPoly>,
}

fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < dim);
    // rows 0..i contribute (dim-1) + (dim-2) + ... + (dim-i) entries
    i * dim - i * (i + 1) / 2 + (j - i - 1)
}

impl UTMatrix {
    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        UTMatrix {
            dim,
            upper: vec![RatPoly::zero(); dim * (dim - 1) / 2],
        }
    }

    /// Builds a matrix from a full row-major grid, checking unitriangularity.
    pub fn from_rows(rows: Vec<Vec<RatPoly>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::NotUnitriangular("empty matrix".into()));
        }
        let mut m = UTMatrix::identity(dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch(dim, row.len()));
            }
            for (j, e) in row.into_iter().enumerate() {
                match i.cmp(&j) {
                    std::cmp::Ordering::Equal if !e.is_one() => {
                        return Err(Error::NotUnitriangular(format!(
                            "diagonal entry ({}, {}) is {e}",
                            i + 1,
                            j + 1
                        )))
                    }
                    std::cmp::Ordering::Greater if !e.is_zero() => {
                        return Err(Error::NotUnitriangular(format!(
                            "entry ({}, {}) below the diagonal is {e}",
                            i + 1,
                            j + 1
                        )))
                    }
                    std::cmp::Ordering::Less => m.set(i, j, e),
                    _ => {}
                }
            }
        }
        Ok(m)
    }

    pub fn from_int_rows(rows: &[Vec<i64>]) -> Result<Self> {
        UTMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| RatPoly::int(x)).collect())
                .collect(),
        )
    }

    /// `I + E_{i,j}` (zero-based indices), the elementary generator.
    pub fn elementary(dim: usize, i: usize, j: usize) -> Self {
        let mut m = UTMatrix::identity(dim);
        m.set(i, j, RatPoly::one());
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> RatPoly {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => RatPoly::one(),
            std::cmp::Ordering::Greater => RatPoly::zero(),
            std::cmp::Ordering::Less => self.upper[upper_index(self.dim, i, j)].clone(),
        }
    }

    /// Borrow of a strictly upper entry.
    pub fn upper(&self, i: usize, j: usize) -> &RatPoly {
        &self.upper[upper_index(self.dim, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: RatPoly) {
        assert!(
            i < j && j < self.dim,
            "only strictly upper entries are free"
        );
        let k = upper_index(self.dim, i, j);
        self.upper[k] = value;
    }

    pub fn upper_entries(&self) -> impl Iterator<Item = &RatPoly> {
        self.upper.iter()
    }

    pub fn rows(&self) -> Vec<Vec<RatPoly>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.upper.iter().all(RatPoly::is_zero)
    }

    /// True when all entries are free of the time variable.
    pub fn is_constant(&self) -> bool {
        self.upper.iter().all(|e| !e.mentions(VarId::Time))
    }

    /// True when no variable at all occurs.
    pub fn is_concrete(&self) -> bool {
        self.upper.iter().all(RatPoly::is_constant)
    }

    /// True when every entry is a constant integer.
    pub fn is_integral(&self) -> bool {
        self.upper.iter().all(|e| e.as_integer().is_some())
    }

    /// Number of leading superdiagonals that vanish identically, i.e. the
    /// largest `k` with the matrix in `G_{k+1}`.
    pub fn vanishing_superdiagonals(&self) -> usize {
        for l in 1..self.dim {
            if (0..self.dim - l).any(|i| !self.upper(i, i + l).is_zero()) {
                return l - 1;
            }
        }
        self.dim - 1
    }

    pub fn multiply(&self, other: &UTMatrix) -> Result<UTMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.is_identity() {
            return Ok(other.clone());
        }
        if other.is_identity() {
            return Ok(self.clone());
        }
        let d = self.dim;
        let mut out = UTMatrix::identity(d);
        for i in 0..d {
            for j in i + 1..d {
                // (AB)_{ij} = A_{ij} + B_{ij} + sum_{i<k<j} A_{ik} B_{kj}
                let mut acc = self.upper(i, j) + other.upper(i, j);
                for k in i + 1..j {
                    let a = self.upper(i, k);
                    let b = other.upper(k, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc += &(a * b);
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Product of two strictly upper matrices, both stored in `upper` form.
    fn nil_mul(a: &UTMatrix, b: &UTMatrix) -> UTMatrix {
        let d = a.dim;
        let mut out = UTMatrix::identity(d);
        for i in 0..d {
            for j in i + 2..d {
                let mut acc = RatPoly::zero();
                for k in i + 1..j {
                    let x = a.upper(i, k);
                    let y = b.upper(k, j);
                    if !x.is_zero() && !y.is_zero() {
                        acc += &(x * y);
                    }
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    fn nil_add_scaled(&mut self, other: &UTMatrix, c: &RatPoly) {
        for (e, o) in self.upper.iter_mut().zip(&other.upper) {
            if !o.is_zero() {
                *e += &(o * c);
            }
        }
    }

    /// Inverse via the finite Neumann series `sum_k (-N)^k`.
    pub fn inverse(&self) -> UTMatrix {
        if self.is_identity() {
            return self.clone();
        }
        // The stored entries are exactly the nilpotent part N = M - I.
        let n = self;
        let minus_one = RatPoly::int(-1);
        let mut out = UTMatrix::identity(self.dim);
        let mut power = n.clone();
        let mut sign = minus_one.clone();
        for _ in 1..self.dim {
            if power.is_identity() {
                break;
            }
            out.nil_add_scaled(&power, &sign);
            power = UTMatrix::nil_mul(&power, n);
            sign = -sign;
        }
        out
    }

    /// `M^p = sum_k C(p, k) N^k` for a polynomial exponent `p`.
    ///
    /// The exponent must be integer-valued so that every value is a genuine
    /// integer power.
    pub fn power(&self, p: &RatPoly) -> Result<UTMatrix> {
        if !p.is_integer_valued() {
            return Err(Error::NotIntegerValued(p.to_string()));
        }
        if self.is_identity() || p.is_zero() {
            return Ok(UTMatrix::identity(self.dim));
        }
        // The stored entries are exactly the nilpotent part N = M - I.
        let n = self;
        let mut out = UTMatrix::identity(self.dim);
        let mut power = n.clone();
        for k in 1..self.dim as u32 {
            if power.is_identity() {
                break;
            }
            out.nil_add_scaled(&power, &p.binomial(k));
            power = UTMatrix::nil_mul(&power, n);
        }
        Ok(out)
    }

    pub fn map_entries(&self, f: impl Fn(&RatPoly) -> RatPoly) -> UTMatrix {
        UTMatrix {
            dim: self.dim,
            upper: self.upper.iter().map(f).collect(),
        }
    }

    pub fn shift_time(&self, by: &Offset) -> Result<UTMatrix> {
        if let Offset::Var(VarId::Time) = by {
            return Err(Error::ShiftByTime);
        }
        if self.is_constant() {
            return Ok(self.clone());
        }
        Ok(self.map_entries(|e| e.shift_time(by).expect("offset checked above")))
    }

    /// Value at `n = 0` with parameters untouched.
    pub fn at_time_zero(&self) -> UTMatrix {
        self.map_entries(|e| e.substitute(VarId::Time, &RatPoly::zero()))
    }

    /// Exact numeric value at an integer point; all variables must be bound.
    pub fn eval(
        &self,
        assignment: &std::collections::BTreeMap<VarId, BigInt>,
    ) -> Result<Vec<Vec<BigRational>>> {
        let mut rows = vec![vec![BigRational::zero(); self.dim]; self.dim];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = BigRational::one();
            for (j, cell) in row.iter_mut().enumerate().skip(i + 1) {
                *cell = self.upper(i, j).eval(assignment)?;
            }
        }
        Ok(rows)
    }

    pub fn max_param(&self) -> u32 {
        self.upper.iter().map(RatPoly::max_param).max().unwrap_or(0)
    }

    /// Largest degree in `n` over all entries.
    pub fn time_degree(&self) -> u32 {
        self.upper
            .iter()
            .map(|e| e.degree_in(VarId::Time))
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for UTMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.dim {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for j in 0..self.dim {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}
