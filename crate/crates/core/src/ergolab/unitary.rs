//! Polynomial averages of orthogonal operators on `R^D`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::nilgroup::WordSequence;
use crate::polyring::rational_to_i128;

const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Generator names bound to orthogonal matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryAssignment {
    dim: usize,
    generators: BTreeMap<String, DMatrix<f64>>,
}

impl UnitaryAssignment {
    pub fn new(dim: usize) -> Self {
        UnitaryAssignment {
            dim,
            generators: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, q: DMatrix<f64>) -> Result<Self> {
        self.insert(name, q)?;
        Ok(self)
    }

    /// Rejects `q` unless `qᵀq = I` entrywise within `1e-12`.
    pub fn insert(&mut self, name: &str, q: DMatrix<f64>) -> Result<()> {
        if q.nrows() != self.dim || q.ncols() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, q.nrows().max(q.ncols())));
        }
        let gap = (q.transpose() * &q - DMatrix::identity(self.dim, self.dim)).amax();
        if !(gap <= ORTHOGONALITY_TOL) {
            return Err(Error::InvalidParameter(format!(
                "generator {name} is not orthogonal (deviation {gap:e})"
            )));
        }
        self.generators.insert(name.to_string(), q);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, name: &str) -> Result<&DMatrix<f64>> {
        self.generators
            .get(name)
            .ok_or_else(|| Error::UnboundGenerator(name.to_string()))
    }
}

/// Planar rotation by `theta`.
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `q^k` by repeated squaring; negative powers use `qᵀ`.
fn power(q: &DMatrix<f64>, k: i128) -> DMatrix<f64> {
    let mut base = if k < 0 { q.transpose() } else { q.clone() };
    let mut e = k.unsigned_abs();
    let mut acc = DMatrix::identity(q.nrows(), q.ncols());
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

fn apply_word(
    g: &WordSequence,
    a: &UnitaryAssignment,
    u: &DVector<f64>,
    n: i64,
) -> Result<DVector<f64>> {
    let mut v = u.clone();
    for (name, p) in g.factors.iter().rev() {
        let q = a.get(name)?;
        let k = rational_to_i128(&p.eval_time(n)?)
            .map_err(|_| Error::NotIntegerValued(format!("{p} at n = {n}")))?;
        v = power(q, k) * v;
    }
    Ok(v)
}

/// `(1/N) sum_{n in [N]} g(n) u`.
pub fn unitary_average(
    g: &WordSequence,
    a: &UnitaryAssignment,
    u: &DVector<f64>,
    n: u64,
) -> Result<DVector<f64>> {
    Ok(unitary_averages(g, a, u, &[n])?.remove(0))
}

/// [`unitary_average`] at each of the increasing `checkpoints`, from a
/// single running sum.
pub fn unitary_averages(
    g: &WordSequence,
    a: &UnitaryAssignment,
    u: &DVector<f64>,
    checkpoints: &[u64],
) -> Result<Vec<DVector<f64>>> {
    if u.len() != a.dim() {
        return Err(Error::DimensionMismatch(a.dim(), u.len()));
    }
    if checkpoints.is_empty()
        || checkpoints[0] == 0
        || checkpoints.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParameter(
            "checkpoints must be positive and increasing".into(),
        ));
    }
    let mut sum = DVector::zeros(a.dim());
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    let last = *checkpoints.last().expect("nonempty");
    for n in 1..=last {
        sum += apply_word(g, a, u, n as i64)?;
        if next.peek() == Some(&&n) {
            next.next();
            out.push(&sum / n as f64);
        }
    }
    Ok(out)
}
