//! Polynomial sequences `n -> g(n)` in a unitriangular group.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::Result;
use crate::polyring::{Offset, RatPoly, VarId};

use super::UTMatrix;

/// A polynomial sequence in `UT(dim)`, stored as one matrix whose entries
/// are polynomials in `n` and the reduction parameters.
///
/// Cloning is cheap (shared storage) and the hash is computed once, since
/// reduction runs deduplicate large numbers of sequences.
#[derive(Clone)]
pub struct GSequence {
    inner: Arc<Inner>,
}

struct Inner {
    matrix: UTMatrix,
    hash: u64,
}

impl GSequence {
    pub fn new(matrix: UTMatrix) -> Self {
        let mut h = DefaultHasher::new();
        matrix.hash(&mut h);
        GSequence {
            inner: Arc::new(Inner {
                hash: h.finish(),
                matrix,
            }),
        }
    }

    pub fn identity(dim: usize) -> Self {
        GSequence::new(UTMatrix::identity(dim))
    }

    pub fn matrix(&self) -> &UTMatrix {
        &self.inner.matrix
    }

    pub fn dim(&self) -> usize {
        self.inner.matrix.dim()
    }

    pub fn is_identity(&self) -> bool {
        self.inner.matrix.is_identity()
    }

    /// No entry depends on `n`.
    pub fn is_constant(&self) -> bool {
        self.inner.matrix.is_constant()
    }

    pub fn max_param(&self) -> u32 {
        self.inner.matrix.max_param()
    }

    pub fn compose(&self, other: &GSequence) -> Result<GSequence> {
        if other.is_identity() && self.dim() == other.dim() {
            return Ok(self.clone());
        }
        if self.is_identity() && self.dim() == other.dim() {
            return Ok(other.clone());
        }
        Ok(GSequence::new(self.matrix().multiply(other.matrix())?))
    }

    pub fn invert(&self) -> GSequence {
        if self.is_identity() {
            return self.clone();
        }
        GSequence::new(self.matrix().inverse())
    }

    /// `n -> g(n + by)`.
    pub fn shift(&self, by: &Offset) -> Result<GSequence> {
        if self.is_constant() {
            if let Offset::Var(VarId::Time) = by {
                return Err(crate::error::Error::ShiftByTime);
            }
            return Ok(self.clone());
        }
        Ok(GSequence::new(self.matrix().shift_time(by)?))
    }

    /// `(D_m g)(n) = g(n) g(n+m)^{-1}`.
    pub fn difference(&self, m: &Offset) -> Result<GSequence> {
        if self.is_constant() {
            if let Offset::Var(VarId::Time) = m {
                return Err(crate::error::Error::ShiftByTime);
            }
            return Ok(GSequence::identity(self.dim()));
        }
        self.compose(&self.shift(m)?.invert())
    }

    /// `<g|h>_m(n) = g(n) g(n+m)^{-1} h(n+m)`.
    pub fn bracket(&self, h: &GSequence, m: &Offset) -> Result<GSequence> {
        if self.dim() != h.dim() {
            return Err(crate::error::Error::DimensionMismatch(self.dim(), h.dim()));
        }
        let h_shift = h.shift(m)?;
        if self.is_constant() {
            return Ok(h_shift);
        }
        self.compose(&self.shift(m)?.invert())?.compose(&h_shift)
    }

    /// `g^{-1} h^{-1} g h`.
    pub fn commutator(&self, h: &GSequence) -> Result<GSequence> {
        self.invert()
            .compose(&h.invert())?
            .compose(self)?
            .compose(h)
    }

    /// `n -> g(n) g(0)^{-1}`: strips the constant right factor.
    pub fn strip_constant(&self) -> GSequence {
        if self.is_constant() {
            return GSequence::identity(self.dim());
        }
        let g0 = GSequence::new(self.matrix().at_time_zero());
        self.compose(&g0.invert()).expect("same dimension")
    }

    /// Replaces variables by polynomials, entrywise.
    pub fn substitute(&self, v: VarId, value: &RatPoly) -> GSequence {
        GSequence::new(self.matrix().map_entries(|e| e.substitute(v, value)))
    }

    pub fn map_entries(&self, f: impl Fn(&RatPoly) -> RatPoly) -> GSequence {
        GSequence::new(self.matrix().map_entries(f))
    }

    /// Largest degree in `n` over all entries (0 for constants).
    pub fn total_degree(&self) -> u32 {
        self.matrix().time_degree()
    }
}

impl From<UTMatrix> for GSequence {
    fn from(m: UTMatrix) -> Self {
        GSequence::new(m)
    }
}

impl PartialEq for GSequence {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.hash == other.inner.hash && self.inner.matrix == other.inner.matrix)
    }
}

impl Eq for GSequence {}

impl Hash for GSequence {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.inner.hash);
    }
}

impl PartialOrd for GSequence {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GSequence {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.inner.matrix.cmp(&other.inner.matrix)
    }
}

impl fmt::Debug for GSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GSequence({})", self.inner.matrix)
    }
}

impl fmt::Display for GSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("1_G");
        }
        write!(f, "{}", self.inner.matrix)
    }
}
