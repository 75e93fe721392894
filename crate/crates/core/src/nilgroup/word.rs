//! Words `T_1^{p_1(n)} ... T_k^{p_k(n)}` and their matrix realizations.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::polyring::RatPoly;

use super::{GSequence, UTMatrix};

/// An ordered product of generator powers with polynomial exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct WordSequence {
    pub factors: Vec<(String, RatPoly)>,
}

impl WordSequence {
    pub fn new(factors: Vec<(String, RatPoly)>) -> Self {
        WordSequence { factors }
    }

    pub fn empty() -> Self {
        WordSequence::default()
    }

    pub fn single(name: &str, exponent: RatPoly) -> Self {
        WordSequence::new(vec![(name.to_string(), exponent)])
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn generator_names(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(n, _)| n.as_str())
    }
}

impl fmt::Display for WordSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1_G");
        }
        for (i, (name, e)) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if e.is_one() {
                f.write_str(name)?;
            } else if let Some(k) = e.to_i64().filter(|k| *k >= 0) {
                write!(f, "{name}^{k}")?;
            } else {
                write!(f, "{name}^({e})")?;
            }
        }
        Ok(())
    }
}

/// Concrete integer unitriangular matrices for each generator name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorAssignment {
    dim: usize,
    generators: BTreeMap<String, UTMatrix>,
}

impl GeneratorAssignment {
    pub fn new(dim: usize) -> Self {
        GeneratorAssignment {
            dim,
            generators: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, m: UTMatrix) -> Result<Self> {
        self.insert(name, m)?;
        Ok(self)
    }

    pub fn insert(&mut self, name: &str, m: UTMatrix) -> Result<()> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, m.dim()));
        }
        if !m.is_integral() {
            return Err(Error::NotUnitriangular(format!(
                "generator {name} must have constant integer entries"
            )));
        }
        self.generators.insert(name.to_string(), m);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, name: &str) -> Result<&UTMatrix> {
        self.generators
            .get(name)
            .ok_or_else(|| Error::UnboundGenerator(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.generators.keys().map(String::as_str)
    }

    /// Commuting generators as block-diagonal copies of `[[1, 1], [0, 1]]`:
    /// `T_j = I + E_{2j-1, 2j}` in `UT(2k)`.
    ///
    /// Every generator sits on the first superdiagonal, so ambient degrees
    /// agree with the degrees inside the free abelian group they generate.
    pub fn abelian(names: &[&str]) -> Self {
        let dim = (2 * names.len()).max(2);
        let mut a = GeneratorAssignment::new(dim);
        for (j, name) in names.iter().enumerate() {
            a.insert(name, UTMatrix::elementary(dim, 2 * j, 2 * j + 1))
                .expect("elementary generators are integral");
        }
        a
    }

    /// `x = I + E_12` and `y = I + E_23` in `UT(3)`.
    pub fn heisenberg(x: &str, y: &str) -> Self {
        GeneratorAssignment::new(3)
            .with(x, UTMatrix::elementary(3, 0, 1))
            .and_then(|a| a.with(y, UTMatrix::elementary(3, 1, 2)))
            .expect("elementary generators are integral")
    }
}

/// `n -> M^{p(n)}` for a concrete matrix `M`.
pub fn generator_power(m: &UTMatrix, p: &RatPoly) -> Result<GSequence> {
    Ok(GSequence::new(m.power(p)?))
}

/// Ordered product of the generator powers of `w`.
pub fn realize_word(w: &WordSequence, a: &GeneratorAssignment) -> Result<GSequence> {
    let mut acc = GSequence::identity(a.dim());
    for (name, p) in &w.factors {
        let factor = generator_power(a.get(name)?, p)?;
        acc = acc.compose(&factor)?;
    }
    Ok(acc)
}
