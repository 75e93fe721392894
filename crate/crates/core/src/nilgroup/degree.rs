//! Vector degrees of polynomial sequences against the superdiagonal filtration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::polyring::{Offset, VarId};

use super::GSequence;

/// An element of `N_0 ∪ {-inf}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Deg {
    NegInf,
    Fin(u32),
}

impl Deg {
    /// `-inf + t = -inf` for every `t`.
    pub fn add(self, other: Deg) -> Deg {
        match (self, other) {
            (Deg::Fin(a), Deg::Fin(b)) => Deg::Fin(a + b),
            _ => Deg::NegInf,
        }
    }

    /// `d - t` when `t <= d`, and `-inf` otherwise.
    pub fn minus(self, t: u32) -> Deg {
        match self {
            Deg::Fin(d) if t <= d => Deg::Fin(d - t),
            _ => Deg::NegInf,
        }
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Deg::Fin(d) => Some(d),
            Deg::NegInf => None,
        }
    }
}

impl fmt::Display for Deg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deg::NegInf => f.write_str("-inf"),
            Deg::Fin(d) => write!(f, "{d}"),
        }
    }
}

/// `(d_1, ..., d_s)`, one entry per stratum `G_k / G_{k+1}` of `UT(s + 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeVector(Vec<Deg>);

impl DegreeVector {
    pub fn new(components: Vec<Deg>) -> Self {
        DegreeVector(components)
    }

    pub fn finite(components: &[u32]) -> Self {
        DegreeVector(components.iter().map(|&d| Deg::Fin(d)).collect())
    }

    pub fn neg_inf(len: usize) -> Self {
        DegreeVector(vec![Deg::NegInf; len])
    }

    pub fn components(&self) -> &[Deg] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise comparison.
    pub fn le(&self, other: &DegreeVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn minus(&self, t: u32) -> DegreeVector {
        DegreeVector(self.0.iter().map(|d| d.minus(t)).collect())
    }

    pub fn is_all_neg_inf(&self) -> bool {
        self.0.iter().all(|&d| d == Deg::NegInf)
    }

    /// `d_i <= d_{i+1}` and `d_i + d_j <= d_{i+j}` for all admissible indices.
    pub fn is_superadditive(&self) -> bool {
        let d = &self.0;
        let s = d.len();
        for i in 0..s.saturating_sub(1) {
            if d[i] > d[i + 1] {
                return false;
            }
        }
        for i in 1..=s {
            for j in 1..=s {
                if i + j <= s && d[i - 1].add(d[j - 1]) > d[i + j - 1] {
                    return false;
                }
            }
        }
        true
    }

    /// The least superadditive vector dominating this one.
    pub fn superadditive_majorant(&self) -> DegreeVector {
        let mut e = self.0.clone();
        for k in 1..e.len() {
            let mut best = e[k].max(e[k - 1]);
            for a in 1..=k {
                let b = k + 1 - a;
                if b >= 1 {
                    best = best.max(e[a - 1].add(e[b - 1]));
                }
            }
            e[k] = best;
        }
        DegreeVector(e)
    }

    /// `(d, 2d, ..., sd)` with `d` the largest finite entry (or 0).
    pub fn linear_envelope(&self) -> DegreeVector {
        let d = self.0.iter().filter_map(|x| x.finite()).max().unwrap_or(0);
        DegreeVector((1..=self.0.len() as u32).map(|k| Deg::Fin(k * d)).collect())
    }

    /// Least `t` with `self <= bound - t`, if any.
    pub fn slack_below(&self, bound: &DegreeVector) -> Option<u32> {
        if !self.le(bound) {
            return None;
        }
        let mut t = 0;
        while self.le(&bound.minus(t + 1)) {
            t += 1;
            if bound.minus(t).is_all_neg_inf() {
                break;
            }
        }
        Some(t)
    }
}

impl fmt::Display for DegreeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str(")")
    }
}

/// Safety cap on the difference chain; polynomial sequences die far sooner.
const MAX_DIFFERENCES: u32 = 1 << 12;

/// Vector degree of `g`: for each `k`, `d_k` is one less than the number of
/// fresh-parameter differences needed to land in `G_{k+1}`, or `-inf` if `g`
/// already lies there.
///
/// Membership in `G_{k+1}` means the first `k` superdiagonals vanish as
/// polynomials, so the result holds for every choice of the differencing
/// integers at once.
pub fn vector_degree(g: &GSequence) -> DegreeVector {
    let s = g.dim() - 1;
    let mut out = vec![Deg::NegInf; s];
    let first = g.matrix().vanishing_superdiagonals();
    if first == s {
        return DegreeVector(out);
    }
    if g.is_constant() {
        for d in out.iter_mut().skip(first) {
            *d = Deg::Fin(0);
        }
        return DegreeVector(out);
    }
    let mut reached = first;
    let mut current = g.clone();
    let mut next_param = g.max_param() + 1;
    let mut t = 0;
    while reached < s {
        assert!(
            t < MAX_DIFFERENCES,
            "difference chain did not terminate for {g}"
        );
        current = if current.is_constant() {
            GSequence::identity(g.dim())
        } else {
            let m = Offset::Var(VarId::Param(next_param));
            next_param += 1;
            current.difference(&m).expect("parameter offset")
        };
        t += 1;
        let now = current.matrix().vanishing_superdiagonals();
        for d in out.iter_mut().take(now).skip(reached) {
            *d = Deg::Fin(t - 1);
        }
        reached = reached.max(now);
    }
    DegreeVector(out)
}

/// Largest degree in `n` among the entries of `g`; 0 for constants.
pub fn total_degree(g: &GSequence) -> u32 {
    g.total_degree()
}
