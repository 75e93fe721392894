//! Systems of polynomial sequences: reductions, equivalence, and the
//! `h_0 ∪ s_1 h_1 ∪ ... ∪ s_l h_l` grouping used to organise reduction steps.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::nilgroup::{vector_degree, DegreeVector, GSequence};
use crate::polyring::Offset;

/// An ordered, non-empty tuple of sequences of one dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    seqs: Vec<GSequence>,
}

impl System {
    pub fn new(seqs: Vec<GSequence>) -> Result<Self> {
        let first = seqs.first().ok_or(Error::EmptySystem)?;
        let d = first.dim();
        if let Some(bad) = seqs.iter().find(|g| g.dim() != d) {
            return Err(Error::DimensionMismatch(d, bad.dim()));
        }
        Ok(System { seqs })
    }

    pub fn trivial(dim: usize) -> Self {
        System {
            seqs: vec![GSequence::identity(dim)],
        }
    }

    pub fn sequences(&self) -> &[GSequence] {
        &self.seqs
    }

    pub fn into_sequences(self) -> Vec<GSequence> {
        self.seqs
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.seqs[0].dim()
    }

    /// The trivial system `(1_G)`.
    pub fn is_trivial(&self) -> bool {
        self.seqs.len() == 1 && self.seqs[0].is_identity()
    }

    pub fn is_constant(&self) -> bool {
        self.seqs.iter().all(GSequence::is_constant)
    }

    pub fn max_param(&self) -> u32 {
        self.seqs
            .iter()
            .map(GSequence::max_param)
            .max()
            .unwrap_or(0)
    }

    /// Moves the sequence at `index` to the end, keeping the others in order.
    pub fn with_last(&self, index: usize) -> System {
        let mut seqs = self.seqs.clone();
        let g = seqs.remove(index);
        seqs.push(g);
        System { seqs }
    }

    /// Same sequences in the same order, up to duplicates.
    pub fn same_sequences(&self, other: &System) -> bool {
        let a: HashSet<&GSequence> = self.seqs.iter().collect();
        let b: HashSet<&GSequence> = other.seqs.iter().collect();
        a == b
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, g) in self.seqs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{g}")?;
        }
        f.write_str(")")
    }
}

/// `(g_1, ..., g_{j-1}, <g_j|1>_m, <g_j|g_1>_m, ..., <g_j|g_{j-1}>_m)`.
pub fn reduce_m(s: &System, m: &Offset) -> Result<System> {
    let (last, rest) = s.seqs.split_last().ok_or(Error::EmptySystem)?;
    let mut out = Vec::with_capacity(2 * s.len() - 1);
    out.extend(rest.iter().cloned());
    out.push(last.difference(m)?);
    for g in rest {
        out.push(last.bracket(g, m)?);
    }
    Ok(System { seqs: out })
}

/// The reduction without `<g_j|1>_m`; undefined for a single sequence.
pub fn complete_reduce_m(s: &System, m: &Offset) -> Result<System> {
    if s.len() < 2 {
        return Err(Error::CompleteReductionUndefined);
    }
    let (last, rest) = s.seqs.split_last().expect("size checked");
    let mut out = Vec::with_capacity(2 * s.len() - 2);
    out.extend(rest.iter().cloned());
    for g in rest {
        out.push(last.bracket(g, m)?);
    }
    Ok(System { seqs: out })
}

/// Drops repeated sequences (keeping first occurrences) and the identity,
/// unless nothing else is left, in which case the result is `(1_G)`.
pub fn normalize_equiv(s: &System) -> System {
    let dim = s.dim();
    let mut seen = HashSet::with_capacity(s.len());
    let seqs: Vec<GSequence> = s
        .seqs
        .iter()
        .filter(|g| !g.is_identity() && seen.insert((*g).clone()))
        .cloned()
        .collect();
    if seqs.is_empty() {
        System::trivial(dim)
    } else {
        System { seqs }
    }
}

/// Drops repeated sequences only; identities are kept.
pub fn dedupe(seqs: &[GSequence]) -> Vec<GSequence> {
    let mut seen = HashSet::with_capacity(seqs.len());
    seqs.iter()
        .filter(|g| seen.insert((*g).clone()))
        .cloned()
        .collect()
}

/// Replaces each `g` by `n -> g(n) g(0)^{-1}`, then normalizes.
pub fn cheat_normalize(s: &System) -> System {
    let stripped = System {
        seqs: s.seqs.iter().map(GSequence::strip_constant).collect(),
    };
    normalize_equiv(&stripped)
}

/// `h_0 ∪ s_1 h_1 ∪ ... ∪ s_l h_l` with every `s_i` of degree `<= bound` and
/// every remainder (and `h_0`) of degree `<= bound - 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SistemaDecomposition {
    pub bound: DegreeVector,
    pub h0: Vec<GSequence>,
    pub parts: Vec<(GSequence, Vec<GSequence>)>,
}

impl SistemaDecomposition {
    /// The system `h_0 ∪ s_1 h_1 ∪ ... ∪ s_l h_l`, in that order.
    pub fn assemble(&self) -> Result<Vec<GSequence>> {
        let mut out = self.h0.clone();
        for (s, h) in &self.parts {
            for x in h {
                out.push(s.compose(x)?);
            }
        }
        Ok(out)
    }

    /// Checks every degree side-condition.
    pub fn check_degrees(&self) -> Result<()> {
        let low = self.bound.minus(1);
        for (k, g) in self.h0.iter().enumerate() {
            if !vector_degree(g).le(&low) {
                return Err(Error::DegreeViolation(format!(
                    "h_0[{k}] = {g} exceeds {low}"
                )));
            }
        }
        for (i, (s, h)) in self.parts.iter().enumerate() {
            if !vector_degree(s).le(&self.bound) {
                return Err(Error::DegreeViolation(format!(
                    "s_{} = {s} exceeds {}",
                    i + 1,
                    self.bound
                )));
            }
            for (k, x) in h.iter().enumerate() {
                if !vector_degree(x).le(&low) {
                    return Err(Error::DegreeViolation(format!(
                        "h_{}[{k}] = {x} exceeds {low}",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The trivial grouping: `s_i = g_i` and `h_i = (1_G)`, except that sequences
/// already of degree `<= bound - 1` go to `h_0`.
pub fn sistema_decompose(s: &System, bound: &DegreeVector) -> Result<SistemaDecomposition> {
    if !bound.is_superadditive() {
        return Err(Error::InvalidParameter(format!(
            "{bound} is not superadditive"
        )));
    }
    if bound.len() + 1 != s.dim() {
        return Err(Error::DimensionMismatch(bound.len() + 1, s.dim()));
    }
    let low = bound.minus(1);
    let mut out = SistemaDecomposition {
        bound: bound.clone(),
        h0: Vec::new(),
        parts: Vec::new(),
    };
    for (k, g) in s.seqs.iter().enumerate() {
        let deg = vector_degree(g);
        if !deg.le(bound) {
            return Err(Error::DegreeViolation(format!(
                "sequence {} = {g} has degree {deg}, above {bound}",
                k + 1
            )));
        }
        if deg.le(&low) {
            out.h0.push(g.clone());
        } else {
            out.parts
                .push((g.clone(), vec![GSequence::identity(s.dim())]));
        }
    }
    Ok(out)
}

/// One reduction step on the assembled system, reducing on the last
/// sequence of the last part, regrouped so that the same `s_i` survive.
///
/// With `g_j = s_l h` the new pieces are
/// `h_0' = (<g_j|1>, h_0, <g_j|h_{0,k}>)`,
/// `h_i' = (h_i, s_i^{-1} <g_j|s_i h_{i,k}>)` for `i < l`, and the last part
/// becomes `s_l h_l^{**}`; it disappears when `|h_l| = 1`.
pub fn grouped_step(d: &SistemaDecomposition, m: &Offset) -> Result<SistemaDecomposition> {
    let (s_l, h_l) = d
        .parts
        .last()
        .ok_or_else(|| Error::InvalidParameter("no part left to reduce on".into()))?;
    let h_last = h_l.last().ok_or(Error::EmptySystem)?;
    let g_j = s_l.compose(h_last)?;
    let low = d.bound.minus(1);
    let check = |label: &str, x: &GSequence| -> Result<()> {
        let deg = vector_degree(x);
        if deg.le(&low) {
            Ok(())
        } else {
            Err(Error::DegreeViolation(format!(
                "{label} = {x} has degree {deg}, above {low}"
            )))
        }
    };

    let mut h0 = Vec::with_capacity(2 * d.h0.len() + 1);
    h0.push(g_j.difference(m)?);
    h0.extend(d.h0.iter().cloned());
    for x in &d.h0 {
        h0.push(g_j.bracket(x, m)?);
    }
    for x in &h0 {
        check("h_0 entry", x)?;
    }

    let l = d.parts.len();
    let mut parts = Vec::with_capacity(l);
    for (i, (s_i, h_i)) in d.parts[..l - 1].iter().enumerate() {
        let s_inv = s_i.invert();
        let mut next = h_i.clone();
        for x in h_i {
            let r = s_inv.compose(&g_j.bracket(&s_i.compose(x)?, m)?)?;
            check(&format!("h^(l,{})", i + 1), &r)?;
            next.push(r);
        }
        parts.push((s_i.clone(), next));
    }
    if h_l.len() > 1 {
        let rest = &h_l[..h_l.len() - 1];
        let mut next = rest.to_vec();
        for x in rest {
            let direct = s_l.invert().compose(&g_j.bracket(&s_l.compose(x)?, m)?)?;
            let inner = h_last.bracket(x, m)?;
            if direct != inner {
                return Err(Error::DegreeViolation(format!(
                    "<s h_j | s h_i> differs from s <h_j | h_i> for s = {s_l}"
                )));
            }
            check("h_l** entry", &inner)?;
            next.push(inner);
        }
        parts.push((s_l.clone(), next));
    }

    if h0.len() > 2 * d.h0.len() + 1 {
        return Err(Error::DegreeViolation("h_0 grew beyond 2|h_0| + 1".into()));
    }
    for ((_, new), (_, old)) in parts.iter().zip(&d.parts) {
        if new.len() > 2 * old.len() {
            return Err(Error::DegreeViolation("a part grew beyond 2|h_i|".into()));
        }
    }
    Ok(SistemaDecomposition {
        bound: d.bound.clone(),
        h0,
        parts,
    })
}
