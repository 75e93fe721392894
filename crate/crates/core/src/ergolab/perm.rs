//! Permutations of a finite point set, which are exactly the
//! measure-preserving maps of a uniform probability space.

use crate::error::{Error, Result};

/// A bijection of `{0, ..., size-1}` together with its inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MeasurePreservingMap {
    fwd: Vec<u32>,
    inv: Vec<u32>,
}

impl MeasurePreservingMap {
    pub fn new(image: Vec<u32>) -> Result<Self> {
        let n = image.len();
        if n == 0 {
            return Err(Error::InvalidParameter("a map needs at least one point".into()));
        }
        let mut inv = vec![u32::MAX; n];
        for (x, &y) in image.iter().enumerate() {
            let y = y as usize;
            if y >= n || inv[y] != u32::MAX {
                return Err(Error::InvalidParameter(format!(
                    "image list is not a permutation of 0..{n}"
                )));
            }
            inv[y] = x as u32;
        }
        Ok(MeasurePreservingMap { fwd: image, inv })
    }

    pub fn identity(size: usize) -> Self {
        let fwd: Vec<u32> = (0..size as u32).collect();
        MeasurePreservingMap {
            inv: fwd.clone(),
            fwd,
        }
    }

    /// Builds a map from its cycles; points not listed are fixed.
    pub fn from_cycles(size: usize, cycles: &[Vec<u32>]) -> Result<Self> {
        let mut image: Vec<u32> = (0..size as u32).collect();
        let mut seen = vec![false; size];
        for c in cycles {
            for (i, &x) in c.iter().enumerate() {
                let x = x as usize;
                if x >= size || seen[x] {
                    return Err(Error::InvalidParameter(format!(
                        "cycle entry {x} is out of range or repeated"
                    )));
                }
                seen[x] = true;
                image[x] = c[(i + 1) % c.len()];
            }
        }
        MeasurePreservingMap::new(image)
    }

    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.fwd.iter().enumerate().all(|(x, &y)| x as u32 == y)
    }

    pub fn apply(&self, x: usize) -> usize {
        self.fwd[x] as usize
    }

    pub fn apply_inverse(&self, x: usize) -> usize {
        self.inv[x] as usize
    }

    pub fn image(&self) -> &[u32] {
        &self.fwd
    }

    pub fn preimage(&self) -> &[u32] {
        &self.inv
    }

    pub fn inverse(&self) -> Self {
        MeasurePreservingMap {
            fwd: self.inv.clone(),
            inv: self.fwd.clone(),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(self.len(), other.len()));
        }
        let fwd: Vec<u32> = other.fwd.iter().map(|&y| self.fwd[y as usize]).collect();
        let inv: Vec<u32> = self.inv.iter().map(|&y| other.inv[y as usize]).collect();
        Ok(MeasurePreservingMap { fwd, inv })
    }

    pub fn cycles(&self) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut c = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                c.push(x as u32);
                x = self.fwd[x] as usize;
            }
            out.push(c);
        }
        out
    }

    /// Least common multiple of the cycle lengths.
    pub fn order(&self) -> u64 {
        self.cycles()
            .iter()
            .fold(1u64, |acc, c| num_integer::lcm(acc, c.len() as u64))
    }

    /// `self^k` for any integer `k`.
    pub fn pow(&self, k: i128) -> Self {
        power_from_cycles(self.len(), &self.cycles(), k)
    }

    /// `(T f)(x) = f(T^{-1} x)`, the left action on functions.
    pub fn transport<T: Clone>(&self, f: &[T]) -> Vec<T> {
        self.inv.iter().map(|&y| f[y as usize].clone()).collect()
    }
}

/// Powers a map given by its cycle decomposition, rotating every cycle by
/// `k` modulo its length.
pub(crate) fn power_from_cycles(size: usize, cycles: &[Vec<u32>], k: i128) -> MeasurePreservingMap {
    let mut fwd = vec![0u32; size];
    let mut inv = vec![0u32; size];
    for c in cycles {
        let len = c.len();
        let r = k.rem_euclid(len as i128) as usize;
        for (i, &x) in c.iter().enumerate() {
            let y = c[(i + r) % len];
            fwd[x as usize] = y;
            inv[y as usize] = x;
        }
    }
    MeasurePreservingMap { fwd, inv }
}
