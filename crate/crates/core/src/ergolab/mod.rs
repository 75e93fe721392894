//! Finite measure-preserving systems on which polynomial averages can be
//! computed exactly or in floating point.
//!
//! Functions are moved by `(T f)(x) = f(T^{-1} x)`, so that transporting by
//! a product is transporting by each factor in turn.

mod average;
mod perm;
mod reducible;
mod unitary;

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::nilgroup::WordSequence;
use crate::polyring::{rational_to_i128, RatPoly};

pub use average::{
    average, average_exact, exponent_period, folner_average, oscillation, periodic_limit,
    stability_window, window_max, RealizedSystem, StabilityWindow,
};
pub use perm::MeasurePreservingMap;
pub use reducible::{
    proof_c_star_log10, reducible_construct, Reducible, ReducibleParams, ReducibleReport,
};
pub use unitary::{rotation, unitary_average, unitary_averages, UnitaryAssignment};

/// `{0, ..., size-1}` with the uniform probability measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FiniteSpace {
    size: usize,
}

impl FiniteSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("a space needs at least one point".into()));
        }
        Ok(FiniteSpace { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn point_mass(&self) -> f64 {
        1.0 / self.size as f64
    }
}

/// A real function on the space with a declared sup bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    values: Vec<f64>,
    bound: f64,
}

impl Observable {
    pub fn new(values: Vec<f64>, bound: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("observable on an empty space".into()));
        }
        if !(bound.is_finite() && bound >= 0.0) {
            return Err(Error::InvalidParameter(format!("bad sup bound {bound}")));
        }
        if let Some(v) = values.iter().find(|v| !(v.abs() <= bound)) {
            return Err(Error::InvalidParameter(format!(
                "value {v} exceeds the declared bound {bound}"
            )));
        }
        Ok(Observable { values, bound })
    }

    /// Bound taken to be the actual sup norm.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Observable::new(values, bound)
    }

    pub fn constant(size: usize, c: f64) -> Result<Self> {
        Observable::new(vec![c; size], c.abs())
    }

    pub fn indicator(size: usize, set: &[usize]) -> Result<Self> {
        let mut v = vec![0.0; size];
        for &x in set {
            if x >= size {
                return Err(Error::InvalidParameter(format!("point {x} is outside the space")));
            }
            v[x] = 1.0;
        }
        Observable::new(v, 1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `L²` norm for the uniform probability measure.
    pub fn l2_norm(&self) -> f64 {
        l2(&self.values)
    }

    /// Exact rational copy of the values.
    pub fn to_exact(&self) -> Vec<BigRational> {
        self.values
            .iter()
            .map(|&v| BigRational::from_float(v).expect("finite values"))
            .collect()
    }
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Generator {
    map: MeasurePreservingMap,
    cycles: Vec<Vec<u32>>,
    order: u64,
}

/// Generator names bound to permutations of one finite space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationAssignment {
    space: usize,
    generators: BTreeMap<String, Generator>,
}

impl PermutationAssignment {
    pub fn new(space: FiniteSpace) -> Self {
        PermutationAssignment {
            space: space.size(),
            generators: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, map: MeasurePreservingMap) -> Result<Self> {
        self.insert(name, map)?;
        Ok(self)
    }

    pub fn insert(&mut self, name: &str, map: MeasurePreservingMap) -> Result<()> {
        if map.len() != self.space {
            return Err(Error::DimensionMismatch(self.space, map.len()));
        }
        let cycles = map.cycles();
        let order = map.order();
        self.generators.insert(
            name.to_string(),
            Generator { map, cycles, order },
        );
        Ok(())
    }

    pub fn space(&self) -> FiniteSpace {
        FiniteSpace { size: self.space }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.generators.keys().map(String::as_str)
    }

    pub fn get(&self, name: &str) -> Result<&MeasurePreservingMap> {
        self.generator(name).map(|g| &g.map)
    }

    /// Order of the named generator.
    pub fn order(&self, name: &str) -> Result<u64> {
        self.generator(name).map(|g| g.order)
    }

    fn generator(&self, name: &str) -> Result<&Generator> {
        self.generators
            .get(name)
            .ok_or_else(|| Error::UnboundGenerator(name.to_string()))
    }

    /// `name^k`.
    pub fn power(&self, name: &str, k: i128) -> Result<MeasurePreservingMap> {
        let g = self.generator(name)?;
        Ok(perm::power_from_cycles(self.space, &g.cycles, k))
    }

    /// Translations of `Z_{p_1} x ... x Z_{p_k}`. Points are numbered in
    /// mixed radix with the first coordinate most significant.
    pub fn torus(moduli: &[u32], generators: &[(&str, Vec<i64>)]) -> Result<Self> {
        if moduli.is_empty() || moduli.contains(&0) {
            return Err(Error::InvalidParameter("moduli must be positive".into()));
        }
        let size = moduli
            .iter()
            .try_fold(1usize, |acc, &p| acc.checked_mul(p as usize))
            .filter(|&s| s <= u32::MAX as usize)
            .ok_or_else(|| Error::InvalidParameter("torus is too large".into()))?;
        let mut a = PermutationAssignment::new(FiniteSpace::new(size)?);
        for (name, shift) in generators {
            if shift.len() != moduli.len() {
                return Err(Error::DimensionMismatch(moduli.len(), shift.len()));
            }
            let image = (0..size)
                .map(|x| {
                    let mut coords = torus_coords(x, moduli);
                    for (c, (&s, &p)) in coords.iter_mut().zip(shift.iter().zip(moduli)) {
                        *c = (*c as i64 + s).rem_euclid(p as i64) as u32;
                    }
                    torus_index(&coords, moduli) as u32
                })
                .collect();
            a.insert(name, MeasurePreservingMap::new(image)?)?;
        }
        Ok(a)
    }

    /// Translations of `Z_p`.
    pub fn cyclic(p: u32, generators: &[(&str, i64)]) -> Result<Self> {
        let gens: Vec<(&str, Vec<i64>)> = generators.iter().map(|(n, s)| (*n, vec![*s])).collect();
        PermutationAssignment::torus(&[p], &gens)
    }

    /// Left translations of `UT(3, Z_p)` by `x = I + E_12` and `y = I + E_23`.
    /// The point `[[1, a, c], [0, 1, b], [0, 0, 1]]` has index `a p² + b p + c`.
    pub fn heisenberg(p: u32, x: &str, y: &str) -> Result<Self> {
        if p == 0 || (p as u64).pow(3) > u32::MAX as u64 {
            return Err(Error::InvalidParameter(format!("bad modulus {p}")));
        }
        let size = (p as usize).pow(3);
        let idx = |a: u32, b: u32, c: u32| ((a * p + b) * p + c) as usize;
        let mut left_x = vec![0u32; size];
        let mut left_y = vec![0u32; size];
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    // (1,0,0)(a,b,c) = (a+1, b, c+b); (0,1,0)(a,b,c) = (a, b+1, c).
                    left_x[idx(a, b, c)] = idx((a + 1) % p, b, (c + b) % p) as u32;
                    left_y[idx(a, b, c)] = idx(a, (b + 1) % p, c) as u32;
                }
            }
        }
        PermutationAssignment::new(FiniteSpace::new(size)?)
            .with(x, MeasurePreservingMap::new(left_x)?)?
            .with(y, MeasurePreservingMap::new(left_y)?)
    }
}

fn torus_coords(mut x: usize, moduli: &[u32]) -> Vec<u32> {
    let mut out = vec![0u32; moduli.len()];
    for (c, &p) in out.iter_mut().zip(moduli).rev() {
        *c = (x % p as usize) as u32;
        x /= p as usize;
    }
    out
}

fn torus_index(coords: &[u32], moduli: &[u32]) -> usize {
    coords
        .iter()
        .zip(moduli)
        .fold(0usize, |acc, (&c, &p)| acc * p as usize + c as usize)
}

/// Integer value of an exponent, reduced modulo the generator order.
pub(crate) fn exponent_value(
    p: &RatPoly,
    value: Result<BigRational>,
    order: u64,
) -> Result<i128> {
    let v = value?;
    if !v.is_integer() {
        return Err(Error::NotIntegerValued(format!("{p} takes the value {v}")));
    }
    match rational_to_i128(&v) {
        Ok(k) => Ok(k),
        Err(_) => {
            let r = v.to_integer() % num_bigint::BigInt::from(order);
            Ok(r.to_i128().expect("residue fits"))
        }
    }
}

/// `g(n) = T_1^{p_1(n)} ... T_k^{p_k(n)}` as a permutation.
pub fn realize(w: &WordSequence, a: &PermutationAssignment, n: i64) -> Result<MeasurePreservingMap> {
    realize_with(w, a, |p| p.eval_time(n))
}

pub(crate) fn realize_with(
    w: &WordSequence,
    a: &PermutationAssignment,
    eval: impl Fn(&RatPoly) -> Result<BigRational>,
) -> Result<MeasurePreservingMap> {
    let mut acc = MeasurePreservingMap::identity(a.space);
    for (name, p) in &w.factors {
        let g = a.generator(name)?;
        let k = exponent_value(p, eval(p), g.order)?;
        let factor = perm::power_from_cycles(a.space, &g.cycles, k);
        acc = acc.compose(&factor)?;
    }
    Ok(acc)
}
