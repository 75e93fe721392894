//! Averages `E_{n in [N]} prod_i g_i(n) f_i`, their oscillation, and
//! windows on which they are stable.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::dsl::SystemSpec;
use crate::error::{Error, Result};
use crate::nilgroup::WordSequence;
use crate::polyring::VarId;

use super::{l2, realize, realize_with, MeasurePreservingMap, Observable, PermutationAssignment};

/// Cached maps are dropped beyond this many stored points.
const CACHE_POINTS: usize = 1 << 24;

/// A symbolic system bound to permutations, with the maps `g_i(n)` cached
/// by `n`.
#[derive(Debug)]
pub struct RealizedSystem {
    words: Vec<WordSequence>,
    assignment: PermutationAssignment,
    cache: Mutex<Cache>,
}

#[derive(Debug, Default)]
struct Cache {
    maps: BTreeMap<i64, Arc<Vec<MeasurePreservingMap>>>,
    points: usize,
}

impl RealizedSystem {
    pub fn new(words: Vec<WordSequence>, assignment: PermutationAssignment) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptySystem);
        }
        for w in &words {
            for name in w.generator_names() {
                assignment.get(name)?;
            }
        }
        Ok(RealizedSystem {
            words,
            assignment,
            cache: Mutex::new(Cache::default()),
        })
    }

    pub fn from_spec(spec: &SystemSpec, assignment: PermutationAssignment) -> Result<Self> {
        RealizedSystem::new(spec.words.clone(), assignment)
    }

    pub fn words(&self) -> &[WordSequence] {
        &self.words
    }

    pub fn assignment(&self) -> &PermutationAssignment {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn space_size(&self) -> usize {
        self.assignment.space().size()
    }

    /// `(g_1(n), ..., g_j(n))`.
    pub fn maps_at(&self, n: i64) -> Result<Arc<Vec<MeasurePreservingMap>>> {
        if let Some(m) = self.cache.lock().expect("cache lock").maps.get(&n) {
            return Ok(Arc::clone(m));
        }
        let maps: Vec<MeasurePreservingMap> = self
            .words
            .iter()
            .map(|w| realize(w, &self.assignment, n))
            .collect::<Result<_>>()?;
        let maps = Arc::new(maps);
        let mut cache = self.cache.lock().expect("cache lock");
        let cost = self.len() * self.space_size();
        if cache.points + cost <= CACHE_POINTS {
            cache.points += cost;
            cache.maps.insert(n, Arc::clone(&maps));
        }
        Ok(maps)
    }

    /// Recomputes every cached entry from scratch and compares.
    pub fn verify_cache(&self) -> Result<bool> {
        let cache = self.cache.lock().expect("cache lock");
        for (&n, maps) in &cache.maps {
            for (w, m) in self.words.iter().zip(maps.iter()) {
                if realize(w, &self.assignment, n)? != *m {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn check_inputs(&self, fs: &[Observable]) -> Result<()> {
        if fs.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: fs.len(),
            });
        }
        if let Some(f) = fs.iter().find(|f| f.len() != self.space_size()) {
            return Err(Error::DimensionMismatch(self.space_size(), f.len()));
        }
        Ok(())
    }

    /// Adds `prod_i (g_i(n) f_i)` into `acc`.
    fn accumulate(&self, fs: &[&[f64]], n: i64, acc: &mut [f64]) -> Result<()> {
        let maps = self.maps_at(n)?;
        for (x, slot) in acc.iter_mut().enumerate() {
            let mut v = 1.0;
            for (g, f) in maps.iter().zip(fs) {
                v *= f[g.apply_inverse(x)];
            }
            *slot += v;
        }
        Ok(())
    }

    /// `A_N` for every `N` in `lo..=hi`, from one running sum.
    fn averages_between(&self, fs: &[Observable], lo: u64, hi: u64) -> Result<Vec<Vec<f64>>> {
        self.check_inputs(fs)?;
        if lo == 0 || hi < lo {
            return Err(Error::InvalidParameter(format!("bad range {lo}..={hi}")));
        }
        let vals: Vec<&[f64]> = fs.iter().map(|f| f.values()).collect();
        let mut sum = vec![0.0; self.space_size()];
        let mut out = Vec::with_capacity((hi - lo + 1) as usize);
        for n in 1..=hi {
            self.accumulate(&vals, n as i64, &mut sum)?;
            if n >= lo {
                out.push(sum.iter().map(|s| s / n as f64).collect());
            }
        }
        Ok(out)
    }
}

/// `A_N[f_1, ..., f_j] = E_{n in [N]} prod_i g_i(n) f_i`.
pub fn average(r: &RealizedSystem, fs: &[Observable], n: u64) -> Result<Observable> {
    let mut v = r.averages_between(fs, n, n)?;
    let bound = fs.iter().map(Observable::bound).product();
    Observable::new(v.pop().expect("one average"), bound)
}

/// [`average`] in exact rational arithmetic.
pub fn average_exact(r: &RealizedSystem, fs: &[Vec<BigRational>], n: u64) -> Result<Vec<BigRational>> {
    if fs.len() != r.len() {
        return Err(Error::SizeMismatch {
            expected: r.len(),
            got: fs.len(),
        });
    }
    if let Some(f) = fs.iter().find(|f| f.len() != r.space_size()) {
        return Err(Error::DimensionMismatch(r.space_size(), f.len()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    let mut sum = vec![BigRational::zero(); r.space_size()];
    for t in 1..=n {
        let maps = r.maps_at(t as i64)?;
        for (x, slot) in sum.iter_mut().enumerate() {
            let mut v = BigRational::from_integer(BigInt::from(1));
            for (g, f) in maps.iter().zip(fs) {
                v *= &f[g.apply_inverse(x)];
            }
            *slot += v;
        }
    }
    let n = BigRational::from_integer(BigInt::from(n));
    Ok(sum.into_iter().map(|s| s / &n).collect())
}

/// `||A_{N'} - A_N||` in `L²` of the uniform measure.
pub fn oscillation(r: &RealizedSystem, fs: &[Observable], n: u64, n_prime: u64) -> Result<f64> {
    let a = average(r, fs, n)?;
    let b = average(r, fs, n_prime)?;
    let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| y - x).collect();
    Ok(l2(&d))
}

/// `max_{lo <= N, N' <= hi} ||A_{N'} - A_N||`, exactly over the grid.
///
/// Distances to `A_lo` bound every pair from above through the triangle
/// inequality, so pairs that cannot beat the current maximum are skipped.
pub fn window_max(r: &RealizedSystem, fs: &[Observable], lo: u64, hi: u64) -> Result<f64> {
    let avgs = r.averages_between(fs, lo, hi)?;
    let dist = |a: &[f64], b: &[f64]| {
        l2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
    };
    let mut radial: Vec<(f64, usize)> = avgs
        .iter()
        .enumerate()
        .map(|(i, a)| (dist(a, &avgs[0]), i))
        .collect();
    radial.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = radial.first().map_or(0.0, |p| p.0);
    for (ii, &(di, i)) in radial.iter().enumerate() {
        if 2.0 * di <= best {
            break;
        }
        for &(dj, j) in &radial[ii + 1..] {
            if di + dj <= best {
                break;
            }
            best = best.max(dist(&avgs[i], &avgs[j]));
        }
    }
    Ok(best)
}

/// Outcome of [`stability_window`]: the window `[m, F(m)]` and every probe.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityWindow {
    pub m: u64,
    pub upper: u64,
    pub window_max: f64,
    pub probes: Vec<(u64, f64)>,
}

/// Least `M >= m0` found by doubling then bisection with
/// `max_{M <= N, N' <= F(M)} ||A_{N'} - A_N|| <= epsilon`.
pub fn stability_window(
    r: &RealizedSystem,
    fs: &[Observable],
    f: &dyn Fn(u64) -> u64,
    epsilon: f64,
    m0: u64,
    cap: u64,
) -> Result<StabilityWindow> {
    if !(epsilon > 0.0) || m0 == 0 {
        return Err(Error::InvalidParameter("need ε > 0 and M0 >= 1".into()));
    }
    let mut probes = Vec::new();
    let probe = |m: u64, probes: &mut Vec<(u64, f64)>| -> Result<f64> {
        let upper = f(m);
        if upper < m {
            return Err(Error::InvalidParameter(format!("F({m}) = {upper} < {m}")));
        }
        let w = window_max(r, fs, m, upper)?;
        probes.push((m, w));
        Ok(w)
    };
    let mut failed = None;
    let mut m = m0;
    let mut w;
    loop {
        if m > cap {
            let last_max = probes.last().map_or(f64::NAN, |p: &(u64, f64)| p.1);
            return Err(Error::SearchCapExceeded {
                cap,
                last_max,
                probes,
            });
        }
        w = probe(m, &mut probes)?;
        if w <= epsilon {
            break;
        }
        failed = Some(m);
        m = m.saturating_mul(2);
    }
    if let Some(mut lo) = failed {
        let mut hi = m;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let wm = probe(mid, &mut probes)?;
            if wm <= epsilon {
                hi = mid;
                w = wm;
            } else {
                lo = mid;
            }
        }
        m = hi;
        w = probes.iter().rev().find(|p| p.0 == m).map_or(w, |p| p.1);
    }
    Ok(StabilityWindow {
        m,
        upper: f(m),
        window_max: w,
        probes,
    })
}

/// Least `P <= max_period` such that every exponent `p` of the system
/// satisfies `p(n + P) = p(n)` modulo the order of its generator, which
/// makes `n -> (g_1(n), ..., g_j(n))` periodic with period `P`.
///
/// An integer-valued polynomial of degree `d` vanishes modulo `k` on all of
/// `Z` once it does on `d + 1` consecutive integers, so finitely many checks
/// decide each candidate.
pub fn exponent_period(r: &RealizedSystem, max_period: u64) -> Result<Option<u64>> {
    let a = r.assignment();
    let mut factors = Vec::new();
    for w in r.words() {
        for (name, p) in &w.factors {
            if p.variables().iter().any(|v| *v != VarId::Time) {
                return Err(Error::InvalidParameter(format!(
                    "exponent {p} depends on more than n"
                )));
            }
            factors.push((p, BigInt::from(a.order(name)?)));
        }
    }
    'candidate: for period in 1..=max_period {
        for (p, order) in &factors {
            let checks = p.degree_in(VarId::Time) as i64 + 1;
            for n in 0..checks {
                let d = p.eval_time(n + period as i64)? - p.eval_time(n)?;
                if !d.is_integer() {
                    return Err(Error::NotIntegerValued(p.to_string()));
                }
                if !(d.to_integer() % order).is_zero() {
                    continue 'candidate;
                }
            }
        }
        return Ok(Some(period));
    }
    Ok(None)
}

/// `lim_N A_N`, which for a system of period `P` equals `A_P` exactly.
pub fn periodic_limit(
    r: &RealizedSystem,
    fs: &[Vec<BigRational>],
    max_period: u64,
) -> Result<(u64, Vec<BigRational>)> {
    let period = exponent_period(r, max_period)?.ok_or_else(|| {
        Error::InvalidParameter(format!("no period up to {max_period}"))
    })?;
    Ok((period, average_exact(r, fs, period)?))
}

/// Mean of `prod_i g_i(u) f_i` over the lattice points `u` of a box in
/// `Z^d`. Coordinate 0 is the variable `n` and coordinate `i >= 1` is `m_i`.
pub fn folner_average(
    r: &RealizedSystem,
    fs: &[Observable],
    bounds: &[(i64, i64)],
) -> Result<Observable> {
    r.check_inputs(fs)?;
    if bounds.is_empty() || bounds.iter().any(|(lo, hi)| hi < lo) {
        return Err(Error::InvalidParameter("empty box".into()));
    }
    let vars: Vec<VarId> = (0..bounds.len())
        .map(|i| if i == 0 { VarId::Time } else { VarId::Param(i as u32) })
        .collect();
    let mut point: Vec<i64> = bounds.iter().map(|b| b.0).collect();
    let mut sum = vec![0.0; r.space_size()];
    let mut count = 0u64;
    loop {
        let assignment: BTreeMap<VarId, BigInt> = vars
            .iter()
            .zip(&point)
            .map(|(v, &x)| (*v, BigInt::from(x)))
            .collect();
        let maps: Vec<MeasurePreservingMap> = r
            .words()
            .iter()
            .map(|w| realize_with(w, r.assignment(), |p| p.eval(&assignment)))
            .collect::<Result<_>>()?;
        for (x, slot) in sum.iter_mut().enumerate() {
            let mut v = 1.0;
            for (g, f) in maps.iter().zip(fs) {
                v *= f.values()[g.apply_inverse(x)];
            }
            *slot += v;
        }
        count += 1;
        // Odometer step over the box.
        let mut i = 0;
        loop {
            if i == point.len() {
                let bound = fs.iter().map(Observable::bound).product();
                return Observable::new(sum.iter().map(|s| s / count as f64).collect(), bound);
            }
            if point[i] < bounds[i].1 {
                point[i] += 1;
                break;
            }
            point[i] = bounds[i].0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_system;

    fn system(text: &str, a: PermutationAssignment) -> RealizedSystem {
        RealizedSystem::from_spec(&parse_system(text).unwrap(), a).unwrap()
    }

    fn z5() -> PermutationAssignment {
        PermutationAssignment::cyclic(5, &[("T", 1)]).unwrap()
    }

    #[test]
    fn full_orbit_average_is_uniform() {
        let r = system("T^n", z5());
        let f = Observable::indicator(5, &[0]).unwrap();
        let a = average(&r, &[f.clone()], 5).unwrap();
        assert!(a.values().iter().all(|v| (v - 0.2).abs() < 1e-15));
        assert_eq!(oscillation(&r, &[f], 5, 10).unwrap(), 0.0);
    }

    #[test]
    fn single_term_is_a_transport() {
        let r = system("T^n; T^(2*n)", z5());
        let f = Observable::new(vec![0.1, 0.2, 0.3, 0.4, 0.5], 1.0).unwrap();
        let g = Observable::new(vec![1.0, -1.0, 0.5, 0.0, 0.25], 1.0).unwrap();
        let a = average(&r, &[f.clone(), g.clone()], 1).unwrap();
        let t = r.assignment().get("T").unwrap();
        let tf = t.transport(f.values());
        let ttg = t.pow(2).transport(g.values());
        for x in 0..5 {
            assert_eq!(a.values()[x], tf[x] * ttg[x]);
        }
    }

    #[test]
    fn constant_system_is_stable_at_once() {
        let r = system("1", z5());
        let f = Observable::indicator(5, &[2]).unwrap();
        let w = stability_window(&r, &[f], &|n| 2 * n, 1e-9, 3, 100).unwrap();
        assert_eq!(w.m, 3);
        assert_eq!(w.window_max, 0.0);
    }

    #[test]
    fn search_cap_reports_probes() {
        let r = system("T^n", PermutationAssignment::cyclic(101, &[("T", 1)]).unwrap());
        let f = Observable::indicator(101, &[0]).unwrap();
        match stability_window(&r, &[f], &|n| 2 * n, 1e-6, 1, 8) {
            Err(Error::SearchCapExceeded { probes, .. }) => assert_eq!(probes.len(), 4),
            other => panic!("expected a cap error, got {other:?}"),
        }
    }

    #[test]
    fn size_mismatch() {
        let r = system("T^n; T^n", z5());
        let f = Observable::indicator(5, &[0]).unwrap();
        assert!(matches!(
            average(&r, &[f], 3),
            Err(Error::SizeMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn periods() {
        let r = system("T^(n^2); T^(n*(n-1)/2)", z5());
        assert_eq!(exponent_period(&r, 50).unwrap(), Some(5));
        let r = system("T^(n*(n-1)/2)", PermutationAssignment::cyclic(4, &[("T", 1)]).unwrap());
        assert_eq!(exponent_period(&r, 50).unwrap(), Some(8));
    }

    #[test]
    fn folner_in_one_variable_is_the_average() {
        let r = system("T^(n^2)", z5());
        let f = Observable::indicator(5, &[1, 2]).unwrap();
        let a = average(&r, &[f.clone()], 9).unwrap();
        let b = folner_average(&r, &[f], &[(1, 9)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cache_reverifies() {
        let r = system("T^(n^3)", z5());
        let f = Observable::indicator(5, &[0]).unwrap();
        average(&r, &[f], 20).unwrap();
        assert!(r.verify_cache().unwrap());
    }
}
