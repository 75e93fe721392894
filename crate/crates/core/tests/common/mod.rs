//! Independent oracles shared by the integration tests and the acceptance
//! harness. None of them call the routine they check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use nilreduce::nilgroup::{GSequence, UTMatrix, WordSequence};
use nilreduce::{DegreeVector, Offset, RatPoly, VarId};

// ---------------------------------------------------------------------------
// Atomic norms

/// `min q.x` subject to `b - A x` in the listed cones; `None` when the
/// program is unbounded.
fn conic_min(
    n: usize,
    q: Vec<f64>,
    trip: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
) -> Option<f64> {
    let m = b.len();
    let mut ri = Vec::new();
    let mut ci = Vec::new();
    let mut v = Vec::new();
    for (r, c, x) in trip {
        ri.push(r);
        ci.push(c);
        v.push(x);
    }
    let a = CscMatrix::new_from_triplets(m, n, ri, ci, v);
    let p = CscMatrix::zeros((n, n));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-12)
        .tol_gap_rel(1e-12)
        .tol_feas(1e-12)
        .build()
        .unwrap();
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings);
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => Some(solver.solution.obj_val),
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => None,
        s => panic!("oracle program status {s:?}"),
    }
}

/// `sup { <f, g> : ||g||_Σ <= 1 }` written over the primal description of
/// the unit ball: `g = sum λ_j σ_j + h`, `sum |λ_j| + ||h|| / r <= 1`, the
/// `h` part present only when `radius > 0`.
pub fn lp_sup_over_atomic_ball(f: &DVector<f64>, atoms: &[DVector<f64>], radius: f64) -> f64 {
    let d = f.len();
    let k = atoms.len();
    let aug = radius > 0.0;
    // Variables: g (d), λ (k), τ (k), then h (d) and s (1) when augmented.
    let (g0, l0, t0, h0) = (0, d, d + k, d + 2 * k);
    let s0 = h0 + d;
    let n = if aug { s0 + 1 } else { h0 };
    let mut trip = Vec::new();
    let mut b = Vec::new();
    let mut row = 0;
    for i in 0..d {
        trip.push((row, g0 + i, 1.0));
        for (j, a) in atoms.iter().enumerate() {
            trip.push((row, l0 + j, -a[i]));
        }
        if aug {
            trip.push((row, h0 + i, -1.0));
        }
        b.push(0.0);
        row += 1;
    }
    for j in 0..k {
        // τ - λ >= 0 and τ + λ >= 0.
        trip.push((row, l0 + j, 1.0));
        trip.push((row, t0 + j, -1.0));
        b.push(0.0);
        row += 1;
        trip.push((row, l0 + j, -1.0));
        trip.push((row, t0 + j, -1.0));
        b.push(0.0);
        row += 1;
    }
    for j in 0..k {
        trip.push((row, t0 + j, 1.0));
    }
    if aug {
        trip.push((row, s0, 1.0 / radius));
    }
    b.push(1.0);
    row += 1;
    let mut cones = vec![
        SupportedConeT::ZeroConeT(d),
        SupportedConeT::NonnegativeConeT(2 * k + 1),
    ];
    if aug {
        trip.push((row, s0, -1.0));
        b.push(0.0);
        row += 1;
        for i in 0..d {
            trip.push((row, h0 + i, -1.0));
            b.push(0.0);
            row += 1;
        }
        cones.push(SupportedConeT::SecondOrderConeT(d + 1));
    }
    let mut q = vec![0.0; n];
    for i in 0..d {
        q[g0 + i] = -f[i];
    }
    -conic_min(n, q, trip, b, cones).expect("the atomic ball is bounded")
}

/// `||f||_Σ` as `sup { <f, φ> : |<φ, σ_j>| <= 1, r ||φ|| <= 1 }`; `+inf`
/// when `f` leaves the span and there is no ball.
pub fn dual_lp_atomic_norm(f: &DVector<f64>, atoms: &[DVector<f64>], radius: f64) -> f64 {
    // With r > 0 the program is posed in ψ = r φ so that the cone has unit
    // radius: max <f, ψ> / r over |<ψ, σ>| <= r, ||ψ|| <= 1.
    let d = f.len();
    let scale = if radius > 0.0 { radius } else { 1.0 };
    let mut trip = Vec::new();
    let mut b = Vec::new();
    let mut row = 0;
    for a in atoms {
        for sign in [1.0, -1.0] {
            for i in 0..d {
                trip.push((row, i, sign * a[i]));
            }
            b.push(scale);
            row += 1;
        }
    }
    let mut cones = vec![SupportedConeT::NonnegativeConeT(2 * atoms.len())];
    if radius > 0.0 {
        b.push(1.0);
        row += 1;
        for i in 0..d {
            trip.push((row, i, -1.0));
            b.push(0.0);
            row += 1;
        }
        cones.push(SupportedConeT::SecondOrderConeT(d + 1));
    }
    let q: Vec<f64> = f.iter().map(|x| -x).collect();
    conic_min(d, q, trip, b, cones).map_or(f64::INFINITY, |v| -v / scale)
}

/// `min sum |λ_j|` over `f = sum λ_j σ_j` by enumerating supports: some
/// optimal `λ` is supported on linearly independent atoms, so solving every
/// independent subset exactly and keeping the feasible ones finds it.
pub fn enumerated_atomic_norm(f: &DVector<f64>, atoms: &[DVector<f64>]) -> f64 {
    let d = f.len();
    let k = atoms.len();
    let mut best = f64::INFINITY;
    if f.norm() == 0.0 {
        return 0.0;
    }
    for mask in 1u32..(1u32 << k) {
        let idx: Vec<usize> = (0..k).filter(|j| mask & (1 << j) != 0).collect();
        if idx.len() > d {
            continue;
        }
        let s = DMatrix::from_columns(&idx.iter().map(|&j| atoms[j].clone()).collect::<Vec<_>>());
        let svd = s.clone().svd(true, true);
        if svd.singular_values.min() < 1e-10 {
            continue;
        }
        let lam = svd.solve(f, 1e-14).unwrap();
        if (&s * &lam - f).norm() < 1e-9 {
            best = best.min(lam.abs().sum());
        }
    }
    best
}

pub fn random_unit(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

// ---------------------------------------------------------------------------
// Ergodic averages by coordinates

/// Translations of `Z_{p_1} x ... x Z_{p_k}` handled by coordinate arithmetic,
/// with the same mixed-radix numbering as the library.
pub struct TorusOracle {
    pub moduli: Vec<i64>,
    pub shifts: BTreeMap<String, Vec<i64>>,
}

impl TorusOracle {
    pub fn new(moduli: &[i64], shifts: &[(&str, Vec<i64>)]) -> Self {
        TorusOracle {
            moduli: moduli.to_vec(),
            shifts: shifts.iter().map(|(n, s)| (n.to_string(), s.clone())).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.moduli.iter().product::<i64>() as usize
    }

    fn coords(&self, mut x: usize) -> Vec<i64> {
        let mut out = vec![0; self.moduli.len()];
        for (c, &p) in out.iter_mut().zip(&self.moduli).rev() {
            *c = (x % p as usize) as i64;
            x /= p as usize;
        }
        out
    }

    fn index(&self, c: &[i64]) -> usize {
        c.iter()
            .zip(&self.moduli)
            .fold(0usize, |acc, (&v, &p)| acc * p as usize + v.rem_euclid(p) as usize)
    }

    /// Translation vector of `g(n)`, each coordinate reduced.
    pub fn displacement(&self, w: &WordSequence, n: i64) -> Vec<i64> {
        let mut v = vec![0i64; self.moduli.len()];
        for (name, p) in &w.factors {
            let e = p.eval_time(n).unwrap();
            assert!(e.is_integer());
            for (i, s) in self.shifts[name].iter().enumerate() {
                let m = BigInt::from(self.moduli[i]);
                let term = (e.to_integer() * BigInt::from(*s)) % &m;
                v[i] = (v[i] + term.to_i64().unwrap()).rem_euclid(self.moduli[i]);
            }
        }
        v
    }

    /// `(g f)(x) = f(x - displacement)`.
    fn pull(&self, x: usize, disp: &[i64]) -> usize {
        let c: Vec<i64> = self.coords(x).iter().zip(disp).map(|(a, b)| a - b).collect();
        self.index(&c)
    }

    pub fn average(&self, words: &[WordSequence], fs: &[Vec<f64>], n: u64) -> Vec<f64> {
        let size = self.size();
        let mut sum = vec![0.0; size];
        for t in 1..=n as i64 {
            let disps: Vec<Vec<i64>> = words.iter().map(|w| self.displacement(w, t)).collect();
            for (x, slot) in sum.iter_mut().enumerate() {
                let mut v = 1.0;
                for (d, f) in disps.iter().zip(fs) {
                    v *= f[self.pull(x, d)];
                }
                *slot += v;
            }
        }
        sum.iter().map(|s| s / n as f64).collect()
    }

    pub fn average_exact(
        &self,
        words: &[WordSequence],
        fs: &[Vec<BigRational>],
        n: u64,
    ) -> Vec<BigRational> {
        let size = self.size();
        let mut sum = vec![BigRational::zero(); size];
        for t in 1..=n as i64 {
            let disps: Vec<Vec<i64>> = words.iter().map(|w| self.displacement(w, t)).collect();
            for (x, slot) in sum.iter_mut().enumerate() {
                let mut v = BigRational::one();
                for (d, f) in disps.iter().zip(fs) {
                    v *= &f[self.pull(x, d)];
                }
                *slot += v;
            }
        }
        let n = BigRational::from_integer(BigInt::from(n));
        sum.into_iter().map(|s| s / &n).collect()
    }
}

pub fn l2(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    l2(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

/// Every pair in the window, every average recomputed from scratch.
pub fn brute_window_max(
    oracle: &TorusOracle,
    words: &[WordSequence],
    fs: &[Vec<f64>],
    lo: u64,
    hi: u64,
) -> f64 {
    let avgs: Vec<Vec<f64>> = (lo..=hi).map(|n| oracle.average(words, fs, n)).collect();
    let mut best = 0.0f64;
    for i in 0..avgs.len() {
        for j in i + 1..avgs.len() {
            best = best.max(l2_dist(&avgs[i], &avgs[j]));
        }
    }
    best
}

/// Elements `(a, b, c)` of `UT(3, Z_p)` standing for `[[1, a, c], [0, 1, b], [0, 0, 1]]`.
pub fn ut3_mul(p: i64, x: (i64, i64, i64), y: (i64, i64, i64)) -> (i64, i64, i64) {
    (
        (x.0 + y.0).rem_euclid(p),
        (x.1 + y.1).rem_euclid(p),
        (x.2 + y.2 + x.0 * y.1).rem_euclid(p),
    )
}

pub fn ut3_index(p: i64, x: (i64, i64, i64)) -> usize {
    ((x.0 * p + x.1) * p + x.2) as usize
}

// ---------------------------------------------------------------------------
// Degrees by definition

/// Lower central series of `UT(d)`: `G_{k+1}` is the set of matrices whose
/// first `k` superdiagonals vanish.
pub fn in_level(g: &GSequence, k: usize) -> bool {
    let d = g.dim();
    (1..=k.min(d - 1)).all(|s| (0..d - s).all(|i| g.matrix().upper(i, i + s).is_zero()))
}

/// Checks `deg g <= dbar` straight from the definition: for each `k`,
/// `d_k + 1` differences along fresh parameters land in `G_{k+1}`, or `g`
/// itself lies there when `d_k = -inf`. One chain `g, D g, D D g, ...`
/// serves every `k`.
pub fn has_degree_at_most(g: &GSequence, dbar: &DegreeVector) -> bool {
    let mut fresh = g.max_param() + 1;
    let mut chain = vec![g.clone()];
    for (k, dk) in dbar.components().iter().enumerate() {
        let steps = match dk.finite() {
            None => 0,
            Some(d) => d as usize + 1,
        };
        while chain.len() <= steps && !chain.last().unwrap().is_identity() {
            let next = chain.last().unwrap().difference(&Offset::param(fresh)).unwrap();
            fresh += 1;
            chain.push(next);
        }
        let h = chain.get(steps).unwrap_or_else(|| chain.last().unwrap());
        if !in_level(h, k + 1) {
            return false;
        }
    }
    true
}

/// Random sequence in `UT(dim)` with entries of degree at most `deg` in `n`
/// and small integer coefficients.
pub fn random_sequence(rng: &mut impl Rng, dim: usize, deg: u32, density: f64) -> GSequence {
    let mut m = UTMatrix::identity(dim);
    for i in 0..dim {
        for j in i + 1..dim {
            if !rng.gen_bool(density) {
                continue;
            }
            let mut p = RatPoly::zero();
            for e in 0..=deg {
                let c: i64 = rng.gen_range(-3..=3);
                p = &p + &(&RatPoly::int(c) * &RatPoly::var(VarId::Time).pow(e));
            }
            m.set(i, j, p);
        }
    }
    GSequence::new(m)
}

/// Exact value of a sequence at time `n` with parameters assigned.
pub fn eval_matrix(g: &GSequence, values: &BTreeMap<VarId, BigInt>) -> Vec<Vec<BigRational>> {
    let d = g.dim();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| g.matrix().get(i, j).eval(values).unwrap())
                .collect()
        })
        .collect()
}

/// Plain matrix product and Gauss-Jordan inverse over the rationals.
pub fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let d = a.len();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).fold(BigRational::zero(), |acc, k| acc + &a[i][k] * &b[k][j]))
                .collect()
        })
        .collect()
}

pub fn mat_inv(a: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let d = a.len();
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut inv: Vec<Vec<BigRational>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    for col in 0..d {
        let piv = (col..d).find(|&r| !m[r][col].is_zero()).expect("invertible");
        m.swap(col, piv);
        inv.swap(col, piv);
        let s = m[col][col].clone();
        for j in 0..d {
            m[col][j] = &m[col][j] / &s;
            inv[col][j] = &inv[col][j] / &s;
        }
        for r in 0..d {
            if r != col && !m[r][col].is_zero() {
                let fct = m[r][col].clone();
                for j in 0..d {
                    let a = &m[col][j] * &fct;
                    m[r][j] -= a;
                    let b = &inv[col][j] * &fct;
                    inv[r][j] -= b;
                }
            }
        }
    }
    inv
}

pub mod degree_lemma {
    use rand::Rng;

    use nilreduce::{vector_degree, Deg, DegreeVector, GSequence, Offset};

    use super::{has_degree_at_most, random_sequence};

    #[derive(Clone, Copy, Debug)]
    pub enum Clause {
        Difference,
        Group,
        Commutator,
    }

    fn plus(v: &DegreeVector, t: u32) -> DegreeVector {
        DegreeVector::new(v.components().iter().map(|d| d.add(Deg::Fin(t))).collect())
    }

    fn join(a: &DegreeVector, b: &DegreeVector) -> DegreeVector {
        DegreeVector::new(
            a.components()
                .iter()
                .zip(b.components())
                .map(|(x, y)| *x.max(y))
                .collect(),
        )
    }

    fn sample(rng: &mut impl Rng) -> GSequence {
        let deg = rng.gen_range(0..=3);
        let density = rng.gen_range(0.3..=1.0);
        random_sequence(rng, 4, deg, density)
    }

    /// Both routes must agree that `g` has degree at most `bound`.
    fn check(what: &str, g: &GSequence, bound: &DegreeVector) -> Result<(), String> {
        let v = vector_degree(g);
        if !v.le(bound) {
            return Err(format!("{what}: vector_degree {v} exceeds {bound} for {g}"));
        }
        if !has_degree_at_most(g, bound) {
            return Err(format!("{what}: definition rejects {bound} for {g}"));
        }
        Ok(())
    }

    /// One randomized instance; `Err` describes the counterexample.
    pub fn trial(rng: &mut impl Rng, clause: Clause) -> Result<(), String> {
        let g = sample(rng);
        let vg = vector_degree(&g);
        match clause {
            Clause::Difference => {
                let t = rng.gen_range(0..=2);
                let dbar = plus(&vg, t).superadditive_majorant();
                check("input", &g, &dbar.minus(t))?;
                let m = Offset::param(g.max_param() + 1);
                let dg = g.difference(&m).map_err(|e| e.to_string())?;
                check("D_m g", &dg, &dbar.minus(t + 1))
            }
            Clause::Group => {
                let h = sample(rng);
                let t = rng.gen_range(0..=2);
                let dbar = plus(&join(&vg, &vector_degree(&h)), t).superadditive_majorant();
                let bound = dbar.minus(t);
                check("g", &g, &bound)?;
                check("h", &h, &bound)?;
                check("gh", &g.compose(&h).map_err(|e| e.to_string())?, &bound)?;
                check("g^-1", &g.invert(), &bound)
            }
            Clause::Commutator => {
                let h = sample(rng);
                let (t1, t2) = (rng.gen_range(0..=2), rng.gen_range(0..=2));
                let dbar =
                    join(&plus(&vg, t1), &plus(&vector_degree(&h), t2)).superadditive_majorant();
                check("g", &g, &dbar.minus(t1))?;
                check("h", &h, &dbar.minus(t2))?;
                let c = g.commutator(&h).map_err(|e| e.to_string())?;
                check("[g,h]", &c, &dbar.minus(t1 + t2))
            }
        }
    }
}

pub mod hb {
    use nalgebra::DVector;
    use rand::Rng;

    use nilreduce::hahnbanach::{DecomposeParams, DecompositionResult, NormFamily, SpanningSet};

    use super::{dual_lp_atomic_norm, lp_sup_over_atomic_ball, random_unit};

    pub const DIM: usize = 16;
    pub const RADIUS: f64 = 0.003;

    pub fn eta(x: f64) -> f64 {
        1.5 / x
    }

    pub fn psi(n: u64) -> u64 {
        2 * n
    }

    pub fn params<'a>() -> DecomposeParams<'a> {
        DecomposeParams {
            delta: 0.4,
            c: 0.5,
            m_bullet: 1,
            eta: &eta,
            psi: &psi,
            tol: 1e-8,
        }
    }

    /// Nested tiers of 40, 8, 4 and 2 random unit atoms with a small ball,
    /// and a target close to the one atom that only the coarsest tier has.
    pub fn instance(rng: &mut impl Rng) -> (DVector<f64>, NormFamily) {
        let atoms: Vec<DVector<f64>> = (0..40).map(|_| random_unit(rng, DIM)).collect();
        let tiers = [(1u64, 40usize), (4, 8), (16, 4), (64, 2)]
            .iter()
            .map(|&(start, k)| (start, SpanningSet::new(atoms[..k].to_vec(), 1.0).unwrap()))
            .collect();
        let family = NormFamily::new(tiers, RADIUS).unwrap();
        let noise = random_unit(rng, DIM) * 0.1;
        let f = &atoms[39] + noise;
        let f = &f / f.norm();
        (f, family)
    }

    /// Checks a decomposition and every failed round with oracles that
    /// solve their own programs.
    pub fn verify(
        f: &DVector<f64>,
        fam: &NormFamily,
        p: &DecomposeParams,
        r: &DecompositionResult,
        tol: f64,
    ) -> Result<(), String> {
        let len = r.constants.len();
        if r.index == 0 || r.index > len {
            return Err(format!("round {} outside 1..={len}", r.index));
        }
        let sum = &r.f1 + &r.f2 + &r.f3;
        if (&sum - f).amax() > 1e-12 {
            return Err("parts do not add up to f".into());
        }
        let atoms = |i: u64| fam.set(i).unwrap().vectors().to_vec();
        let c = r.c_value;
        let e = (p.eta)(c);
        let n1 = dual_lp_atomic_norm(&r.f1, &atoms(r.b), fam.radius());
        let n2 = lp_sup_over_atomic_ball(&r.f2, &atoms(r.a), fam.radius());
        let n3 = r.f3.norm();
        if !(n1 < c * (1.0 + tol)) || !(n2 < e * (1.0 + tol)) || !(n3 < p.delta * (1.0 + tol)) {
            return Err(format!(
                "bounds fail: ||f1|| = {n1} vs {c}, ||f2||* = {n2} vs {e}, ||f3|| = {n3} vs {}",
                p.delta
            ));
        }
        for phi in &r.functionals {
            let entry = &r.schedule[phi.round - 1];
            let cj = r.constants[phi.round - 1];
            let ej = (p.eta)(cj);
            let value = phi.phi.dot(f);
            let s_b = lp_sup_over_atomic_ball(&phi.phi, &atoms(entry.b), fam.radius());
            let s_a = dual_lp_atomic_norm(&phi.phi, &atoms(entry.a), fam.radius());
            let s_2 = phi.phi.norm();
            if value < 1.0 - tol
                || s_b > (1.0 + tol) / cj
                || s_a > (1.0 + tol) / ej
                || s_2 > (1.0 + tol) / p.delta
            {
                return Err(format!(
                    "round {} functional fails: <φ,f> = {value}, {s_b} vs 1/{cj}, {s_a} vs 1/{ej}, {s_2}",
                    phi.round
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Ergodic lab checks shared with the acceptance harness

pub mod erg {
    use nalgebra::DVector;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, Zero};
    use rand::Rng;

    use nilreduce::dsl::parse_system;
    use nilreduce::ergolab::{
        average, average_exact, oscillation, periodic_limit, reducible_construct, rotation,
        stability_window, unitary_averages, window_max, Observable, PermutationAssignment,
        RealizedSystem, ReducibleParams, UnitaryAssignment,
    };
    use nilreduce::nilgroup::WordSequence;

    use super::{brute_window_max, l2, l2_dist, TorusOracle};

    fn ratio(a: u64, b: u64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn words(text: &str) -> Vec<WordSequence> {
        parse_system(text).unwrap().words
    }

    /// `f = 1_{0}` under `T x = x + 1` on `Z_101`: the average at `x` counts
    /// the `t <= N` with `t ≡ x`, so it is within `1/N` of `1/101`.
    pub fn z101_rotation() -> Result<String, String> {
        let p = 101u64;
        let a = PermutationAssignment::cyclic(p as u32, &[("T", 1)]).map_err(|e| e.to_string())?;
        let r = RealizedSystem::new(words("T^n"), a).map_err(|e| e.to_string())?;
        let f: Vec<BigRational> = (0..p)
            .map(|x| if x == 0 { BigRational::one() } else { BigRational::zero() })
            .collect();
        let mut worst = Vec::new();
        for n in [100u64, 1_000, 10_000] {
            let avg = average_exact(&r, &[f.clone()], n).map_err(|e| e.to_string())?;
            let mut sup = BigRational::zero();
            for (x, v) in avg.iter().enumerate() {
                // t ≡ x (mod p) with 1 <= t <= N: t = rep, rep + p, ...
                let rep = if x == 0 { p } else { x as u64 };
                let count = if rep > n { 0 } else { (n - rep) / p + 1 };
                if *v != ratio(count, n) {
                    return Err(format!("A_{n}({x}) = {v}, expected {count}/{n}"));
                }
                let dev = (v - ratio(1, p)).abs();
                if dev > sup {
                    sup = dev;
                }
            }
            if sup > ratio(1, n) {
                return Err(format!("N = {n}: sup deviation {sup} exceeds 1/{n}"));
            }
            worst.push(format!("N={n}: sup|A_N-1/101| = {sup}"));
        }
        Ok(worst.join(", "))
    }

    pub const WINDOW_SYSTEM: &str = "T^n; T^(n^2)";

    pub fn window_inputs() -> (RealizedSystem, TorusOracle, Vec<Vec<f64>>) {
        let a = PermutationAssignment::cyclic(11, &[("T", 1)]).unwrap();
        let r = RealizedSystem::new(words(WINDOW_SYSTEM), a).unwrap();
        let oracle = TorusOracle::new(&[11], &[("T", vec![1])]);
        let f1: Vec<f64> = (0..11).map(|x| if x < 4 { 1.0 } else { 0.0 }).collect();
        let f2: Vec<f64> = (0..11).map(|x| ((x * 5 % 11) as f64 / 10.0) - 0.5).collect();
        (r, oracle, vec![f1, f2])
    }

    /// `F(N) = 2N`, `ε = 0.02`: the returned window is re-measured by
    /// recomputing every average from scratch, and the window just below it
    /// must fail, since the search bisects down to a failing neighbour.
    pub fn stability_window_brute() -> Result<String, String> {
        let (r, oracle, fs) = window_inputs();
        let obs: Vec<Observable> = fs.iter().map(|f| Observable::from_values(f.clone()).unwrap()).collect();
        let eps = 0.02;
        let w = stability_window(&r, &obs, &|n| 2 * n, eps, 1, 1 << 16).map_err(|e| e.to_string())?;
        let ws = words(WINDOW_SYSTEM);
        let brute = brute_window_max(&oracle, &ws, &fs, w.m, 2 * w.m);
        if brute > eps {
            return Err(format!("M = {}: brute-force window max {brute} > {eps}", w.m));
        }
        if (brute - w.window_max).abs() > 1e-9 {
            return Err(format!("reported {} but brute force gives {brute}", w.window_max));
        }
        if w.m > 1 {
            let below = brute_window_max(&oracle, &ws, &fs, w.m - 1, 2 * (w.m - 1));
            if below <= eps {
                return Err(format!("M - 1 = {} already passes ({below})", w.m - 1));
            }
        }
        Ok(format!("M = {}, window max {brute:.6} (brute force)", w.m))
    }

    pub const COMMUTING_SYSTEM: &str = "T^(n^2); T^(n^2) S^n";

    /// `(T^{n²}, T^{n²} S^n)` on `Z_7²` over `[5000, 10000]`. The oracle
    /// recomputes the averages by coordinates and the limit as `A_P` for the
    /// period `P = 7` of `n² mod 7` and `n mod 7`, confirmed by `A_P = A_{2P}`.
    pub fn commuting_window() -> Result<String, String> {
        let (lo, hi) = (5000u64, 10000u64);
        let a = PermutationAssignment::torus(&[7, 7], &[("T", vec![1, 0]), ("S", vec![0, 1])])
            .map_err(|e| e.to_string())?;
        let ws = words(COMMUTING_SYSTEM);
        let r = RealizedSystem::new(ws.clone(), a).map_err(|e| e.to_string())?;
        let oracle = TorusOracle::new(&[7, 7], &[("T", vec![1, 0]), ("S", vec![0, 1])]);
        let f1: Vec<f64> = (0..49).map(|x| if x % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let f2: Vec<f64> = (0..49).map(|x| (x * 17 % 49) as f64 / 48.0).collect();
        let obs = [
            Observable::from_values(f1.clone()).unwrap(),
            Observable::from_values(f2.clone()).unwrap(),
        ];
        let exact: Vec<Vec<BigRational>> = obs.iter().map(|o| o.to_exact()).collect();
        let (period, limit) = periodic_limit(&r, &exact, 64).map_err(|e| e.to_string())?;
        let oracle_limit = oracle.average_exact(&ws, &exact, 7);
        if oracle.average_exact(&ws, &exact, 14) != oracle_limit {
            return Err("oracle averages are not 7-periodic".into());
        }
        if 7 % period != 0 || limit != oracle_limit {
            return Err(format!("periodic limit (period {period}) disagrees with the oracle"));
        }

        // Every average in the window, by a running sum over displacements.
        let fs = [f1, f2];
        let size = 49;
        let mut sum = vec![0.0; size];
        let mut avgs = Vec::new();
        for t in 1..=hi {
            let disp: Vec<Vec<i64>> = ws.iter().map(|w| oracle.displacement(w, t as i64)).collect();
            for (x, slot) in sum.iter_mut().enumerate() {
                let (a0, b0) = ((x / 7) as i64, (x % 7) as i64);
                let mut v = 1.0;
                for (d, f) in disp.iter().zip(&fs) {
                    let y = (a0 - d[0]).rem_euclid(7) * 7 + (b0 - d[1]).rem_euclid(7);
                    v *= f[y as usize];
                }
                *slot += v;
            }
            if t >= lo {
                avgs.push(sum.iter().map(|s| s / t as f64).collect::<Vec<f64>>());
            }
        }
        let mut brute = 0.0f64;
        for i in 0..avgs.len() {
            for j in i + 1..avgs.len() {
                brute = brute.max(l2_dist(&avgs[i], &avgs[j]));
            }
        }
        let lim: Vec<f64> = limit.iter().map(|v| num_traits::ToPrimitive::to_f64(v).unwrap()).collect();
        let to_limit = avgs.iter().map(|v| l2_dist(v, &lim)).fold(0.0f64, f64::max);
        let lib = window_max(&r, &obs, lo, hi).map_err(|e| e.to_string())?;
        let osc = oscillation(&r, &obs, lo, hi).map_err(|e| e.to_string())?;
        if (lib - brute).abs() > 1e-9 {
            return Err(format!("window max {lib} vs brute force {brute}"));
        }
        if brute > 2.0 * to_limit + 1e-12 {
            return Err(format!("window max {brute} exceeds twice the distance to the limit {to_limit}"));
        }
        if !(lib < 0.05) {
            return Err(format!("window max {lib} is not below 0.05"));
        }
        Ok(format!(
            "period {period}, window max {lib:.3e}, oscillation(5000,10000) {osc:.3e}, max ||A_N - lim|| {to_limit:.3e}"
        ))
    }

    pub struct ReducibleInstance {
        pub oracle: TorusOracle,
        pub words: Vec<WordSequence>,
        pub system: RealizedSystem,
        pub fs: Vec<Vec<f64>>,
        pub u: Vec<f64>,
        pub n: u64,
        pub params: ReducibleParams,
    }

    const EXPONENTS: [&str; 7] = ["n", "2*n", "n^2", "n*(n+1)/2", "-n", "n^2+n", "3*n"];

    /// Two or three translations of a small torus with bounded inputs that
    /// stay away from zero, so most instances meet the hypothesis.
    pub fn reducible_instance(rng: &mut impl Rng) -> ReducibleInstance {
        let moduli: Vec<u32> = match rng.gen_range(0..3) {
            0 => vec![[5, 7, 11][rng.gen_range(0..3)]],
            1 => vec![5, 5],
            _ => vec![3, 7],
        };
        let gens: Vec<(&str, Vec<i64>)> = if moduli.len() == 1 {
            vec![("T", vec![1]), ("S", vec![2])]
        } else {
            vec![("T", vec![1, 0]), ("S", vec![0, 1])]
        };
        let j = rng.gen_range(2..=3);
        let mut text = Vec::new();
        for _ in 0..j {
            let k = rng.gen_range(1..=2);
            let word: Vec<String> = (0..k)
                .map(|_| {
                    let g = ["T", "S"][rng.gen_range(0..2)];
                    format!("{g}^({})", EXPONENTS[rng.gen_range(0..EXPONENTS.len())])
                })
                .collect();
            text.push(word.join(" "));
        }
        let ws = words(&text.join("; "));
        let a = PermutationAssignment::torus(&moduli, &gens).unwrap();
        let system = RealizedSystem::new(ws.clone(), a).unwrap();
        let m: Vec<i64> = moduli.iter().map(|&p| p as i64).collect();
        let oracle = TorusOracle::new(&m, &gens);
        let size = oracle.size();
        let fs = (0..j - 1)
            .map(|_| (0..size).map(|_| rng.gen_range(0.3..1.0)).collect())
            .collect();
        let c = rng.gen_range(1.0..2.0);
        let c_star = if rng.gen_bool(0.5) { c } else { c * rng.gen_range(1.0..1.3) };
        let u = (0..size).map(|_| rng.gen_range(0.0..3.0 * c)).collect();
        let epsilon = 0.6;
        let n = rng.gen_range(1500..2500);
        ReducibleInstance {
            oracle,
            words: ws,
            system,
            fs,
            u,
            n,
            params: ReducibleParams { epsilon, c, c_star },
        }
    }

    /// Recomputes `A`, `h` and every defect by coordinate arithmetic.
    /// Returns whether the hypothesis held and the largest defect.
    pub fn check_reducible(inst: &ReducibleInstance) -> Result<(bool, f64), String> {
        let ReducibleInstance { oracle, words, system, fs, u, n, params } = inst;
        let n = *n;
        let j = words.len();
        let size = oracle.size();
        let obs: Vec<Observable> = fs.iter().map(|f| Observable::new(f.clone(), 1.0).unwrap()).collect();
        let uo = Observable::new(u.clone(), 3.0 * params.c).unwrap();
        let out = reducible_construct(system, &obs, &uo, n, params).map_err(|e| e.to_string())?;
        let rep = &out.report;

        let c1 = params.epsilon / (96.0 * params.c_star * params.c_star);
        let l_max = (c1 * n as f64).floor() as u64;
        let disp: Vec<Vec<Vec<i64>>> = (1..=n + l_max)
            .map(|t| words.iter().map(|w| oracle.displacement(w, t as i64)).collect())
            .collect();
        let d = |t: u64, i: usize| &disp[(t - 1) as usize][i];
        let moved = |x: usize, plus: &[&[i64]], minus: &[&[i64]]| -> usize {
            let mut c = coords(oracle, x);
            for v in plus {
                c.iter_mut().zip(v.iter()).for_each(|(a, b)| *a += b);
            }
            for v in minus {
                c.iter_mut().zip(v.iter()).for_each(|(a, b)| *a -= b);
            }
            index(oracle, &c)
        };

        let mut inputs = fs.clone();
        inputs.push(u.clone());
        let a = oracle.average(words, &inputs, n);
        let mut h = vec![0.0; size];
        for t in 1..=n {
            for (x, slot) in h.iter_mut().enumerate() {
                let dj = d(t, j - 1);
                let mut v = a[moved(x, &[dj], &[])];
                for (i, f) in fs.iter().enumerate() {
                    v *= f[moved(x, &[dj], &[d(t, i)])];
                }
                *slot += v;
            }
        }
        h.iter_mut().for_each(|v| *v /= n as f64);
        let h_gap = h.iter().zip(&out.h).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if h_gap > 1e-10 {
            return Err(format!("h differs from the oracle by {h_gap}"));
        }
        let norm_sq = l2(&a).powi(2);
        let inner = u.iter().zip(&h).map(|(x, y)| x * y).sum::<f64>() / size as f64;
        if (inner - norm_sq).abs() > 1e-10 || rep.identity_gap > 1e-10 {
            return Err(format!(
                "identity gap {} (oracle) / {} (library)",
                (inner - norm_sq).abs(),
                rep.identity_gap
            ));
        }
        let hypothesis = norm_sq.sqrt() > params.epsilon / 6.0;
        if hypothesis != rep.hypothesis || rep.l_max != l_max {
            return Err("hypothesis or l range disagrees with the oracle".into());
        }

        let three_c = 3.0 * params.c;
        let bound = params.epsilon / (16.0 * params.c_star);
        let mut worst = 0.0f64;
        for l in 1..=l_max {
            let djl = d(l, j - 1);
            let mut defect = 0.0f64;
            for x in 0..size {
                let lhs = h[moved(x, &[], &[djl])] / three_c;
                let mut rhs = 0.0;
                for m in 1..=n {
                    let z = moved(x, &[d(l + m, j - 1)], &[djl]);
                    let mut v = a[z] / three_c;
                    for (i, f) in fs.iter().enumerate() {
                        v *= f[moved(z, &[], &[d(l + m, i)])];
                    }
                    rhs += v;
                }
                defect = defect.max((lhs - rhs / n as f64).abs());
            }
            let lib = rep.defects[(l - 1) as usize];
            if (lib - defect).abs() > 1e-10 {
                return Err(format!("l = {l}: defect {lib} vs oracle {defect}"));
            }
            if hypothesis && !(defect < bound) {
                return Err(format!("l = {l}: defect {defect} not below ε/(16C*) = {bound}"));
            }
            worst = worst.max(defect);
        }
        Ok((hypothesis, worst))
    }

    fn coords(o: &TorusOracle, mut x: usize) -> Vec<i64> {
        let mut out = vec![0; o.moduli.len()];
        for (c, &p) in out.iter_mut().zip(&o.moduli).rev() {
            *c = (x % p as usize) as i64;
            x /= p as usize;
        }
        out
    }

    fn index(o: &TorusOracle, c: &[i64]) -> usize {
        c.iter()
            .zip(&o.moduli)
            .fold(0usize, |acc, (&v, &p)| acc * p as usize + v.rem_euclid(p) as usize)
    }

    /// Rotation by `π` and `T^n`: consecutive terms cancel, so the average
    /// vanishes at even `N` and is `-u/N` at odd `N`.
    pub fn unitary_pi() -> Result<String, String> {
        let a = UnitaryAssignment::new(2)
            .with("T", rotation(std::f64::consts::PI))
            .map_err(|e| e.to_string())?;
        let w = &words("T^n")[0];
        let u = DVector::from_vec(vec![0.6, -1.7]);
        let checkpoints: Vec<u64> = (1..=400).collect();
        let avgs = unitary_averages(w, &a, &u, &checkpoints).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for (n, avg) in checkpoints.iter().zip(&avgs) {
            let expected = if n % 2 == 0 { DVector::zeros(2) } else { -&u / *n as f64 };
            if (avg - &expected).amax() > 1e-12 {
                return Err(format!("N = {n}: average {avg:?} vs {expected:?}"));
            }
            if n % 2 == 0 {
                if avg.norm() > u.norm() / *n as f64 + 1e-12 {
                    return Err(format!("N = {n}: ||avg|| = {} > ||u||/N", avg.norm()));
                }
                worst = worst.max(avg.norm());
            }
        }
        Ok(format!("even N <= 400: max ||avg|| = {worst:.2e}"))
    }

    /// Rotation by one radian with exponent `n²`: the average is the Weyl sum
    /// `(1/N) Σ e^{i n²}` acting on `u`, summed here with `cos`/`sin`.
    pub fn unitary_weyl() -> Result<String, String> {
        let a = UnitaryAssignment::new(2).with("T", rotation(1.0)).map_err(|e| e.to_string())?;
        let w = &words("T^(n^2)")[0];
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let (n1, n2) = (10_000u64, 100_000u64);
        let avgs = unitary_averages(w, &a, &u, &[n1, n2]).map_err(|e| e.to_string())?;
        let weyl = |n: u64| {
            let (mut c, mut s) = (0.0, 0.0);
            for k in 1..=n {
                let t = (k * k) as f64;
                c += t.cos();
                s += t.sin();
            }
            DVector::from_vec(vec![c / n as f64, s / n as f64])
        };
        for (n, avg) in [(n1, &avgs[0]), (n2, &avgs[1])] {
            let e = weyl(n);
            if (avg - &e).amax() > 1e-8 {
                return Err(format!("N = {n}: average {avg:?} vs Weyl sum {e:?}"));
            }
        }
        let osc = (&avgs[0] - &avgs[1]).norm();
        if !(osc < 0.05) {
            return Err(format!("oscillation {osc} is not below 0.05"));
        }
        Ok(format!("||A_10^4 - A_10^5|| = {osc:.3e}"))
    }

    /// Library floating averages against the coordinate oracle.
    pub fn averages_agree(inst: &ReducibleInstance, n: u64) -> Result<(), String> {
        let mut inputs = inst.fs.clone();
        inputs.push(inst.u.clone());
        let obs: Vec<Observable> = inputs.iter().map(|f| Observable::from_values(f.clone()).unwrap()).collect();
        let lib = average(&inst.system, &obs, n).map_err(|e| e.to_string())?;
        let ora = inst.oracle.average(&inst.words, &inputs, n);
        let gap = lib.values().iter().zip(&ora).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if gap > 1e-9 {
            return Err(format!("N = {n}: averages differ by {gap}"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Certificates

pub mod cert {
    use std::collections::{BTreeMap, BTreeSet};

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};
    use rand::Rng;

    use nilreduce::dsl::parse_system;
    use nilreduce::{
        complexity_certificate, CertifyOptions, GSequence, GeneratorAssignment, Mode,
        ReductionTrace, Reorder, System, Target, VarId,
    };

    use super::{eval_matrix, mat_inv, mat_mul};

    type Mat = Vec<Vec<BigRational>>;

    pub fn system(text: &str, a: &GeneratorAssignment) -> System {
        System::new(parse_system(text).unwrap().realize(a).unwrap()).unwrap()
    }

    pub fn certify(s: &System, mode: Mode) -> ReductionTrace {
        complexity_certificate(
            s,
            &CertifyOptions {
                mode,
                target: Target::Trivial,
                ..CertifyOptions::default()
            },
        )
        .unwrap()
    }

    /// One line per count: label, pass, measured values.
    pub fn step_counts() -> Vec<(String, bool, String)> {
        let mut out = Vec::new();
        let ts = GeneratorAssignment::abelian(&["T", "S"]);
        for k in 1..=3u32 {
            let s = system(&format!("T^(n^{k})"), &ts);
            let strict = certify(&s, Mode::Strict);
            let cheat = certify(&s, Mode::Cheating);
            let to_const = strict.steps_to_constant().unwrap();
            out.push((
                format!("T^(n^{k})"),
                to_const == k as usize && cheat.len() == k as usize,
                format!(
                    "strict constant after {to_const} (total {}), cheating {}",
                    strict.len(),
                    cheat.len()
                ),
            ));
        }
        let lin = GeneratorAssignment::abelian(&["L1", "L2", "L3", "C1", "C2", "C3"]);
        let text = |j: usize| {
            (1..=j)
                .map(|i| format!("L{i}^n C{i}"))
                .collect::<Vec<_>>()
                .join("; ")
        };
        for j in 1..=3usize {
            let t = certify(&system(&text(j), &lin), Mode::Cheating);
            out.push((
                format!("linear j={j} cheating"),
                t.finished && t.len() == j,
                format!("{} steps", t.len()),
            ));
        }
        for (j, bound) in [(2usize, 3usize), (3, 11)] {
            let t = certify(&system(&text(j), &lin), Mode::Strict);
            let c = t.steps_to_constant().unwrap();
            out.push((
                format!("linear j={j} strict"),
                t.finished && c <= bound,
                format!("constant after {c} <= a({j}) = {bound}, total {}", t.len()),
            ));
        }
        let heis = GeneratorAssignment::heisenberg("T", "S");
        let s = system("T^n; S^n", &heis);
        let strict = certify(&s, Mode::Strict);
        let cheat = certify(&s, Mode::Cheating);
        let c = strict.steps_to_constant().unwrap();
        out.push((
            "Heisenberg strict".into(),
            strict.finished && c <= 11,
            format!("constant after {c} <= 11, total {}", strict.len()),
        ));
        out.push((
            "Heisenberg cheating".into(),
            cheat.finished && cheat.len() <= 4,
            format!("{} steps <= 4", cheat.len()),
        ));
        out
    }

    fn reorder(s: &System, r: &Reorder) -> Vec<GSequence> {
        let seqs = s.sequences();
        match r {
            Reorder::MoveToEnd(i) => {
                let mut v: Vec<GSequence> = seqs.to_vec();
                let g = v.remove(*i);
                v.push(g);
                v
            }
            Reorder::Permute(order) => order.iter().map(|&i| seqs[i].clone()).collect(),
        }
    }

    fn identity(d: usize) -> Mat {
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                    .collect()
            })
            .collect()
    }

    /// A sequence sampled at `n = 0, 1, ..., POINTS - 1`.
    const POINTS: i64 = 7;

    fn sample(g: &GSequence, params: &BTreeMap<VarId, BigInt>, shift: &BigInt) -> Vec<Mat> {
        (0..POINTS)
            .map(|n| {
                let mut v = params.clone();
                v.insert(VarId::Time, BigInt::from(n) + shift);
                eval_matrix(g, &v)
            })
            .collect()
    }

    /// Every step of `trace` recomputed from the definitions of the
    /// reductions, with `tuples` random positive parameter tuples and the
    /// sequences compared as matrices at several times.
    pub fn numeric_universality(
        trace: &ReductionTrace,
        tuples: usize,
        rng: &mut impl Rng,
    ) -> Result<(), String> {
        let top = trace.max_param();
        let d = trace.initial.dim();
        let id: Vec<Mat> = (0..POINTS).map(|_| identity(d)).collect();
        for _ in 0..tuples {
            let params: BTreeMap<VarId, BigInt> = (1..=top)
                .map(|k| (VarId::Param(k), BigInt::from(rng.gen_range(1..=40u32))))
                .collect();
            let zero = BigInt::zero();
            for (k, step) in trace.steps.iter().enumerate() {
                let pre = if k == 0 { &trace.start } else { &trace.steps[k - 1].post };
                let seqs = reorder(pre, &step.reorder);
                let m = params[&VarId::Param(step.param)].clone();
                let (last, rest) = seqs.split_last().unwrap();
                let gj = sample(last, &params, &zero);
                let gj_m_inv: Vec<Mat> = sample(last, &params, &m).iter().map(|x| mat_inv(x)).collect();
                let diff: Vec<Mat> = gj.iter().zip(&gj_m_inv).map(|(a, b)| mat_mul(a, b)).collect();
                let mut raw: Vec<Vec<Mat>> = rest.iter().map(|g| sample(g, &params, &zero)).collect();
                if trace.target == Target::Trivial {
                    raw.push(diff.clone());
                }
                for g in rest {
                    let gm = sample(g, &params, &m);
                    raw.push(diff.iter().zip(&gm).map(|(a, b)| mat_mul(a, b)).collect());
                }
                if trace.mode == Mode::Cheating {
                    // n -> h(n) h(0)^{-1}
                    raw = raw
                        .into_iter()
                        .map(|h| {
                            let h0 = mat_inv(&h[0]);
                            h.iter().map(|x| mat_mul(x, &h0)).collect()
                        })
                        .collect();
                }
                let expected: BTreeSet<Vec<Mat>> = raw.into_iter().filter(|h| *h != id).collect();
                let recorded: BTreeSet<Vec<Mat>> = step
                    .post
                    .sequences()
                    .iter()
                    .map(|g| sample(g, &params, &zero))
                    .filter(|h| *h != id)
                    .collect();
                if expected != recorded {
                    return Err(format!("step {} disagrees at {params:?}", k + 1));
                }
            }
        }
        Ok(())
    }
}
