//! Finite-dimensional decomposition laboratory: atomic and dual norms from
//! finite spanning sets, the constant schedule, separation by projection, and
//! the iterative structured + pseudorandom + small decomposition.
//!
//! Vectors live in `R^D` with the Euclidean inner product. A spanning set may
//! be augmented by a Euclidean ball of radius `r`, which makes its atomic norm
//! a genuine norm even when the set does not span.

mod conic;

use nalgebra::DVector;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::{Error, Result};
use conic::{Affine, Outcome, Program};

pub type Vector = DVector<f64>;

/// A finite set of vectors with a declared bound on their Euclidean norms.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanningSet {
    vectors: Vec<Vector>,
    bound: f64,
}

impl SpanningSet {
    pub fn new(vectors: Vec<Vector>, bound: f64) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::InvalidParameter("spanning set is empty".into()))?;
        let d = first.len();
        for v in &vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch(d, v.len()));
            }
            if v.norm() > bound * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "vector of norm {} exceeds the declared bound {bound}",
                    v.norm()
                )));
            }
        }
        Ok(SpanningSet { vectors, bound })
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Whether every vector of `self` is also in `other`.
    pub fn is_subset_of(&self, other: &SpanningSet) -> bool {
        self.vectors.iter().all(|v| other.vectors.contains(v))
    }
}

fn check_dim(f: &Vector, set: &SpanningSet) -> Result<()> {
    if f.len() != set.dim() {
        return Err(Error::DimensionMismatch(set.dim(), f.len()));
    }
    Ok(())
}

/// Constraints `u ∈ scale · B` for the unit ball `B` of a norm, with `u` the
/// `D` variables starting at `u`.
fn encode_ball(p: &mut Program, ball: &Ball, u: usize, d: usize, scale: &Affine) {
    let scaled = |k: f64| Affine {
        terms: scale.terms.iter().map(|&(i, a)| (i, a * k)).collect(),
        constant: scale.constant * k,
    };
    match ball {
        Ball::Euclidean => {
            p.soc(
                scale.clone(),
                (0..d).map(|i| Affine::var(u + i, 1.0)).collect(),
            );
        }
        Ball::Atomic { set, radius } => {
            let k = set.vectors.len();
            let lam = p.vars(k);
            let tau = p.vars(k);
            let aug = (*radius > 0.0).then(|| (p.vars(d), p.vars(1)));
            for row in 0..d {
                let mut e = Affine::var(u + row, 1.0);
                for (j, s) in set.vectors.iter().enumerate() {
                    e.terms.push((lam + j, -s[row]));
                }
                if let Some((g, _)) = aug {
                    e.terms.push((g + row, -1.0));
                }
                p.eq(e);
            }
            let mut budget = scale.clone();
            for j in 0..k {
                budget.terms.push((tau + j, -1.0));
                let mut up = Affine::var(tau + j, 1.0);
                up.terms.push((lam + j, -1.0));
                p.nonneg(up);
                let mut down = Affine::var(tau + j, 1.0);
                down.terms.push((lam + j, 1.0));
                p.nonneg(down);
            }
            if let Some((g, s)) = aug {
                budget.terms.push((s, -1.0 / radius));
                p.soc(
                    Affine::var(s, 1.0),
                    (0..d).map(|i| Affine::var(g + i, 1.0)).collect(),
                );
            }
            p.nonneg(budget);
        }
        Ball::Dual { set, radius } => {
            // Rows are multiplied by r so the cone has unit radius; posing it
            // with radius 1/r leaves clarabel stalling short of the optimum.
            let w = if *radius > 0.0 { *radius } else { 1.0 };
            for s in &set.vectors {
                for sign in [1.0, -1.0] {
                    let mut e = scaled(w);
                    for row in 0..d {
                        e.terms.push((u + row, -sign * w * s[row]));
                    }
                    p.nonneg(e);
                }
            }
            if *radius > 0.0 {
                p.soc(
                    scale.clone(),
                    (0..d).map(|i| Affine::var(u + i, w)).collect(),
                );
            }
        }
    }
}

/// `inf { sum |λ_j| + ||g|| / r : f = sum λ_j σ_j + g }`, the `g` term present
/// only when `radius > 0`. `+inf` when `f` is not representable.
pub fn atomic_norm(f: &Vector, set: &SpanningSet, radius: f64) -> Result<f64> {
    check_dim(f, set)?;
    if f.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let d = f.len();
    let mut p = Program::new();
    let k = set.vectors.len();
    let lam = p.vars(k);
    let tau = p.vars(k);
    let aug = (radius > 0.0).then(|| (p.vars(d), p.vars(1)));
    for row in 0..d {
        let mut e = Affine::constant(-f[row]);
        for (j, s) in set.vectors.iter().enumerate() {
            e.terms.push((lam + j, s[row]));
        }
        if let Some((g, _)) = aug {
            e.terms.push((g + row, 1.0));
        }
        p.eq(e);
    }
    for j in 0..k {
        p.cost(tau + j, 1.0);
        let mut up = Affine::var(tau + j, 1.0);
        up.terms.push((lam + j, -1.0));
        p.nonneg(up);
        let mut down = Affine::var(tau + j, 1.0);
        down.terms.push((lam + j, 1.0));
        p.nonneg(down);
    }
    if let Some((g, s)) = aug {
        p.cost(s, 1.0 / radius);
        p.soc(
            Affine::var(s, 1.0),
            (0..d).map(|i| Affine::var(g + i, 1.0)).collect(),
        );
    }
    match p.solve()? {
        Outcome::Solved(_, v) => Ok(v.max(0.0)),
        Outcome::Infeasible => Ok(f64::INFINITY),
        Outcome::Unbounded => Err(Error::Solver("atomic norm program unbounded".into())),
    }
}

/// `max(sup_σ |<f, σ>|, r ||f||)`: the dual of the atomic norm.
pub fn dual_norm(f: &Vector, set: &SpanningSet, radius: f64) -> f64 {
    let best = set
        .vectors
        .iter()
        .map(|s| f.dot(s).abs())
        .fold(0.0, f64::max);
    if radius > 0.0 {
        best.max(radius * f.norm())
    } else {
        best
    }
}

/// `sup { <f, g> : ||g||* <= 1 }` by linear programming; equals the atomic
/// norm in finite dimensions.
pub fn bidual_norm(f: &Vector, set: &SpanningSet, radius: f64) -> Result<f64> {
    check_dim(f, set)?;
    let d = f.len();
    let mut p = Program::new();
    let g = p.vars(d);
    for i in 0..d {
        p.cost(g + i, -f[i]);
    }
    encode_ball(
        &mut p,
        &Ball::Dual { set, radius },
        g,
        d,
        &Affine::constant(1.0),
    );
    match p.solve()? {
        Outcome::Solved(_, v) => Ok((-v).max(0.0)),
        Outcome::Unbounded => Ok(f64::INFINITY),
        Outcome::Infeasible => Err(Error::Solver("dual ball is empty".into())),
    }
}

/// The unit ball of one of the norms in play.
#[derive(Clone, Copy, Debug)]
pub enum Ball<'a> {
    /// `{ g : ||g||_Σ <= 1 }`.
    Atomic {
        set: &'a SpanningSet,
        radius: f64,
    },
    /// `{ g : ||g||_Σ* <= 1 }`.
    Dual {
        set: &'a SpanningSet,
        radius: f64,
    },
    Euclidean,
}

impl Ball<'_> {
    /// `sup { <φ, g> : g in the ball }`.
    pub fn support(&self, phi: &Vector) -> Result<f64> {
        match self {
            Ball::Atomic { set, radius } => Ok(dual_norm(phi, set, *radius)),
            Ball::Dual { set, radius } => atomic_norm(phi, set, *radius),
            Ball::Euclidean => Ok(phi.norm()),
        }
    }

    /// The norm whose unit ball this is.
    pub fn norm(&self, g: &Vector) -> Result<f64> {
        match self {
            Ball::Atomic { set, radius } => atomic_norm(g, set, *radius),
            Ball::Dual { set, radius } => Ok(dual_norm(g, set, *radius)),
            Ball::Euclidean => Ok(g.norm()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Separation {
    /// `f = sum parts[i]` with `parts[i] ∈ c_i · ball_i` (closed balls).
    Inside(Vec<Vector>),
    /// `<φ, f> >= 1` and `sup_{ball_i} <φ, ·> <= 1 / c_i`, both verified.
    Functional {
        phi: Vector,
        value: f64,
        supports: Vec<f64>,
    },
}

/// Either writes `f` as `sum c_i g_i` with `g_i` in the balls, or finds a
/// separating functional. The functional is the normalized residual of the
/// projection of `f` onto the closed Minkowski sum, checked afterwards.
pub fn separate(f: &Vector, balls: &[(Ball, f64)], tol: f64) -> Result<Separation> {
    if balls.is_empty() {
        return Err(Error::InvalidParameter("no balls to separate from".into()));
    }
    let d = f.len();
    let mut p = Program::new();
    let mut parts = Vec::new();
    for (ball, c) in balls {
        if *c <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "radius {c} is not positive"
            )));
        }
        let u = p.vars(d);
        encode_ball(&mut p, ball, u, d, &Affine::constant(*c));
        parts.push(u);
    }
    let z = p.vars(1);
    p.cost(z, 1.0);
    let residual: Vec<Affine> = (0..d)
        .map(|row| Affine {
            terms: parts.iter().map(|&u| (u + row, -1.0)).collect(),
            constant: f[row],
        })
        .collect();
    p.soc(Affine::var(z, 1.0), residual);
    let x = match p.solve()? {
        Outcome::Solved(x, _) => x,
        _ => return Err(Error::Solver("projection program failed".into())),
    };
    let pieces: Vec<Vector> = parts
        .iter()
        .map(|&u| Vector::from_iterator(d, x[u..u + d].iter().copied()))
        .collect();
    let projection = pieces.iter().fold(Vector::zeros(d), |acc, v| acc + v);
    let r = f - &projection;
    if r.norm() <= tol * f.norm().max(1.0) {
        return Ok(Separation::Inside(pieces));
    }
    let phi = &r / r.dot(f);
    let value = phi.dot(f);
    if value < 1.0 - tol {
        return Err(Error::SeparationCheck(format!("<φ, f> = {value} < 1")));
    }
    let mut supports = Vec::with_capacity(balls.len());
    for (i, (ball, c)) in balls.iter().enumerate() {
        let h = ball.support(&phi)?;
        if h > (1.0 + tol) / c {
            return Err(Error::SeparationCheck(format!(
                "support on ball {} is {h}, above 1/{c}",
                i + 1
            )));
        }
        supports.push(h);
    }
    Ok(Separation::Functional {
        phi,
        value,
        supports,
    })
}

/// `Σ_L` for every index `L`: tier `k` applies from `starts[k]` until the next
/// tier begins. Later tiers must be subsets of earlier ones, so dual norms do
/// not increase with `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormFamily {
    tiers: Vec<(u64, SpanningSet)>,
    radius: f64,
}

impl NormFamily {
    pub fn new(tiers: Vec<(u64, SpanningSet)>, radius: f64) -> Result<Self> {
        if tiers.is_empty() {
            return Err(Error::InvalidParameter("norm family has no tiers".into()));
        }
        if radius < 0.0 {
            return Err(Error::InvalidParameter(
                "negative augmentation radius".into(),
            ));
        }
        let d = tiers[0].1.dim();
        for w in tiers.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParameter("tier starts must increase".into()));
            }
            if w[1].1.dim() != d {
                return Err(Error::DimensionMismatch(d, w[1].1.dim()));
            }
            if !w[1].1.is_subset_of(&w[0].1) {
                return Err(Error::InvalidParameter(format!(
                    "tier starting at {} is not nested in the previous one",
                    w[1].0
                )));
            }
        }
        Ok(NormFamily { tiers, radius })
    }

    pub fn dim(&self) -> usize {
        self.tiers[0].1.dim()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// First index covered.
    pub fn first_index(&self) -> u64 {
        self.tiers[0].0
    }

    pub fn set(&self, index: u64) -> Result<&SpanningSet> {
        self.tiers
            .iter()
            .rev()
            .find(|(start, _)| *start <= index)
            .map(|(_, s)| s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("index {index} precedes the first tier"))
            })
    }

    pub fn norm(&self, f: &Vector, index: u64) -> Result<f64> {
        atomic_norm(f, self.set(index)?, self.radius)
    }

    pub fn dual(&self, f: &Vector, index: u64) -> Result<f64> {
        Ok(dual_norm(f, self.set(index)?, self.radius))
    }

    pub fn ball(&self, index: u64) -> Result<Ball<'_>> {
        Ok(Ball::Atomic {
            set: self.set(index)?,
            radius: self.radius,
        })
    }

    pub fn dual_ball(&self, index: u64) -> Result<Ball<'_>> {
        Ok(Ball::Dual {
            set: self.set(index)?,
            radius: self.radius,
        })
    }
}

/// `⌈2 δ^{-2}⌉`, computed exactly from the binary value of `δ`.
pub fn schedule_length(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "δ = {delta} must be positive"
        )));
    }
    let d = BigRational::from_float(delta).expect("finite");
    schedule_length_exact(&d)
}

pub fn schedule_length_exact(delta: &BigRational) -> Result<usize> {
    if !delta.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "δ = {delta} must be positive"
        )));
    }
    let x = BigRational::from_integer(BigInt::from(2)) / (delta * delta);
    x.ceil()
        .to_integer()
        .to_usize()
        .ok_or_else(|| Error::InvalidParameter("δ is too small".into()))
}

/// `C_{⌈2δ^{-2}⌉} = 1`, `C_{n-1} = max(C_n, 2 / η(C_n))`, listed from `C_1`.
pub fn c_schedule(delta: f64, eta: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let len = schedule_length(delta)?;
    let mut out = vec![1.0; len];
    for n in (1..len).rev() {
        let e = eta(out[n]);
        if !(e > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "η({}) = {e} is not positive",
                out[n]
            )));
        }
        out[n - 1] = out[n].max(2.0 / e);
    }
    Ok(out)
}

/// Exact version of [`c_schedule`] for rational `δ` and `η`.
pub fn c_schedule_exact(
    delta: &BigRational,
    eta: impl Fn(&BigRational) -> BigRational,
) -> Result<Vec<BigRational>> {
    let len = schedule_length_exact(delta)?;
    let mut out = vec![BigRational::one(); len];
    let two = BigRational::from_integer(BigInt::from(2));
    for n in (1..len).rev() {
        let e = eta(&out[n]);
        if !e.is_positive() {
            return Err(Error::InvalidParameter(format!(
                "η({}) = {e} is not positive",
                out[n]
            )));
        }
        let cand = &two / e;
        out[n - 1] = if cand > out[n] { cand } else { out[n].clone() };
    }
    Ok(out)
}

/// `(A_j, M_j, B_j)` of one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub a: u64,
    pub m: u64,
    pub b: u64,
}

/// `A_1 = M•`, `M_j = ⌈A_j / c + 1⌉`, `B_j = ψ(M_j)`, `A_{j+1} = B_j`; it
/// depends on nothing but these inputs.
pub fn m_schedule(
    m_bullet: u64,
    c: f64,
    psi: &dyn Fn(u64) -> u64,
    len: usize,
) -> Result<Vec<ScheduleEntry>> {
    if m_bullet == 0 {
        return Err(Error::InvalidParameter("M• must be positive".into()));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "c = {c} must lie in (0, 1)"
        )));
    }
    let c_exact = BigRational::from_float(c).expect("finite");
    let mut out = Vec::with_capacity(len);
    let mut a = m_bullet;
    for _ in 0..len {
        let m = (BigRational::from_integer(BigInt::from(a)) / &c_exact + BigRational::one())
            .ceil()
            .to_integer()
            .to_u64()
            .ok_or_else(|| Error::InvalidParameter("schedule overflows u64".into()))?;
        let b = psi(m);
        if b < m {
            return Err(Error::InvalidParameter(format!("ψ({m}) = {b} < {m}")));
        }
        out.push(ScheduleEntry { a, m, b });
        a = b;
    }
    Ok(out)
}

/// Parameters of the decomposition loop.
pub struct DecomposeParams<'a> {
    pub delta: f64,
    pub c: f64,
    pub m_bullet: u64,
    pub eta: &'a dyn Fn(f64) -> f64,
    pub psi: &'a dyn Fn(u64) -> u64,
    /// Relative tolerance for verified inequalities.
    pub tol: f64,
}

/// `δ = ε / 96` and `η(x) = ε² / (216 x)`.
pub fn default_delta(epsilon: f64) -> f64 {
    epsilon / 96.0
}

pub fn default_eta(epsilon: f64) -> impl Fn(f64) -> f64 {
    move |x| epsilon * epsilon / (216.0 * x)
}

/// A separating functional found in a failed round, with its verified bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional {
    pub round: usize,
    pub phi: Vector,
    pub value: f64,
    /// `||φ||*_B`, `||φ||**_A` (as `||φ||_A`) and `||φ||`.
    pub supports: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionResult {
    pub f1: Vector,
    pub f2: Vector,
    pub f3: Vector,
    /// 1-based round that succeeded.
    pub index: usize,
    pub a: u64,
    pub b: u64,
    pub m: u64,
    pub c_value: f64,
    pub eta_value: f64,
    /// Certified `||f1||_B`, `||f2||*_A`, `||f3||`.
    pub norm_f1: f64,
    pub dual_f2: f64,
    pub norm_f3: f64,
    pub schedule: Vec<ScheduleEntry>,
    pub constants: Vec<f64>,
    pub functionals: Vec<Functional>,
    /// `(r, ||φ_1 + ... + φ_r||², δ^{-2} r + (r² - r)/2)` after each failure.
    pub energy: Vec<(usize, f64, f64)>,
}

fn try_split(
    f: &Vector,
    fam: &NormFamily,
    e: &ScheduleEntry,
    c_val: f64,
    eta_val: f64,
    delta: f64,
    tol: f64,
) -> Result<Option<[Vector; 3]>> {
    let d = f.len();
    let zero = Vector::zeros(d);
    let fits = |p: &[Vector; 3]| -> Result<bool> {
        let n1 = fam.norm(&p[0], e.b)?;
        let n2 = fam.dual(&p[1], e.a)?;
        let n3 = p[2].norm();
        Ok(n1 < c_val * (1.0 + tol) && n2 < eta_val * (1.0 + tol) && n3 < delta * (1.0 + tol))
    };
    for k in 0..3 {
        let mut p = [zero.clone(), zero.clone(), zero.clone()];
        p[k] = f.clone();
        let inside = match k {
            0 => fam.norm(f, e.b)? < c_val,
            1 => fam.dual(f, e.a)? < eta_val,
            _ => f.norm() < delta,
        };
        if inside {
            return Ok(Some(p));
        }
    }
    // min t with f = u1 + u2 + u3 and u_i in t * c_i * ball_i
    let mut p = Program::new();
    let t = p.vars(1);
    p.cost(t, 1.0);
    let balls = [
        (fam.ball(e.b)?, c_val),
        (fam.dual_ball(e.a)?, eta_val),
        (Ball::Euclidean, delta),
    ];
    let mut us = Vec::new();
    for (ball, c) in &balls {
        let u = p.vars(d);
        encode_ball(&mut p, ball, u, d, &Affine::var(t, *c));
        us.push(u);
    }
    for row in 0..d {
        p.eq(Affine {
            terms: us.iter().map(|&u| (u + row, 1.0)).collect(),
            constant: -f[row],
        });
    }
    let x = match p.solve()? {
        Outcome::Solved(x, _) => x,
        _ => return Ok(None),
    };
    if x[t] >= 1.0 {
        return Ok(None);
    }
    let f1 = Vector::from_iterator(d, x[us[0]..us[0] + d].iter().copied());
    let f2 = Vector::from_iterator(d, x[us[1]..us[1] + d].iter().copied());
    let f3 = f - &f1 - &f2;
    let parts = [f1, f2, f3];
    Ok(fits(&parts)?.then_some(parts))
}

/// Runs the round-by-round search for `f = f1 + f2 + f3` with
/// `||f1||_B < C_i`, `||f2||*_A < η(C_i)`, `||f3|| < δ`.
///
/// Each failed round yields a verified separating functional; the energy and
/// orthogonality inequalities between them are checked as the loop goes, and
/// the loop cannot outlast `⌈2δ^{-2}⌉` rounds.
pub fn decompose(
    f: &Vector,
    family: &NormFamily,
    params: &DecomposeParams,
) -> Result<DecompositionResult> {
    if f.len() != family.dim() {
        return Err(Error::DimensionMismatch(family.dim(), f.len()));
    }
    if f.norm() > 1.0 + params.tol {
        return Err(Error::InvalidParameter(format!(
            "||f|| = {} exceeds 1",
            f.norm()
        )));
    }
    let constants = c_schedule(params.delta, params.eta)?;
    let len = constants.len();
    let schedule = m_schedule(params.m_bullet, params.c, params.psi, len)?;
    if family.first_index() > params.m_bullet {
        return Err(Error::InvalidParameter(format!(
            "family starts at {}, after M• = {}",
            family.first_index(),
            params.m_bullet
        )));
    }
    let tol = params.tol;
    let mut functionals: Vec<Functional> = Vec::new();
    let mut energy = Vec::new();
    let mut sum = Vector::zeros(f.len());
    for (j, e) in schedule.iter().enumerate() {
        let c_val = constants[j];
        let eta_val = (params.eta)(c_val);
        if let Some([f1, f2, f3]) = try_split(f, family, e, c_val, eta_val, params.delta, tol)? {
            return Ok(DecompositionResult {
                norm_f1: family.norm(&f1, e.b)?,
                dual_f2: family.dual(&f2, e.a)?,
                norm_f3: f3.norm(),
                f1,
                f2,
                f3,
                index: j + 1,
                a: e.a,
                b: e.b,
                m: e.m,
                c_value: c_val,
                eta_value: eta_val,
                schedule,
                constants,
                functionals,
                energy,
            });
        }
        let balls = [
            (family.ball(e.b)?, c_val),
            (family.dual_ball(e.a)?, eta_val),
            (Ball::Euclidean, params.delta),
        ];
        let (phi, value, s) = match separate(f, &balls, tol)? {
            Separation::Functional {
                phi,
                value,
                supports,
            } => (phi, value, supports),
            Separation::Inside(_) => {
                return Err(Error::SeparationCheck(format!(
                    "round {}: f lies in the closed sum but no strict split was found",
                    j + 1
                )))
            }
        };
        for earlier in &functionals {
            let ip = phi.dot(&earlier.phi).abs();
            if ip > 0.5 * (1.0 + 10.0 * tol) {
                return Err(Error::SeparationCheck(format!(
                    "|<φ_{}, φ_{}>| = {ip} > 1/2",
                    j + 1,
                    earlier.round
                )));
            }
        }
        sum += &phi;
        functionals.push(Functional {
            round: j + 1,
            phi,
            value,
            supports: [s[0], s[1], s[2]],
        });
        let r = functionals.len() as f64;
        let upper = r / (params.delta * params.delta) + (r * r - r) / 2.0;
        let e2 = sum.norm_squared();
        energy.push((functionals.len(), e2, upper));
        let lower = (r * (1.0 - tol)).powi(2);
        if e2 > upper * (1.0 + 10.0 * tol) || lower > upper * (1.0 + 10.0 * tol) {
            return Err(Error::EnergyBoundViolated(functionals.len()));
        }
    }
    Err(Error::EnergyBoundViolated(len))
}
