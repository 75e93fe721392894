//! Reduction-to-trivial certificates.
//!
//! The engine follows the inductive strategy for systems of degree `<= d`:
//! group the system as `h_0 ∪ s_1 h_1 ∪ ... ∪ s_l h_l` (cosets modulo the
//! sequences of degree `<= d - 1`), discard `s_l` by driving `h_l` down to a
//! single sequence with complete steps (recursively, one degree lower), then
//! repeat with `s_{l-1}`, and so on. Every step reduces on a fresh symbolic
//! parameter, so a finished trace is valid for every choice of the integers.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nilgroup::{vector_degree, DegreeVector, GSequence};
use crate::polyring::{Offset, VarId};
use crate::systems::{cheat_normalize, complete_reduce_m, normalize_equiv, reduce_m, System};

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Equivalence is "same sequences".
    Strict,
    /// Constant right factors may also be removed.
    Cheating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Reach `(1_G)` with steps.
    Trivial,
    /// Reach a single sequence with complete steps.
    Single,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Step,
    CompleteStep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    pub mode: Mode,
    pub target: Target,
    pub budget: usize,
    /// Superadditive degree bound; defaults to the least superadditive
    /// vector dominating every sequence of the input.
    pub bound: Option<DegreeVector>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            mode: Mode::Strict,
            target: Target::Trivial,
            budget: DEFAULT_BUDGET,
            bound: None,
        }
    }
}

/// How the equivalent system reduced on is obtained from the previous one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reorder {
    /// Move the sequence at this index to the end, keeping the rest in order.
    MoveToEnd(usize),
    /// Take the sequences in this order (a permutation of the indices).
    Permute(Vec<usize>),
}

impl Reorder {
    pub fn apply(&self, s: &System) -> Result<System> {
        match self {
            Reorder::MoveToEnd(i) if *i < s.len() => Ok(s.with_last(*i)),
            Reorder::MoveToEnd(i) => Err(Error::InvalidParameter(format!(
                "index {i} out of range for a system of size {}",
                s.len()
            ))),
            Reorder::Permute(order) => {
                let mut seen = vec![false; s.len()];
                if order.len() != s.len()
                    || order
                        .iter()
                        .any(|&i| i >= s.len() || std::mem::replace(&mut seen[i], true))
                {
                    return Err(Error::InvalidParameter(
                        "reordering is not a permutation".into(),
                    ));
                }
                System::new(order.iter().map(|&i| s.sequences()[i].clone()).collect())
            }
        }
    }

    /// Index (in the previous system) of the sequence reduced on.
    pub fn chosen(&self) -> Option<usize> {
        match self {
            Reorder::MoveToEnd(i) => Some(*i),
            Reorder::Permute(order) => order.last().copied(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    /// The equivalence move applied before reducing.
    pub reorder: Reorder,
    /// The fresh parameter `m<param>` reduced on.
    pub param: u32,
    pub kind: StepKind,
    /// Degree bound the choice was made against.
    pub level: DegreeVector,
    /// Reduced system after normalization.
    pub post: System,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionTrace {
    pub mode: Mode,
    pub target: Target,
    pub bound: DegreeVector,
    /// The system as given.
    pub initial: System,
    /// The normalized form the first step starts from.
    pub start: System,
    pub steps: Vec<TraceStep>,
    /// Whether the target was reached (false for a budget-truncated trace).
    pub finished: bool,
}

impl ReductionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// System before step `k`.
    pub fn pre(&self, k: usize) -> &System {
        if k == 0 {
            &self.start
        } else {
            &self.steps[k - 1].post
        }
    }

    pub fn final_system(&self) -> &System {
        self.steps.last().map_or(&self.start, |s| &s.post)
    }

    /// Number of steps after which every sequence is constant.
    pub fn steps_to_constant(&self) -> Option<usize> {
        (0..=self.steps.len()).find(|&k| self.system_after(k).is_constant())
    }

    /// System after `k` steps (`k = 0` is the start).
    pub fn system_after(&self, k: usize) -> &System {
        if k == 0 {
            &self.start
        } else {
            &self.steps[k - 1].post
        }
    }

    pub fn max_param(&self) -> u32 {
        self.steps
            .iter()
            .map(|s| s.param)
            .chain(std::iter::once(self.initial.max_param()))
            .max()
            .unwrap_or(0)
    }
}

fn normalizer(mode: Mode) -> fn(&System) -> System {
    match mode {
        Mode::Strict => normalize_equiv,
        Mode::Cheating => cheat_normalize,
    }
}

fn reducer(target: Target) -> fn(&System, &Offset) -> Result<System> {
    match target {
        Target::Trivial => reduce_m,
        Target::Single => complete_reduce_m,
    }
}

fn is_done(s: &System, target: Target) -> bool {
    match target {
        Target::Trivial => s.is_trivial(),
        Target::Single => s.len() == 1,
    }
}

/// Componentwise maximum of the degrees of a system.
pub fn system_degree(s: &System) -> DegreeVector {
    let mut acc = DegreeVector::neg_inf(s.dim() - 1);
    for g in s.sequences() {
        let d = vector_degree(g);
        acc = DegreeVector::new(
            acc.components()
                .iter()
                .zip(d.components())
                .map(|(a, b)| *a.max(b))
                .collect(),
        );
    }
    acc
}

/// Chooses which sequence to reduce on, with a memo of vector degrees.
#[derive(Default)]
pub struct Strategy {
    degrees: HashMap<GSequence, DegreeVector>,
}

impl Strategy {
    pub fn new() -> Self {
        Strategy::default()
    }

    pub fn degree(&mut self, g: &GSequence) -> DegreeVector {
        if let Some(d) = self.degrees.get(g) {
            return d.clone();
        }
        let d = vector_degree(g);
        self.degrees.insert(g.clone(), d.clone());
        d
    }

    /// Index of the sequence to move last, and the level the choice used.
    ///
    /// Sequences of degree `<= e - 1` form `h_0`; the rest split into cosets
    /// `s_i h_i` with `s_i` the first member. The coset that appears last is
    /// worked on: a lone member is discarded outright, otherwise the choice
    /// is made inside `s_i^{-1}·(coset)` one level down, which realizes the
    /// complete steps on `h_i`.
    pub fn choose(&mut self, seqs: &[GSequence], bound: &DegreeVector) -> (usize, DegreeVector) {
        let last = seqs.len() - 1;
        if seqs.len() == 1 || seqs.iter().all(GSequence::is_constant) {
            return (last, bound.clone());
        }
        let degs: Vec<DegreeVector> = seqs.iter().map(|g| self.degree(g)).collect();
        let mut level = bound.clone();
        while !level.is_all_neg_inf() && degs.iter().all(|d| d.le(&level.minus(1))) {
            level = level.minus(1);
        }
        if level.is_all_neg_inf() {
            return (last, level);
        }
        let low = level.minus(1);
        let mut classes: Vec<(GSequence, Vec<usize>)> = Vec::new();
        for (i, g) in seqs.iter().enumerate() {
            if degs[i].le(&low) {
                continue;
            }
            let mut placed = false;
            for (rep_inv, members) in classes.iter_mut() {
                let h = rep_inv.compose(g).expect("same dimension");
                if self.degree(&h).le(&low) {
                    members.push(i);
                    placed = true;
                    break;
                }
            }
            if !placed {
                classes.push((g.invert(), vec![i]));
            }
        }
        let (rep_inv, members) = classes
            .pop()
            .expect("some sequence exceeds the lower level");
        if members.len() == 1 {
            return (members[0], level);
        }
        let inner: Vec<GSequence> = members
            .iter()
            .map(|&i| rep_inv.compose(&seqs[i]).expect("same dimension"))
            .collect();
        let (x, _) = self.choose(&inner, &low);
        (members[x], level)
    }
}

/// Runs the strategy until the target is reached or the budget runs out.
pub fn complexity_certificate(s: &System, opts: &CertifyOptions) -> Result<ReductionTrace> {
    let degree = system_degree(s);
    let bound = match &opts.bound {
        Some(b) => {
            if !b.is_superadditive() {
                return Err(Error::InvalidParameter(format!("{b} is not superadditive")));
            }
            if b.len() != degree.len() {
                return Err(Error::DimensionMismatch(b.len() + 1, s.dim()));
            }
            if !degree.le(b) {
                return Err(Error::DegreeViolation(format!(
                    "system degree {degree} is not below {b}"
                )));
            }
            b.clone()
        }
        None => degree.superadditive_majorant(),
    };
    let normalize = normalizer(opts.mode);
    let reduce = reducer(opts.target);
    let kind = match opts.target {
        Target::Trivial => StepKind::Step,
        Target::Single => StepKind::CompleteStep,
    };
    let start = normalize(s);
    let mut trace = ReductionTrace {
        mode: opts.mode,
        target: opts.target,
        bound: bound.clone(),
        initial: s.clone(),
        start: start.clone(),
        steps: Vec::new(),
        finished: false,
    };
    let mut strategy = Strategy::new();
    let mut current = start;
    let mut param = s.max_param() + 1;
    loop {
        if is_done(&current, opts.target) {
            trace.finished = true;
            return Ok(trace);
        }
        if trace.steps.len() >= opts.budget {
            return Err(Error::BudgetExhausted {
                budget: opts.budget,
                steps: trace.steps.len(),
                partial: Box::new(trace),
            });
        }
        let (chosen, level) = strategy.choose(current.sequences(), &bound);
        let equivalent = current.with_last(chosen);
        let raw = reduce(&equivalent, &Offset::param(param))?;
        let post = normalize(&raw);
        let before: HashSet<&GSequence> = current.sequences().iter().collect();
        for g in post.sequences() {
            if !before.contains(g) && !strategy.degree(g).le(&bound) {
                return Err(Error::DegreeViolation(format!(
                    "step {} produced {g} above {bound}",
                    trace.steps.len() + 1
                )));
            }
        }
        trace.steps.push(TraceStep {
            reorder: Reorder::MoveToEnd(chosen),
            param,
            kind,
            level,
            post: post.clone(),
        });
        current = post;
        param += 1;
    }
}

/// Builds a trace from explicitly chosen moves instead of the strategy, e.g.
/// to record a hand-written reduction sequence.
pub fn replay(
    s: &System,
    mode: Mode,
    target: Target,
    moves: &[(Reorder, u32)],
) -> Result<ReductionTrace> {
    let normalize = normalizer(mode);
    let reduce = reducer(target);
    let kind = match target {
        Target::Trivial => StepKind::Step,
        Target::Single => StepKind::CompleteStep,
    };
    let bound = system_degree(s).superadditive_majorant();
    let start = normalize(s);
    let mut steps = Vec::with_capacity(moves.len());
    let mut current = start.clone();
    for (reorder, param) in moves {
        let post = normalize(&reduce(&reorder.apply(&current)?, &Offset::param(*param))?);
        steps.push(TraceStep {
            reorder: reorder.clone(),
            param: *param,
            kind,
            level: bound.clone(),
            post: post.clone(),
        });
        current = post;
    }
    Ok(ReductionTrace {
        mode,
        target,
        finished: is_done(&current, target),
        bound,
        initial: s.clone(),
        start,
        steps,
    })
}

/// Recomputes every step symbolically and checks it against the record.
pub fn verify_trace(trace: &ReductionTrace) -> Result<()> {
    let normalize = normalizer(trace.mode);
    let reduce = reducer(trace.target);
    if normalize(&trace.initial) != trace.start {
        return Err(Error::TraceMismatch {
            step: 0,
            reason: "start is not the normalized input".into(),
        });
    }
    let mut used = trace.initial.max_param();
    for (k, step) in trace.steps.iter().enumerate() {
        let pre = trace.pre(k);
        let fail = |reason: String| Error::TraceMismatch {
            step: k + 1,
            reason,
        };
        if is_done(pre, trace.target) {
            return Err(fail("target already reached before this step".into()));
        }
        let equivalent = step.reorder.apply(pre).map_err(|e| fail(e.to_string()))?;
        if step.param <= used || step.param <= pre.max_param() {
            return Err(fail(format!("parameter m{} is not fresh", step.param)));
        }
        used = step.param;
        let expected_kind = match trace.target {
            Target::Trivial => StepKind::Step,
            Target::Single => StepKind::CompleteStep,
        };
        if step.kind != expected_kind {
            return Err(fail("step kind does not match the target".into()));
        }
        let raw = reduce(&equivalent, &Offset::param(step.param))?;
        if normalize(&raw) != step.post {
            return Err(fail(
                "recorded system differs from the recomputed reduction".into(),
            ));
        }
    }
    if trace.finished && !is_done(trace.final_system(), trace.target) {
        return Err(Error::TraceMismatch {
            step: trace.steps.len(),
            reason: "trace is marked finished but the target is not reached".into(),
        });
    }
    Ok(())
}

/// Substitutes random positive integers for every parameter and checks that
/// each recorded step still agrees with the concrete reduction.
pub fn verify_universality<R: Rng>(
    trace: &ReductionTrace,
    samples: usize,
    rng: &mut R,
) -> Result<()> {
    let top = trace.max_param();
    let normalize = normalizer(trace.mode);
    let reduce = reducer(trace.target);
    for _ in 0..samples {
        let values: BTreeMap<VarId, BigRational> = (1..=top)
            .map(|k| {
                (
                    VarId::Param(k),
                    BigRational::from_integer(BigInt::from(rng.gen_range(1..=40u32))),
                )
            })
            .collect();
        let mut memo: HashMap<GSequence, GSequence> = HashMap::new();
        let mut sub = |g: &GSequence| -> GSequence {
            if let Some(x) = memo.get(g) {
                return x.clone();
            }
            let x = g.map_entries(|e| e.substitute_values(&values));
            memo.insert(g.clone(), x.clone());
            x
        };
        for (k, step) in trace.steps.iter().enumerate() {
            let fail = |reason: String| Error::TraceMismatch {
                step: k + 1,
                reason,
            };
            let equivalent = step.reorder.apply(trace.pre(k))?;
            let m_value = values[&VarId::Param(step.param)].to_integer();
            let symbolic = reduce(&equivalent, &Offset::param(step.param))?;
            let concrete_in = System::new(equivalent.sequences().iter().map(&mut sub).collect())?;
            let concrete = reduce(&concrete_in, &Offset::Int(m_value))?;
            for (i, (a, b)) in symbolic
                .sequences()
                .iter()
                .zip(concrete.sequences())
                .enumerate()
            {
                if sub(a) != *b {
                    return Err(fail(format!("entry {} changes under substitution", i + 1)));
                }
            }
            let recorded: HashSet<GSequence> = step
                .post
                .sequences()
                .iter()
                .map(&mut sub)
                .filter(|g| !g.is_identity())
                .collect();
            let recomputed: HashSet<GSequence> = normalize(&concrete)
                .into_sequences()
                .into_iter()
                .filter(|g| !g.is_identity())
                .collect();
            if recorded != recomputed {
                return Err(fail("normalized system changes under substitution".into()));
            }
        }
    }
    Ok(())
}

/// `a(1) = 1`, `a(n+1) = a(n) + 2^{a(n)}`.
pub fn linear_step_bound(j: u32) -> u64 {
    let mut a: u64 = 1;
    for _ in 1..j {
        a = a
            .checked_add(1u64.checked_shl(a as u32).unwrap_or(u64::MAX))
            .unwrap_or(u64::MAX);
    }
    a
}

/// `c(1) = 1`, `c(n+1) = 2c(n) + 1`, i.e. `c(n) = 2^n - 1`.
pub fn constant_count(n: u32) -> u64 {
    (1u64 << n) - 1
}
