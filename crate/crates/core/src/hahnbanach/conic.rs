//! A small builder for the linear / second-order cone programs of the lab.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};

/// `sum coeff * x[index] + constant`.
#[derive(Clone, Debug, Default)]
pub(crate) struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn var(i: usize, coeff: f64) -> Self {
        Affine {
            terms: vec![(i, coeff)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }
}

enum Block {
    Zero(usize),
    Nonneg(usize),
    Soc(usize),
}

/// Minimize `q . x` subject to equalities, inequalities and cone memberships.
/// Rows follow clarabel's convention `A x + s = b`, `s` in the cone.
#[derive(Default)]
pub(crate) struct Program {
    vars: usize,
    q: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, f64)>,
    blocks: Vec<Block>,
}

pub(crate) enum Outcome {
    Solved(Vec<f64>, f64),
    Infeasible,
    Unbounded,
}

impl Program {
    pub fn new() -> Self {
        Program::default()
    }

    /// Allocates `k` free variables and returns the first index.
    pub fn vars(&mut self, k: usize) -> usize {
        let start = self.vars;
        self.vars += k;
        self.q.resize(self.vars, 0.0);
        start
    }

    pub fn cost(&mut self, i: usize, c: f64) {
        self.q[i] += c;
    }

    /// `e = 0`.
    pub fn eq(&mut self, e: Affine) {
        self.rows.push((e.terms, -e.constant));
        match self.blocks.last_mut() {
            Some(Block::Zero(k)) => *k += 1,
            _ => self.blocks.push(Block::Zero(1)),
        }
    }

    /// `e >= 0`.
    pub fn nonneg(&mut self, e: Affine) {
        let neg: Vec<(usize, f64)> = e.terms.iter().map(|&(i, a)| (i, -a)).collect();
        self.rows.push((neg, e.constant));
        match self.blocks.last_mut() {
            Some(Block::Nonneg(k)) => *k += 1,
            _ => self.blocks.push(Block::Nonneg(1)),
        }
    }

    /// `head >= || tail ||`.
    pub fn soc(&mut self, head: Affine, tail: Vec<Affine>) {
        let k = tail.len() + 1;
        for e in std::iter::once(head).chain(tail) {
            let neg: Vec<(usize, f64)> = e.terms.iter().map(|&(i, a)| (i, -a)).collect();
            self.rows.push((neg, e.constant));
        }
        self.blocks.push(Block::Soc(k));
    }

    pub fn solve(&self) -> Result<Outcome> {
        let m = self.rows.len();
        let n = self.vars;
        let (mut ri, mut ci, mut v) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::with_capacity(m);
        for (r, (terms, rhs)) in self.rows.iter().enumerate() {
            for &(c, a) in terms {
                if a != 0.0 {
                    ri.push(r);
                    ci.push(c);
                    v.push(a);
                }
            }
            b.push(*rhs);
        }
        let a = CscMatrix::new_from_triplets(m, n, ri, ci, v);
        let p = CscMatrix::zeros((n, n));
        let cones: Vec<SupportedConeT<f64>> = self
            .blocks
            .iter()
            .map(|blk| match *blk {
                Block::Zero(k) => SupportedConeT::ZeroConeT(k),
                Block::Nonneg(k) => SupportedConeT::NonnegativeConeT(k),
                Block::Soc(k) => SupportedConeT::SecondOrderConeT(k),
            })
            .collect();
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_gap_abs(1e-11)
            .tol_gap_rel(1e-11)
            .tol_feas(1e-11)
            .max_iter(400)
            .build()
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let mut solver = DefaultSolver::new(&p, &self.q, &a, &b, &cones, settings);
        solver.solve();
        let sol = &solver.solution;
        match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                Ok(Outcome::Solved(sol.x.clone(), sol.obj_val))
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Ok(Outcome::Infeasible)
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                Ok(Outcome::Unbounded)
            }
            s => Err(Error::Solver(format!("{s:?}"))),
        }
    }
}
