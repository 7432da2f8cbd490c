//! Linear and mixed-binary linear programming.
//!
//! Problems are always in equality-plus-box form:
//!
//! ```text
//! minimize    c^T x + offset
//! subject to  A x = b,   l <= x <= u,   x_j in {0, 1} for masked j
//! ```
//!
//! The built-in engine is a bounded-variable revised simplex (dense basis
//! inverse, sparse columns) driven by a best-bound branch-and-bound. Other
//! backends can be plugged in through [`MilpEngine`].

mod branch;
mod encode;
mod lp_format;
mod simplex;

pub use branch::BranchOptions;
pub use encode::{
    encode_avoidance, encode_emptiness, encode_feasibility, encode_membership, encode_support, EmptinessLayout,
    FactorLayout, Sense,
};
pub use lp_format::to_lp_format;
pub use simplex::LpOptions;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HzError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem {
    pub objective: Vec<f64>,
    /// Constant added to the objective value.
    pub offset: f64,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub binary: Vec<bool>,
}

impl MilpProblem {
    /// Problem with `n` unbounded continuous variables and zero objective.
    pub fn new(eq_matrix: DMatrix<f64>, eq_rhs: Vec<f64>) -> Self {
        let n = eq_matrix.ncols();
        MilpProblem {
            objective: vec![0.0; n],
            offset: 0.0,
            eq_matrix,
            eq_rhs,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            binary: vec![false; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn set_binary(&mut self, j: usize) {
        self.binary[j] = true;
        self.lower[j] = 0.0;
        self.upper[j] = 1.0;
    }

    pub fn num_binaries(&self) -> usize {
        self.binary.iter().filter(|b| **b).count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let shape = |what: &str| Err(HzError::shape("MilpProblem", what.to_string()));
        if self.eq_matrix.ncols() != n {
            return shape("matrix columns differ from objective length");
        }
        if self.eq_matrix.nrows() != self.eq_rhs.len() {
            return shape("matrix rows differ from rhs length");
        }
        if self.lower.len() != n || self.upper.len() != n || self.binary.len() != n {
            return shape("bound or mask length differs from objective length");
        }
        let finite = self.objective.iter().chain(self.eq_rhs.iter()).all(|v| v.is_finite())
            && self.eq_matrix.iter().all(|v| v.is_finite())
            && self.offset.is_finite();
        if !finite {
            return Err(HzError::NonFinite("MILP data"));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(HzError::Contract(format!("variable {j} has invalid bounds")));
            }
            if self.binary[j] && (self.lower[j] < 0.0 || self.upper[j] > 1.0) {
                return Err(HzError::Contract(format!(
                    "binary variable {j} has bounds outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Objective value of `x` including the offset.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest violation of rows, bounds and integrality by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.num_rows() {
            let lhs: f64 = (0..self.num_vars()).map(|j| self.eq_matrix[(i, j)] * x[j]).sum();
            worst = worst.max((lhs - self.eq_rhs[i]).abs());
        }
        for (j, &xj) in x.iter().enumerate().take(self.num_vars()) {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
            if self.binary[j] {
                worst = worst.max((xj - xj.round()).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolverStatus,
    /// Objective value including the offset; `+inf` unless optimal.
    pub value: f64,
    pub assignment: Vec<f64>,
    /// Absolute gap between the incumbent and the best remaining bound.
    pub gap: f64,
    /// Branch-and-bound nodes explored (1 for a pure LP).
    pub nodes: usize,
    /// Row duals of the final LP, for pure LPs solved to optimality.
    pub duals: Option<Vec<f64>>,
}

impl MilpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }

    pub(crate) fn without_solution(status: SolverStatus, nodes: usize) -> Self {
        MilpSolution {
            status,
            value: f64::INFINITY,
            assignment: Vec::new(),
            gap: f64::INFINITY,
            nodes,
            duals: None,
        }
    }
}

/// Seam for swapping in an external solver without touching the encoders.
pub trait MilpEngine: Send + Sync {
    fn solve_lp(&self, problem: &MilpProblem) -> MilpSolution;
    fn solve_milp(&self, problem: &MilpProblem) -> MilpSolution;
}

#[derive(Debug, Clone, Default)]
pub struct BuiltinEngine {
    pub lp: LpOptions,
    pub branching: BranchOptions,
}

impl MilpEngine for BuiltinEngine {
    fn solve_lp(&self, problem: &MilpProblem) -> MilpSolution {
        simplex::solve_relaxation(problem, &problem.lower, &problem.upper, &self.lp)
    }

    fn solve_milp(&self, problem: &MilpProblem) -> MilpSolution {
        branch::branch_and_bound(problem, &self.lp, &self.branching)
    }
}

/// Solves the LP relaxation of `problem` (the binary mask is ignored).
pub fn solve_lp(problem: &MilpProblem) -> MilpSolution {
    BuiltinEngine::default().solve_lp(problem)
}

pub fn solve_milp(problem: &MilpProblem) -> MilpSolution {
    BuiltinEngine::default().solve_milp(problem)
}

/// One constraint system solved repeatedly under different costs and
/// variable bounds, each solve warm-started from a previous basis.
pub(crate) struct BoundedLp {
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    opts: LpOptions,
}

/// Basis handed from one [`BoundedLp`] solve to the next.
pub(crate) struct LpBasis(simplex::WarmBasis);

impl BoundedLp {
    pub(crate) fn new(eq_matrix: &DMatrix<f64>, rhs: &[f64]) -> Self {
        BoundedLp {
            cols: simplex::sparse_columns(eq_matrix),
            rhs: rhs.to_vec(),
            opts: LpOptions::default(),
        }
    }

    /// Status, optimal point (empty unless optimal) and final basis.
    pub(crate) fn solve(
        &self,
        cost: &[f64],
        lower: &[f64],
        upper: &[f64],
        warm: Option<&LpBasis>,
    ) -> (SolverStatus, Vec<f64>, Option<LpBasis>) {
        let out = match warm {
            Some(LpBasis(w)) => simplex::solve_warm(&self.cols, cost, &self.rhs, lower, upper, &self.opts, w),
            None => simplex::solve_with_columns(&self.cols, cost, &self.rhs, lower, upper, &self.opts),
        };
        (out.status, out.x, out.basis.map(LpBasis))
    }
}
