//! Unsafe-set avoidance over a reach horizon.
//!
//! Step `t` is safe iff `R_t ∩ O` is empty, decided by the norm-minimization
//! MILP over the intersection: the trajectory cannot enter `O` at step `t`
//! exactly when the optimum exceeds 1. Steps are independent and solved in
//! parallel.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HzError, Result};
use crate::hz::{Assignment, HybridZonotope, Point, EMPTINESS_BAND};
use crate::milp::{encode_avoidance, solve_milp, SolverStatus};
use crate::reach::ReachResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Safe,
    Unsafe,
    /// Optimum within the band around 1. Only per-step; the overall verdict
    /// reports it as unsafe.
    Boundary,
    /// The solver hit a limit.
    Indeterminate,
}

impl Status {
    fn rank(self) -> u8 {
        match self {
            Status::Safe => 0,
            Status::Indeterminate => 1,
            Status::Boundary => 2,
            Status::Unsafe => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepVerdict {
    pub t: usize,
    pub status: Status,
    /// MILP optimum; `None` when the intersection constraints are infeasible
    /// or the solver gave up.
    pub optimum: Option<f64>,
    /// State in both `R_t` and `O` (unsafe and boundary steps only).
    pub witness: Option<Vec<f64>>,
    /// Factors of `R_t` producing the witness.
    #[serde(skip)]
    pub assignment: Option<Assignment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub steps: Vec<StepVerdict>,
}

impl Verdict {
    pub fn is_safe(&self) -> bool {
        self.status == Status::Safe
    }

    /// First step with a witness.
    pub fn first_witness(&self) -> Option<&StepVerdict> {
        self.steps.iter().find(|s| s.witness.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// Classifies an emptiness optimum against the band around 1.
pub fn classify(optimum: f64) -> Status {
    if optimum > 1.0 + EMPTINESS_BAND {
        Status::Safe
    } else if optimum < 1.0 - EMPTINESS_BAND {
        Status::Unsafe
    } else {
        Status::Boundary
    }
}

/// Checks one reach set against `o`.
pub fn check_step(t: usize, r: &HybridZonotope, o: &HybridZonotope) -> Result<StepVerdict> {
    let (p, layout) = encode_avoidance(r, o)?;
    let sol = solve_milp(&p);
    let mut step = StepVerdict {
        t,
        status: Status::Indeterminate,
        optimum: None,
        witness: None,
        assignment: None,
    };
    match sol.status {
        SolverStatus::Optimal => {
            step.optimum = Some(sol.value);
            step.status = classify(sol.value);
            if step.status != Status::Safe {
                // R's factors lead the intersection's factor vector
                let joint = layout.factors.assignment(&sol.assignment);
                let a = Assignment {
                    xi_c: joint.xi_c.rows(0, r.n_g()).into_owned(),
                    xi_b: joint.xi_b.rows(0, r.n_b()).into_owned(),
                };
                let x: Point = r.point_of(&a);
                step.witness = Some(x.iter().copied().collect());
                step.assignment = Some(a);
            }
        }
        SolverStatus::Infeasible => step.status = Status::Safe,
        SolverStatus::IterationLimit => {}
        status => {
            return Err(HzError::Solver {
                status,
                context: "avoidance",
            })
        }
    }
    Ok(step)
}

/// Checks steps `1..=T` of `result` against the unsafe set `o`.
pub fn check_avoidance(result: &ReachResult, o: &HybridZonotope) -> Result<Verdict> {
    if result.sets.is_empty() {
        return Err(HzError::Contract("reach result has no sets".into()));
    }
    if o.dim() != result.sets[0].dim() {
        return Err(HzError::shape(
            "check_avoidance",
            format!(
                "unsafe set dimension {} vs state dimension {}",
                o.dim(),
                result.sets[0].dim()
            ),
        ));
    }
    let steps: Vec<StepVerdict> = (1..result.sets.len())
        .into_par_iter()
        .map(|t| check_step(t, &result.sets[t], o))
        .collect::<Result<_>>()?;
    let status = match steps.iter().map(|s| s.status).max_by_key(|s| s.rank()) {
        Some(Status::Boundary) => Status::Unsafe,
        worst => worst.unwrap_or(Status::Safe),
    };
    Ok(Verdict { status, steps })
}

/// Witness as a vector.
pub fn witness_point(step: &StepVerdict) -> Option<Point> {
    step.witness.as_ref().map(|w| DVector::from_column_slice(w))
}
