//! Encoders from hybrid-zonotope questions to [`MilpProblem`]s.
//!
//! Binary factors `xi_b in {-1, 1}` are carried as `beta in {0, 1}` with
//! `xi_b = 2 beta - 1`, so a constraint `Ac xi_c + Ab xi_b = b` becomes
//! `Ac xi_c + 2 Ab beta = b + Ab 1`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use super::MilpProblem;
use crate::error::Result;
use crate::hz::{Assignment, HybridZonotope};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Where the set's factors live inside an encoded problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorLayout {
    pub xi_c: Range<usize>,
    pub beta: Range<usize>,
}

impl FactorLayout {
    /// Factor values read off a solver assignment; binaries are rounded.
    pub fn assignment(&self, x: &[f64]) -> Assignment {
        Assignment {
            xi_c: DVector::from_column_slice(&x[self.xi_c.clone()]),
            xi_b: DVector::from_iterator(
                self.beta.len(),
                x[self.beta.clone()]
                    .iter()
                    .map(|b| 2.0 * b.round().clamp(0.0, 1.0) - 1.0),
            ),
        }
    }
}

/// Layout of the emptiness program. Variable 0 is the norm bound `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptinessLayout {
    pub factors: FactorLayout,
}

impl EmptinessLayout {
    pub const NORM_BOUND: usize = 0;
}

/// Rows `[Ac, 2 Ab] (xi_c, beta) = b + Ab 1` placed at `xi_c` / `beta` offsets.
fn constraint_rows(z: &HybridZonotope, a: &mut DMatrix<f64>, rhs: &mut [f64], row0: usize, xi0: usize, beta0: usize) {
    let ab_sum = z.ab().column_sum();
    for i in 0..z.n_c() {
        for j in 0..z.n_g() {
            a[(row0 + i, xi0 + j)] = z.ac()[(i, j)];
        }
        for j in 0..z.n_b() {
            a[(row0 + i, beta0 + j)] = 2.0 * z.ab()[(i, j)];
        }
        rhs[row0 + i] = z.b()[i] + ab_sum[i];
    }
}

/// `min t  s.t.  -t <= xi_c <= t,  Ac xi_c + Ab xi_b = b`.
///
/// The set is nonempty iff the optimum is at most 1. The box constraints on
/// `xi_c` are written as `xi - t + s = 0`, `-xi - t + s' = 0` with `s, s' >= 0`.
pub fn encode_emptiness(z: &HybridZonotope) -> (MilpProblem, EmptinessLayout) {
    let (n_g, n_b, n_c) = (z.n_g(), z.n_b(), z.n_c());
    let xi0 = 1;
    let beta0 = xi0 + n_g;
    let slack0 = beta0 + n_b;
    let vars = slack0 + 2 * n_g;
    let rows = n_c + 2 * n_g;
    let mut a = DMatrix::zeros(rows, vars);
    let mut rhs = vec![0.0; rows];
    constraint_rows(z, &mut a, &mut rhs, 0, xi0, beta0);
    for j in 0..n_g {
        let up = n_c + 2 * j;
        a[(up, xi0 + j)] = 1.0;
        a[(up, 0)] = -1.0;
        a[(up, slack0 + 2 * j)] = 1.0;
        a[(up + 1, xi0 + j)] = -1.0;
        a[(up + 1, 0)] = -1.0;
        a[(up + 1, slack0 + 2 * j + 1)] = 1.0;
    }
    let mut p = MilpProblem::new(a, rhs);
    p.objective[0] = 1.0;
    p.lower[0] = 0.0;
    for j in slack0..vars {
        p.lower[j] = 0.0;
    }
    for j in beta0..slack0 {
        p.set_binary(j);
    }
    let layout = EmptinessLayout {
        factors: FactorLayout {
            xi_c: xi0..beta0,
            beta: beta0..slack0,
        },
    };
    (p, layout)
}

/// Pure feasibility form of the set's factor constraints with
/// `|xi_c| <= 1 + tol`; feasible iff the set is nonempty (up to `tol`).
pub fn encode_feasibility(z: &HybridZonotope, tol: f64) -> (MilpProblem, FactorLayout) {
    let (n_g, n_b, n_c) = (z.n_g(), z.n_b(), z.n_c());
    let mut a = DMatrix::zeros(n_c, n_g + n_b);
    let mut rhs = vec![0.0; n_c];
    constraint_rows(z, &mut a, &mut rhs, 0, 0, n_g);
    let mut p = MilpProblem::new(a, rhs);
    for j in 0..n_g {
        p.lower[j] = -1.0 - tol;
        p.upper[j] = 1.0 + tol;
    }
    for j in n_g..n_g + n_b {
        p.set_binary(j);
    }
    (
        p,
        FactorLayout {
            xi_c: 0..n_g,
            beta: n_g..n_g + n_b,
        },
    )
}

/// Optimize `d^T x` over the set. The problem is always a minimization; for
/// [`Sense::Maximize`] the objective is negated, so read the support value
/// as `d^T point_of(layout.assignment(x))` rather than from the optimum.
pub fn encode_support(z: &HybridZonotope, d: &DVector<f64>, sense: Sense) -> (MilpProblem, FactorLayout) {
    let (mut p, layout) = encode_feasibility(z, 0.0);
    let sign = match sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let dgc = z.gc().tr_mul(d);
    let dgb = z.gb().tr_mul(d);
    for j in 0..z.n_g() {
        p.objective[j] = sign * dgc[j];
    }
    for j in 0..z.n_b() {
        p.objective[z.n_g() + j] = sign * 2.0 * dgb[j];
    }
    p.offset = sign * (d.dot(z.center()) - dgb.sum());
    (p, layout)
}

/// Feasibility of `x = c + Gc xi_c + Gb xi_b` with the set's constraints and
/// `|xi_c| <= 1 + tol`.
pub fn encode_membership(z: &HybridZonotope, x: &DVector<f64>, tol: f64) -> (MilpProblem, FactorLayout) {
    let (n, n_g, n_b, n_c) = (z.dim(), z.n_g(), z.n_b(), z.n_c());
    let mut a = DMatrix::zeros(n_c + n, n_g + n_b);
    let mut rhs = vec![0.0; n_c + n];
    constraint_rows(z, &mut a, &mut rhs, 0, 0, n_g);
    let gb_sum = z.gb().column_sum();
    for i in 0..n {
        for j in 0..n_g {
            a[(n_c + i, j)] = z.gc()[(i, j)];
        }
        for j in 0..n_b {
            a[(n_c + i, n_g + j)] = 2.0 * z.gb()[(i, j)];
        }
        rhs[n_c + i] = x[i] - z.center()[i] + gb_sum[i];
    }
    let mut p = MilpProblem::new(a, rhs);
    for j in 0..n_g {
        p.lower[j] = -1.0 - tol;
        p.upper[j] = 1.0 + tol;
    }
    for j in n_g..n_g + n_b {
        p.set_binary(j);
    }
    (
        p,
        FactorLayout {
            xi_c: 0..n_g,
            beta: n_g..n_g + n_b,
        },
    )
}

/// Emptiness program of `R ∩ O`. The reachable set's factors come first in
/// the intersection, so `layout.factors.xi_c.start..+r.n_g()` and
/// `layout.factors.beta.start..+r.n_b()` locate a witness in `r`.
pub fn encode_avoidance(r: &HybridZonotope, o: &HybridZonotope) -> Result<(MilpProblem, EmptinessLayout)> {
    let joint = r.intersect(o)?;
    Ok(encode_emptiness(&joint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve_milp, SolverStatus};

    fn interval_cz(a: f64, b: f64) -> HybridZonotope {
        HybridZonotope::new(
            DVector::from_element(1, 0.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 0),
            DMatrix::from_element(1, 1, a),
            DMatrix::zeros(1, 0),
            DVector::from_element(1, b),
        )
        .unwrap()
    }

    #[test]
    fn emptiness_optimum_of_scaled_constraint() {
        let (p, _) = encode_emptiness(&interval_cz(1.0, 2.0));
        let sol = solve_milp(&p);
        assert!((sol.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn emptiness_of_zonotope_is_zero() {
        let z = HybridZonotope::from_box(&[-1.0, 0.0], &[1.0, 3.0]).unwrap();
        let sol = solve_milp(&encode_emptiness(&z).0);
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!(sol.value.abs() < 1e-12);
    }

    #[test]
    fn support_of_unit_box() {
        let z = HybridZonotope::from_box(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
        let d = DVector::from_vec(vec![1.0, 0.0]);
        for (sense, want) in [(Sense::Minimize, -1.0), (Sense::Maximize, 1.0)] {
            let (p, layout) = encode_support(&z, &d, sense);
            let sol = solve_milp(&p);
            let x = z.point_of(&layout.assignment(&sol.assignment));
            assert!((d.dot(&x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn membership_of_center() {
        let z = HybridZonotope::from_box(&[0.0, 0.0], &[2.0, 4.0]).unwrap();
        let (p, _) = encode_membership(&z, &DVector::from_vec(vec![1.0, 2.0]), 0.0);
        assert!(solve_milp(&p).is_optimal());
        let (p, _) = encode_membership(&z, &DVector::from_vec(vec![2.5, 2.0]), 1e-9);
        assert_eq!(solve_milp(&p).status, SolverStatus::Infeasible);
    }
}
