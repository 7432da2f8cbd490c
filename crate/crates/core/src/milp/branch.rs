//! Best-bound branch-and-bound over 0/1 variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex::{solve_warm, solve_with_columns, sparse_columns, LpOptions, LpOutcome, WarmBasis};
use super::{MilpProblem, MilpSolution, SolverStatus};

#[derive(Debug, Clone)]
pub struct BranchOptions {
    /// LP relaxations solved before giving up with `IterationLimit`.
    pub max_nodes: usize,
    pub integrality_tol: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        BranchOptions {
            max_nodes: 1_000_000,
            integrality_tol: 1e-6,
            abs_gap: 1e-8,
            rel_gap: 1e-6,
        }
    }
}

/// Open nodes beyond which children stop keeping a basis inverse.
const KEEP_INVERSE_BELOW: usize = 64;

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Option<WarmBasis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the greatest: smallest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

pub(crate) fn branch_and_bound(p: &MilpProblem, lp: &LpOptions, opts: &BranchOptions) -> MilpSolution {
    if p.validate().is_err() {
        return MilpSolution::without_solution(SolverStatus::Infeasible, 0);
    }
    let cols = sparse_columns(&p.eq_matrix);
    let solve = |lower: &[f64], upper: &[f64]| -> LpOutcome {
        solve_with_columns(&cols, &p.objective, &p.eq_rhs, lower, upper, lp)
    };
    let binaries: Vec<usize> = (0..p.num_vars()).filter(|&j| p.binary[j]).collect();

    let root = solve(&p.lower, &p.upper);
    let mut nodes = 1usize;
    match root.status {
        SolverStatus::Optimal => {}
        s => return MilpSolution::without_solution(s, nodes),
    }
    if binaries.is_empty() {
        return MilpSolution {
            status: SolverStatus::Optimal,
            value: p.evaluate(&root.x),
            assignment: root.x,
            gap: 0.0,
            nodes,
            duals: Some(root.duals),
        };
    }

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: p.evaluate(&root.x),
        depth: 0,
        seq,
        lower: p.lower.clone(),
        upper: p.upper.clone(),
        x: root.x,
        basis: root.basis,
    });
    let mut incumbent: Option<(f64, Vec<f64>, Option<WarmBasis>)> = None;
    let mut hit_limit = false;

    let tolerance = |inc: f64| opts.abs_gap.max(opts.rel_gap * inc.abs());

    while let Some(node) = heap.pop() {
        if let Some((best, _, _)) = &incumbent {
            if node.bound >= best - tolerance(*best) {
                heap.push(node);
                break;
            }
        }
        let frac = binaries.iter().copied().find(|&j| {
            let v = node.x[j];
            (v - v.round()).abs() > opts.integrality_tol
        });
        let Some(j) = frac else {
            let better = incumbent.as_ref().is_none_or(|(best, _, _)| node.bound < *best);
            if better {
                incumbent = Some((node.bound, node.x, node.basis));
            }
            continue;
        };
        for fixed in [0.0, 1.0] {
            if nodes >= opts.max_nodes {
                hit_limit = true;
                break;
            }
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            lower[j] = fixed;
            upper[j] = fixed;
            let out = match &node.basis {
                Some(warm) => solve_warm(&cols, &p.objective, &p.eq_rhs, &lower, &upper, lp, warm),
                None => solve(&lower, &upper),
            };
            nodes += 1;
            seq += 1;
            match out.status {
                SolverStatus::Optimal => {
                    let bound = p.evaluate(&out.x);
                    let prune = incumbent
                        .as_ref()
                        .is_some_and(|(best, _, _)| bound >= best - tolerance(*best));
                    if !prune {
                        let mut basis = out.basis;
                        if heap.len() >= KEEP_INVERSE_BELOW {
                            if let Some(b) = basis.as_mut() {
                                b.forget_inverse();
                            }
                        }
                        heap.push(Node {
                            bound,
                            depth: node.depth + 1,
                            seq,
                            lower,
                            upper,
                            x: out.x,
                            basis,
                        });
                    }
                }
                SolverStatus::Infeasible => {}
                // An unbounded child means the continuous part is unbounded
                // for some binary pattern; the whole MILP is unbounded if
                // that pattern is feasible, which the LP just showed.
                SolverStatus::Unbounded => return MilpSolution::without_solution(SolverStatus::Unbounded, nodes),
                SolverStatus::IterationLimit => hit_limit = true,
            }
        }
        if hit_limit {
            break;
        }
    }

    if hit_limit {
        return MilpSolution::without_solution(SolverStatus::IterationLimit, nodes);
    }
    let Some((value, x, warm)) = incumbent else {
        return MilpSolution::without_solution(SolverStatus::Infeasible, nodes);
    };
    let open_bound = heap.peek().map_or(value, |n| n.bound.min(value));
    let polish_solve = |lower: &[f64], upper: &[f64]| match &warm {
        Some(w) => solve_warm(&cols, &p.objective, &p.eq_rhs, lower, upper, lp, w),
        None => solve(lower, upper),
    };
    let (value, x) = polish(p, &binaries, value, x, &polish_solve);
    MilpSolution {
        status: SolverStatus::Optimal,
        value,
        assignment: x,
        gap: (value - open_bound).max(0.0),
        nodes,
        duals: None,
    }
}

/// Snap binaries to 0/1 and re-solve the continuous part so the reported
/// assignment is integral and row-feasible to LP accuracy.
fn polish(
    p: &MilpProblem,
    binaries: &[usize],
    value: f64,
    x: Vec<f64>,
    solve: &dyn Fn(&[f64], &[f64]) -> LpOutcome,
) -> (f64, Vec<f64>) {
    let mut lower = p.lower.clone();
    let mut upper = p.upper.clone();
    for &j in binaries {
        let v = x[j].round().clamp(0.0, 1.0);
        lower[j] = v;
        upper[j] = v;
    }
    let out = solve(&lower, &upper);
    if out.status == SolverStatus::Optimal {
        let polished = p.evaluate(&out.x);
        if polished <= value + 1e-9 * value.abs().max(1.0) {
            return (polished, out.x);
        }
    }
    let mut x = x;
    for &j in binaries {
        x[j] = x[j].round().clamp(0.0, 1.0);
    }
    (value, x)
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use crate::milp::{solve_milp, MilpProblem, SolverStatus};

    #[test]
    fn two_leaf_enumeration() {
        // vars (t, xi, beta, s1, s2): xi - t + s1 = 0, -xi - t + s2 = 0, xi + 4 beta = 3
        let a = DMatrix::from_row_slice(
            3,
            5,
            &[
                -1.0, 1.0, 0.0, 1.0, 0.0, //
                -1.0, -1.0, 0.0, 0.0, 1.0, //
                0.0, 1.0, 4.0, 0.0, 0.0,
            ],
        );
        let mut p = MilpProblem::new(a, vec![0.0, 0.0, 3.0]);
        p.objective[0] = 1.0;
        p.lower[3] = 0.0;
        p.lower[4] = 0.0;
        p.set_binary(2);
        let sol = solve_milp(&p);
        assert_eq!(sol.status, SolverStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-9);
        assert_eq!(sol.assignment[2], 1.0);
        assert!((sol.assignment[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_when_every_leaf_is() {
        // x = 0.5 with x binary
        let mut p = MilpProblem::new(DMatrix::from_row_slice(1, 1, &[1.0]), vec![0.5]);
        p.set_binary(0);
        assert_eq!(solve_milp(&p).status, SolverStatus::Infeasible);
    }

    #[test]
    fn node_cap_reports_iteration_limit() {
        use crate::milp::{BuiltinEngine, MilpEngine};
        // 2 x0 + 2 x1 = 1 has a fractional root and no integral leaf
        let mut p = MilpProblem::new(DMatrix::from_row_slice(1, 2, &[2.0, 2.0]), vec![1.0]);
        p.objective = vec![-1.0, -1.5];
        p.set_binary(0);
        p.set_binary(1);
        let engine = BuiltinEngine {
            branching: super::BranchOptions {
                max_nodes: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(engine.solve_milp(&p).status, SolverStatus::IterationLimit);
        assert_eq!(solve_milp(&p).status, SolverStatus::Infeasible);
    }
}
