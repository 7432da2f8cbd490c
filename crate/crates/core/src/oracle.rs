//! Brute-force references for testing the exact machinery.
//!
//! Nothing here uses the set operations under test. Membership goes through
//! [`HybridZonotope::contains_point`]; everything else reads the set's
//! matrices directly, enumerates binary patterns and solves plain LPs with
//! [`solve_lp`]. All of it is exponential in the binary count by design.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{HzError, Result};
use crate::hz::{HybridZonotope, Point, EMPTINESS_BAND};
use crate::milp::{solve_lp, MilpProblem, MilpSolution, SolverStatus};
use crate::nn::NeuralNetwork;
use crate::reach::{LinearSystem, ReachResult};

/// Largest binary count the enumeration oracles accept.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Point>,
}

/// Forward simulation of `x(t+1) = A x(t) + B net(x(t))`.
pub fn simulate(sys: &LinearSystem, net: &NeuralNetwork, x0: &Point, horizon: usize) -> Trajectory {
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(x0.clone());
    for t in 0..horizon {
        let x = &states[t];
        let next = &sys.a * x + &sys.b * net.evaluate(x);
        states.push(next);
    }
    Trajectory { states }
}

/// Outcome of checking simulated trajectories against reach sets.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionReport {
    /// Initial points simulated.
    pub points: usize,
    /// `(point, step)` pairs whose state was not a member of `R_t` at `tol`.
    pub violations: usize,
    /// Largest membership tolerance that was needed: `1e-9` when every
    /// state was accepted at `1e-9`, `tol` when some needed more, infinite
    /// when some failed outright.
    pub max_residual: f64,
    pub first_violation: Option<(usize, usize)>,
}

/// Corners of the axis box `c ± sum |G|` around `z`.
fn enclosing_box(z: &HybridZonotope) -> (Vec<f64>, Vec<f64>) {
    (0..z.dim())
        .map(|i| {
            let r = z.gc().row(i).abs().sum() + z.gb().row(i).abs().sum();
            (z.center()[i] - r, z.center()[i] + r)
        })
        .unzip()
}

/// `density` points per axis over the box enclosing `x0`, kept when they
/// are members of `x0`.
pub fn grid_points(x0: &HybridZonotope, density: usize) -> Result<Vec<Point>> {
    let n = x0.dim();
    let (lo, hi) = enclosing_box(x0);
    let density = density.max(1);
    let total = density.checked_pow(n as u32).ok_or(HzError::Capacity {
        needed: u128::MAX,
        cap: usize::MAX as u128,
    })?;
    let candidates: Vec<Point> = (0..total)
        .map(|mut k| {
            DVector::from_fn(n, |i, _| {
                let step = k % density;
                k /= density;
                if density == 1 {
                    0.5 * (lo[i] + hi[i])
                } else {
                    lo[i] + (hi[i] - lo[i]) * step as f64 / (density - 1) as f64
                }
            })
        })
        .collect();
    let keep: Vec<bool> = candidates
        .par_iter()
        .map(|x| x0.contains_point(x, 1e-9))
        .collect::<Result<_>>()?;
    Ok(candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(x, k)| k.then_some(x))
        .collect())
}

/// Simulates from every grid point of `x0` and every point in `extra`, and
/// checks that state `t` is a member of `result.sets[t]`.
pub fn grid_inclusion_check(
    x0: &HybridZonotope,
    sys: &LinearSystem,
    net: &NeuralNetwork,
    result: &ReachResult,
    density: usize,
    extra: &[Point],
    tol: f64,
) -> Result<InclusionReport> {
    let mut starts = grid_points(x0, density)?;
    starts.extend(extra.iter().cloned());
    let horizon = result.sets.len() - 1;
    let checks: Vec<(usize, usize, f64)> = starts
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let traj = simulate(sys, net, x, horizon);
            let mut out = Vec::new();
            for t in 1..=horizon {
                let r = &result.sets[t];
                let residual = if r.contains_point(&traj.states[t], 1e-9)? {
                    1e-9
                } else if r.contains_point(&traj.states[t], tol)? {
                    tol
                } else {
                    f64::INFINITY
                };
                out.push((k, t, residual));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let failures: Vec<&(usize, usize, f64)> = checks.iter().filter(|c| c.2.is_infinite()).collect();
    Ok(InclusionReport {
        points: starts.len(),
        violations: failures.len(),
        max_residual: checks.iter().map(|c| c.2).fold(0.0, f64::max),
        first_violation: failures.first().map(|c| (c.0, c.1)),
    })
}

fn patterns(n_b: usize) -> Result<impl Iterator<Item = DVector<f64>>> {
    if n_b > ENUMERATION_LIMIT {
        return Err(HzError::Capacity {
            needed: 1u128 << n_b.min(127),
            cap: 1u128 << ENUMERATION_LIMIT,
        });
    }
    Ok((0..1u64 << n_b).map(move |k| DVector::from_fn(n_b, |j, _| if (k >> j) & 1 == 1 { 1.0 } else { -1.0 })))
}

/// `min ||xi||_inf` subject to `m xi = rhs`; `None` when infeasible.
pub fn min_norm_lp(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<Option<f64>> {
    let (rows, k) = m.shape();
    // variables [t, xi, s+, s-] with xi - t + s+ = 0 and -xi - t + s- = 0
    let vars = 1 + 3 * k;
    let mut a = DMatrix::zeros(rows + 2 * k, vars);
    a.view_mut((0, 1), (rows, k)).copy_from(m);
    for j in 0..k {
        a[(rows + j, 1 + j)] = 1.0;
        a[(rows + j, 0)] = -1.0;
        a[(rows + j, 1 + k + j)] = 1.0;
        a[(rows + k + j, 1 + j)] = -1.0;
        a[(rows + k + j, 0)] = -1.0;
        a[(rows + k + j, 1 + 2 * k + j)] = 1.0;
    }
    let mut b = rhs.iter().copied().collect::<Vec<_>>();
    b.extend(std::iter::repeat_n(0.0, 2 * k));
    let mut p = MilpProblem::new(a, b);
    p.objective[0] = 1.0;
    p.lower[0] = 0.0;
    for j in 1 + k..vars {
        p.lower[j] = 0.0;
    }
    let sol = solve_lp(&p);
    match sol.status {
        SolverStatus::Optimal => Ok(Some(sol.value)),
        SolverStatus::Infeasible => Ok(None),
        status => Err(HzError::Solver {
            status,
            context: "oracle norm LP",
        }),
    }
}

/// Minimum over binary patterns of the per-pattern LP optimum
/// `min ||xi_c||_inf`; `None` if no pattern satisfies the constraints.
pub fn enumeration_emptiness_optimum(z: &HybridZonotope) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for xi_b in patterns(z.n_b())? {
        let rhs = z.b() - z.ab() * &xi_b;
        if let Some(v) = min_norm_lp(z.ac(), &rhs)? {
            best = Some(best.map_or(v, |b| b.min(v)));
        }
    }
    Ok(best)
}

/// Emptiness by enumeration, with the same band as the MILP path.
pub fn enumeration_is_empty(z: &HybridZonotope) -> Result<bool> {
    Ok(enumeration_emptiness_optimum(z)?.is_none_or(|v| v > 1.0 + EMPTINESS_BAND))
}

/// Minimum over pattern pairs of `min ||(xi_r, xi_o)||_inf` subject to both
/// sets' constraints and equal points; `None` if no pair is compatible.
pub fn enumeration_avoidance_optimum(r: &HybridZonotope, o: &HybridZonotope) -> Result<Option<f64>> {
    if r.dim() != o.dim() {
        return Err(HzError::shape("enumeration_avoidance_optimum", "dimension mismatch"));
    }
    let n = r.dim();
    let (gr, go) = (r.n_g(), o.n_g());
    let (cr, co) = (r.n_c(), o.n_c());
    let mut m = DMatrix::zeros(cr + co + n, gr + go);
    m.view_mut((0, 0), (cr, gr)).copy_from(r.ac());
    m.view_mut((cr, gr), (co, go)).copy_from(o.ac());
    m.view_mut((cr + co, 0), (n, gr)).copy_from(r.gc());
    m.view_mut((cr + co, gr), (n, go)).copy_from(&(-o.gc()));
    let o_patterns: Vec<DVector<f64>> = patterns(o.n_b())?.collect();
    let mut best: Option<f64> = None;
    for br in patterns(r.n_b())? {
        for bo in &o_patterns {
            let rhs_r = r.b() - r.ab() * &br;
            let rhs_o = o.b() - o.ab() * bo;
            let gap = (o.center() + o.gb() * bo) - (r.center() + r.gb() * &br);
            let mut rhs = DVector::zeros(cr + co + n);
            rhs.rows_mut(0, cr).copy_from(&rhs_r);
            rhs.rows_mut(cr, co).copy_from(&rhs_o);
            rhs.rows_mut(cr + co, n).copy_from(&gap);
            if let Some(v) = min_norm_lp(&m, &rhs)? {
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
    }
    Ok(best)
}

/// Minimum of a mixed-binary problem by solving the LP at every binary leaf.
pub fn leaf_minimum(p: &MilpProblem) -> Result<Option<f64>> {
    let bins: Vec<usize> = (0..p.num_vars()).filter(|&j| p.binary[j]).collect();
    if bins.len() > ENUMERATION_LIMIT {
        return Err(HzError::Capacity {
            needed: 1u128 << bins.len().min(127),
            cap: 1u128 << ENUMERATION_LIMIT,
        });
    }
    let mut best: Option<f64> = None;
    for k in 0..1u64 << bins.len() {
        let mut leaf = p.clone();
        for (i, &j) in bins.iter().enumerate() {
            let v = ((k >> i) & 1) as f64;
            if v < p.lower[j] || v > p.upper[j] {
                continue;
            }
            leaf.lower[j] = v;
            leaf.upper[j] = v;
            leaf.binary[j] = false;
        }
        if leaf.binary.iter().any(|&b| b) {
            // some fixed value fell outside the variable's own bounds
            continue;
        }
        let sol = solve_lp(&leaf);
        match sol.status {
            SolverStatus::Optimal => best = Some(best.map_or(sol.value, |b| b.min(sol.value))),
            SolverStatus::Infeasible => {}
            status => {
                return Err(HzError::Solver {
                    status,
                    context: "oracle leaf LP",
                })
            }
        }
    }
    Ok(best)
}

/// LP optimum by enumerating basic solutions: every choice of `m`
/// independent basic columns with the remaining variables at a bound.
/// Requires finite bounds and at most a handful of variables.
pub fn vertex_enumeration_lp(p: &MilpProblem) -> Result<Option<f64>> {
    let n = p.num_vars();
    let m = p.num_rows();
    if n > 12 || p.lower.iter().chain(&p.upper).any(|v| !v.is_finite()) {
        return Err(HzError::Contract(
            "vertex enumeration needs few, boxed variables".into(),
        ));
    }
    let a = &p.eq_matrix;
    let b = DVector::from_column_slice(&p.eq_rhs);
    let feas_tol = 1e-9 * (1.0 + b.amax());
    let mut best: Option<f64> = None;
    for basis_mask in 0u32..1 << n {
        if basis_mask.count_ones() as usize > m {
            continue;
        }
        let basic: Vec<usize> = (0..n).filter(|j| basis_mask >> j & 1 == 1).collect();
        let nonbasic: Vec<usize> = (0..n).filter(|j| basis_mask >> j & 1 == 0).collect();
        for bound_mask in 0u32..1 << nonbasic.len() {
            let mut x = vec![0.0; n];
            for (i, &j) in nonbasic.iter().enumerate() {
                x[j] = if bound_mask >> i & 1 == 1 {
                    p.upper[j]
                } else {
                    p.lower[j]
                };
            }
            let xv = DVector::from_column_slice(&x);
            let residual = &b - a * &xv;
            if !basic.is_empty() {
                let ab = a.select_columns(&basic);
                let Ok(pinv) = ab.clone().pseudo_inverse(1e-12) else {
                    continue;
                };
                let xb = pinv * &residual;
                for (i, &j) in basic.iter().enumerate() {
                    x[j] = xb[i];
                }
            }
            if (0..n).any(|j| x[j] < p.lower[j] - feas_tol || x[j] > p.upper[j] + feas_tol) {
                continue;
            }
            if p.max_violation(&x) > feas_tol * 10.0 {
                continue;
            }
            let v = p.evaluate(&x);
            best = Some(best.map_or(v, |bv| bv.min(v)));
        }
    }
    Ok(best)
}

/// `|primal - dual|` for an optimal LP solution with row duals, where the
/// dual objective is `y^T b` plus each reduced cost times the bound it
/// pushes against.
pub fn lp_duality_gap(p: &MilpProblem, sol: &MilpSolution) -> Option<f64> {
    let y = DVector::from_column_slice(sol.duals.as_ref()?);
    let b = DVector::from_column_slice(&p.eq_rhs);
    let mut dual = y.dot(&b) + p.offset;
    for j in 0..p.num_vars() {
        let d = p.objective[j] - p.eq_matrix.column(j).dot(&y);
        let bound = if d > 0.0 { p.lower[j] } else { p.upper[j] };
        if d == 0.0 || (!bound.is_finite() && d.abs() <= 1e-9) {
            continue;
        }
        if !bound.is_finite() {
            return Some(f64::INFINITY);
        }
        dual += d * bound;
    }
    Some((sol.value - dual).abs())
}

/// `max_p d^T p` for each direction.
pub fn sampled_hull_support(points: &[Point], directions: &[DVector<f64>]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(HzError::Empty("sampled_hull_support"));
    }
    Ok(directions
        .iter()
        .map(|d| points.iter().map(|p| d.dot(p)).fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn sampled_hausdorff(a: &[Point], b: &[Point]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(HzError::Empty("sampled_hausdorff"));
    }
    let directed = |from: &[Point], to: &[Point]| {
        from.par_iter()
            .map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// `k` unit vectors evenly spaced on the circle.
pub fn circle_directions(k: usize) -> Vec<DVector<f64>> {
    (0..k)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            DVector::from_vec(vec![th.cos(), th.sin()])
        })
        .collect()
}
