//! Over-approximating complexity reduction.
//!
//! Three moves, applied in this order by [`reduce_complexity`]:
//!
//! 1. Relax binary factors to continuous ones. On sets produced by the
//!    reachability recursion, relaxing every binary yields the convex hull.
//! 2. Merge parallel generators of the lifted set, where constraints become
//!    coordinates. This is exact.
//! 3. Eliminate one constraint row together with one continuous factor by
//!    solving the row for that factor. The factor's box bound is lost, so
//!    the result is a superset; candidates are ranked by how far the freed
//!    factor can leave `[-1, 1]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HzError, Result};
use crate::hz::{ConstrainedZonotope, HybridZonotope};
use crate::linalg::{assemble, hcat, ones, vcat, vcat_vec};
use crate::milp::{solve_lp, MilpProblem, SolverStatus};

/// Pivots smaller than this are rejected as ill-conditioned.
pub const PIVOT_TOL: f64 = 1e-10;

/// Lifted columns whose normalized dot product reaches `1 - tol` are merged.
pub const PARALLEL_TOL: f64 = 1e-9;

/// Which binary columns the pipeline relaxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryOrder {
    First,
    /// Most recently introduced binaries first.
    #[default]
    Last,
}

/// How elimination candidates are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HausdorffMethod {
    /// Lifted column norm times the LP excess of the freed factor over 1.
    #[default]
    RangeExcess,
}

fn default_true() -> bool {
    true
}

fn default_parallel_tol() -> f64 {
    PARALLEL_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionPolicy {
    /// Continuous generators to remove by constraint elimination.
    pub n_g: usize,
    /// Binary generators to relax.
    pub n_b: usize,
    #[serde(default = "default_true")]
    pub merge_parallel: bool,
    #[serde(default = "default_true")]
    pub eliminate: bool,
    #[serde(default)]
    pub binary_order: BinaryOrder,
    #[serde(default = "default_parallel_tol")]
    pub parallel_tol: f64,
    #[serde(default)]
    pub method: HausdorffMethod,
}

impl ReductionPolicy {
    pub fn new(n_g: usize, n_b: usize) -> Self {
        ReductionPolicy {
            n_g,
            n_b,
            merge_parallel: true,
            eliminate: true,
            binary_order: BinaryOrder::default(),
            parallel_tol: PARALLEL_TOL,
            method: HausdorffMethod::default(),
        }
    }

    /// Nothing to relax or eliminate and no merging.
    pub fn is_noop(&self) -> bool {
        self.n_b == 0 && (self.n_g == 0 || !self.eliminate) && !self.merge_parallel
    }

    /// Copy with `n_b` capped at the set's binary count.
    pub fn clamped(&self, z: &HybridZonotope) -> ReductionPolicy {
        ReductionPolicy {
            n_b: self.n_b.min(z.n_b()),
            ..self.clone()
        }
    }
}

/// Moves the binary columns `cols` (in the given order) to the end of the
/// continuous factors.
pub fn relax_columns(z: &HybridZonotope, cols: &[usize]) -> Result<HybridZonotope> {
    if let Some(&bad) = cols.iter().find(|&&j| j >= z.n_b()) {
        return Err(HzError::Contract(format!("binary column {bad} of {}", z.n_b())));
    }
    let keep: Vec<usize> = (0..z.n_b()).filter(|j| !cols.contains(j)).collect();
    let n = z.dim();
    let gc = hcat(n, &[z.gc(), &z.gb().select_columns(cols)]);
    let ac = hcat(z.n_c(), &[z.ac(), &z.ab().select_columns(cols)]);
    HybridZonotope::new(
        z.center().clone(),
        gc,
        z.gb().select_columns(&keep),
        ac,
        z.ab().select_columns(&keep),
        z.b().clone(),
    )
}

/// Relaxes the first `k` binary factors to continuous ones.
pub fn relax_binaries(z: &HybridZonotope, k: usize) -> Result<HybridZonotope> {
    if k > z.n_b() {
        return Err(HzError::Contract(format!("cannot relax {k} of {} binaries", z.n_b())));
    }
    relax_columns(z, &(0..k).collect::<Vec<_>>())
}

fn check_same_dim(op: &'static str, z: &ConstrainedZonotope, w: &ConstrainedZonotope) -> Result<()> {
    if z.dim() != w.dim() {
        return Err(HzError::shape(op, format!("dimensions {} and {}", z.dim(), w.dim())));
    }
    Ok(())
}

/// Rows tying each factor of `Z` and `W` to the selector, shared by the
/// hull and union constructions: `[I 0; -I 0; 0 I; 0 -I]`, the selector
/// column `[-1/2; -1/2; 1/2; 1/2]`, and the slack identity.
fn selector_rows(gz: usize, gw: usize) -> (DMatrix<f64>, DVector<f64>) {
    let slack = 2 * (gz + gw);
    let mut a3 = DMatrix::zeros(slack, gz + gw);
    let mut a0 = DVector::zeros(slack);
    for j in 0..gz {
        a3[(j, j)] = 1.0;
        a3[(gz + j, j)] = -1.0;
        a0[j] = -0.5;
        a0[gz + j] = -0.5;
    }
    for j in 0..gw {
        a3[(2 * gz + j, gz + j)] = 1.0;
        a3[(2 * gz + gw + j, gz + j)] = -1.0;
        a0[2 * gz + j] = 0.5;
        a0[2 * gz + gw + j] = 0.5;
    }
    (a3, a0)
}

/// Convex hull of two constrained zonotopes as a constrained zonotope.
///
/// Generators are `[Gz, Gw, (cz - cw)/2, 0]`; the column after `Gw` is the
/// selector and the trailing `2 (n_gz + n_gw)` columns are slacks.
pub fn conv_hull_two_cz(z: &ConstrainedZonotope, w: &ConstrainedZonotope) -> Result<ConstrainedZonotope> {
    check_same_dim("conv_hull_two_cz", z, w)?;
    let n = z.dim();
    let (gz, gw) = (z.n_g(), w.n_g());
    let (cz, cw) = (z.n_c(), w.n_c());
    let slack = 2 * (gz + gw);
    let (a3, a0) = selector_rows(gz, gw);
    let half_diff = DMatrix::from_column_slice(n, 1, ((&z.c - &w.c) * 0.5).as_slice());
    let g = hcat(n, &[&z.g, &w.g, &half_diff, &DMatrix::zeros(n, slack)]);
    let sel = gz + gw;
    let rows = cz + cw + slack;
    let cols = sel + 1 + slack;
    let bz_col = DMatrix::from_column_slice(cz, 1, (&z.b * -0.5).as_slice());
    let bw_col = DMatrix::from_column_slice(cw, 1, (&w.b * 0.5).as_slice());
    let a0_col = DMatrix::from_column_slice(slack, 1, a0.as_slice());
    let a = assemble(
        rows,
        cols,
        &[
            (0, 0, &z.a),
            (0, sel, &bz_col),
            (cz, gz, &w.a),
            (cz, sel, &bw_col),
            (cz + cw, 0, &a3),
            (cz + cw, sel, &a0_col),
            (cz + cw, sel + 1, &DMatrix::identity(slack, slack)),
        ],
    );
    let b = vcat_vec(&[&(&z.b * 0.5), &(&w.b * 0.5), &(-0.5 * ones(slack))]);
    ConstrainedZonotope::new((&z.c + &w.c) * 0.5, g, a, b)
}

/// Union of two constrained zonotopes with a single binary selector.
pub fn union_two_cz(z: &ConstrainedZonotope, w: &ConstrainedZonotope) -> Result<HybridZonotope> {
    check_same_dim("union_two_cz", z, w)?;
    let n = z.dim();
    let (gz, gw) = (z.n_g(), w.n_g());
    let (cz, cw) = (z.n_c(), w.n_c());
    let slack = 2 * (gz + gw);
    let (a3, a0) = selector_rows(gz, gw);
    let gc = hcat(n, &[&z.g, &w.g, &DMatrix::zeros(n, slack)]);
    let gb = DMatrix::from_column_slice(n, 1, ((&z.c - &w.c) * 0.5).as_slice());
    let rows = cz + cw + slack;
    let ac = assemble(
        rows,
        gz + gw + slack,
        &[
            (0, 0, &z.a),
            (cz, gz, &w.a),
            (cz + cw, 0, &a3),
            (cz + cw, gz + gw, &DMatrix::identity(slack, slack)),
        ],
    );
    let ab = DMatrix::from_column_slice(rows, 1, vcat_vec(&[&(&z.b * -0.5), &(&w.b * 0.5), &a0]).as_slice());
    let b = vcat_vec(&[&(&z.b * 0.5), &(&w.b * 0.5), &(-0.5 * ones(slack))]);
    HybridZonotope::new((&z.c + &w.c) * 0.5, gc, gb, ac, ab, b)
}

/// Constraints as coordinates: `(z, 0)` is in the lift iff `z` is in the set.
pub fn lift(z: &HybridZonotope) -> HybridZonotope {
    let n = z.dim();
    let c = vcat_vec(&[z.center(), &(-z.b())]);
    let gc = vcat(z.n_g(), &[z.gc(), z.ac()]);
    let gb = vcat(z.n_b(), &[z.gb(), z.ab()]);
    HybridZonotope::new(
        c,
        gc,
        gb,
        DMatrix::zeros(0, z.n_g()),
        DMatrix::zeros(0, z.n_b()),
        DVector::zeros(0),
    )
    .unwrap_or_else(|_| unreachable!("lift of a valid set is valid (n = {n})"))
}

/// Inverse of [`lift`] for a constraint-free set whose first `n` coordinates
/// are the ambient space.
pub fn unlift(lifted: &HybridZonotope, n: usize) -> Result<HybridZonotope> {
    if lifted.n_c() != 0 || n > lifted.dim() {
        return Err(HzError::Contract("unlift expects a constraint-free lifted set".into()));
    }
    let m = lifted.dim() - n;
    HybridZonotope::new(
        lifted.center().rows(0, n).into_owned(),
        lifted.gc().rows(0, n).into_owned(),
        lifted.gb().rows(0, n).into_owned(),
        lifted.gc().rows(n, m).into_owned(),
        lifted.gb().rows(n, m).into_owned(),
        -lifted.center().rows(n, m).into_owned(),
    )
}

/// Sums continuous generators that are parallel in the lifted space.
///
/// Each group is merged into its first member, sign-aligned to it; zero
/// lifted columns are dropped. The set is unchanged.
pub fn merge_parallel_generators(z: &HybridZonotope, tol: f64) -> Result<HybridZonotope> {
    let lifted = lift(z);
    let g = lifted.gc();
    let cols = g.ncols();
    let norms: Vec<f64> = (0..cols).map(|j| g.column(j).norm()).collect();
    let mut group_of: Vec<Option<usize>> = vec![None; cols];
    let mut merged: Vec<DVector<f64>> = Vec::new();
    for j in 0..cols {
        if norms[j] == 0.0 || group_of[j].is_some() {
            continue;
        }
        let mut sum = g.column(j).into_owned();
        group_of[j] = Some(merged.len());
        for k in j + 1..cols {
            if norms[k] == 0.0 || group_of[k].is_some() {
                continue;
            }
            let cos = g.column(j).dot(&g.column(k)) / (norms[j] * norms[k]);
            if cos.abs() >= 1.0 - tol {
                sum += g.column(k) * cos.signum();
                group_of[k] = Some(merged.len());
            }
        }
        merged.push(sum);
    }
    let rows = lifted.dim();
    let gc = DMatrix::from_fn(rows, merged.len(), |i, j| merged[j][i]);
    let reduced = HybridZonotope::new(
        lifted.center().clone(),
        gc,
        lifted.gb().clone(),
        DMatrix::zeros(0, merged.len()),
        DMatrix::zeros(0, lifted.n_b()),
        DVector::zeros(0),
    )?;
    unlift(&reduced, z.dim())
}

fn check_pivot(z: &HybridZonotope, r: usize, c: usize) -> Result<f64> {
    if r >= z.n_c() || c >= z.n_g() {
        return Err(HzError::shape(
            "eliminate_constraint",
            format!("(row {r}, column {c}) outside {}x{} constraints", z.n_c(), z.n_g()),
        ));
    }
    let pivot = z.ac()[(r, c)];
    if pivot == 0.0 {
        return Err(HzError::ZeroPivot { row: r, col: c });
    }
    if pivot.abs() < PIVOT_TOL {
        return Err(HzError::Conditioning {
            row: r,
            col: c,
            value: pivot,
        });
    }
    Ok(pivot)
}

/// Solves constraint row `r` for continuous factor `c` and drops both.
pub fn eliminate_constraint(z: &HybridZonotope, r: usize, c: usize) -> Result<HybridZonotope> {
    let pivot = check_pivot(z, r, c)?;
    // Lambda_G = Gc[:, c] e_r^T / pivot and Lambda_A = Ac[:, c] e_r^T / pivot,
    // so every update is a rank-one correction by row r.
    let lg = z.gc().column(c) / pivot;
    let la = z.ac().column(c) / pivot;
    let ac_r = z.ac().row(r).into_owned();
    let ab_r = z.ab().row(r).into_owned();
    let b_r = z.b()[r];

    let center = z.center() + &lg * b_r;
    let mut gc = z.gc() - &lg * &ac_r;
    let mut gb = z.gb() - &lg * &ab_r;
    let mut ac = z.ac() - &la * &ac_r;
    let mut ab = z.ab() - &la * &ab_r;
    let mut b = z.b() - &la * b_r;
    // exact zeros where the algebra says so
    gc.column_mut(c).fill(0.0);
    ac.column_mut(c).fill(0.0);
    ac.row_mut(r).fill(0.0);
    ab.row_mut(r).fill(0.0);
    b[r] = 0.0;

    let keep_c: Vec<usize> = (0..z.n_g()).filter(|&j| j != c).collect();
    let keep_r: Vec<usize> = (0..z.n_c()).filter(|&i| i != r).collect();
    gc = gc.select_columns(&keep_c);
    gb = gb.clone();
    HybridZonotope::new(
        center,
        gc,
        gb,
        ac.select_rows(&keep_r).select_columns(&keep_c),
        ab.select_rows(&keep_r),
        b.select_rows(&keep_r),
    )
}

/// Largest `|xi_c[c]|` over the constraints with that factor's bound
/// removed and binaries relaxed; `None` when unbounded.
fn freed_range(z: &HybridZonotope, c: usize) -> Result<Option<f64>> {
    let (n_g, n_b) = (z.n_g(), z.n_b());
    let a = hcat(z.n_c(), &[z.ac(), z.ab()]);
    let mut p = MilpProblem::new(a, z.b().iter().copied().collect());
    p.lower = vec![-1.0; n_g + n_b];
    p.upper = vec![1.0; n_g + n_b];
    p.lower[c] = f64::NEG_INFINITY;
    p.upper[c] = f64::INFINITY;
    let mut reach: f64 = 0.0;
    for sign in [1.0, -1.0] {
        p.objective = vec![0.0; n_g + n_b];
        p.objective[c] = -sign;
        let sol = solve_lp(&p);
        match sol.status {
            SolverStatus::Optimal => reach = reach.max(sign * sol.assignment[c]),
            SolverStatus::Unbounded => return Ok(None),
            // empty relaxation: the set is empty and nothing can be lost
            SolverStatus::Infeasible => return Ok(Some(0.0)),
            status => {
                return Err(HzError::Solver {
                    status,
                    context: "elimination score",
                })
            }
        }
    }
    Ok(Some(reach))
}

fn lifted_norm(z: &HybridZonotope, c: usize) -> f64 {
    (z.gc().column(c).norm_squared() + z.ac().column(c).norm_squared()).sqrt()
}

/// Score of eliminating row `r` by factor `c`: zero when the factor's
/// range is already enclosed in `[-1, 1]`, otherwise the lifted generator
/// length times the excess.
pub fn hausdorff_error_estimate(z: &HybridZonotope, r: usize, c: usize) -> Result<f64> {
    check_pivot(z, r, c)?;
    let excess = match freed_range(z, c)? {
        Some(range) => (range - 1.0).max(0.0),
        None => return Ok(f64::INFINITY),
    };
    Ok(lifted_norm(z, c) * excess)
}

/// The `(row, column)` pair with the smallest score, ties broken toward
/// larger pivots and then lower indices; `None` when no usable pivot exists.
pub fn best_elimination(z: &HybridZonotope) -> Result<Option<(usize, usize, f64)>> {
    let columns: Vec<usize> = (0..z.n_g())
        .filter(|&c| (0..z.n_c()).any(|r| z.ac()[(r, c)].abs() >= PIVOT_TOL))
        .collect();
    let scores: Vec<(usize, f64)> = columns
        .par_iter()
        .map(|&c| {
            let excess = match freed_range(z, c)? {
                Some(range) => (range - 1.0).max(0.0),
                None => f64::INFINITY,
            };
            Ok((c, lifted_norm(z, c) * excess))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(usize, usize, f64, f64)> = None;
    for (c, score) in scores {
        for r in 0..z.n_c() {
            let pivot = z.ac()[(r, c)].abs();
            if pivot < PIVOT_TOL {
                continue;
            }
            let better = match best {
                None => true,
                Some((br, bc, bs, bp)) => {
                    score < bs || (score == bs && (pivot > bp || (pivot == bp && (r, c) < (br, bc))))
                }
            };
            if better {
                best = Some((r, c, score, pivot));
            }
        }
    }
    Ok(best.map(|(r, c, s, _)| (r, c, s)))
}

/// Relax, merge, then eliminate, as configured by `policy`.
pub fn reduce_complexity(z: &HybridZonotope, policy: &ReductionPolicy) -> Result<HybridZonotope> {
    if policy.n_b > z.n_b() {
        return Err(HzError::Contract(format!(
            "policy relaxes {} binaries but the set has {}",
            policy.n_b,
            z.n_b()
        )));
    }
    let cols: Vec<usize> = match policy.binary_order {
        BinaryOrder::First => (0..policy.n_b).collect(),
        BinaryOrder::Last => (z.n_b() - policy.n_b..z.n_b()).collect(),
    };
    let mut out = relax_columns(z, &cols)?;
    if policy.merge_parallel {
        out = merge_parallel_generators(&out, policy.parallel_tol)?;
    }
    if policy.eliminate {
        let rounds = out.n_c().min(policy.n_g);
        for _ in 0..rounds {
            let Some((r, c, _)) = best_elimination(&out)? else {
                break;
            };
            out = eliminate_constraint(&out, r, c)?;
        }
    }
    Ok(out)
}
