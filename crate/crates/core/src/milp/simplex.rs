//! Bounded-variable primal revised simplex.
//!
//! Phase 1 starts from an all-artificial basis (one artificial per row, signed
//! so that it starts nonnegative) and minimizes their sum; phase 2 pins the
//! artificials to zero and minimizes the real objective. The basis inverse is
//! kept explicitly; every `refactor_every` pivots the basic values are
//! recomputed and the inverse is rebuilt if it no longer reproduces the rows.
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots. Ratio tests are Harris two-pass.
//!
//! Warm starts reuse a parent basis: primal phase 2 when it is still primal
//! feasible, otherwise dual simplex, otherwise a cold solve.
#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;

use super::{MilpProblem, MilpSolution, SolverStatus};

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub max_pivots: usize,
    /// Phase-1 residual above which the problem is declared infeasible.
    pub feasibility_tol: f64,
    /// Reduced-cost threshold for optimality.
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub refactor_every: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            max_pivots: 100_000,
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            bland_after: 500,
            refactor_every: 100,
        }
    }
}

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NonBasic {
    Lower,
    Upper,
    /// Free variable parked at zero.
    Zero,
}

enum Phase {
    Optimal,
    Unbounded,
    Limit,
}

struct Simplex<'a> {
    m: usize,
    n: usize,
    cols: &'a [Vec<(usize, f64)>],
    art_sign: Vec<f64>,
    rhs: &'a [f64],
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    state: Vec<NonBasic>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    binv: Vec<f64>,
    pivots: usize,
    since_refactor: usize,
    opts: &'a LpOptions,
}

impl<'a> Simplex<'a> {
    fn column(&self, j: usize) -> ColumnIter<'_> {
        if j < self.n {
            ColumnIter::Structural(self.cols[j].iter())
        } else {
            ColumnIter::Artificial(Some((j - self.n, self.art_sign[j - self.n])))
        }
    }

    fn dot_column(&self, y: &[f64], j: usize) -> f64 {
        self.column(j).map(|(r, a)| y[r] * a).sum()
    }

    fn compute_y(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yj, bij) in y.iter_mut().zip(row) {
                    *yj += cb * bij;
                }
            }
        }
        y
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for (r, a) in self.column(j) {
            for i in 0..m {
                alpha[i] += self.binv[i * m + r] * a;
            }
        }
        alpha
    }

    /// Rebuild the basis inverse and basic values from scratch. Returns
    /// false (keeping the old inverse) when the basis matrix is singular.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return true;
        }
        let mut bmat = DMatrix::zeros(m, m);
        for (k, &j) in self.basis.iter().enumerate() {
            for (r, a) in self.column(j) {
                bmat[(r, k)] = a;
            }
        }
        let Some(inv) = bmat.try_inverse() else {
            return false;
        };
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = inv[(i, k)];
            }
        }
        self.recompute_basics();
        true
    }

    /// Largest row residual `|b - A x|` of the current point.
    fn row_residual(&self) -> f64 {
        let mut resid = self.rhs.to_vec();
        for j in 0..self.n + self.m {
            let xj = self.x[j];
            if xj != 0.0 {
                for (r, a) in self.column(j) {
                    resid[r] -= a * xj;
                }
            }
        }
        resid.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Recomputes the basic values and refactors only when the updated
    /// inverse no longer reproduces the rows.
    fn refresh(&mut self) -> bool {
        self.since_refactor = 0;
        self.recompute_basics();
        let scale = self.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        if self.row_residual() <= 1e-11 * scale {
            return true;
        }
        self.refactor()
    }

    /// Basic values from the current inverse and nonbasic values.
    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut resid = self.rhs.to_vec();
        for j in 0..self.n + self.m {
            if self.pos[j] == NONE && self.x[j] != 0.0 {
                let xj = self.x[j];
                for (r, a) in self.column(j) {
                    resid[r] -= a * xj;
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.basis[i]] = row.iter().zip(&resid).map(|(b, r)| b * r).sum();
        }
    }

    /// Makes `j` nonbasic at one of its bounds.
    fn leave(&mut self, j: usize, to_upper: bool) {
        if to_upper {
            self.state[j] = NonBasic::Upper;
            self.x[j] = self.up[j];
        } else {
            self.state[j] = NonBasic::Lower;
            self.x[j] = self.lo[j];
        }
        self.pos[j] = NONE;
    }

    /// Puts `q` in basis row `r`, updating the inverse with the entering
    /// column `alpha = B^-1 a_q`.
    fn replace_basic(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        self.basis[r] = q;
        self.pos[q] = r;
        let piv = alpha[r];
        let (head, tail) = self.binv.split_at_mut(r * m);
        let (prow, rest) = tail.split_at_mut(m);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let f = alpha[i];
            let row = if i < r {
                &mut head[i * m..(i + 1) * m]
            } else {
                let k = i - r - 1;
                &mut rest[k * m..(k + 1) * m]
            };
            for (v, p) in row.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
        }
        self.since_refactor += 1;
    }

    fn run_phase(&mut self, cost: &[f64]) -> Phase {
        let total = self.n + self.m;
        let m = self.m;
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots >= self.opts.max_pivots {
                return Phase::Limit;
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refresh();
            }
            let bland = degenerate_run > self.opts.bland_after;
            let y = self.compute_y(cost);

            let mut entering = NONE;
            let mut best = 0.0;
            let mut dir = 0.0;
            for j in 0..total {
                if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                    continue;
                }
                let d = cost[j] - self.dot_column(&y, j);
                let tol = self.opts.optimality_tol;
                let cand_dir = match self.state[j] {
                    NonBasic::Lower if d < -tol => 1.0,
                    NonBasic::Upper if d > tol => -1.0,
                    NonBasic::Zero if d.abs() > tol => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = j;
                    dir = cand_dir;
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    entering = j;
                    dir = cand_dir;
                }
            }
            if entering == NONE {
                return Phase::Optimal;
            }
            let q = entering;
            let alpha = self.ftran(q);

            // Harris two-pass ratio test.
            let delta = 1e-9;
            let flip = if self.lo[q].is_finite() && self.up[q].is_finite() {
                self.up[q] - self.lo[q]
            } else {
                f64::INFINITY
            };
            let mut theta_max = f64::INFINITY;
            for i in 0..m {
                if alpha[i].abs() <= self.opts.pivot_tol {
                    continue;
                }
                let rate = -dir * alpha[i];
                let bi = self.basis[i];
                let lim = if rate < 0.0 && self.lo[bi].is_finite() {
                    (self.x[bi] - self.lo[bi] + delta) / -rate
                } else if rate > 0.0 && self.up[bi].is_finite() {
                    (self.up[bi] - self.x[bi] + delta) / rate
                } else {
                    continue;
                };
                theta_max = theta_max.min(lim);
            }
            if theta_max == f64::INFINITY && flip == f64::INFINITY {
                return Phase::Unbounded;
            }

            let mut leave_row = NONE;
            let mut step;
            if flip <= theta_max {
                step = flip;
            } else {
                let mut best_alpha = 0.0;
                let mut best_ratio = f64::INFINITY;
                for i in 0..m {
                    if alpha[i].abs() <= self.opts.pivot_tol {
                        continue;
                    }
                    let rate = -dir * alpha[i];
                    let bi = self.basis[i];
                    let ratio = if rate < 0.0 && self.lo[bi].is_finite() {
                        (self.x[bi] - self.lo[bi]) / -rate
                    } else if rate > 0.0 && self.up[bi].is_finite() {
                        (self.up[bi] - self.x[bi]) / rate
                    } else {
                        continue;
                    };
                    if ratio > theta_max {
                        continue;
                    }
                    let better = if bland {
                        ratio < best_ratio - 1e-12
                            || (ratio <= best_ratio + 1e-12 && (leave_row == NONE || bi < self.basis[leave_row]))
                    } else {
                        alpha[i].abs() > best_alpha
                    };
                    if better {
                        best_alpha = alpha[i].abs();
                        best_ratio = ratio;
                        leave_row = i;
                    }
                }
                step = best_ratio.max(0.0);
                if leave_row == NONE {
                    // only reachable through numerical noise; treat as a flip-free stall
                    return Phase::Unbounded;
                }
            }
            if !step.is_finite() {
                step = 0.0;
            }

            self.x[q] += dir * step;
            for i in 0..m {
                if alpha[i] != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] += -dir * alpha[i] * step;
                }
            }
            if step <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivots += 1;

            if leave_row == NONE {
                // bound flip
                self.state[q] = if dir > 0.0 { NonBasic::Upper } else { NonBasic::Lower };
                self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                continue;
            }

            let r = leave_row;
            let leaving = self.basis[r];
            let rate = -dir * alpha[r];
            let to_upper = rate >= 0.0;
            self.leave(leaving, to_upper);
            self.replace_basic(r, q, &alpha);
        }
    }
}

enum ColumnIter<'a> {
    Structural(std::slice::Iter<'a, (usize, f64)>),
    Artificial(Option<(usize, f64)>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);
    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColumnIter::Structural(it) => it.next().copied(),
            ColumnIter::Artificial(e) => e.take(),
        }
    }
}

pub(crate) fn sparse_columns(a: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..a.ncols())
        .map(|j| {
            a.column(j)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect()
        })
        .collect()
}

/// Outcome of one LP solve over the given bounds.
pub(crate) struct LpOutcome {
    pub status: SolverStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    /// Final basis, for warm-starting a solve with tightened bounds.
    pub basis: Option<WarmBasis>,
}

impl LpOutcome {
    fn failed(status: SolverStatus) -> Self {
        LpOutcome {
            status,
            x: Vec::new(),
            duals: Vec::new(),
            basis: None,
        }
    }
}

/// An optimal basis: basic variables by row and the resting bound of every
/// nonbasic one, over structural and artificial columns.
#[derive(Debug, Clone)]
pub(crate) struct WarmBasis {
    art_sign: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<NonBasic>,
    /// Row-major basis inverse, when worth keeping.
    inverse: Option<Vec<f64>>,
}

impl WarmBasis {
    /// Drops the stored inverse; a warm start then refactors.
    pub(crate) fn forget_inverse(&mut self) {
        self.inverse = None;
    }
}

pub(crate) fn solve_with_columns(
    cols: &[Vec<(usize, f64)>],
    cost: &[f64],
    rhs: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &LpOptions,
) -> LpOutcome {
    let n = cols.len();
    let m = rhs.len();
    let total = n + m;
    let mut lo = Vec::with_capacity(total);
    let mut up = Vec::with_capacity(total);
    let mut x = vec![0.0; total];
    let mut state = vec![NonBasic::Zero; total];
    lo.extend_from_slice(lower);
    up.extend_from_slice(upper);
    for j in 0..n {
        if lo[j].is_finite() {
            x[j] = lo[j];
            state[j] = NonBasic::Lower;
        } else if up[j].is_finite() {
            x[j] = up[j];
            state[j] = NonBasic::Upper;
        }
    }
    let mut resid = rhs.to_vec();
    for j in 0..n {
        if x[j] != 0.0 {
            for &(r, a) in &cols[j] {
                resid[r] -= a * x[j];
            }
        }
    }
    let art_sign: Vec<f64> = resid.iter().map(|r| if *r < 0.0 { -1.0 } else { 1.0 }).collect();
    for i in 0..m {
        lo.push(0.0);
        up.push(f64::INFINITY);
        x[n + i] = resid[i].abs();
    }
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = art_sign[i];
    }
    let mut pos = vec![NONE; total];
    let basis: Vec<usize> = (n..total).collect();
    for (i, &j) in basis.iter().enumerate() {
        pos[j] = i;
    }
    let mut sx = Simplex {
        m,
        n,
        cols,
        art_sign,
        rhs,
        lo,
        up,
        x,
        state,
        basis,
        pos,
        binv,
        pivots: 0,
        since_refactor: 0,
        opts,
    };

    let mut phase1_cost = vec![0.0; total];
    for c in phase1_cost.iter_mut().skip(n) {
        *c = 1.0;
    }
    match sx.run_phase(&phase1_cost) {
        Phase::Optimal => {}
        // phase 1 is bounded below by zero, so both mean the cap was hit
        Phase::Limit | Phase::Unbounded => return LpOutcome::failed(SolverStatus::IterationLimit),
    }
    sx.refresh();
    let scale = rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    let infeas: f64 = sx.x[n..].iter().sum();
    if infeas > opts.feasibility_tol * scale {
        return LpOutcome::failed(SolverStatus::Infeasible);
    }
    for i in 0..m {
        let j = n + i;
        sx.up[j] = 0.0;
        if sx.pos[j] == NONE {
            sx.x[j] = 0.0;
            sx.state[j] = NonBasic::Lower;
        }
    }
    sx.refresh();
    sx.finish(cost, lower, upper)
}

impl Simplex<'_> {
    /// Phase 2 from a primal feasible basis, then read off the solution.
    fn finish(mut self, cost: &[f64], lower: &[f64], upper: &[f64]) -> LpOutcome {
        let n = self.n;
        let mut cost = cost.to_vec();
        cost.resize(n + self.m, 0.0);
        match self.run_phase(&cost) {
            Phase::Optimal => {}
            Phase::Limit => return LpOutcome::failed(SolverStatus::IterationLimit),
            Phase::Unbounded => return LpOutcome::failed(SolverStatus::Unbounded),
        }
        self.refresh();
        let duals = self.compute_y(&cost);
        let basis = WarmBasis {
            art_sign: self.art_sign.clone(),
            basis: self.basis.clone(),
            state: self.state.clone(),
            inverse: Some(self.binv.clone()),
        };
        let mut xs = self.x;
        xs.truncate(n);
        // snap tiny bound overshoots produced by round-off
        for j in 0..n {
            xs[j] = xs[j].clamp(lower[j], upper[j]);
        }
        LpOutcome {
            status: SolverStatus::Optimal,
            x: xs,
            duals,
            basis: Some(basis),
        }
    }

    fn basics_within_bounds(&self, tol: f64) -> bool {
        self.basis
            .iter()
            .all(|&j| self.x[j] >= self.lo[j] - tol && self.x[j] <= self.up[j] + tol)
    }

    /// Dual simplex from a dual feasible basis until the basic variables
    /// are within bounds. `None` means the warm start is unusable and the
    /// caller should solve from scratch.
    fn dual_phase(&mut self, cost: &[f64]) -> Option<Result<(), SolverStatus>> {
        let m = self.m;
        let total = self.n + m;
        let primal_tol = 1e-9;
        let dual_tol = 1e-7;
        let scale = self.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        let mut y = self.compute_y(cost);
        for j in 0..total {
            if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                continue;
            }
            let d = cost[j] - self.dot_column(&y, j);
            let ok = match self.state[j] {
                NonBasic::Lower => d >= -dual_tol,
                NonBasic::Upper => d <= dual_tol,
                NonBasic::Zero => d.abs() <= dual_tol,
            };
            if !ok {
                return None;
            }
        }
        loop {
            if self.pivots >= self.opts.max_pivots {
                return None;
            }
            if self.since_refactor >= self.opts.refactor_every {
                if !self.refresh() {
                    return None;
                }
                y = self.compute_y(cost);
            }
            let mut r = NONE;
            let mut worst = primal_tol;
            for i in 0..m {
                let bi = self.basis[i];
                let v = (self.lo[bi] - self.x[bi]).max(self.x[bi] - self.up[bi]);
                if v > worst {
                    worst = v;
                    r = i;
                }
            }
            if r == NONE {
                return Some(Ok(()));
            }
            let leaving = self.basis[r];
            let below = self.x[leaving] < self.lo[leaving];
            let rho = &self.binv[r * m..(r + 1) * m];

            // Harris two-pass dual ratio test.
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            let mut theta_max = f64::INFINITY;
            for j in 0..total {
                if self.pos[j] != NONE || self.lo[j] == self.up[j] {
                    continue;
                }
                let a: f64 = self.column(j).map(|(row, v)| rho[row] * v).sum();
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                // x_leaving moves by -a per unit increase of x_j
                let increase_helps = if below { a < 0.0 } else { a > 0.0 };
                let eligible = match self.state[j] {
                    NonBasic::Lower => increase_helps,
                    NonBasic::Upper => !increase_helps,
                    NonBasic::Zero => true,
                };
                if !eligible {
                    continue;
                }
                let d = cost[j] - self.dot_column(&y, j);
                theta_max = theta_max.min((d.abs() + dual_tol) / a.abs());
                cands.push((j, a, d.abs() / a.abs()));
            }
            if cands.is_empty() {
                return if worst > self.opts.feasibility_tol * scale {
                    Some(Err(SolverStatus::Infeasible))
                } else {
                    None
                };
            }
            let mut q = NONE;
            let mut best_a = 0.0;
            for &(j, a, ratio) in &cands {
                if ratio <= theta_max && a.abs() > best_a {
                    best_a = a.abs();
                    q = j;
                }
            }
            let alpha = self.ftran(q);
            if alpha[r].abs() <= self.opts.pivot_tol {
                return None;
            }
            let target = if below { self.lo[leaving] } else { self.up[leaving] };
            let t = (self.x[leaving] - target) / alpha[r];
            self.x[q] += t;
            for i in 0..m {
                if alpha[i] != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] -= alpha[i] * t;
                }
            }
            self.leave(leaving, !below);
            self.replace_basic(r, q, &alpha);
            self.pivots += 1;
            y = self.compute_y(cost);
        }
    }
}

/// Solves with tightened bounds starting from a previous optimal basis of
/// the same rows and costs, falling back to a cold solve when the basis is
/// unusable.
pub(crate) fn solve_warm(
    cols: &[Vec<(usize, f64)>],
    cost: &[f64],
    rhs: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &LpOptions,
    warm: &WarmBasis,
) -> LpOutcome {
    let n = cols.len();
    let m = rhs.len();
    let total = n + m;
    if warm.state.len() != total || warm.basis.len() != m {
        return solve_with_columns(cols, cost, rhs, lower, upper, opts);
    }
    let mut lo = lower.to_vec();
    let mut up = upper.to_vec();
    lo.extend(std::iter::repeat_n(0.0, m));
    up.extend(std::iter::repeat_n(0.0, m));
    let mut x = vec![0.0; total];
    let mut state = warm.state.clone();
    let mut pos = vec![NONE; total];
    for (i, &j) in warm.basis.iter().enumerate() {
        pos[j] = i;
    }
    for j in 0..total {
        if pos[j] != NONE {
            continue;
        }
        state[j] = match state[j] {
            NonBasic::Upper if up[j].is_finite() => NonBasic::Upper,
            _ if lo[j].is_finite() => NonBasic::Lower,
            _ if up[j].is_finite() => NonBasic::Upper,
            _ => NonBasic::Zero,
        };
        x[j] = match state[j] {
            NonBasic::Lower => lo[j],
            NonBasic::Upper => up[j],
            NonBasic::Zero => 0.0,
        };
    }
    let mut sx = Simplex {
        m,
        n,
        cols,
        art_sign: warm.art_sign.clone(),
        rhs,
        lo,
        up,
        x,
        state,
        basis: warm.basis.clone(),
        pos,
        binv: vec![0.0; m * m],
        pivots: 0,
        since_refactor: 0,
        opts,
    };
    match &warm.inverse {
        Some(inv) if inv.len() == m * m => {
            sx.binv.copy_from_slice(inv);
            sx.recompute_basics();
        }
        _ => {
            if !sx.refactor() {
                return solve_with_columns(cols, cost, rhs, lower, upper, opts);
            }
        }
    }
    // A basis that is still primal feasible serves any cost: primal
    // simplex continues from it. Otherwise the dual simplex repairs it.
    if sx.basics_within_bounds(1e-9) {
        return sx.finish(cost, lower, upper);
    }
    let mut full_cost = cost.to_vec();
    full_cost.resize(total, 0.0);
    match sx.dual_phase(&full_cost) {
        Some(Ok(())) => sx.finish(cost, lower, upper),
        Some(Err(status)) => LpOutcome::failed(status),
        None => solve_with_columns(cols, cost, rhs, lower, upper, opts),
    }
}

/// LP relaxation of `p` with the given bounds (binary mask ignored).
pub(crate) fn solve_relaxation(p: &MilpProblem, lower: &[f64], upper: &[f64], opts: &LpOptions) -> MilpSolution {
    if p.validate().is_err() {
        return MilpSolution::without_solution(SolverStatus::Infeasible, 1);
    }
    let cols = sparse_columns(&p.eq_matrix);
    let out = solve_with_columns(&cols, &p.objective, &p.eq_rhs, lower, upper, opts);
    match out.status {
        SolverStatus::Optimal => MilpSolution {
            status: SolverStatus::Optimal,
            value: p.evaluate(&out.x),
            assignment: out.x,
            gap: 0.0,
            nodes: 1,
            duals: Some(out.duals),
        },
        s => MilpSolution::without_solution(s, 1),
    }
}
