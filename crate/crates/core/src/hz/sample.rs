//! Seeded sampling of set members.
//!
//! Feasible binary patterns are found by depth-first search with LP
//! relaxation pruning. Inside one pattern the continuous factors live in the
//! polytope `{xi : A xi = b', |xi| <= 1}`; draws come from uniform box
//! samples projected onto the affine hull (kept when they land inside the
//! box), and a pattern that rejects 100 draws in a row switches to
//! hit-and-run along its null space. A small share of the draws are LP
//! vertices in random directions so that sampled hulls reach the extremes.

use std::rc::Rc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Assignment, HybridZonotope, Point};
use crate::error::{HzError, Result};
use crate::milp::{encode_feasibility, BoundedLp, LpBasis, MilpProblem, SolverStatus};

/// Binary patterns enumerated before switching to randomized descent.
const PATTERN_CAP: usize = 4096;
const REJECTIONS_BEFORE_WALK: usize = 100;
const VERTEX_SHARE: f64 = 0.02;
const REPROJECT_EVERY: usize = 64;

impl HybridZonotope {
    /// `count` members of the set, deterministic in `seed`.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        Ok(self
            .sample_assignments(count, seed)?
            .iter()
            .map(|a| self.point_of(a))
            .collect())
    }

    /// `count` feasible factor assignments, deterministic in `seed`.
    pub fn sample_assignments(&self, count: usize, seed: u64) -> Result<Vec<Assignment>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (relaxed, _) = encode_feasibility(self, 0.0);
        let patterns = PatternSource::new(self, &relaxed)?;
        let split = Rc::new(FactorSplit::new(self.ac()));
        let mut samplers: Vec<Option<PatternSampler>> = Vec::new();
        let mut out = Vec::with_capacity(count);
        let mut draws = 0usize;
        while out.len() < count {
            let (slot, xi_b) = match &patterns {
                PatternSource::Listed(list) => {
                    let k = if draws < list.len() {
                        draws
                    } else {
                        rng.random_range(0..list.len())
                    };
                    (Some(k), list[k].clone())
                }
                PatternSource::Random => (None, random_pattern(self, &relaxed, &mut rng)?),
            };
            draws += 1;
            let sampler = match slot {
                Some(k) => {
                    if samplers.len() <= k {
                        samplers.resize_with(k + 1, || None);
                    }
                    if samplers[k].is_none() {
                        samplers[k] = Some(PatternSampler::new(self, xi_b.clone(), &split));
                    }
                    samplers[k].as_mut().unwrap()
                }
                None => {
                    samplers.clear();
                    samplers.push(Some(PatternSampler::new(self, xi_b.clone(), &split)));
                    samplers[0].as_mut().unwrap()
                }
            };
            if let Some(xi_c) = sampler.draw(self, &mut rng) {
                out.push(Assignment { xi_c, xi_b });
            } else if draws > 100 * (count + 1) {
                return Err(HzError::Degenerate("sampling made no progress".into()));
            }
        }
        Ok(out)
    }
}

enum PatternSource {
    Listed(Vec<DVector<f64>>),
    /// Too many patterns to list; draw one by randomized descent per sample.
    Random,
}

impl PatternSource {
    fn new(z: &HybridZonotope, relaxed: &MilpProblem) -> Result<Self> {
        let n_b = z.n_b();
        let search = PatternSearch::new(z, relaxed);
        let mut found = Vec::new();
        let mut stack: Vec<(Vec<f64>, Option<Rc<LpBasis>>)> = vec![(Vec::new(), None)];
        while let Some((prefix, warm)) = stack.pop() {
            let Some(basis) = search.feasible(&prefix, warm.as_deref())? else {
                continue;
            };
            if prefix.len() == n_b {
                found.push(pattern(&prefix));
                if found.len() > PATTERN_CAP {
                    return Ok(PatternSource::Random);
                }
                continue;
            }
            for bit in [1.0, 0.0] {
                let mut next = prefix.clone();
                next.push(bit);
                stack.push((next, basis.clone()));
            }
        }
        if found.is_empty() {
            return Err(HzError::Empty("sample_points"));
        }
        Ok(PatternSource::Listed(found))
    }
}

fn pattern(bits: &[f64]) -> DVector<f64> {
    DVector::from_iterator(bits.len(), bits.iter().map(|b| 2.0 * b - 1.0))
}

/// LP relaxation feasibility with a prefix of the binaries fixed, each
/// check warm-started from its parent's basis.
struct PatternSearch<'a> {
    lp: BoundedLp,
    relaxed: &'a MilpProblem,
    n_g: usize,
}

impl<'a> PatternSearch<'a> {
    fn new(z: &HybridZonotope, relaxed: &'a MilpProblem) -> Self {
        PatternSearch {
            lp: BoundedLp::new(&relaxed.eq_matrix, &relaxed.eq_rhs),
            relaxed,
            n_g: z.n_g(),
        }
    }

    /// `None` when infeasible; otherwise the basis to warm-start children.
    fn feasible(&self, fixed: &[f64], warm: Option<&LpBasis>) -> Result<Option<Option<Rc<LpBasis>>>> {
        if self.relaxed.num_rows() == 0 {
            return Ok(Some(None));
        }
        let mut lower = self.relaxed.lower.clone();
        let mut upper = self.relaxed.upper.clone();
        for (k, &v) in fixed.iter().enumerate() {
            lower[self.n_g + k] = v;
            upper[self.n_g + k] = v;
        }
        match self.lp.solve(&self.relaxed.objective, &lower, &upper, warm) {
            (SolverStatus::Optimal, _, basis) => Ok(Some(basis.map(Rc::new))),
            (SolverStatus::Infeasible, _, _) => Ok(None),
            (status, _, _) => Err(HzError::Solver {
                status,
                context: "sampling pattern search",
            }),
        }
    }
}

fn random_pattern(z: &HybridZonotope, relaxed: &MilpProblem, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
    let n_b = z.n_b();
    let search = PatternSearch::new(z, relaxed);
    let mut stack: Vec<(Vec<f64>, Option<Rc<LpBasis>>)> = vec![(Vec::new(), None)];
    while let Some((prefix, warm)) = stack.pop() {
        let Some(basis) = search.feasible(&prefix, warm.as_deref())? else {
            continue;
        };
        if prefix.len() == n_b {
            return Ok(pattern(&prefix));
        }
        let first: f64 = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        for bit in [1.0 - first, first] {
            let mut next = prefix.clone();
            next.push(bit);
            stack.push((next, basis.clone()));
        }
    }
    Err(HzError::Empty("sample_points"))
}

/// Eigen-split of the factor space by the continuous constraint matrix,
/// shared by every binary pattern (only the right-hand side differs).
struct FactorSplit {
    /// Orthonormal basis of the null space of `A_c`.
    null: DMatrix<f64>,
    /// Eigenvectors of `A_c^T A_c` with nonzero eigenvalue.
    range: DMatrix<f64>,
    inverse_eigenvalues: DVector<f64>,
}

impl FactorSplit {
    fn new(a: &DMatrix<f64>) -> Self {
        let n_g = a.ncols();
        if a.nrows() == 0 {
            return FactorSplit {
                null: DMatrix::identity(n_g, n_g),
                range: DMatrix::zeros(n_g, 0),
                inverse_eigenvalues: DVector::zeros(0),
            };
        }
        let eig = SymmetricEigen::new(a.tr_mul(a));
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let (small, large): (Vec<usize>, Vec<usize>) =
            (0..n_g).partition(|&i| eig.eigenvalues[i].abs() <= 1e-10 * scale);
        FactorSplit {
            null: eig.eigenvectors.select_columns(&small),
            range: eig.eigenvectors.select_columns(&large),
            inverse_eigenvalues: DVector::from_iterator(large.len(), large.iter().map(|&i| 1.0 / eig.eigenvalues[i])),
        }
    }

    /// Least-norm solution of `a xi = rhs`.
    fn least_norm(&self, a: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        if self.range.ncols() == 0 {
            return DVector::zeros(a.ncols());
        }
        let projected = self
            .range
            .tr_mul(&a.tr_mul(rhs))
            .component_mul(&self.inverse_eigenvalues);
        &self.range * projected
    }
}

/// Sampler for the continuous factors of one binary pattern.
struct PatternSampler {
    /// Minimum-norm solution of the pattern's equalities.
    anchor: DVector<f64>,
    /// Orthonormal basis of the constraint null space (`n_g x k`).
    null: DMatrix<f64>,
    lp: BoundedLp,
    /// Feasible basis of the pattern's polytope, reused by vertex solves.
    basis: Option<LpBasis>,
    walk: Option<DVector<f64>>,
    steps: usize,
    feasible: bool,
}

impl PatternSampler {
    fn new(z: &HybridZonotope, xi_b: DVector<f64>, split: &Rc<FactorSplit>) -> Self {
        let n_g = z.n_g();
        let a = z.ac();
        let rhs = z.b() - z.ab() * &xi_b;
        let anchor = split.least_norm(a, &rhs);
        let null = split.null.clone();
        let lp = BoundedLp::new(a, rhs.as_slice());
        let mut s = PatternSampler {
            anchor,
            null,
            lp,
            basis: None,
            walk: None,
            steps: 0,
            feasible: true,
        };
        s.feasible = s.vertex(&DVector::zeros(n_g)).is_some();
        s
    }

    /// LP vertex minimizing `w^T xi`.
    fn vertex(&mut self, w: &DVector<f64>) -> Option<DVector<f64>> {
        let n_g = w.len();
        let (status, x, basis) = self
            .lp
            .solve(w.as_slice(), &vec![-1.0; n_g], &vec![1.0; n_g], self.basis.as_ref());
        if basis.is_some() {
            self.basis = basis;
        }
        (status == SolverStatus::Optimal).then(|| DVector::from_iterator(n_g, x.iter().map(|v| v.clamp(-1.0, 1.0))))
    }

    fn project(&self, xi: &DVector<f64>) -> DVector<f64> {
        let d = xi - &self.anchor;
        &self.anchor + &self.null * (self.null.tr_mul(&d))
    }

    fn draw(&mut self, z: &HybridZonotope, rng: &mut ChaCha8Rng) -> Option<DVector<f64>> {
        if !self.feasible {
            return None;
        }
        let n_g = z.n_g();
        if n_g == 0 {
            return Some(DVector::zeros(0));
        }
        if rng.random_bool(VERTEX_SHARE) {
            let dir = DVector::from_fn(z.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let w = -z.gc().tr_mul(&dir);
            if let Some(v) = self.vertex(&w) {
                return Some(v);
            }
        }
        if self.walk.is_none() {
            for _ in 0..REJECTIONS_BEFORE_WALK {
                let raw = DVector::from_fn(n_g, |_, _| rng.random_range(-1.0..=1.0));
                let xi = self.project(&raw);
                if xi.iter().all(|v| v.abs() <= 1.0) {
                    return Some(xi);
                }
            }
            self.walk = Some(self.interior_point(z, rng)?);
        }
        Some(self.walk_step(rng))
    }

    /// Average of LP vertices in random directions: a relative-interior start.
    fn interior_point(&mut self, z: &HybridZonotope, rng: &mut ChaCha8Rng) -> Option<DVector<f64>> {
        let n_g = z.n_g();
        let tries = (2 * self.null.ncols() + 2).min(24);
        let mut acc = DVector::zeros(n_g);
        let mut k = 0;
        for _ in 0..tries {
            let w = DVector::from_fn(n_g, |_, _| rng.sample::<f64, _>(StandardNormal));
            if let Some(v) = self.vertex(&w) {
                acc += v;
                k += 1;
            }
        }
        (k > 0).then(|| acc / k as f64)
    }

    fn walk_step(&mut self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let mut xi = self.walk.take().unwrap();
        let k = self.null.ncols();
        for _ in 0..3 {
            if k == 0 {
                break;
            }
            let g = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let u = &self.null * g;
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..xi.len() {
                if u[i].abs() > 1e-14 {
                    let a = (-1.0 - xi[i]) / u[i];
                    let b = (1.0 - xi[i]) / u[i];
                    lo = lo.max(a.min(b));
                    hi = hi.min(a.max(b));
                }
            }
            if lo.is_finite() && hi.is_finite() && hi > lo {
                let t = rng.random_range(lo..=hi);
                xi += u * t;
                xi.apply(|v| *v = v.clamp(-1.0, 1.0));
            }
            self.steps += 1;
            if self.steps.is_multiple_of(REPROJECT_EVERY) {
                xi = self.project(&xi);
                xi.apply(|v| *v = v.clamp(-1.0, 1.0));
            }
        }
        self.walk = Some(xi.clone());
        xi
    }
}
