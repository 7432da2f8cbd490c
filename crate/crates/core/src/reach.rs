//! Exact closed-loop images `{A x + B net(x) : x in Z}` and their horizon
//! recursion.
//!
//! The network is propagated over the graph set `{(x, x) : x in Z}` with the
//! second copy carried through untouched. The carried copy ends up written
//! in the output's factors as `c' + G1 xi_c + G2 xi_b`, which is exactly the
//! alignment needed to add `A x` to `B net(x)` factor by factor. When every
//! split produced two nonempty branches the alignment also follows the
//! closed-form doubling pattern of [`compute_g1_g2`], and the two are
//! cross-checked.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HzError, Result};
use crate::hz::{Assignment, Complexity, HybridZonotope, Point};
use crate::linalg::{hcat, vcat};
use crate::nn::{propagate_with_carry, BoundsMode, NeuralNetwork, PropagationReport};
use crate::reduce::{reduce_complexity, ReductionPolicy};

/// `x(t+1) = A x(t) + B u(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() {
            return Err(HzError::shape(
                "LinearSystem::new",
                format!("A is {:?}, B is {:?}", a.shape(), b.shape()),
            ));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(HzError::NonFinite("system matrices"));
        }
        Ok(LinearSystem { a, b })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn check(&self, z: &HybridZonotope, net: &NeuralNetwork) -> Result<()> {
        let n = self.state_dim();
        if z.dim() != n || net.input_dim() != n || net.output_dim() != self.input_dim() {
            return Err(HzError::shape(
                "closed_loop_step",
                format!(
                    "state {n}, input {}, set {}, network {} -> {}",
                    self.input_dim(),
                    z.dim(),
                    net.input_dim(),
                    net.output_dim()
                ),
            ));
        }
        Ok(())
    }
}

/// Closed-form generator alignment for `k = log2((n_b_pi + 1) / (n_b + 1))`
/// splits with two nonempty branches each.
///
/// Each split appends one halfspace column, duplicates both matrices for
/// the two union operands, and pads with the union's slack columns and
/// switching binary.
pub fn compute_g1_g2(gc: &DMatrix<f64>, gb: &DMatrix<f64>, n_b_pi: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = gc.nrows();
    let ratio = (n_b_pi + 1) as f64 / (gb.ncols() + 1) as f64;
    let k = ratio.log2();
    if !(n_b_pi + 1).is_multiple_of(gb.ncols() + 1) || !((n_b_pi + 1) / (gb.ncols() + 1)).is_power_of_two() {
        return Err(HzError::Structural(format!(
            "binary counts {} -> {n_b_pi} are not a power-of-two growth (log ratio {k})",
            gb.ncols()
        )));
    }
    let mut k = k.round() as usize;
    let mut g1 = gc.clone();
    let mut g2 = gb.clone();
    while k > 0 {
        g1 = hcat(n, &[&g1, &DMatrix::zeros(n, 1)]);
        g1 = hcat(n, &[&g1, &g1]);
        g2 = hcat(n, &[&g2, &g2]);
        let m = 2 * (g1.ncols() + g2.ncols());
        g1 = hcat(n, &[&g1, &DMatrix::zeros(n, m)]);
        g2 = hcat(n, &[&g2, &DMatrix::zeros(n, 1)]);
        k -= 1;
    }
    Ok((g1, g2))
}

/// How the carried state is written in the closed-loop image's factors:
/// the preimage of factor assignment `a` is `center + g1 a.xi_c + g2 a.xi_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub center: DVector<f64>,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
}

impl Alignment {
    pub fn preimage(&self, a: &Assignment) -> Point {
        &self.center + &self.g1 * &a.xi_c + &self.g2 * &a.xi_b
    }

    /// Same alignment restricted to kept factor columns.
    pub fn select(&self, keep_c: &[usize], keep_b: &[usize]) -> Alignment {
        Alignment {
            center: self.center.clone(),
            g1: self.g1.select_columns(keep_c),
            g2: self.g2.select_columns(keep_b),
        }
    }
}

/// Closed-loop image with the bookkeeping needed to decode preimages.
#[derive(Debug, Clone)]
pub struct ClosedLoopImage {
    pub set: HybridZonotope,
    /// `net(Z)` alone.
    pub network_output: HybridZonotope,
    pub alignment: Alignment,
    pub report: PropagationReport,
    /// Whether [`compute_g1_g2`] reproduced the carried alignment; `None`
    /// when a split kept only one branch and the closed form does not apply.
    pub closed_form: Option<bool>,
}

/// Exact `{A x + B net(x) : x in Z}` with its alignment.
pub fn closed_loop_image(
    z: &HybridZonotope,
    sys: &LinearSystem,
    net: &NeuralNetwork,
    mode: BoundsMode,
) -> Result<ClosedLoopImage> {
    sys.check(z, net)?;
    let n = sys.state_dim();
    let m = sys.input_dim();
    let identity = DMatrix::<f64>::identity(n, n);
    let graph = z.linear_map(&vcat(n, &[&identity, &identity]))?;
    let (out, report) = propagate_with_carry(&graph, net, n, mode)?;
    let network_output = out.project(0, m)?;
    let carried = out.project(m, n)?;

    let carried_alignment = Alignment {
        center: carried.center().clone(),
        g1: carried.gc().clone(),
        g2: carried.gb().clone(),
    };
    // The closed form only describes propagation where every split kept
    // both branches; when it applies it must reproduce the carried copy.
    let closed_form = if report.single_branches() == 0 {
        let (g1, g2) = compute_g1_g2(z.gc(), z.gb(), network_output.n_b())?;
        let scale = (network_output.n_b() + 1) as f64 / (z.n_b() + 1) as f64 - 1.0;
        let center = z.center() + z.gb() * DVector::from_element(z.n_b(), scale);
        Some(alignment_matches(
            &Alignment { center, g1, g2 },
            &carried_alignment,
            1e-9,
        ))
    } else {
        None
    };
    let alignment = carried_alignment;

    let (c_pi, gc_pi, gb_pi, ac, ab, b) = network_output.clone().into_parts();
    let set = HybridZonotope::new(
        &sys.a * &alignment.center + &sys.b * c_pi,
        &sys.a * &alignment.g1 + &sys.b * gc_pi,
        &sys.a * &alignment.g2 + &sys.b * gb_pi,
        ac,
        ab,
        b,
    )?;
    Ok(ClosedLoopImage {
        set,
        network_output,
        alignment,
        report,
        closed_form,
    })
}

/// Whether two alignments agree entrywise within `tol` (shapes must match).
pub fn alignment_matches(x: &Alignment, y: &Alignment, tol: f64) -> bool {
    x.g1.shape() == y.g1.shape()
        && x.g2.shape() == y.g2.shape()
        && (&x.center - &y.center).amax() <= tol
        && (x.g1.is_empty() || (&x.g1 - &y.g1).amax() <= tol)
        && (x.g2.is_empty() || (&x.g2 - &y.g2).amax() <= tol)
}

/// `A Z ⊕ B net(Z)`: the image computed without tying each state to its
/// own control. A superset of the exact image.
pub fn minkowski_baseline(
    z: &HybridZonotope,
    sys: &LinearSystem,
    net: &NeuralNetwork,
    mode: BoundsMode,
) -> Result<HybridZonotope> {
    sys.check(z, net)?;
    let control = crate::nn::network_reach(z, net, mode)?;
    z.linear_map(&sys.a)?.minkowski_sum(&control.linear_map(&sys.b)?)
}

pub fn closed_loop_step(
    z: &HybridZonotope,
    sys: &LinearSystem,
    net: &NeuralNetwork,
    mode: BoundsMode,
) -> Result<HybridZonotope> {
    Ok(closed_loop_image(z, sys, net, mode)?.set)
}

/// A state of the previous set that the image assignment `a` came from.
///
/// Fails when `a` is not a feasible assignment of `image` (within `tol`).
pub fn decode_preimage(image: &HybridZonotope, alignment: &Alignment, a: &Assignment, tol: f64) -> Result<Point> {
    let residual = image.assignment_residual(a);
    if residual > tol {
        return Err(HzError::Contract(format!(
            "assignment violates the set by {residual:e}"
        )));
    }
    if alignment.g1.ncols() != a.xi_c.len() || alignment.g2.ncols() != a.xi_b.len() {
        return Err(HzError::Contract("alignment does not match the set's factors".into()));
    }
    Ok(alignment.preimage(a))
}

/// Per-step bookkeeping of a horizon run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: usize,
    pub complexity: Complexity,
    /// Complexity before reduction, when a reduction ran.
    pub unreduced: Option<Complexity>,
    pub splits: usize,
    pub single_branches: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ReachResult {
    /// `R_0 = X_0, ..., R_T`.
    pub sets: Vec<HybridZonotope>,
    /// Alignment of `R_t` onto `R_{t-1}` for `t >= 1`; `None` after reduction.
    pub alignments: Vec<Option<Alignment>>,
    pub log: Vec<StepLog>,
    pub reports: Vec<PropagationReport>,
}

impl ReachResult {
    pub fn horizon(&self) -> usize {
        self.sets.len() - 1
    }

    /// Follows an assignment of `R_t` back to a point of `X_0`, returning the
    /// states `x_0, ..., x_t` of the trajectory it encodes.
    pub fn decode_chain(&self, t: usize, a: &Assignment, tol: f64) -> Result<Vec<Point>> {
        let mut states = vec![self.sets[t].point_of(a)];
        let mut current = a.clone();
        for s in (1..=t).rev() {
            let alignment = self.alignments[s]
                .as_ref()
                .ok_or_else(|| HzError::Contract(format!("step {s} was reduced; preimages are not tracked")))?;
            let x = decode_preimage(&self.sets[s], alignment, &current, tol)?;
            states.push(x.clone());
            if s > 1 {
                current = self.sets[s - 1]
                    .membership_assignment(&x, tol)?
                    .ok_or_else(|| HzError::Contract(format!("decoded state is not in R_{}", s - 1)))?;
            }
        }
        states.reverse();
        Ok(states)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReachOptions {
    pub mode: BoundsMode,
    /// Reduction applied after every step.
    pub reduction: Option<ReductionPolicy>,
    /// Largest binary count allowed for a step's set.
    pub binary_budget: Option<usize>,
}

/// `R_0 = X_0`, `R_t = f_cl(R_{t-1})` for `t = 1..=horizon`.
pub fn reach_horizon(
    x0: &HybridZonotope,
    sys: &LinearSystem,
    net: &NeuralNetwork,
    horizon: usize,
    options: &ReachOptions,
) -> Result<ReachResult> {
    if horizon == 0 {
        return Err(HzError::Contract("horizon must be at least 1".into()));
    }
    let mut result = ReachResult {
        sets: vec![x0.clone()],
        alignments: vec![None],
        log: vec![StepLog {
            t: 0,
            complexity: x0.complexity(),
            unreduced: None,
            splits: 0,
            single_branches: 0,
            seconds: 0.0,
        }],
        reports: vec![PropagationReport::default()],
    };
    for t in 1..=horizon {
        let started = Instant::now();
        let prev = result.sets.last().unwrap();
        let image = closed_loop_image(prev, sys, net, options.mode)?;
        let (pruned, keep_c, keep_b) = image.set.prune_zero_columns_indexed();
        let mut alignment = Some(image.alignment.select(&keep_c, &keep_b));
        let mut set = pruned;
        let mut unreduced = None;
        if let Some(policy) = &options.reduction {
            if !policy.is_noop() {
                unreduced = Some(set.complexity());
                set = reduce_complexity(&set, &policy.clamped(&set))?;
                alignment = None;
            }
        }
        if let Some(budget) = options.binary_budget {
            if set.n_b() > budget {
                return Err(HzError::Capacity {
                    needed: 1u128 << set.n_b().min(127),
                    cap: 1u128 << budget.min(127),
                });
            }
        }
        result.log.push(StepLog {
            t,
            complexity: set.complexity(),
            unreduced,
            splits: image.report.splits(),
            single_branches: image.report.single_branches(),
            seconds: started.elapsed().as_secs_f64(),
        });
        result.sets.push(set);
        result.alignments.push(alignment);
        result.reports.push(image.report);
    }
    Ok(result)
}
