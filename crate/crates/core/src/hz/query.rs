//! Questions answered by solving MILPs over a set: emptiness, membership,
//! support and bounds, and expansion into constrained zonotopes.

use nalgebra::DVector;

use super::{Assignment, ConstrainedZonotope, HybridZonotope, Interval, Point};
use crate::error::{HzError, Result};
use crate::milp::{
    encode_emptiness, encode_feasibility, encode_membership, encode_support, solve_lp, solve_milp, Sense, SolverStatus,
};

/// Slack on `|xi_c| <= 1` when deciding emptiness; optima inside
/// `[1 - EMPTINESS_BAND, 1 + EMPTINESS_BAND]` count as nonempty.
pub const EMPTINESS_BAND: f64 = 1e-9;

impl HybridZonotope {
    /// Whether the set has no points.
    ///
    /// Decided through the feasibility form of the norm-minimization
    /// program, with the factor box widened by [`EMPTINESS_BAND`].
    pub fn is_empty(&self) -> Result<bool> {
        if self.n_c() == 0 {
            return Ok(false);
        }
        let (p, _) = encode_feasibility(self, EMPTINESS_BAND);
        match solve_milp(&p).status {
            SolverStatus::Optimal => Ok(false),
            SolverStatus::Infeasible => Ok(true),
            status => Err(HzError::Solver {
                status,
                context: "emptiness",
            }),
        }
    }

    /// Optimum of `min |xi_c|_inf` over the constraints, or `None` when the
    /// constraints cannot be met by any binary pattern.
    pub fn emptiness_optimum(&self) -> Result<Option<(f64, Assignment)>> {
        let (p, layout) = encode_emptiness(self);
        let sol = solve_milp(&p);
        match sol.status {
            SolverStatus::Optimal => Ok(Some((sol.value, layout.factors.assignment(&sol.assignment)))),
            SolverStatus::Infeasible => Ok(None),
            status => Err(HzError::Solver {
                status,
                context: "emptiness optimum",
            }),
        }
    }

    /// Factors reproducing `x` within `tol`, if any.
    pub fn membership_assignment(&self, x: &Point, tol: f64) -> Result<Option<Assignment>> {
        if x.len() != self.dim() {
            return Err(HzError::shape(
                "contains_point",
                format!("point has {} coordinates, set dimension is {}", x.len(), self.dim()),
            ));
        }
        let (p, layout) = encode_membership(self, x, tol);
        let sol = solve_milp(&p);
        match sol.status {
            SolverStatus::Optimal => Ok(Some(layout.assignment(&sol.assignment))),
            SolverStatus::Infeasible => Ok(None),
            status => Err(HzError::Solver {
                status,
                context: "membership",
            }),
        }
    }

    pub fn contains_point(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.membership_assignment(x, tol)?.is_some())
    }

    /// Optimal value of `d^T x` over the set and a point attaining it.
    pub fn support_point(&self, d: &DVector<f64>, sense: Sense) -> Result<(f64, Point, Assignment)> {
        if d.len() != self.dim() {
            return Err(HzError::shape("bounds", "direction length differs from set dimension"));
        }
        if !d.iter().all(|v| v.is_finite()) {
            return Err(HzError::NonFinite("direction"));
        }
        let (p, layout) = encode_support(self, d, sense);
        let sol = solve_milp(&p);
        match sol.status {
            SolverStatus::Optimal => {
                let a = layout.assignment(&sol.assignment);
                let x = self.point_of(&a);
                Ok((d.dot(&x), x, a))
            }
            SolverStatus::Infeasible => Err(HzError::Empty("bounds")),
            status => Err(HzError::Solver {
                status,
                context: "support function",
            }),
        }
    }

    /// `[min d^T x, max d^T x]` over the set.
    pub fn bounds(&self, d: &DVector<f64>) -> Result<Interval> {
        let (lo, _, _) = self.support_point(d, Sense::Minimize)?;
        let (hi, _, _) = self.support_point(d, Sense::Maximize)?;
        Ok(Interval::new(lo, hi.max(lo)))
    }

    /// Per-coordinate bounds.
    pub fn interval_hull(&self) -> Result<Vec<Interval>> {
        (0..self.dim())
            .map(|i| {
                let mut e = DVector::zeros(self.dim());
                e[i] = 1.0;
                self.bounds(&e)
            })
            .collect()
    }

    /// Cheap enclosure `c_i ± (sum |Gc_i| + sum |Gb_i|)` ignoring constraints.
    pub fn generator_bounds(&self) -> Vec<Interval> {
        (0..self.dim())
            .map(|i| {
                let r = self.gc().row(i).abs().sum() + self.gb().row(i).abs().sum();
                Interval::new(self.center()[i] - r, self.center()[i] + r)
            })
            .collect()
    }

    /// Binary pattern number `k` of `n_b` factors: bit `j` set means
    /// `xi_b[j] = +1`.
    pub fn binary_pattern(n_b: usize, k: u64) -> DVector<f64> {
        DVector::from_fn(n_b, |j, _| if (k >> j) & 1 == 1 { 1.0 } else { -1.0 })
    }

    /// The nonempty constrained zonotopes whose union is this set, one per
    /// feasible binary pattern, in pattern order.
    pub fn enumerate_cz(&self, cap: usize) -> Result<Vec<ConstrainedZonotope>> {
        let n_b = self.n_b();
        let needed: u128 = if n_b >= 127 { u128::MAX } else { 1u128 << n_b };
        if needed > cap as u128 {
            return Err(HzError::Capacity {
                needed,
                cap: cap as u128,
            });
        }
        let mut out = Vec::new();
        for k in 0..needed as u64 {
            let cz = self.branch(&Self::binary_pattern(n_b, k));
            if cz.n_c() == 0 {
                out.push(cz);
                continue;
            }
            let (p, _) = encode_feasibility(&HybridZonotope::from(cz.clone()), EMPTINESS_BAND);
            match solve_lp(&p).status {
                SolverStatus::Optimal => out.push(cz),
                SolverStatus::Infeasible => {}
                status => {
                    return Err(HzError::Solver {
                        status,
                        context: "branch feasibility",
                    })
                }
            }
        }
        Ok(out)
    }
}
