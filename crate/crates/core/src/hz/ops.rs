//! Closed set operations: affine map, intersection, halfspace cut, union,
//! Minkowski sum, and zero-column pruning.

use nalgebra::{DMatrix, DVector};

use super::HybridZonotope;
use crate::error::{HzError, Result};
use crate::linalg::{assemble, col, hcat, ones, vcat, vcat_vec};

/// Largest constraint matrix (in entries) a union may build: 512 MiB of f64.
pub const MAX_DENSE_ENTRIES: usize = 1 << 26;

impl HybridZonotope {
    /// `{R x + t : x in Z}`. Constraints are inherited unchanged.
    pub fn affine_map(&self, r: &DMatrix<f64>, t: &DVector<f64>) -> Result<HybridZonotope> {
        if r.ncols() != self.dim() {
            return Err(HzError::shape(
                "affine_map",
                format!("matrix has {} columns, set dimension is {}", r.ncols(), self.dim()),
            ));
        }
        if t.len() != r.nrows() {
            return Err(HzError::shape(
                "affine_map",
                format!("translation length {} vs {} rows", t.len(), r.nrows()),
            ));
        }
        Ok(HybridZonotope::from_parts_unchecked(
            r * self.center() + t,
            r * self.gc(),
            r * self.gb(),
            self.ac().clone(),
            self.ab().clone(),
            self.b().clone(),
        ))
    }

    pub fn linear_map(&self, r: &DMatrix<f64>) -> Result<HybridZonotope> {
        self.affine_map(r, &DVector::zeros(r.nrows()))
    }

    /// `Z ∩ Y`; factors of `Y` are appended and tied through `n` new equality rows.
    pub fn intersect(&self, other: &HybridZonotope) -> Result<HybridZonotope> {
        let n = self.dim();
        if other.dim() != n {
            return Err(HzError::shape(
                "intersect",
                format!("dimensions {} and {}", n, other.dim()),
            ));
        }
        let (gz, gy) = (self.n_g(), other.n_g());
        let (bz, by) = (self.n_b(), other.n_b());
        let (cz, cy) = (self.n_c(), other.n_c());
        let n_g = gz + gy;
        let n_b = bz + by;
        let n_c = cz + cy + n;

        let gc = hcat(n, &[self.gc(), &DMatrix::zeros(n, gy)]);
        let gb = hcat(n, &[self.gb(), &DMatrix::zeros(n, by)]);
        let neg_gyc = -other.gc();
        let neg_gyb = -other.gb();
        let ac = assemble(
            n_c,
            n_g,
            &[
                (0, 0, self.ac()),
                (cz, gz, other.ac()),
                (cz + cy, 0, self.gc()),
                (cz + cy, gz, &neg_gyc),
            ],
        );
        let ab = assemble(
            n_c,
            n_b,
            &[
                (0, 0, self.ab()),
                (cz, bz, other.ab()),
                (cz + cy, 0, self.gb()),
                (cz + cy, bz, &neg_gyb),
            ],
        );
        let b = vcat_vec(&[self.b(), other.b(), &(other.center() - self.center())]);
        Ok(HybridZonotope::from_parts_unchecked(
            self.center().clone(),
            gc,
            gb,
            ac,
            ab,
            b,
        ))
    }

    /// `Z ∩ {x : h^T x <= f}` with one extra continuous factor and one extra row.
    ///
    /// When the whole box relaxation of `Z` lies strictly on the far side of
    /// the cut the result is the canonical empty set.
    pub fn intersect_halfspace(&self, h: &DVector<f64>, f: f64) -> Result<HybridZonotope> {
        let n = self.dim();
        if h.len() != n {
            return Err(HzError::shape(
                "intersect_halfspace",
                format!("normal has length {}, set dimension is {n}", h.len()),
            ));
        }
        if h.iter().all(|v| *v == 0.0) {
            return Err(HzError::Degenerate("halfspace normal is zero".into()));
        }
        if !f.is_finite() || h.iter().any(|v| !v.is_finite()) {
            return Err(HzError::NonFinite("halfspace"));
        }
        let hgc = h.transpose() * self.gc();
        let hgb = h.transpose() * self.gb();
        let hc = h.dot(self.center());
        let d_m = hgc.iter().map(|v| v.abs()).sum::<f64>() + hgb.iter().map(|v| v.abs()).sum::<f64>() + f - hc;
        if d_m < 0.0 {
            return Ok(HybridZonotope::empty(n));
        }
        let (ng, nc) = (self.n_g(), self.n_c());
        let gc = hcat(n, &[self.gc(), &DMatrix::zeros(n, 1)]);
        let mut ac = DMatrix::zeros(nc + 1, ng + 1);
        ac.view_mut((0, 0), (nc, ng)).copy_from(self.ac());
        ac.view_mut((nc, 0), (1, ng)).copy_from(&hgc);
        ac[(nc, ng)] = 0.5 * d_m;
        let hgb_row = DMatrix::from_iterator(1, self.n_b(), hgb.iter().copied());
        let ab = vcat(self.n_b(), &[self.ab(), &hgb_row]);
        let mut b = DVector::zeros(nc + 1);
        b.rows_mut(0, nc).copy_from(self.b());
        b[nc] = f - hc - 0.5 * d_m;
        Ok(HybridZonotope::from_parts_unchecked(
            self.center().clone(),
            gc,
            self.gb().clone(),
            ac,
            ab,
            b,
        ))
    }

    /// `Z ∪ W` with one switching binary factor.
    ///
    /// The switch `lambda = +1` selects `Z` (then `W`'s factors sit at
    /// `xi_c = 0`, `xi_b = -1`) and `lambda = -1` selects `W`. Slack factors
    /// enforce the switching through `2 (n_gz + n_gw + n_bz + n_bw)` rows.
    ///
    /// Both operands are expected to be nonempty; callers skip the union
    /// when one side is empty.
    pub fn union(&self, other: &HybridZonotope) -> Result<HybridZonotope> {
        let n = self.dim();
        if other.dim() != n {
            return Err(HzError::shape("union", format!("dimensions {} and {}", n, other.dim())));
        }
        let (gz, gw) = (self.n_g(), other.n_g());
        let (bz, bw) = (self.n_b(), other.n_b());
        let (cz, cw) = (self.n_c(), other.n_c());

        let gzb1 = self.gb() * ones(bz);
        let gwb1 = other.gb() * ones(bw);
        let hat_gb = ((&gwb1 + self.center()) - (&gzb1 + other.center())) * 0.5;
        let hat_c = ((&gwb1 + self.center()) + (&gzb1 + other.center())) * 0.5;
        let azb1 = self.ab() * ones(bz);
        let awb1 = other.ab() * ones(bw);
        let hat_az = (-&azb1 - self.b()) * 0.5;
        let hat_bz = (-&azb1 + self.b()) * 0.5;
        let hat_aw = (&awb1 + other.b()) * 0.5;
        let hat_bw = (-&awb1 + other.b()) * 0.5;

        let slack = 2 * (gz + gw + bz + bw);
        let n_g = gz + gw + slack;
        let n_b = bz + bw + 1;
        let n_c = cz + cw + slack;
        if n_c.saturating_mul(n_g) > MAX_DENSE_ENTRIES {
            return Err(HzError::TooLarge { rows: n_c, cols: n_g });
        }

        let gc = hcat(n, &[self.gc(), other.gc(), &DMatrix::zeros(n, slack)]);
        let gb = hcat(n, &[self.gb(), other.gb(), &col(&hat_gb)]);

        let mut ac = assemble(n_c, n_g, &[(0, 0, self.ac()), (cz, gz, other.ac())]);
        let mut ab = assemble(n_c, n_b, &[(0, 0, self.ab()), (cz, bz, other.ab())]);
        for i in 0..cz {
            ab[(i, n_b - 1)] = hat_az[i];
        }
        for i in 0..cw {
            ab[(cz + i, n_b - 1)] = hat_aw[i];
        }
        let mut b3 = DVector::zeros(slack);
        let lam = n_b - 1;
        let base = cz + cw;
        let mut row = 0;
        // |xi_z^c| forced to zero when W is selected, and symmetrically.
        for (offset, count, sign) in [(0, gz, 0.5), (gz, gw, -0.5)] {
            for s in [1.0, -1.0] {
                for j in 0..count {
                    ac[(base + row, offset + j)] = s;
                    ab[(base + row, lam)] = sign;
                    b3[row] = 0.5;
                    row += 1;
                }
            }
        }
        // xi_z^b pinned to -1 when W is selected, and symmetrically.
        for (offset, count, sign) in [(0, bz, 0.5), (bz, bw, -0.5)] {
            for (s, rhs) in [(0.5, 0.0), (-0.5, 1.0)] {
                for j in 0..count {
                    ab[(base + row, offset + j)] = s;
                    ab[(base + row, lam)] = sign;
                    b3[row] = rhs;
                    row += 1;
                }
            }
        }
        debug_assert_eq!(row, slack);
        for k in 0..slack {
            ac[(base + k, gz + gw + k)] = 1.0;
        }
        let b = vcat_vec(&[&hat_bz, &hat_bw, &b3]);
        Ok(HybridZonotope::from_parts_unchecked(hat_c, gc, gb, ac, ab, b))
    }

    /// `{z + w : z in Z, w in W}`.
    pub fn minkowski_sum(&self, other: &HybridZonotope) -> Result<HybridZonotope> {
        let n = self.dim();
        if other.dim() != n {
            return Err(HzError::shape(
                "minkowski_sum",
                format!("dimensions {} and {}", n, other.dim()),
            ));
        }
        let (gz, gw) = (self.n_g(), other.n_g());
        let (bz, bw) = (self.n_b(), other.n_b());
        let (cz, cw) = (self.n_c(), other.n_c());
        Ok(HybridZonotope::from_parts_unchecked(
            self.center() + other.center(),
            hcat(n, &[self.gc(), other.gc()]),
            hcat(n, &[self.gb(), other.gb()]),
            assemble(cz + cw, gz + gw, &[(0, 0, self.ac()), (cz, gz, other.ac())]),
            assemble(cz + cw, bz + bw, &[(0, 0, self.ab()), (cz, bz, other.ab())]),
            vcat_vec(&[self.b(), other.b()]),
        ))
    }

    /// Cartesian product `Z x W`.
    pub fn cartesian(&self, other: &HybridZonotope) -> HybridZonotope {
        let (n, m) = (self.dim(), other.dim());
        let (gz, gw) = (self.n_g(), other.n_g());
        let (bz, bw) = (self.n_b(), other.n_b());
        let (cz, cw) = (self.n_c(), other.n_c());
        HybridZonotope::from_parts_unchecked(
            vcat_vec(&[self.center(), other.center()]),
            assemble(n + m, gz + gw, &[(0, 0, self.gc()), (n, gz, other.gc())]),
            assemble(n + m, bz + bw, &[(0, 0, self.gb()), (n, bz, other.gb())]),
            assemble(cz + cw, gz + gw, &[(0, 0, self.ac()), (cz, gz, other.ac())]),
            assemble(cz + cw, bz + bw, &[(0, 0, self.ab()), (cz, bz, other.ab())]),
            vcat_vec(&[self.b(), other.b()]),
        )
    }

    /// Drops generator columns that are zero together with their constraint
    /// column. For binary columns this is exact because the factor no longer
    /// influences either the point or the constraints.
    pub fn prune_zero_columns(&self) -> HybridZonotope {
        self.prune_zero_columns_indexed().0
    }

    /// [`prune_zero_columns`](Self::prune_zero_columns) plus the kept
    /// continuous and binary column indices.
    pub fn prune_zero_columns_indexed(&self) -> (HybridZonotope, Vec<usize>, Vec<usize>) {
        let keep_c: Vec<usize> = (0..self.n_g())
            .filter(|&j| {
                self.gc()
                    .column(j)
                    .iter()
                    .chain(self.ac().column(j).iter())
                    .any(|v| *v != 0.0)
            })
            .collect();
        let keep_b: Vec<usize> = (0..self.n_b())
            .filter(|&j| {
                self.gb()
                    .column(j)
                    .iter()
                    .chain(self.ab().column(j).iter())
                    .any(|v| *v != 0.0)
            })
            .collect();
        if keep_c.len() == self.n_g() && keep_b.len() == self.n_b() {
            return (self.clone(), keep_c, keep_b);
        }
        let pruned = HybridZonotope::from_parts_unchecked(
            self.center().clone(),
            self.gc().select_columns(&keep_c),
            self.gb().select_columns(&keep_b),
            self.ac().select_columns(&keep_c),
            self.ab().select_columns(&keep_b),
            self.b().clone(),
        );
        (pruned, keep_c, keep_b)
    }

    /// Rows `range` of the set, i.e. the projection onto those coordinates.
    pub fn project(&self, start: usize, len: usize) -> Result<HybridZonotope> {
        if start + len > self.dim() {
            return Err(HzError::shape("project", "coordinate range out of bounds"));
        }
        Ok(HybridZonotope::from_parts_unchecked(
            self.center().rows(start, len).into_owned(),
            self.gc().rows(start, len).into_owned(),
            self.gb().rows(start, len).into_owned(),
            self.ac().clone(),
            self.ab().clone(),
            self.b().clone(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(lo: f64, hi: f64) -> HybridZonotope {
        HybridZonotope::from_box(&[lo], &[hi]).unwrap()
    }

    #[test]
    fn identity_map_leaves_tuple_unchanged() {
        let z = interval(-1.0, 2.0).union(&interval(3.0, 4.0)).unwrap();
        let out = z.affine_map(&DMatrix::identity(1, 1), &DVector::zeros(1)).unwrap();
        assert_eq!(out, z);
    }

    #[test]
    fn affine_map_rejects_bad_shapes() {
        let z = interval(0.0, 1.0);
        assert!(matches!(
            z.affine_map(&DMatrix::identity(2, 2), &DVector::zeros(2)),
            Err(HzError::Shape { .. })
        ));
        assert!(matches!(
            z.affine_map(&DMatrix::identity(1, 1), &DVector::zeros(2)),
            Err(HzError::Shape { .. })
        ));
    }

    #[test]
    fn union_block_shapes() {
        let a = interval(-2.0, -1.0);
        let b = interval(1.0, 2.0);
        let u = a.union(&b).unwrap();
        assert_eq!(u.n_b(), 1);
        assert_eq!(u.n_g(), 2 + 2 * 2);
        assert_eq!(u.n_c(), 2 * 2);
        let u2 = u.union(&a.union(&b).unwrap().union(&a).unwrap()).unwrap();
        assert_eq!(u2.n_b(), 1 + 2 + 1);
    }

    #[test]
    fn intersection_shapes() {
        let a = HybridZonotope::from_box(&[0.0, 0.0], &[2.0, 2.0]).unwrap();
        let b = HybridZonotope::from_box(&[1.0, 1.0], &[3.0, 3.0]).unwrap();
        let i = a.intersect(&b).unwrap();
        assert_eq!((i.n_g(), i.n_b(), i.n_c()), (4, 0, 2));
        assert!(a.intersect(&interval(0.0, 1.0)).is_err());
    }

    #[test]
    fn halfspace_cut_errors_and_empty_result() {
        let z = interval(-1.0, 1.0);
        assert!(matches!(
            z.intersect_halfspace(&DVector::zeros(1), 0.0),
            Err(HzError::Degenerate(_))
        ));
        let cut = z.intersect_halfspace(&DVector::from_element(1, 1.0), -5.0).unwrap();
        assert_eq!(cut, HybridZonotope::empty(1));
        let kept = z.intersect_halfspace(&DVector::from_element(1, 1.0), 0.0).unwrap();
        assert_eq!((kept.n_g(), kept.n_c()), (2, 1));
    }

    #[test]
    fn pruning_drops_only_dead_columns() {
        let z = HybridZonotope::new(
            DVector::zeros(1),
            DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 0.5]),
            DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(1, 2, &[0.0, 0.0]),
            DVector::from_element(1, 0.0),
        )
        .unwrap();
        let p = z.prune_zero_columns();
        assert_eq!((p.n_g(), p.n_b(), p.n_c()), (2, 1, 1));
    }
}
