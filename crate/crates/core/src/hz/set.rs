//! Hybrid-zonotope value type and its degenerate forms.
//!
//! A hybrid zonotope `HZ<c, Gc, Gb, Ac, Ab, b>` is the set
//!
//! ```text
//! { c + Gc xi_c + Gb xi_b  :  |xi_c|_inf <= 1,  xi_b in {-1, 1}^nb,  Ac xi_c + Ab xi_b = b }
//! ```
//!
//! With no binary factors it is a constrained zonotope, and with no
//! constraints either it is a plain zonotope. Any of `n_g`, `n_b`, `n_c`
//! may be zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{HzError, Result};
use crate::linalg::{all_finite_mat, all_finite_vec, from_rows, to_rows};

/// A point of the ambient space.
pub type Point = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SetDocument", into = "SetDocument")]
pub struct HybridZonotope {
    c: DVector<f64>,
    gc: DMatrix<f64>,
    gb: DMatrix<f64>,
    ac: DMatrix<f64>,
    ab: DMatrix<f64>,
    b: DVector<f64>,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// Size bookkeeping of a hybrid zonotope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complexity {
    pub n: usize,
    pub n_g: usize,
    pub n_b: usize,
    pub n_c: usize,
    /// Degrees-of-freedom order `(n_g + n_b - n_c) / n`; zero for `n = 0`.
    pub order: f64,
}

impl std::fmt::Display for Complexity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "n={} n_g={} n_b={} n_c={} o_h={:.3}",
            self.n, self.n_g, self.n_b, self.n_c, self.order
        )
    }
}

/// Factor values `(xi_c, xi_b)` of one point; binaries are `-1.0` or `1.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub xi_c: DVector<f64>,
    pub xi_b: DVector<f64>,
}

impl HybridZonotope {
    pub fn new(
        c: DVector<f64>,
        gc: DMatrix<f64>,
        gb: DMatrix<f64>,
        ac: DMatrix<f64>,
        ab: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Self> {
        let n = c.len();
        let n_c = b.len();
        if gc.nrows() != n || gb.nrows() != n {
            return Err(HzError::shape(
                "HybridZonotope::new",
                format!(
                    "generator rows ({}, {}) differ from dimension {n}",
                    gc.nrows(),
                    gb.nrows()
                ),
            ));
        }
        if ac.nrows() != n_c || ab.nrows() != n_c {
            return Err(HzError::shape(
                "HybridZonotope::new",
                format!(
                    "constraint rows ({}, {}) differ from len(b) = {n_c}",
                    ac.nrows(),
                    ab.nrows()
                ),
            ));
        }
        if ac.ncols() != gc.ncols() || ab.ncols() != gb.ncols() {
            return Err(HzError::shape(
                "HybridZonotope::new",
                format!(
                    "column pairing Gc/Ac = {}/{}, Gb/Ab = {}/{}",
                    gc.ncols(),
                    ac.ncols(),
                    gb.ncols(),
                    ab.ncols()
                ),
            ));
        }
        if !(all_finite_vec(&c)
            && all_finite_mat(&gc)
            && all_finite_mat(&gb)
            && all_finite_mat(&ac)
            && all_finite_mat(&ab)
            && all_finite_vec(&b))
        {
            return Err(HzError::NonFinite("hybrid zonotope data"));
        }
        Ok(HybridZonotope { c, gc, gb, ac, ab, b })
    }

    /// Constructor for internal constructions whose shapes are correct by design.
    pub(crate) fn from_parts_unchecked(
        c: DVector<f64>,
        gc: DMatrix<f64>,
        gb: DMatrix<f64>,
        ac: DMatrix<f64>,
        ab: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Self {
        debug_assert_eq!(gc.nrows(), c.len());
        debug_assert_eq!(gb.nrows(), c.len());
        debug_assert_eq!(ac.nrows(), b.len());
        debug_assert_eq!(ab.nrows(), b.len());
        debug_assert_eq!(ac.ncols(), gc.ncols());
        debug_assert_eq!(ab.ncols(), gb.ncols());
        HybridZonotope { c, gc, gb, ac, ab, b }
    }

    pub fn zonotope(c: DVector<f64>, g: DMatrix<f64>) -> Result<Self> {
        let n = c.len();
        let n_g = g.ncols();
        Self::new(
            c,
            g,
            DMatrix::zeros(n, 0),
            DMatrix::zeros(0, n_g),
            DMatrix::zeros(0, 0),
            DVector::zeros(0),
        )
    }

    /// Axis-aligned box `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(HzError::shape("from_box", "bound lengths differ"));
        }
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Err(HzError::Degenerate("box with lo > hi".into()));
        }
        let n = lo.len();
        let c = DVector::from_fn(n, |i, _| 0.5 * (lo[i] + hi[i]));
        let g = DMatrix::from_fn(n, n, |i, j| if i == j { 0.5 * (hi[i] - lo[i]) } else { 0.0 });
        Self::zonotope(c, g)
    }

    /// The singleton `{x}`.
    pub fn point(x: DVector<f64>) -> Result<Self> {
        let n = x.len();
        Self::zonotope(x, DMatrix::zeros(n, 0))
    }

    /// A canonical empty set in dimension `n` (constraint `0 = 1`).
    pub fn empty(n: usize) -> Self {
        HybridZonotope {
            c: DVector::zeros(n),
            gc: DMatrix::zeros(n, 0),
            gb: DMatrix::zeros(n, 0),
            ac: DMatrix::zeros(1, 0),
            ab: DMatrix::zeros(1, 0),
            b: DVector::from_element(1, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
    pub fn n_g(&self) -> usize {
        self.gc.ncols()
    }
    pub fn n_b(&self) -> usize {
        self.gb.ncols()
    }
    pub fn n_c(&self) -> usize {
        self.b.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.c
    }
    pub fn gc(&self) -> &DMatrix<f64> {
        &self.gc
    }
    pub fn gb(&self) -> &DMatrix<f64> {
        &self.gb
    }
    pub fn ac(&self) -> &DMatrix<f64> {
        &self.ac
    }
    pub fn ab(&self) -> &DMatrix<f64> {
        &self.ab
    }
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn order(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        (self.n_g() as f64 + self.n_b() as f64 - self.n_c() as f64) / self.dim() as f64
    }

    pub fn complexity(&self) -> Complexity {
        Complexity {
            n: self.dim(),
            n_g: self.n_g(),
            n_b: self.n_b(),
            n_c: self.n_c(),
            order: self.order(),
        }
    }

    /// `(c, Gc, Gb, Ac, Ab, b)`.
    #[allow(clippy::type_complexity)]
    pub fn into_parts(
        self,
    ) -> (
        DVector<f64>,
        DMatrix<f64>,
        DMatrix<f64>,
        DMatrix<f64>,
        DMatrix<f64>,
        DVector<f64>,
    ) {
        (self.c, self.gc, self.gb, self.ac, self.ab, self.b)
    }

    /// The point encoded by a factor assignment (constraints are not checked).
    pub fn point_of(&self, a: &Assignment) -> Point {
        &self.c + &self.gc * &a.xi_c + &self.gb * &a.xi_b
    }

    /// Largest violation of the factor domain and equality constraints.
    pub fn assignment_residual(&self, a: &Assignment) -> f64 {
        if a.xi_c.len() != self.n_g() || a.xi_b.len() != self.n_b() {
            return f64::INFINITY;
        }
        let box_excess = a.xi_c.iter().map(|v| (v.abs() - 1.0).max(0.0)).fold(0.0, f64::max);
        let binary_excess = a.xi_b.iter().map(|v| (v.abs() - 1.0).abs()).fold(0.0, f64::max);
        let eq = &self.ac * &a.xi_c + &self.ab * &a.xi_b - &self.b;
        let eq_excess = eq.amax();
        box_excess.max(binary_excess).max(eq_excess)
    }

    /// Lossless view as a constrained zonotope when there are no binary factors.
    pub fn as_constrained(&self) -> Option<ConstrainedZonotope> {
        (self.n_b() == 0).then(|| ConstrainedZonotope {
            c: self.c.clone(),
            g: self.gc.clone(),
            a: self.ac.clone(),
            b: self.b.clone(),
        })
    }

    /// The constrained zonotope selected by fixing the binary factors.
    pub fn branch(&self, xi_b: &DVector<f64>) -> ConstrainedZonotope {
        ConstrainedZonotope {
            c: &self.c + &self.gb * xi_b,
            g: self.gc.clone(),
            a: self.ac.clone(),
            b: &self.b - &self.ab * xi_b,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("set serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| HzError::Document(e.to_string()))
    }
}

/// `CZ<c, G, A, b>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedZonotope {
    pub c: DVector<f64>,
    pub g: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl ConstrainedZonotope {
    pub fn new(c: DVector<f64>, g: DMatrix<f64>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let cz = ConstrainedZonotope { c, g, a, b };
        // reuse the hybrid validation
        HybridZonotope::from(cz.clone()).validate()?;
        Ok(cz)
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }
    pub fn n_g(&self) -> usize {
        self.g.ncols()
    }
    pub fn n_c(&self) -> usize {
        self.b.len()
    }
}

impl From<ConstrainedZonotope> for HybridZonotope {
    fn from(cz: ConstrainedZonotope) -> Self {
        let n = cz.c.len();
        let n_c = cz.b.len();
        HybridZonotope {
            c: cz.c,
            gc: cz.g,
            gb: DMatrix::zeros(n, 0),
            ac: cz.a,
            ab: DMatrix::zeros(n_c, 0),
            b: cz.b,
        }
    }
}

impl HybridZonotope {
    fn validate(self) -> Result<Self> {
        Self::new(self.c, self.gc, self.gb, self.ac, self.ab, self.b)
    }
}

/// JSON layout: row-major nested arrays; absent keys mean zero columns or rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SetDocument {
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Gc: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Gb: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Ac: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub Ab: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
}

fn column_count(generators: &Option<Vec<Vec<f64>>>, constraints: &Option<Vec<Vec<f64>>>) -> usize {
    generators
        .as_ref()
        .and_then(|rows| rows.first().map(|r| r.len()))
        .or_else(|| constraints.as_ref().and_then(|rows| rows.first().map(|r| r.len())))
        .unwrap_or(0)
}

impl TryFrom<SetDocument> for HybridZonotope {
    type Error = HzError;

    fn try_from(doc: SetDocument) -> Result<Self> {
        let n = doc.c.len();
        let b = doc.b.unwrap_or_default();
        let n_c = b.len();
        let n_g = column_count(&doc.Gc, &doc.Ac);
        let n_b = column_count(&doc.Gb, &doc.Ab);
        let ragged = |name: &str| HzError::Document(format!("{name} is ragged"));
        let matrix = |rows: Option<Vec<Vec<f64>>>, r: usize, c: usize, name: &str| -> Result<DMatrix<f64>> {
            match rows {
                None => Ok(DMatrix::zeros(r, c)),
                Some(rows) => {
                    let m = from_rows(&rows, c).ok_or_else(|| ragged(name))?;
                    if m.shape() != (r, c) {
                        return Err(HzError::Document(format!(
                            "{name} has shape {:?}, expected {:?}",
                            m.shape(),
                            (r, c)
                        )));
                    }
                    Ok(m)
                }
            }
        };
        let gc = matrix(doc.Gc, n, n_g, "Gc")?;
        let gb = matrix(doc.Gb, n, n_b, "Gb")?;
        let ac = matrix(doc.Ac, n_c, n_g, "Ac")?;
        let ab = matrix(doc.Ab, n_c, n_b, "Ab")?;
        HybridZonotope::new(DVector::from_vec(doc.c), gc, gb, ac, ab, DVector::from_vec(b))
    }
}

impl From<HybridZonotope> for SetDocument {
    fn from(z: HybridZonotope) -> Self {
        let some_if = |keep: bool, m: &DMatrix<f64>| keep.then(|| to_rows(m));
        SetDocument {
            c: z.c.iter().copied().collect(),
            Gc: some_if(z.n_g() > 0, &z.gc),
            Gb: some_if(z.n_b() > 0, &z.gb),
            Ac: some_if(z.n_c() > 0 && z.n_g() > 0, &z.ac),
            Ab: some_if(z.n_c() > 0 && z.n_b() > 0, &z.ab),
            b: (z.n_c() > 0).then(|| z.b.iter().copied().collect()),
        }
    }
}
