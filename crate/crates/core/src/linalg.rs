//! Small dense block-matrix helpers used by the set constructions.

use nalgebra::{DMatrix, DVector};

/// Horizontal concatenation. `rows` is needed when every block is empty.
pub fn hcat(rows: usize, blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Vertical concatenation. `cols` is needed when every block is empty.
pub fn vcat(cols: usize, blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

pub fn vcat_vec(blocks: &[&DVector<f64>]) -> DVector<f64> {
    let len: usize = blocks.iter().map(|b| b.len()).sum();
    let mut out = DVector::zeros(len);
    let mut at = 0;
    for b in blocks {
        out.rows_mut(at, b.len()).copy_from(*b);
        at += b.len();
    }
    out
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Dense matrix from a list of row blocks, each a list of `(column offset, block)`.
/// Cells not covered by a block stay zero.
pub fn assemble(rows: usize, cols: usize, placed: &[(usize, usize, &DMatrix<f64>)]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, cols);
    for &(r, c, m) in placed {
        if m.nrows() == 0 || m.ncols() == 0 {
            continue;
        }
        out.view_mut((r, c), m.shape()).copy_from(m);
    }
    out
}

pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

/// Column vector as an `n x 1` matrix.
pub fn col(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

pub fn all_finite_mat(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub fn all_finite_vec(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Rows of a nested array. Returns `None` when rows have different lengths.
pub fn from_rows(rows: &[Vec<f64>], ncols_if_empty: usize) -> Option<DMatrix<f64>> {
    if rows.is_empty() {
        return Some(DMatrix::zeros(0, ncols_if_empty));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}
