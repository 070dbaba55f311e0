//! Block elimination operators.
//!
//! `elim(T, I, J, n)` is the n-by-n identity with block `T` inserted at rows
//! `I`, columns `J` (`I`, `J` disjoint). Products with such operators touch
//! only the rows (or columns) in `I`/`J`; the dense matrix is never formed.
//! Inverses toggle the sign of the inserted block; adjoints swap the roles of
//! `I` and `J` with the transposed block.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// One block-elimination operator: the identity plus `coeffs` at
/// `(rows, cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElimBlock {
    pub coeffs: Mat,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl ElimBlock {
    pub fn new(coeffs: Mat, rows: Vec<usize>, cols: Vec<usize>) -> ElimBlock {
        debug_assert_eq!(coeffs.nrows(), rows.len());
        debug_assert_eq!(coeffs.ncols(), cols.len());
        ElimBlock { coeffs, rows, cols }
    }

    /// Apply from the left to `x` in place; see [`elim_apply`].
    pub fn apply(&self, x: &mut Mat, inverse: bool, adjoint: bool) -> Result<()> {
        elim_apply(&self.coeffs, &self.rows, &self.cols, x, inverse, adjoint)
    }

    /// Apply from the right: `x <- x * elim(...)` (or its inverse).
    pub fn apply_right(&self, x: &mut Mat, inverse: bool) -> Result<()> {
        elim_apply_right(&self.coeffs, &self.rows, &self.cols, x, inverse)
    }

    pub fn stored_scalars(&self) -> usize {
        self.coeffs.nrows() * self.coeffs.ncols()
    }
}

/// In-place product of `elim(t, rows_i, cols_j, n)` (or its inverse/adjoint)
/// with `x`. Only rows `rows_i` change (rows `cols_j` for the adjoint):
/// `x(I,:) ± t * x(J,:)`.
pub fn elim_apply(
    t: &Mat,
    rows_i: &[usize],
    cols_j: &[usize],
    x: &mut Mat,
    inverse: bool,
    adjoint: bool,
) -> Result<()> {
    if t.nrows() != rows_i.len() || t.ncols() != cols_j.len() {
        return Err(Error::ShapeMismatch {
            context: "elim_apply block",
            expected: (rows_i.len(), cols_j.len()),
            got: (t.nrows(), t.ncols()),
        });
    }
    let n = x.nrows();
    if rows_i.iter().chain(cols_j).any(|&i| i >= n) {
        return Err(Error::ShapeMismatch {
            context: "elim_apply index out of range",
            expected: (n, 0),
            got: (x.nrows(), x.ncols()),
        });
    }
    debug_assert!(rows_i.iter().all(|i| !cols_j.contains(i)), "I, J overlap");
    if t.is_empty() {
        return Ok(());
    }
    let sign = if inverse { -1.0 } else { 1.0 };
    let (src_idx, dst_idx) = if adjoint {
        (rows_i, cols_j)
    } else {
        (cols_j, rows_i)
    };
    let src = x.rows(src_idx);
    let upd = if adjoint { t.t_mul(&src) } else { t.mul(&src) };
    for j in 0..x.ncols() {
        let uj = upd.col(j);
        for (r, &i) in dst_idx.iter().enumerate() {
            x[(i, j)] += sign * uj[r];
        }
    }
    Ok(())
}

/// In-place product `x <- x * elim(t, rows_i, cols_j, n)` (or its inverse).
/// Only columns `cols_j` change: `x(:,J) ± x(:,I) * t`.
pub fn elim_apply_right(
    t: &Mat,
    rows_i: &[usize],
    cols_j: &[usize],
    x: &mut Mat,
    inverse: bool,
) -> Result<()> {
    if t.nrows() != rows_i.len() || t.ncols() != cols_j.len() {
        return Err(Error::ShapeMismatch {
            context: "elim_apply_right block",
            expected: (rows_i.len(), cols_j.len()),
            got: (t.nrows(), t.ncols()),
        });
    }
    let n = x.ncols();
    if rows_i.iter().chain(cols_j).any(|&i| i >= n) {
        return Err(Error::ShapeMismatch {
            context: "elim_apply_right index out of range",
            expected: (0, n),
            got: (x.nrows(), x.ncols()),
        });
    }
    if t.is_empty() {
        return Ok(());
    }
    let sign = if inverse { -1.0 } else { 1.0 };
    let src = x.cols(rows_i);
    let upd = src.mul(t);
    for (c, &j) in cols_j.iter().enumerate() {
        let uc = upd.col(c);
        let xj = x.col_mut(j);
        for i in 0..xj.len() {
            xj[i] += sign * uc[i];
        }
    }
    Ok(())
}

/// Densely assembled `elim(t, rows_i, cols_j, n)` (tests and diagnostics).
pub fn elim_dense(t: &Mat, rows_i: &[usize], cols_j: &[usize], n: usize) -> Mat {
    let mut m = Mat::identity(n);
    for (c, &j) in cols_j.iter().enumerate() {
        for (r, &i) in rows_i.iter().enumerate() {
            m[(i, j)] = t[(r, c)];
        }
    }
    m
}
