//! Partially pivoted LU for the diagonal pivot blocks.

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Packed LU factors with row-swap pivoting: `swaps applied to A = L * U`.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    lu: Mat,
    /// Row swapped with row `k` at elimination step `k`.
    swaps: Vec<usize>,
}

impl LuFactors {
    pub fn factor(m: &Mat) -> Result<LuFactors> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "LU requires a square matrix");
        let mut lu = m.clone();
        let mut swaps = vec![0usize; n];
        let scale = m.max_abs();
        let tol = 1e-14 * scale;
        for k in 0..n {
            let mut piv = k;
            let mut piv_abs = lu[(k, k)].abs();
            for i in k + 1..n {
                let a = lu[(i, k)].abs();
                if a > piv_abs {
                    piv_abs = a;
                    piv = i;
                }
            }
            if piv_abs <= tol {
                return Err(Error::SingularPivot { index: k });
            }
            swaps[k] = piv;
            if piv != k {
                for j in 0..n {
                    let x = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = x;
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(LuFactors { lu, swaps })
    }

    pub fn n(&self) -> usize {
        self.lu.nrows()
    }

    pub fn stored_scalars(&self) -> usize {
        self.n() * self.n()
    }

    /// Solve `A X = B` (or `Aᵀ X = B` when `transposed`).
    pub fn solve(&self, b: &Mat, transposed: bool) -> Mat {
        let n = self.n();
        assert_eq!(b.nrows(), n, "LU solve rhs mismatch");
        let mut x = b.clone();
        for j in 0..x.ncols() {
            let xj = x.col_mut(j);
            if !transposed {
                for k in 0..n {
                    xj.swap(k, self.swaps[k]);
                }
                // L y = Pb (unit lower), then U x = y.
                for i in 0..n {
                    let mut s = xj[i];
                    for l in 0..i {
                        s -= self.lu[(i, l)] * xj[l];
                    }
                    xj[i] = s;
                }
                for i in (0..n).rev() {
                    let mut s = xj[i];
                    for l in i + 1..n {
                        s -= self.lu[(i, l)] * xj[l];
                    }
                    xj[i] = s / self.lu[(i, i)];
                }
            } else {
                // Aᵀ = Uᵀ Lᵀ P: solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
                for i in 0..n {
                    let mut s = xj[i];
                    for l in 0..i {
                        s -= self.lu[(l, i)] * xj[l];
                    }
                    xj[i] = s / self.lu[(i, i)];
                }
                for i in (0..n).rev() {
                    let mut s = xj[i];
                    for l in i + 1..n {
                        s -= self.lu[(l, i)] * xj[l];
                    }
                    xj[i] = s;
                }
                for k in (0..n).rev() {
                    xj.swap(k, self.swaps[k]);
                }
            }
        }
        x
    }

    /// Multiply by the factored matrix: `A X` (or `Aᵀ X`), reconstructed from
    /// the packed factors so no dense copy of `A` needs to be stored.
    pub fn matmul(&self, b: &Mat, transposed: bool) -> Mat {
        let n = self.n();
        assert_eq!(b.nrows(), n, "LU matmul rhs mismatch");
        let mut x = b.clone();
        for j in 0..x.ncols() {
            let xj = x.col_mut(j);
            if !transposed {
                // x <- U x, then x <- L x, then undo the row swaps.
                for i in 0..n {
                    let mut s = 0.0;
                    for l in i..n {
                        s += self.lu[(i, l)] * xj[l];
                    }
                    xj[i] = s;
                }
                for i in (0..n).rev() {
                    let mut s = xj[i];
                    for l in 0..i {
                        s += self.lu[(i, l)] * xj[l];
                    }
                    xj[i] = s;
                }
                for k in (0..n).rev() {
                    xj.swap(k, self.swaps[k]);
                }
            } else {
                // Aᵀ x = Uᵀ Lᵀ P x.
                for k in 0..n {
                    xj.swap(k, self.swaps[k]);
                }
                for i in 0..n {
                    let mut s = xj[i];
                    for l in i + 1..n {
                        s += self.lu[(l, i)] * xj[l];
                    }
                    xj[i] = s;
                }
                for i in (0..n).rev() {
                    let mut s = 0.0;
                    for l in 0..=i {
                        s += self.lu[(l, i)] * xj[l];
                    }
                    xj[i] = s;
                }
            }
        }
        x
    }

    /// Dense reconstruction of the factored matrix (diagnostics and tests).
    pub fn reconstruct(&self) -> Mat {
        self.matmul(&Mat::identity(self.n()), false)
    }

    pub(crate) fn raw_parts(&self) -> (&Mat, &[usize]) {
        (&self.lu, &self.swaps)
    }

    pub(crate) fn from_raw_parts(lu: Mat, swaps: Vec<usize>) -> LuFactors {
        LuFactors { lu, swaps }
    }
}
