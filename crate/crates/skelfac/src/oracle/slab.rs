//! Sparse Schur-complement oracle for a slab-partitioned 5-point Poisson
//! grid: exposes `T11 = A11 - A12 A22^{-1} A21` over the first interface
//! column, applying it through one prefactored interior solve per product.

use super::LinearOracle;
use crate::error::{Error, Result};
use crate::linalg::LuFactors;
use crate::mat::Mat;
use crate::tree::PointSet;

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> CsrMatrix {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n_rows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// `self * x`, column by column.
    pub fn matvec(&self, x: &Mat) -> Mat {
        assert_eq!(x.nrows(), self.n_cols, "csr matvec shape");
        let mut y = Mat::zeros(self.n_rows, x.ncols());
        for j in 0..x.ncols() {
            let xj = x.col(j);
            let yj = y.col_mut(j);
            for r in 0..self.n_rows {
                let mut s = 0.0;
                for k in self.indptr[r]..self.indptr[r + 1] {
                    s += self.values[k] * xj[self.indices[k]];
                }
                yj[r] = s;
            }
        }
        y
    }

    /// `selfᵀ * x`, column by column.
    pub fn matvec_transpose(&self, x: &Mat) -> Mat {
        assert_eq!(x.nrows(), self.n_rows, "csr matvec_transpose shape");
        let mut y = Mat::zeros(self.n_cols, x.ncols());
        for j in 0..x.ncols() {
            let xj = x.col(j);
            let yj = y.col_mut(j);
            for r in 0..self.n_rows {
                let v = xj[r];
                if v == 0.0 {
                    continue;
                }
                for k in self.indptr[r]..self.indptr[r + 1] {
                    yj[self.indices[k]] += self.values[k] * v;
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                m[(r, self.indices[k])] = self.values[k];
            }
        }
        m
    }
}

/// Schur complement of the first slab interior onto the first interface of
/// an n-by-n 5-point Poisson grid with Dirichlet boundary. The slab holds
/// grid columns `0..b`; the interface is grid column `b`, so the operator has
/// dimension `n`.
pub struct SchurSlabOracle {
    n: usize,
    b: usize,
    a11: CsrMatrix,
    a12: CsrMatrix,
    a21: CsrMatrix,
    a22_lu: LuFactors,
    points: PointSet,
}

impl SchurSlabOracle {
    pub fn new(n: usize, b: usize) -> Result<SchurSlabOracle> {
        if n < 3 {
            return Err(Error::Config(format!("grid side n = {n} must be >= 3")));
        }
        if b < 1 || b >= n {
            return Err(Error::Config(format!(
                "slab width b = {b} must satisfy 1 <= b < n = {n}"
            )));
        }
        // Interior (block 2): grid columns 0..b, local index ix * n + iy.
        // Interface (block 1): grid column b, local index iy.
        let nb = n * b;
        let mut t11 = Vec::new();
        let mut t12 = Vec::new();
        let mut t21 = Vec::new();
        let mut t22 = Vec::new();
        for iy in 0..n {
            t11.push((iy, iy, 4.0));
            if iy + 1 < n {
                t11.push((iy, iy + 1, -1.0));
                t11.push((iy + 1, iy, -1.0));
            }
            // interface column b couples to interior column b-1
            t12.push((iy, (b - 1) * n + iy, -1.0));
            t21.push(((b - 1) * n + iy, iy, -1.0));
        }
        for ix in 0..b {
            for iy in 0..n {
                let me = ix * n + iy;
                t22.push((me, me, 4.0));
                if iy + 1 < n {
                    t22.push((me, me + 1, -1.0));
                    t22.push((me + 1, me, -1.0));
                }
                if ix + 1 < b {
                    t22.push((me, me + n, -1.0));
                    t22.push((me + n, me, -1.0));
                }
            }
        }
        let a11 = CsrMatrix::from_triplets(n, n, t11);
        let a12 = CsrMatrix::from_triplets(n, nb, t12);
        let a21 = CsrMatrix::from_triplets(nb, n, t21);
        let a22 = CsrMatrix::from_triplets(nb, nb, t22);
        // Interior block is factored once, dense at desk scale.
        let a22_lu = LuFactors::factor(&a22.to_dense()).map_err(|_| Error::Config(
            "slab interior block is singular (unexpected for Dirichlet Poisson)".into(),
        ))?;
        let ys: Vec<f64> = (0..n).map(|iy| (iy as f64 + 0.5) / n as f64).collect();
        let points = PointSet::from_1d(&ys)?;
        Ok(SchurSlabOracle {
            n,
            b,
            a11,
            a12,
            a21,
            a22_lu,
            points,
        })
    }

    pub fn slab_width(&self) -> usize {
        self.b
    }

    /// Densely assembled `T11` (tests and small-n verification).
    pub fn to_dense(&self) -> Mat {
        self.apply(&Mat::identity(self.n))
    }
}

impl LinearOracle for SchurSlabOracle {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &Mat) -> Mat {
        let inner = self.a22_lu.solve(&self.a21.matvec(x), false);
        self.a11.matvec(x).sub(&self.a12.matvec(&inner))
    }
    fn apply_adjoint(&self, x: &Mat) -> Mat {
        // T11ᵀ = A11ᵀ - A21ᵀ A22⁻ᵀ A12ᵀ
        let inner = self.a22_lu.solve(&self.a12.matvec_transpose(x), true);
        self.a11
            .matvec_transpose(x)
            .sub(&self.a21.matvec_transpose(&inner))
    }
    fn points(&self) -> Option<&PointSet> {
        Some(&self.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense assembly of the same Schur complement, as an independent check.
    fn dense_t11(n: usize, b: usize) -> Mat {
        let o = SchurSlabOracle::new(n, b).unwrap();
        let a22 = {
            // reassemble A22 densely from the 5-point stencil
            let nb = n * b;
            let mut m = Mat::zeros(nb, nb);
            for ix in 0..b {
                for iy in 0..n {
                    let me = ix * n + iy;
                    m[(me, me)] = 4.0;
                    if iy + 1 < n {
                        m[(me, me + 1)] = -1.0;
                        m[(me + 1, me)] = -1.0;
                    }
                    if ix + 1 < b {
                        m[(me, me + n)] = -1.0;
                        m[(me + n, me)] = -1.0;
                    }
                }
            }
            m
        };
        let a11 = o.a11.to_dense();
        let a12 = o.a12.to_dense();
        let a21 = o.a21.to_dense();
        let a22_lu = LuFactors::factor(&a22).unwrap();
        a11.sub(&a12.mul(&a22_lu.solve(&a21, false)))
    }

    #[test]
    fn apply_matches_dense_assembly() {
        for &(n, b) in &[(8usize, 3usize), (6, 1), (16, 5), (12, 2)] {
            let o = SchurSlabOracle::new(n, b).unwrap();
            let t = o.to_dense();
            let t_ref = dense_t11(n, b);
            let err = t.sub(&t_ref).fro_norm() / t_ref.fro_norm();
            assert!(err <= 1e-12, "n={n} b={b} err={err}");
        }
    }

    #[test]
    fn operator_is_symmetric() {
        let o = SchurSlabOracle::new(10, 4).unwrap();
        let x = crate::rng::gaussian(10, 3, 5, 0);
        let ax = o.apply(&x);
        let atx = o.apply_adjoint(&x);
        assert!(ax.sub(&atx).fro_norm() <= 1e-12 * ax.fro_norm());
    }

    #[test]
    fn unit_width_slab_hand_elimination() {
        // b = 1, n = 3: T11 = A11 - A22^{-1} with A22 = tridiag(-1, 4, -1).
        // (A22^{-1})(0,0) = 15/56, so T11(0,0) = 4 - 15/56 = 209/56.
        let o = SchurSlabOracle::new(3, 1).unwrap();
        let t = o.to_dense();
        assert!((t[(0, 0)] - 209.0 / 56.0).abs() < 1e-13);
        // tridiagonal A11: off-tridiagonal entries of T11 come only from the
        // Schur term and are nonzero but small; diagonal dominates.
        assert!(t[(0, 0)] > t[(0, 2)].abs());
    }

    #[test]
    fn invalid_sizes_rejected() {
        assert!(SchurSlabOracle::new(2, 1).is_err());
        assert!(SchurSlabOracle::new(8, 0).is_err());
        assert!(SchurSlabOracle::new(8, 8).is_err());
    }

    #[test]
    fn csr_matvec_matches_dense() {
        let m = CsrMatrix::from_triplets(
            3,
            4,
            vec![(0, 1, 2.0), (1, 0, -1.0), (2, 3, 5.0), (0, 1, 0.5)],
        );
        let d = m.to_dense();
        assert_eq!(d[(0, 1)], 2.5); // duplicate summed
        let x = crate::rng::gaussian(4, 2, 6, 0);
        assert!(m.matvec(&x).sub(&d.mul(&x)).fro_norm() < 1e-14);
        let y = crate::rng::gaussian(3, 2, 7, 0);
        assert!(m.matvec_transpose(&y).sub(&d.t_mul(&y)).fro_norm() < 1e-14);
    }
}
