//! Dense matrices of 64-bit floats, stored column-major.

use std::fmt;
use std::ops::{Index, IndexMut};

/// Dense column-major matrix. Entry `(i, j)` lives at `data[i + j * nrows]`.
#[derive(Clone, PartialEq)]
pub struct Mat {
    nr: usize,
    nc: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(nr: usize, nc: usize) -> Mat {
        Mat {
            nr,
            nc,
            a: vec![0.0; nr * nc],
        }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(nr: usize, nc: usize, mut f: impl FnMut(usize, usize) -> f64) -> Mat {
        let mut m = Mat::zeros(nr, nc);
        for j in 0..nc {
            for i in 0..nr {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from a row-major slice, handy for literals in tests.
    pub fn from_row_major(nr: usize, nc: usize, data: &[f64]) -> Mat {
        assert_eq!(data.len(), nr * nc, "row-major data length mismatch");
        Mat::from_fn(nr, nc, |i, j| data[i * nc + j])
    }

    pub fn from_col_major(nr: usize, nc: usize, data: Vec<f64>) -> Mat {
        assert_eq!(data.len(), nr * nc, "column-major data length mismatch");
        Mat { nr, nc, a: data }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nr
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.nc
    }

    pub fn is_empty(&self) -> bool {
        self.nr == 0 || self.nc == 0
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.a[j * self.nr..(j + 1) * self.nr]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.a[j * self.nr..(j + 1) * self.nr]
    }

    pub fn data(&self) -> &[f64] {
        &self.a
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.a
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.nc, self.nr, |i, j| self[(j, i)])
    }

    /// `self * b`. Column-by-column accumulation so that multi-column
    /// application is bit-identical to column-at-a-time application.
    pub fn mul(&self, b: &Mat) -> Mat {
        assert_eq!(self.nc, b.nr, "matmul shape mismatch");
        let mut c = Mat::zeros(self.nr, b.nc);
        for j in 0..b.nc {
            let bj = b.col(j);
            let cj = c.col_mut(j);
            for (k, &bkj) in bj.iter().enumerate() {
                if bkj == 0.0 {
                    continue;
                }
                let ak = self.col(k);
                for i in 0..self.nr {
                    cj[i] += ak[i] * bkj;
                }
            }
        }
        c
    }

    /// `selfᵀ * b` without materializing the transpose.
    pub fn t_mul(&self, b: &Mat) -> Mat {
        assert_eq!(self.nr, b.nr, "t_mul shape mismatch");
        let mut c = Mat::zeros(self.nc, b.nc);
        for j in 0..b.nc {
            let bj = b.col(j);
            let cj = c.col_mut(j);
            for (i, ci) in cj.iter_mut().enumerate() {
                let ai = self.col(i);
                let mut s = 0.0;
                for k in 0..self.nr {
                    s += ai[k] * bj[k];
                }
                *ci = s;
            }
        }
        c
    }

    /// Gather rows into a new matrix, in the order given.
    pub fn rows(&self, idx: &[usize]) -> Mat {
        let mut m = Mat::zeros(idx.len(), self.nc);
        for j in 0..self.nc {
            let src = self.col(j);
            let dst = m.col_mut(j);
            for (r, &i) in idx.iter().enumerate() {
                dst[r] = src[i];
            }
        }
        m
    }

    /// Gather columns into a new matrix, in the order given.
    pub fn cols(&self, idx: &[usize]) -> Mat {
        let mut m = Mat::zeros(self.nr, idx.len());
        for (c, &j) in idx.iter().enumerate() {
            m.col_mut(c).copy_from_slice(self.col(j));
        }
        m
    }

    /// Gather the submatrix `self[rows, cols]`.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Mat {
        let mut m = Mat::zeros(rows.len(), cols.len());
        for (c, &j) in cols.iter().enumerate() {
            let src = self.col(j);
            let dst = m.col_mut(c);
            for (r, &i) in rows.iter().enumerate() {
                dst[r] = src[i];
            }
        }
        m
    }

    /// Horizontal concatenation `[self, b]`.
    pub fn hcat(&self, b: &Mat) -> Mat {
        assert_eq!(self.nr, b.nr, "hcat row mismatch");
        let mut m = Mat::zeros(self.nr, self.nc + b.nc);
        m.a[..self.a.len()].copy_from_slice(&self.a);
        m.a[self.a.len()..].copy_from_slice(&b.a);
        m
    }

    /// Vertical concatenation `[self; b]`.
    pub fn vcat(&self, b: &Mat) -> Mat {
        assert_eq!(self.nc, b.nc, "vcat col mismatch");
        let mut m = Mat::zeros(self.nr + b.nr, self.nc);
        for j in 0..self.nc {
            m.col_mut(j)[..self.nr].copy_from_slice(self.col(j));
            m.col_mut(j)[self.nr..].copy_from_slice(b.col(j));
        }
        m
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.a {
            *v *= s;
        }
    }

    pub fn scaled(mut self, s: f64) -> Mat {
        self.scale(s);
        self
    }

    pub fn sub(&self, b: &Mat) -> Mat {
        assert_eq!((self.nr, self.nc), (b.nr, b.nc), "sub shape mismatch");
        let mut m = self.clone();
        for (x, y) in m.a.iter_mut().zip(&b.a) {
            *x -= y;
        }
        m
    }

    pub fn add(&self, b: &Mat) -> Mat {
        assert_eq!((self.nr, self.nc), (b.nr, b.nc), "add shape mismatch");
        let mut m = self.clone();
        for (x, y) in m.a.iter_mut().zip(&b.a) {
            *x += y;
        }
        m
    }

    pub fn fro_norm(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.a.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.nr && j < self.nc);
        &self.a[i + j * self.nr]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.nr && j < self.nc);
        &mut self.a[i + j * self.nr]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{}", self.nr, self.nc)?;
        let show_r = self.nr.min(8);
        let show_c = self.nc.min(8);
        for i in 0..show_r {
            write!(f, "  ")?;
            for j in 0..show_c {
                write!(f, "{:>12.5e} ", self[(i, j)])?;
            }
            writeln!(f, "{}", if self.nc > show_c { "..." } else { "" })?;
        }
        if self.nr > show_r {
            writeln!(f, "  ...")?;
        }
        Ok(())
    }
}

/// Euclidean inner product of two equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// True when `idx` has no duplicates and all entries are below `n`.
pub fn valid_index_set(idx: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    for &i in idx {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_matches_hand_computation() {
        let a = Mat::from_row_major(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = Mat::from_row_major(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.mul(&b);
        assert_eq!(c[(0, 0)], 58.0);
        assert_eq!(c[(0, 1)], 64.0);
        assert_eq!(c[(1, 0)], 139.0);
        assert_eq!(c[(1, 1)], 154.0);
    }

    #[test]
    fn t_mul_matches_explicit_transpose() {
        let a = Mat::from_fn(4, 3, |i, j| (i * 3 + j) as f64 * 0.37 - 1.0);
        let b = Mat::from_fn(4, 2, |i, j| (i + j) as f64 * 1.1);
        let c1 = a.t_mul(&b);
        let c2 = a.transpose().mul(&b);
        assert!(c1.sub(&c2).fro_norm() < 1e-14);
    }

    #[test]
    fn gather_and_concat() {
        let a = Mat::from_fn(4, 4, |i, j| (10 * i + j) as f64);
        let r = a.rows(&[2, 0]);
        assert_eq!(r[(0, 1)], 21.0);
        assert_eq!(r[(1, 3)], 3.0);
        let c = a.cols(&[3, 1]);
        assert_eq!(c[(2, 0)], 23.0);
        let h = r.hcat(&c.rows(&[0, 1]));
        assert_eq!(h.ncols(), 6);
        let v = a.vcat(&a);
        assert_eq!(v.nrows(), 8);
        assert_eq!(v[(6, 1)], 21.0);
    }

    #[test]
    fn index_set_validation() {
        assert!(valid_index_set(&[0, 2, 1], 3));
        assert!(!valid_index_set(&[0, 0], 3));
        assert!(!valid_index_set(&[3], 3));
    }
}
