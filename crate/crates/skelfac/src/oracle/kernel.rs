//! Log-kernel point-cloud oracle: `A(i,j) = log|x_i - x_j|` off the
//! diagonal, a configurable shift on it.
//!
//! Products are evaluated densely (the matrix is materialized once), which is
//! the intended desk-scale stand-in for a fast summation scheme.

use super::LinearOracle;
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::tree::PointSet;

pub struct KernelOracle {
    points: PointSet,
    diag_shift: f64,
    a: Mat,
}

impl KernelOracle {
    /// Build the 2d log kernel over `points` (1d point sets are treated as
    /// embedded on the line y = 0). `diag_shift` lands on the diagonal; zero
    /// keeps the raw kernel matrix, a positive shift is a documented knob for
    /// ill-conditioned geometries.
    pub fn log2d(points: PointSet, diag_shift: f64) -> Result<KernelOracle> {
        let n = points.len();
        let mut a = Mat::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    a[(i, j)] = diag_shift;
                    continue;
                }
                let d = points.dist(i, j);
                if d == 0.0 {
                    return Err(Error::DuplicatePoints {
                        i: i.min(j),
                        j: i.max(j),
                    });
                }
                a[(i, j)] = d.ln();
            }
        }
        Ok(KernelOracle {
            points,
            diag_shift,
            a,
        })
    }

    pub fn diag_shift(&self) -> f64 {
        self.diag_shift
    }

    pub fn matrix(&self) -> &Mat {
        &self.a
    }
}

impl LinearOracle for KernelOracle {
    fn dim(&self) -> usize {
        self.points.len()
    }
    fn apply(&self, x: &Mat) -> Mat {
        self.a.mul(x)
    }
    // The log kernel is symmetric; adjoint application goes through the same
    // code path on purpose.
    fn apply_adjoint(&self, x: &Mat) -> Mat {
        self.a.mul(x)
    }
    fn has_entries(&self) -> bool {
        true
    }
    fn entry(&self, i: usize, j: usize) -> Option<f64> {
        Some(self.a[(i, j)])
    }
    fn points(&self) -> Option<&PointSet> {
        Some(&self.points)
    }
    fn eval_kernel(&self, x: &[f64; 2], j: usize) -> Option<f64> {
        let p = self.points.point(j);
        let py = if self.points.dim() >= 2 { p[1] } else { 0.0 };
        let d = ((x[0] - p[0]).powi(2) + (x[1] - py).powi(2)).sqrt();
        Some(d.ln())
    }
}
