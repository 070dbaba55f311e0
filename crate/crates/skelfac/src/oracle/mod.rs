//! Black-box linear operators: the access contract plus the shipped
//! implementations (dense matrix, log-kernel point cloud, sparse Schur
//! complement).

mod dense;
mod kernel;
mod slab;

pub use dense::{read_dmat, write_dmat, DenseOracle};
pub use kernel::KernelOracle;
pub use slab::{CsrMatrix, SchurSlabOracle};

use crate::mat::{dot, Mat};
use crate::rng::{gaussian, STREAM_PROBE};
use crate::tree::PointSet;

/// Access contract for a black-box operator: block products with the operator
/// and its adjoint, plus optional entry/point/kernel capabilities.
pub trait LinearOracle {
    fn dim(&self) -> usize;
    /// `A * x` for an n-by-s block of vectors.
    fn apply(&self, x: &Mat) -> Mat;
    /// `A* * x`.
    fn apply_adjoint(&self, x: &Mat) -> Mat;
    fn has_entries(&self) -> bool {
        false
    }
    fn entry(&self, _i: usize, _j: usize) -> Option<f64> {
        None
    }
    fn points(&self) -> Option<&PointSet> {
        None
    }
    /// Kernel evaluation between an arbitrary location (2d coordinates;
    /// 1d point sets are embedded at y = 0) and the point behind index `j`.
    fn eval_kernel(&self, _x: &[f64; 2], _j: usize) -> Option<f64> {
        None
    }
}

/// Result of the linearity and adjoint-consistency probes.
#[derive(Debug, Clone)]
pub struct SelfTestReport {
    pub pass: bool,
    pub probes: usize,
    pub linearity_resid: f64,
    pub adjoint_resid: f64,
}

impl std::fmt::Display for SelfTestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (probes: {}, linearity residual {:.3e}, adjoint residual {:.3e})",
            if self.pass { "pass" } else { "FAIL" },
            self.probes,
            self.linearity_resid,
            self.adjoint_resid
        )
    }
}

/// Run seeded linearity and adjoint-consistency probes against an oracle.
pub fn oracle_selftest(o: &dyn LinearOracle, seed: u64) -> SelfTestReport {
    let n = o.dim();
    let probes = 10;
    let mut lin_worst = 0.0f64;
    let mut adj_worst = 0.0f64;
    for k in 0..probes {
        let x = gaussian(n, 1, seed.wrapping_add(3 * k), STREAM_PROBE);
        let y = gaussian(n, 1, seed.wrapping_add(3 * k + 1), STREAM_PROBE);
        let alpha = 0.5 + (k as f64) * 0.25;

        let ax = o.apply(&x);
        let ay = o.apply(&y);
        let mut combo = x.clone().scaled(alpha);
        combo = combo.add(&y);
        let a_combo = o.apply(&combo);
        let expect = ax.clone().scaled(alpha).add(&ay);
        let denom = alpha.abs() * ax.fro_norm() + ay.fro_norm() + 1e-300;
        lin_worst = lin_worst.max(a_combo.sub(&expect).fro_norm() / denom);

        let aty = o.apply_adjoint(&y);
        let lhs = dot(ax.col(0), y.col(0));
        let rhs = dot(x.col(0), aty.col(0));
        let denom = ax.fro_norm() * y.fro_norm() + 1e-300;
        adj_worst = adj_worst.max((lhs - rhs).abs() / denom);
    }
    SelfTestReport {
        pass: lin_worst <= 1e-12 && adj_worst <= 1e-12,
        probes: probes as usize,
        linearity_resid: lin_worst,
        adjoint_resid: adj_worst,
    }
}
