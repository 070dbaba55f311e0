//! Interpolative decompositions via column-pivoted QR with absolute-tolerance
//! truncation.
//!
//! The rank is the first `k` at which the (k+1)-th pivoted-QR diagonal
//! magnitude drops to `atol` or below, capped at `kmax`. Reconstruction
//! residuals can exceed `atol` by the usual pivoted-QR suboptimality factor;
//! downstream bounds budget a factor of 10 for it.

use super::qr::Qr;
use crate::mat::Mat;

/// Result of a column or row interpolative decomposition.
///
/// For a column ID, `skel`/`resid` index columns of the input and
/// `coeffs` has shape `rank x (n - rank)` with
/// `M(:, resid) ≈ M(:, skel) * coeffs`. For a row ID, they index rows,
/// `coeffs` has shape `(m - rank) x rank`, and
/// `M(resid, :) ≈ coeffs * M(skel, :)`.
#[derive(Debug, Clone)]
pub struct IdResult {
    pub skel: Vec<usize>,
    pub resid: Vec<usize>,
    pub coeffs: Mat,
    pub rank: usize,
    /// False when the rank cap was hit before the tolerance was reached.
    pub tol_reached: bool,
}

/// Column ID of `m` at absolute tolerance `atol`, rank capped at `kmax`.
pub fn column_id(m: &Mat, atol: f64, kmax: usize) -> IdResult {
    let n = m.ncols();
    let kcap = kmax.min(n).min(m.nrows());
    let qr = Qr::pivoted(m, atol, kcap);
    let k = qr.steps();
    let skel = qr.pivots()[..k].to_vec();
    let resid = qr.pivots()[k..].to_vec();
    // coeffs solves R11 * T = R12 over the skeleton columns.
    let coeffs = if k == 0 {
        Mat::zeros(0, n)
    } else {
        qr.solve_r_upper(&qr.r12())
    };
    let tol_reached = qr.residual_norm() <= atol;
    IdResult {
        skel,
        resid,
        coeffs,
        rank: k,
        tol_reached,
    }
}

/// Row ID of `m`: the column ID of the transpose with roles transposed.
pub fn row_id(m: &Mat, atol: f64, kmax: usize) -> IdResult {
    let id = column_id(&m.transpose(), atol, kmax);
    IdResult {
        skel: id.skel,
        resid: id.resid,
        coeffs: id.coeffs.transpose(),
        rank: id.rank,
        tol_reached: id.tol_reached,
    }
}

/// Least-squares interpolation of the `resid` rows of `sample` from its
/// `skel` rows: returns `T` minimizing `|| T * sample(skel,:) - sample(resid,:) ||_F`.
///
/// Rank-deficient skeleton blocks get the basic solution (zero coefficients on
/// redundant skeleton rows), keeping entries modest.
pub fn fit_rows(sample: &Mat, skel: &[usize], resid: &[usize]) -> Mat {
    let b = sample.rows(skel); // k_u x w
    let c = sample.rows(resid); // r x w
    if skel.is_empty() || resid.is_empty() {
        return Mat::zeros(resid.len(), skel.len());
    }
    // Solve Bᵀ Tᵀ ≈ Cᵀ through pivoted QR of Bᵀ.
    let bt = b.transpose();
    let qr = Qr::pivoted(&bt, 0.0, b.nrows());
    let rank = qr.rank(super::ops::RANK_REL_TOL).min(qr.steps());
    let mut t = Mat::zeros(resid.len(), skel.len());
    if rank == 0 {
        return t;
    }
    let mut rhs = c.transpose();
    qr.apply_q(&mut rhs, true);
    let top = Mat::from_fn(rank, rhs.ncols(), |i, j| rhs[(i, j)]);
    // Back substitution on the leading rank x rank block of R.
    let r = qr.r();
    let mut y = top;
    for j in 0..y.ncols() {
        for i in (0..rank).rev() {
            let mut s = y[(i, j)];
            for l in i + 1..rank {
                s -= r[(i, l)] * y[(l, j)];
            }
            y[(i, j)] = s / r[(i, i)];
        }
    }
    for (jj, &pj) in qr.pivots().iter().take(rank).enumerate() {
        for (r, _) in resid.iter().enumerate() {
            t[(r, pj)] = y[(jj, r)];
        }
    }
    t
}
