//! Orthonormal bases, nullspaces, and right pseudo-inverses built on
//! column-pivoted QR.

use super::qr::Qr;
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Relative cutoff under which pivoted-QR diagonal magnitudes are treated as
/// numerically zero; they stand in for singular values at f64 precision.
pub const RANK_REL_TOL: f64 = 1e-13;

/// Orthonormal basis for the range of `m`, one column per numerical rank.
///
/// Requires `rows >= cols`. A zero matrix yields a basis with zero columns.
pub fn orthonormal_columns(m: &Mat) -> Mat {
    assert!(
        m.nrows() >= m.ncols(),
        "orthonormal_columns expects rows >= cols"
    );
    if m.ncols() == 0 {
        return Mat::zeros(m.nrows(), 0);
    }
    let qr = Qr::pivoted(m, 0.0, m.ncols());
    let rank = qr.rank(RANK_REL_TOL);
    qr.q_columns(0, rank)
}

/// Orthonormal basis `N` for the nullspace of a wide (or square) matrix:
/// `m * N = 0` to machine precision, with `cols - rank(m)` columns.
pub fn nullspace_basis(m: &Mat) -> Result<Mat> {
    assert!(m.nrows() <= m.ncols(), "nullspace_basis expects rows <= cols");
    let p = m.ncols();
    if m.nrows() == 0 {
        return Ok(Mat::identity(p));
    }
    // QR of the transpose; column pivoting there permutes rows of `m`,
    // which leaves the nullspace unchanged.
    let qr = Qr::pivoted(&m.transpose(), 0.0, m.nrows());
    let rank = qr.rank(RANK_REL_TOL);
    if rank == p {
        return Err(Error::EmptyNullspace {
            rows: m.nrows(),
            cols: p,
        });
    }
    Ok(qr.q_columns(rank, p))
}

/// Right pseudo-inverse of a full-row-rank matrix: `m * pinv(m) = I`.
///
/// Fails with a condition-number diagnostic when `m` is numerically
/// row-rank deficient.
pub fn right_pseudoinverse(m: &Mat) -> Result<Mat> {
    let r = m.nrows();
    let p = m.ncols();
    assert!(r <= p, "right_pseudoinverse expects rows <= cols");
    if r == 0 {
        return Ok(Mat::zeros(p, 0));
    }
    let qr = Qr::pivoted(&m.transpose(), 0.0, r);
    let rank = qr.rank(RANK_REL_TOL);
    if rank < r || qr.steps() < r {
        let diag = qr.diag();
        let cond = if diag.is_empty() || diag[diag.len() - 1] == 0.0 {
            f64::INFINITY
        } else {
            diag[0] / diag[diag.len() - 1]
        };
        return Err(Error::RankDeficient {
            context: "right_pseudoinverse",
            cond,
        });
    }
    // mᵀ P = Q R  =>  m = P Rᵀ Qᵀ  =>  m† = Q R⁻ᵀ Pᵀ.
    let rinv_t = qr.solve_r_lower_t(&Mat::identity(r));
    let mut w = Mat::zeros(p, r);
    for j in 0..r {
        for i in 0..r {
            w[(i, j)] = rinv_t[(i, j)];
        }
    }
    qr.apply_q(&mut w, false);
    // Permute columns back: column pivots index rows of `m`.
    let mut out = Mat::zeros(p, r);
    for (j, &pj) in qr.pivots().iter().take(r).enumerate() {
        for i in 0..p {
            out[(i, pj)] = w[(i, j)];
        }
    }
    Ok(out)
}
