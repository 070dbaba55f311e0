//! Spectral-norm estimation by power iteration on the normal operator.

use crate::mat::Mat;
use crate::rng::{gaussian, STREAM_POWER};

/// Lower-bound estimate of the spectral norm of the operator given by
/// `apply`/`apply_adjoint` on length-`n` vectors.
///
/// Runs `iters` rounds of power iteration on `A* A`; the returned Rayleigh
/// estimate is nondecreasing in `iters` and deterministic for a fixed seed.
pub fn spectral_norm_estimate(
    apply: &mut dyn FnMut(&Mat) -> Mat,
    apply_adjoint: &mut dyn FnMut(&Mat) -> Mat,
    n: usize,
    iters: usize,
    seed: u64,
) -> f64 {
    assert!(iters >= 2, "power iteration needs at least 2 rounds");
    if n == 0 {
        return 0.0;
    }
    let mut v = gaussian(n, 1, seed, STREAM_POWER);
    let nv = v.fro_norm();
    if nv == 0.0 {
        return 0.0;
    }
    v.scale(1.0 / nv);
    let mut estimate = 0.0;
    for _ in 0..iters {
        let w = apply(&v);
        estimate = w.fro_norm();
        if estimate == 0.0 {
            return 0.0;
        }
        v = apply_adjoint(&w);
        let nv = v.fro_norm();
        if nv == 0.0 {
            return estimate;
        }
        v.scale(1.0 / nv);
    }
    estimate
}

/// Convenience wrapper for a dense matrix.
pub fn spectral_norm_dense(m: &Mat, iters: usize, seed: u64) -> f64 {
    let a = m.clone();
    let at = m.clone();
    spectral_norm_estimate(
        &mut |x| a.mul(x),
        &mut |x| at.t_mul(x),
        m.ncols(),
        iters,
        seed,
    )
}
