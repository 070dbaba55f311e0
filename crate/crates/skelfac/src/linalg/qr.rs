//! Householder QR, with and without column pivoting.
//!
//! Reflectors are stored LAPACK-style: the strict lower triangle of `factors`
//! holds the tail of each normalized reflector (leading entry implicitly 1),
//! `tau` the scalar coefficients, and the upper triangle holds R.

use crate::mat::Mat;

pub struct Qr {
    factors: Mat,
    tau: Vec<f64>,
    /// Original column index processed at each step (identity when unpivoted).
    pivots: Vec<usize>,
    /// |R(k,k)| at each processed step, i.e. the pivot residual norms.
    diag: Vec<f64>,
    /// Number of Householder steps performed.
    steps: usize,
}

/// Compute a Householder reflector for `x`: returns `(tau, beta)` and
/// overwrites `x` with the normalized reflector tail (`x[0]` is ignored by
/// callers; the leading reflector entry is implicitly one). `H x = beta e1`.
fn make_reflector(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let sigma: f64 = x[1..].iter().map(|v| v * v).sum();
    if sigma == 0.0 {
        // Already upper triangular in this column; H = I.
        return (0.0, alpha);
    }
    let mu = (alpha * alpha + sigma).sqrt();
    let v0 = if alpha <= 0.0 {
        alpha - mu
    } else {
        -sigma / (alpha + mu)
    };
    let beta = alpha - v0;
    let tau = 2.0 * v0 * v0 / (sigma + v0 * v0);
    for v in x[1..].iter_mut() {
        *v /= v0;
    }
    x[0] = 1.0;
    (tau, beta)
}

/// Apply reflector `k` (stored in `factors`) to columns of `x` from the left.
fn apply_reflector(factors: &Mat, tau: &[f64], k: usize, x: &mut Mat) {
    let t = tau[k];
    if t == 0.0 {
        return;
    }
    let m = factors.nrows();
    let vcol = factors.col(k);
    for j in 0..x.ncols() {
        let xj = x.col_mut(j);
        let mut s = xj[k];
        for i in k + 1..m {
            s += vcol[i] * xj[i];
        }
        s *= t;
        xj[k] -= s;
        for i in k + 1..m {
            xj[i] -= s * vcol[i];
        }
    }
}

impl Qr {
    /// Unpivoted QR of `m`, processing all `min(rows, cols)` columns.
    pub fn new(m: &Mat) -> Qr {
        Qr::with_pivoting(m, false, 0.0, m.nrows().min(m.ncols()))
    }

    /// Column-pivoted QR of `m`, stopping after `max_steps` reflectors or as
    /// soon as the largest residual column norm drops to `stop_tol` or below.
    pub fn pivoted(m: &Mat, stop_tol: f64, max_steps: usize) -> Qr {
        Qr::with_pivoting(m, true, stop_tol, max_steps)
    }

    fn with_pivoting(m: &Mat, pivot: bool, stop_tol: f64, max_steps: usize) -> Qr {
        let nr = m.nrows();
        let nc = m.ncols();
        let mut factors = m.clone();
        let kcap = max_steps.min(nr).min(nc);
        let mut tau = Vec::with_capacity(kcap);
        let mut pivots: Vec<usize> = (0..nc).collect();
        let mut diag = Vec::with_capacity(kcap);

        let mut k = 0;
        while k < kcap {
            if pivot {
                // Residual column norms, recomputed each step for robustness.
                let mut best = k;
                let mut best_norm = -1.0;
                for j in k..nc {
                    let cj = factors.col(j);
                    let norm: f64 = cj[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > best_norm {
                        best_norm = norm;
                        best = j;
                    }
                }
                if best_norm <= stop_tol {
                    break;
                }
                if best != k {
                    swap_cols(&mut factors, k, best);
                    pivots.swap(k, best);
                }
            }
            // Form the reflector on rows k.. of column k.
            let (t, beta) = {
                let ck = factors.col_mut(k);
                let (tau_k, beta) = make_reflector(&mut ck[k..]);
                (tau_k, beta)
            };
            tau.push(t);
            diag.push(beta.abs());
            // Apply to trailing columns.
            if t != 0.0 {
                let vcol = factors.col(k).to_vec();
                for j in k + 1..nc {
                    let xptr = factors.col_mut(j);
                    let mut s = xptr[k];
                    for i in k + 1..nr {
                        s += vcol[i] * xptr[i];
                    }
                    s *= t;
                    xptr[k] -= s;
                    for i in k + 1..nr {
                        xptr[i] -= s * vcol[i];
                    }
                }
            }
            factors.col_mut(k)[k] = beta;
            k += 1;
        }
        Qr {
            factors,
            tau,
            pivots,
            diag,
            steps: k,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Magnitudes of the R diagonal in processing order.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Largest residual column norm left after all processed steps.
    pub fn residual_norm(&self) -> f64 {
        let nr = self.factors.nrows();
        let nc = self.factors.ncols();
        let k = self.steps;
        let mut worst = 0.0f64;
        for j in k..nc {
            let cj = self.factors.col(j);
            let norm: f64 = cj[k..nr].iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(norm);
        }
        worst
    }

    /// Count of diagonal magnitudes above `rel_tol * |R(0,0)|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        if self.diag.is_empty() {
            return 0;
        }
        let cutoff = rel_tol * self.diag[0];
        self.diag.iter().take_while(|&&d| d > cutoff).count()
    }

    /// `Q * x` (or `Qᵀ * x`) in place; `x` must have as many rows as the input.
    pub fn apply_q(&self, x: &mut Mat, transpose: bool) {
        assert_eq!(x.nrows(), self.factors.nrows(), "apply_q row mismatch");
        if transpose {
            for k in 0..self.steps {
                apply_reflector(&self.factors, &self.tau, k, x);
            }
        } else {
            for k in (0..self.steps).rev() {
                apply_reflector(&self.factors, &self.tau, k, x);
            }
        }
    }

    /// Columns `lo..hi` of the full orthogonal factor Q.
    pub fn q_columns(&self, lo: usize, hi: usize) -> Mat {
        let m = self.factors.nrows();
        let mut x = Mat::zeros(m, hi - lo);
        for (c, j) in (lo..hi).enumerate() {
            x[(j, c)] = 1.0;
        }
        self.apply_q(&mut x, false);
        x
    }

    /// The upper-triangular factor, trimmed to `steps x ncols` (columns in
    /// pivot order).
    pub fn r(&self) -> Mat {
        let k = self.steps;
        let nc = self.factors.ncols();
        Mat::from_fn(k, nc, |i, j| {
            if j >= i {
                self.factors[(i, j)]
            } else {
                0.0
            }
        })
    }

    /// Solve `R(0..k, 0..k) * x = b` by back substitution, where `k = steps`.
    pub fn solve_r_upper(&self, b: &Mat) -> Mat {
        let k = self.steps;
        assert_eq!(b.nrows(), k, "solve_r_upper shape");
        let mut x = b.clone();
        for j in 0..b.ncols() {
            let xj = x.col_mut(j);
            for i in (0..k).rev() {
                let mut s = xj[i];
                for l in i + 1..k {
                    s -= self.factors[(i, l)] * xj[l];
                }
                xj[i] = s / self.factors[(i, i)];
            }
        }
        x
    }

    /// Solve `R(0..k, 0..k)ᵀ * x = b` by forward substitution.
    pub fn solve_r_lower_t(&self, b: &Mat) -> Mat {
        let k = self.steps;
        assert_eq!(b.nrows(), k, "solve_r_lower_t shape");
        let mut x = b.clone();
        for j in 0..b.ncols() {
            let xj = x.col_mut(j);
            for i in 0..k {
                let mut s = xj[i];
                for l in 0..i {
                    s -= self.factors[(l, i)] * xj[l];
                }
                xj[i] = s / self.factors[(i, i)];
            }
        }
        x
    }

    /// Rows `0..steps` of the processed-but-unreduced trailing block, i.e.
    /// R12 when the factorization stopped early. Columns are returned in the
    /// current pivot order starting at column `steps`.
    pub fn r12(&self) -> Mat {
        let k = self.steps;
        let nc = self.factors.ncols();
        Mat::from_fn(k, nc - k, |i, j| self.factors[(i, k + j)])
    }
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    let nr = m.nrows();
    for i in 0..nr {
        let x = m[(i, a)];
        m[(i, a)] = m[(i, b)];
        m[(i, b)] = x;
    }
}
