//! Application and solves with a completed factorization.
//!
//! `K = V_1 ... V_q D W_q ... W_1`, every factor an identity-plus-block or a
//! block-diagonal piece, so products and solves sweep the stored blocks once
//! per column: cost proportional to stored scalars.

use super::SkelFactorization;
use crate::mat::Mat;

impl SkelFactorization {
    /// `K * x`.
    pub fn apply(&self, x: &Mat) -> Mat {
        assert_eq!(x.nrows(), self.n, "factor apply dimension");
        let mut v = x.clone();
        // W_q ... W_1 x: step 1 first; each W = U F applies F first.
        for step in &self.steps {
            if let Some(f) = &step.interp_cols {
                f.apply(&mut v, false, false).expect("shape");
            }
            if let Some(u) = &step.elim_cols {
                u.apply(&mut v, false, false).expect("shape");
            }
        }
        self.block_diag(&mut v, false);
        // V_1 ... V_q: step q innermost; each V = E L applies L first.
        for step in self.steps.iter().rev() {
            if let Some(l) = &step.elim_rows {
                l.apply(&mut v, false, false).expect("shape");
            }
            if let Some(e) = &step.interp_rows {
                e.apply(&mut v, false, false).expect("shape");
            }
        }
        v
    }

    /// `K* * x`.
    pub fn apply_adjoint(&self, x: &Mat) -> Mat {
        assert_eq!(x.nrows(), self.n, "factor apply dimension");
        let mut v = x.clone();
        // K* = W_1* ... W_q* D* V_q* ... V_1*; V* = L* E* applies E* first.
        for step in &self.steps {
            if let Some(e) = &step.interp_rows {
                e.apply(&mut v, false, true).expect("shape");
            }
            if let Some(l) = &step.elim_rows {
                l.apply(&mut v, false, true).expect("shape");
            }
        }
        self.block_diag(&mut v, true);
        for step in self.steps.iter().rev() {
            if let Some(u) = &step.elim_cols {
                u.apply(&mut v, false, true).expect("shape");
            }
            if let Some(f) = &step.interp_cols {
                f.apply(&mut v, false, true).expect("shape");
            }
        }
        v
    }

    /// `K^{-1} * b`.
    pub fn solve(&self, b: &Mat) -> Mat {
        assert_eq!(b.nrows(), self.n, "factor solve dimension");
        let mut v = b.clone();
        // K^{-1} = W_1^{-1} ... W_q^{-1} D^{-1} V_q^{-1} ... V_1^{-1}.
        for step in &self.steps {
            if let Some(e) = &step.interp_rows {
                e.apply(&mut v, true, false).expect("shape");
            }
            if let Some(l) = &step.elim_rows {
                l.apply(&mut v, true, false).expect("shape");
            }
        }
        self.block_diag_solve(&mut v, false);
        for step in self.steps.iter().rev() {
            if let Some(u) = &step.elim_cols {
                u.apply(&mut v, true, false).expect("shape");
            }
            if let Some(f) = &step.interp_cols {
                f.apply(&mut v, true, false).expect("shape");
            }
        }
        v
    }

    /// `K^{-*} * b`.
    pub fn solve_adjoint(&self, b: &Mat) -> Mat {
        assert_eq!(b.nrows(), self.n, "factor solve dimension");
        let mut v = b.clone();
        // K^{-*} = V_1^{-*} ... V_q^{-*} D^{-*} W_q^{-*} ... W_1^{-*}.
        for step in &self.steps {
            if let Some(f) = &step.interp_cols {
                f.apply(&mut v, true, true).expect("shape");
            }
            if let Some(u) = &step.elim_cols {
                u.apply(&mut v, true, true).expect("shape");
            }
        }
        self.block_diag_solve(&mut v, true);
        for step in self.steps.iter().rev() {
            if let Some(l) = &step.elim_rows {
                l.apply(&mut v, true, true).expect("shape");
            }
            if let Some(e) = &step.interp_rows {
                e.apply(&mut v, true, true).expect("shape");
            }
        }
        v
    }

    fn block_diag(&self, v: &mut Mat, transposed: bool) {
        for step in &self.steps {
            if step.idx_resid.is_empty() {
                continue;
            }
            let rows = v.rows(&step.idx_resid);
            let out = step.pivot_lu.matmul(&rows, transposed);
            scatter_rows(v, &step.idx_resid, &out);
        }
        if !self.skel.is_empty() {
            let rows = v.rows(&self.skel);
            let out = self.final_lu.matmul(&rows, transposed);
            scatter_rows(v, &self.skel, &out);
        }
    }

    fn block_diag_solve(&self, v: &mut Mat, transposed: bool) {
        for step in &self.steps {
            if step.idx_resid.is_empty() {
                continue;
            }
            let rows = v.rows(&step.idx_resid);
            let out = step.pivot_lu.solve(&rows, transposed);
            scatter_rows(v, &step.idx_resid, &out);
        }
        if !self.skel.is_empty() {
            let rows = v.rows(&self.skel);
            let out = self.final_lu.solve(&rows, transposed);
            scatter_rows(v, &self.skel, &out);
        }
    }
}

fn scatter_rows(v: &mut Mat, idx: &[usize], rows: &Mat) {
    for j in 0..v.ncols() {
        let rj = rows.col(j);
        for (r, &i) in idx.iter().enumerate() {
            v[(i, j)] = rj[r];
        }
    }
}
