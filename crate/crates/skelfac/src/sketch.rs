//! Seeded sketches of a black-box operator and the post-processors that make
//! factorization possible: block nullification (pure far-field samples),
//! block extraction (explicit sub-blocks via right pseudo-inverses), and
//! in-place sketch updates under elimination.
//!
//! The module invariant is sketch consistency: after any prefix of
//! elimination updates, `Y = A_g * Omega` and `Z = A_g* * Psi` hold for the
//! g-times-eliminated operator `A_g`, so all samples are drawn exactly once.

use crate::error::{Error, Result};
use crate::linalg::{nullspace_basis, right_pseudoinverse, ElimBlock};
use crate::mat::Mat;
use crate::oracle::LinearOracle;
use crate::rng::{gaussian, STREAM_OMEGA, STREAM_PSI};
use crate::tree::BoxTree;

/// Which of the two sketch pairs an operation reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Rows of the operator via `(Y, Omega)`.
    Forward,
    /// Rows of the adjoint via `(Z, Psi)`.
    Adjoint,
}

/// The sketch quadruple `(Omega, Psi, Y, Z)` plus bookkeeping.
///
/// Single-writer structure: elimination updates are applied serially in
/// factorization order. Read-only post-processing (far-field samples,
/// extraction) on disjoint boxes is safe between updates.
pub struct SketchSet {
    pub p: usize,
    pub omega: Mat,
    pub psi: Mat,
    pub y: Mat,
    pub z: Mat,
    pub seed: u64,
    /// Number of elimination updates applied so far.
    pub generation: u64,
}

/// Pure far-field sample of one box, produced by block nullification.
#[derive(Debug, Clone)]
pub struct NullifiedSample {
    pub box_id: usize,
    pub side: Side,
    /// `|active(box)| x width` far-field sample block.
    pub sample: Mat,
    pub width: usize,
}

/// Explicit sub-block recovered by block extraction.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub block: Mat,
    /// `|| Omega_src * pinv - I ||_F`, the pseudo-inverse quality.
    pub pinv_residual: f64,
    pub ill_conditioned: bool,
}

/// Per-box residual-coupling estimate for one processed level.
#[derive(Debug, Clone)]
pub struct CouplingEstimate {
    pub box_id: usize,
    pub forward: f64,
    pub adjoint: f64,
}

impl SketchSet {
    /// Draw `p` Gaussian test vectors per side and sample the operator once.
    pub fn build(o: &dyn LinearOracle, p: usize, seed: u64) -> Result<SketchSet> {
        let n = o.dim();
        if p > n {
            return Err(Error::InsufficientSamples {
                context: "build_sketches: p exceeds operator dimension".into(),
                needed: p,
                available: n,
            });
        }
        let omega = gaussian(n, p, seed, STREAM_OMEGA);
        let psi = gaussian(n, p, seed, STREAM_PSI);
        let y = o.apply(&omega);
        let z = o.apply_adjoint(&psi);
        Ok(SketchSet {
            p,
            omega,
            psi,
            y,
            z,
            seed,
            generation: 0,
        })
    }

    fn test_matrix(&self, side: Side) -> &Mat {
        match side {
            Side::Forward => &self.omega,
            Side::Adjoint => &self.psi,
        }
    }

    fn sample_matrix(&self, side: Side) -> &Mat {
        match side {
            Side::Forward => &self.y,
            Side::Adjoint => &self.z,
        }
    }

    /// Far-field sample of box `b`: nullify the test-matrix rows of the box
    /// and its active neighbors, keep at most `width_cap` columns.
    ///
    /// The result equals `A_g(active(b), far) * Omega(far, :) * N'` for the
    /// nullspace basis `N'`, i.e. near-field and self contributions cancel
    /// exactly.
    pub fn far_field_sample(
        &self,
        tree: &BoxTree,
        b: usize,
        side: Side,
        width_cap: usize,
    ) -> Result<NullifiedSample> {
        let rows_b = tree.active(b).to_vec();
        let mut nf = rows_b.clone();
        nf.extend(tree.near_active(b));
        if self.p <= nf.len() {
            return Err(Error::InsufficientSamples {
                context: format!("far_field_sample for box {b}"),
                needed: nf.len() + 1,
                available: self.p,
            });
        }
        let omega_nf = self.test_matrix(side).rows(&nf);
        let basis = nullspace_basis(&omega_nf)?;
        let width = basis.ncols().min(width_cap);
        let kept: Vec<usize> = (0..width).collect();
        let basis = basis.cols(&kept);
        let sample = self.sample_matrix(side).rows(&rows_b).mul(&basis);
        Ok(NullifiedSample {
            box_id: b,
            side,
            sample,
            width,
        })
    }

    /// Recover `A_g(target_rows, source_cols)` (forward) or
    /// `A_g(source_cols, target_rows)` (adjoint side, via the adjoint
    /// sketches). Valid when the current operator's `target_rows` vanish
    /// outside `source_cols`; leakage is amplified by the pseudo-inverse
    /// norm and surfaces in `pinv_residual`.
    pub fn extract_block(
        &self,
        target_rows: &[usize],
        source_cols: &[usize],
        side: Side,
        oversampling: usize,
    ) -> Result<Extraction> {
        if self.p < source_cols.len() + oversampling {
            return Err(Error::InsufficientSamples {
                context: "extract_block".into(),
                needed: source_cols.len() + oversampling,
                available: self.p,
            });
        }
        let test_rows = self.test_matrix(side).rows(source_cols);
        let pinv = right_pseudoinverse(&test_rows)?;
        let pinv_residual = test_rows
            .mul(&pinv)
            .sub(&Mat::identity(source_cols.len()))
            .fro_norm();
        let sample_rows = self.sample_matrix(side).rows(target_rows);
        let block = match side {
            Side::Forward => sample_rows.mul(&pinv),
            Side::Adjoint => sample_rows.mul(&pinv).transpose(),
        };
        Ok(Extraction {
            block,
            pinv_residual,
            ill_conditioned: pinv_residual > 1e-8,
        })
    }

    /// Update all four matrices for one elimination pair `(V, W)`, so the
    /// consistency invariant holds for `A_{g+1} = V^{-1} A_g W^{-1}`:
    /// `Omega <- W Omega`, `Y <- V^{-1} Y`, `Psi <- V* Psi`, `Z <- W^{-*} Z`.
    pub fn update_elim(&mut self, v: Option<&ElimBlock>, w: Option<&ElimBlock>) -> Result<()> {
        if let Some(v) = v {
            v.apply(&mut self.y, true, false)?;
            v.apply(&mut self.psi, false, true)?;
        }
        if let Some(w) = w {
            w.apply(&mut self.omega, false, false)?;
            w.apply(&mut self.z, true, true)?;
        }
        self.generation += 1;
        Ok(())
    }

    /// Residual-coupling estimates for every box processed on a level:
    /// a far-field sample over the eliminated rows, with the box's own
    /// skeleton and near field nullified, scaled by `1/sqrt(width)`.
    pub fn coupling_estimates(
        &self,
        tree: &BoxTree,
        boxes_resid: &[(usize, Vec<usize>)],
    ) -> Result<Vec<CouplingEstimate>> {
        let mut out = Vec::with_capacity(boxes_resid.len());
        for (b, resid) in boxes_resid {
            let mut nullify = resid.clone();
            nullify.extend_from_slice(tree.active(*b));
            nullify.extend(tree.near_active(*b));
            if self.p <= nullify.len() {
                return Err(Error::InsufficientSamples {
                    context: format!("coupling estimate for box {b}"),
                    needed: nullify.len() + 1,
                    available: self.p,
                });
            }
            let mut est = [0.0f64; 2];
            for (slot, side) in [(0usize, Side::Forward), (1, Side::Adjoint)] {
                let basis = nullspace_basis(&self.test_matrix(side).rows(&nullify))?;
                let width = basis.ncols();
                let sample = self.sample_matrix(side).rows(resid).mul(&basis);
                est[slot] = sample.fro_norm() / (width.max(1) as f64).sqrt();
            }
            out.push(CouplingEstimate {
                box_id: *b,
                forward: est[0],
                adjoint: est[1],
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::DenseOracle;
    use crate::rng::gaussian;
    use crate::tree::{BoxTree, PointSet};

    fn equispaced_tree(n: usize, m: usize) -> BoxTree {
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        BoxTree::build(&PointSet::from_1d(&xs).unwrap(), m).unwrap()
    }

    #[test]
    fn build_is_definitional() {
        let m = gaussian(32, 32, 1, 0);
        let o = DenseOracle::new(m.clone());
        let s = SketchSet::build(&o, 8, 7).unwrap();
        assert_eq!(s.y, m.mul(&s.omega));
        assert_eq!(s.z, m.t_mul(&s.psi));
        assert_eq!(s.generation, 0);
    }

    #[test]
    fn full_rank_sketch_determines_operator() {
        let n = 24;
        let m = gaussian(n, n, 2, 0);
        let o = DenseOracle::new(m.clone());
        let s = SketchSet::build(&o, n, 3).unwrap();
        let lu = crate::linalg::LuFactors::factor(&s.omega.transpose()).unwrap();
        // A = Y Omega^{-1} = (Omega^{-T} Y^T)^T
        let a = lu.solve(&s.y.transpose(), false).transpose();
        assert!(a.sub(&m).fro_norm() <= 1e-10 * m.fro_norm());
    }

    #[test]
    fn zero_operator_has_zero_sketches() {
        let o = DenseOracle::new(Mat::zeros(16, 16));
        let s = SketchSet::build(&o, 4, 1).unwrap();
        assert_eq!(s.y.fro_norm(), 0.0);
        assert_eq!(s.z.fro_norm(), 0.0);
    }

    #[test]
    fn p_exceeding_dimension_is_rejected() {
        let o = DenseOracle::new(Mat::identity(8));
        assert!(matches!(
            SketchSet::build(&o, 9, 1),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn nullified_rows_vanish() {
        // Structured test matrix: Omega * N' has exactly-zero rows at the
        // nullified indices.
        let n = 128;
        let tree = equispaced_tree(n, 16);
        let o = DenseOracle::new(gaussian(n, n, 4, 0));
        let p = 3 * 16 + 20;
        let s = SketchSet::build(&o, p, 5).unwrap();
        let leaf = tree.level_order(tree.depth())[1];
        let mut nf = tree.active(leaf).to_vec();
        nf.extend(tree.near_active(leaf));
        let basis = nullspace_basis(&s.omega.rows(&nf)).unwrap();
        let mixed = s.omega.mul(&basis);
        let zeroed = mixed.rows(&nf);
        assert!(zeroed.fro_norm() <= 1e-12 * s.omega.fro_norm());
    }

    #[test]
    fn far_field_sample_matches_explicit_structured_test_matrix() {
        let n = 128;
        let tree = equispaced_tree(n, 16);
        let a = gaussian(n, n, 6, 0);
        let o = DenseOracle::new(a.clone());
        let p = 3 * 16 + 24;
        let s = SketchSet::build(&o, p, 8).unwrap();
        for &b in &tree.level_order(tree.depth())[..4] {
            let rows_b = tree.active(b).to_vec();
            let mut nf = rows_b.clone();
            nf.extend(tree.near_active(b));
            let far: Vec<usize> = (0..n).filter(|i| !nf.contains(i)).collect();
            let got = s.far_field_sample(&tree, b, Side::Forward, 24).unwrap();
            // Explicit route: A(b, far) * (Omega * N')(far, :)
            let basis = nullspace_basis(&s.omega.rows(&nf)).unwrap();
            let kept: Vec<usize> = (0..got.width).collect();
            let basis = basis.cols(&kept);
            let mixed = s.omega.mul(&basis);
            let expect = a.submatrix(&rows_b, &far).mul(&mixed.rows(&far));
            let err = got.sample.sub(&expect).fro_norm();
            assert!(err <= 1e-11 * expect.fro_norm().max(1.0), "box {b}: {err}");
        }
    }

    #[test]
    fn far_field_sample_of_block_diagonal_operator_is_zero() {
        // Operator with no far-field coupling at all: block diagonal over
        // three leaves, so every far sample must vanish.
        let n = 48;
        let tree = equispaced_tree(n, 16);
        let mut m = Mat::zeros(n, n);
        for blk in 0..3 {
            for i in 0..16 {
                for j in 0..16 {
                    m[(blk * 16 + i, blk * 16 + j)] = crate::rng::standard_normal(
                        9,
                        0,
                        (blk * 256 + i * 16 + j) as u64,
                    );
                }
            }
        }
        let o = DenseOracle::new(m);
        let s = SketchSet::build(&o, 44, 10).unwrap();
        let leaf = tree.level_order(tree.depth())[0];
        let got = s.far_field_sample(&tree, leaf, Side::Forward, 8).unwrap();
        assert!(got.sample.fro_norm() <= 1e-12 * s.y.fro_norm().max(1.0));
    }

    #[test]
    fn insufficient_samples_reports_deficit() {
        let n = 64;
        let tree = equispaced_tree(n, 16);
        let o = DenseOracle::new(gaussian(n, n, 11, 0));
        let s = SketchSet::build(&o, 20, 12).unwrap(); // 20 < 3*16
        let leaf = tree.level_order(tree.depth())[1];
        match s.far_field_sample(&tree, leaf, Side::Forward, 8) {
            Err(Error::InsufficientSamples { needed, available, .. }) => {
                assert!(needed > available);
            }
            other => panic!("expected insufficient samples, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn extract_single_diagonal_block() {
        let n = 32;
        let mut m = Mat::zeros(n, n);
        for i in 0..8 {
            for j in 0..8 {
                m[(16 + i, 16 + j)] = (i + 2 * j) as f64 - 3.5;
            }
        }
        let o = DenseOracle::new(m.clone());
        let s = SketchSet::build(&o, 20, 13).unwrap();
        let idx: Vec<usize> = (16..24).collect();
        let got = s.extract_block(&idx, &idx, Side::Forward, 10).unwrap();
        let expect = m.submatrix(&idx, &idx);
        assert!(got.block.sub(&expect).fro_norm() <= 1e-12 * expect.fro_norm());
        let gota = s.extract_block(&idx, &idx, Side::Adjoint, 10).unwrap();
        assert!(gota.block.sub(&expect).fro_norm() <= 1e-12 * expect.fro_norm());
    }

    #[test]
    fn block_tridiagonal_extraction_recovers_every_block() {
        // 8 diagonal blocks of size 16, coupling only between adjacent
        // blocks; p = 3*16 + 8 samples suffice for every admissible block.
        let nb = 8;
        let bs = 16;
        let n = nb * bs;
        let mut m = Mat::zeros(n, n);
        let mut ctr = 0u64;
        for bi in 0..nb {
            for bj in 0..nb {
                if (bi as isize - bj as isize).abs() <= 1 {
                    for i in 0..bs {
                        for j in 0..bs {
                            m[(bi * bs + i, bj * bs + j)] =
                                crate::rng::standard_normal(21, 0, ctr);
                            ctr += 1;
                        }
                    }
                }
            }
        }
        let o = DenseOracle::new(m.clone());
        let s = SketchSet::build(&o, 3 * bs + 8, 22).unwrap();
        for bi in 0..nb {
            let rows: Vec<usize> = (bi * bs..(bi + 1) * bs).collect();
            let lo = bi.saturating_sub(1) * bs;
            let hi = ((bi + 2).min(nb)) * bs;
            let cols: Vec<usize> = (lo..hi).collect();
            let got = s.extract_block(&rows, &cols, Side::Forward, 8).unwrap();
            let expect = m.submatrix(&rows, &cols);
            let err = got.block.sub(&expect).fro_norm() / expect.fro_norm();
            assert!(err <= 1e-10, "block row {bi}: {err}");
            // adjoint route recovers the transposed-orientation block
            let gota = s.extract_block(&rows, &cols, Side::Adjoint, 8).unwrap();
            let expect_a = m.submatrix(&cols, &rows);
            let erra = gota.block.sub(&expect_a).fro_norm() / expect_a.fro_norm();
            assert!(erra <= 1e-10, "adjoint block row {bi}: {erra}");
        }
    }

    #[test]
    fn extraction_error_scales_with_far_field_leak() {
        // Rows with a planted far-field leak of norm eps: extraction error
        // stays O(eps * ||pinv||).
        let n = 96;
        let bs = 16;
        let mut base = Mat::zeros(n, n);
        for i in 0..bs {
            for j in 0..bs {
                base[(i, j)] = crate::rng::standard_normal(31, 0, (i * bs + j) as u64);
            }
        }
        let rows: Vec<usize> = (0..bs).collect();
        let cols: Vec<usize> = (0..bs).collect();
        let mut prev_err = 0.0;
        for (k, eps) in [(0u64, 1e-8), (1, 1e-4)] {
            let mut m = base.clone();
            let leak = gaussian(bs, n - 2 * bs, 100 + k, 0);
            let scale = eps / leak.fro_norm();
            for i in 0..bs {
                for j in 0..n - 2 * bs {
                    m[(i, 2 * bs + j)] = leak[(i, j)] * scale;
                }
            }
            let o = DenseOracle::new(m.clone());
            let s = SketchSet::build(&o, 3 * bs + 10, 200 + k).unwrap();
            let got = s.extract_block(&rows, &cols, Side::Forward, 10).unwrap();
            let err = got.block.sub(&m.submatrix(&rows, &cols)).fro_norm();
            // amplification beyond eps stays modest for Gaussian pinv
            assert!(err <= 100.0 * eps, "eps {eps}: err {err}");
            assert!(err > prev_err);
            prev_err = err;
        }
    }

    #[test]
    fn identity_update_leaves_sketches_unchanged() {
        let o = DenseOracle::new(gaussian(24, 24, 14, 0));
        let mut s = SketchSet::build(&o, 12, 15).unwrap();
        let y0 = s.y.clone();
        s.update_elim(None, None).unwrap();
        assert_eq!(s.y, y0);
        assert_eq!(s.generation, 1);
    }

    #[test]
    fn one_step_update_matches_explicit_operator() {
        let n = 48;
        let a = gaussian(n, n, 16, 0);
        let o = DenseOracle::new(a.clone());
        let mut s = SketchSet::build(&o, 30, 17).unwrap();
        let resid: Vec<usize> = (0..6).collect();
        let skel: Vec<usize> = (6..16).collect();
        let v = ElimBlock::new(gaussian(6, 10, 18, 0), resid.clone(), skel.clone());
        let w = ElimBlock::new(gaussian(10, 6, 19, 0), skel.clone(), resid.clone());
        s.update_elim(Some(&v), Some(&w)).unwrap();
        // Explicit A_1 = V^{-1} A W^{-1}
        let mut a1 = a.clone();
        v.apply(&mut a1, true, false).unwrap();
        w.apply_right(&mut a1, true).unwrap();
        assert!(
            s.y.sub(&a1.mul(&s.omega)).fro_norm()
                <= 1e-12 * a1.fro_norm() * s.omega.fro_norm()
        );
        assert!(
            s.z.sub(&a1.t_mul(&s.psi)).fro_norm()
                <= 1e-12 * a1.fro_norm() * s.psi.fro_norm()
        );
    }

    #[test]
    fn two_step_updates_compose() {
        let n = 48;
        let a = gaussian(n, n, 26, 0);
        let o = DenseOracle::new(a.clone());
        let mut s = SketchSet::build(&o, 30, 27).unwrap();
        let mut a_g = a.clone();
        for k in 0..2u64 {
            let base = 8 * k as usize;
            let resid: Vec<usize> = (base..base + 4).collect();
            let skel: Vec<usize> = (base + 4..base + 12).collect();
            let v = ElimBlock::new(gaussian(4, 8, 30 + k, 0), resid.clone(), skel.clone());
            let w = ElimBlock::new(gaussian(8, 4, 40 + k, 0), skel.clone(), resid.clone());
            s.update_elim(Some(&v), Some(&w)).unwrap();
            v.apply(&mut a_g, true, false).unwrap();
            w.apply_right(&mut a_g, true).unwrap();
        }
        assert_eq!(s.generation, 2);
        assert!(
            s.y.sub(&a_g.mul(&s.omega)).fro_norm()
                <= 1e-12 * a_g.fro_norm() * s.omega.fro_norm()
        );
        assert!(
            s.z.sub(&a_g.t_mul(&s.psi)).fro_norm()
                <= 1e-12 * a_g.fro_norm() * s.psi.fro_norm()
        );
    }

    #[test]
    fn coupling_estimate_on_block_diagonal_is_tiny() {
        let n = 64;
        let tree = equispaced_tree(n, 16);
        let mut m = Mat::zeros(n, n);
        for blk in 0..4 {
            for i in 0..16 {
                for j in 0..16 {
                    m[(blk * 16 + i, blk * 16 + j)] =
                        crate::rng::standard_normal(51, 0, (blk * 256 + i * 16 + j) as u64);
                }
            }
        }
        let o = DenseOracle::new(m);
        let s = SketchSet::build(&o, 60, 52).unwrap();
        let leaf = tree.level_order(tree.depth())[0];
        let resid = tree.active(leaf)[..8].to_vec();
        let est = s
            .coupling_estimates(&tree, &[(leaf, resid)])
            .unwrap();
        assert!(est[0].forward <= 1e-10);
        assert!(est[0].adjoint <= 1e-10);
    }

    #[test]
    fn planted_coupling_is_estimated_within_factor_three() {
        // Block-diagonal operator with one planted off-block of Frobenius
        // norm 1e-3; the mean estimate over seeds lands within x3.
        let n = 96;
        let tree = equispaced_tree(n, 16);
        let planted = 1e-3;
        let mut ok = 0;
        let seeds = 20;
        for seed in 0..seeds {
            let mut m = Mat::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = 2.0;
            }
            let leak = gaussian(8, 32, 500 + seed, 0);
            let scale = planted / leak.fro_norm();
            // rows: first half of leaf 0; columns: far field (blocks 3..5)
            for i in 0..8 {
                for j in 0..32 {
                    m[(i, 64 + j)] = leak[(i, j)] * scale;
                }
            }
            let o = DenseOracle::new(m);
            let s = SketchSet::build(&o, 80, 600 + seed).unwrap();
            let leaf = tree.level_order(tree.depth())[0];
            let resid: Vec<usize> = (0..8).collect();
            let est = s.coupling_estimates(&tree, &[(leaf, resid)]).unwrap();
            if est[0].forward >= planted / 3.0 && est[0].forward <= planted * 3.0 {
                ok += 1;
            }
        }
        assert!(ok >= seeds - 2, "only {ok}/{seeds} seeds within x3");
    }
}

#[cfg(test)]
mod width_tests {
    use super::*;
    use crate::oracle::DenseOracle;
    use crate::rng::gaussian;
    use crate::tree::{BoxTree, PointSet};

    #[test]
    fn budget_of_three_leaves_plus_rank_gives_full_width() {
        // 1d leaves of 64 points: p = 3*64 + 20 leaves exactly 20 columns of
        // far-field sample for an interior box.
        let n = 512;
        let m = 64;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let tree = BoxTree::build(&PointSet::from_1d(&xs).unwrap(), m).unwrap();
        let o = DenseOracle::new(gaussian(n, n, 61, 0));
        let p = 3 * m + 20;
        let s = SketchSet::build(&o, p, 62).unwrap();
        let interior = tree.level_order(tree.depth())[3];
        let got = s
            .far_field_sample(&tree, interior, Side::Forward, 20)
            .unwrap();
        assert_eq!(got.width, 20);
        assert_eq!(got.sample.ncols(), 20);
    }
}
