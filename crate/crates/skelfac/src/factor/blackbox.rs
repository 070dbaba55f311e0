//! Black-box single-box skeletonization and the multilevel driver.
//!
//! Each box step consumes only the sketch quadruple: far-field samples come
//! from block nullification, the interpolation operators from row IDs of
//! those samples (both sides, reconciled to one shared skeleton set), and the
//! modified pivot/coupling blocks from block extraction. Sketches are updated
//! in place after each elimination pair so they always sample the current
//! operator.

use super::{Diagnostics, EliminationStep, LevelDiag, SkelFactorization, ToleranceSchedule};
use crate::clock::Stopwatch;
use crate::error::{Error, Result};
use crate::linalg::{fit_rows, row_id, LuFactors};
use crate::mat::Mat;
use crate::oracle::LinearOracle;
use crate::sketch::{Side, SketchSet};
use crate::tree::BoxTree;

/// Driver knobs. The traversal stops at `stop_level` (coarser levels have
/// too few boxes for far-field compression to pay off); extraction
/// pseudo-inverses keep `oversampling` spare samples.
#[derive(Debug, Clone, Copy)]
pub struct RsrsOptions {
    pub stop_level: usize,
    pub oversampling: usize,
}

impl Default for RsrsOptions {
    fn default() -> Self {
        RsrsOptions {
            stop_level: 2,
            oversampling: 10,
        }
    }
}

/// Numbers observed while processing one box.
#[derive(Debug, Clone, Default)]
pub struct StepStats {
    pub rank: usize,
    pub resid: usize,
    pub sample_width: usize,
    pub pivot_mismatch: f64,
    pub extraction_warnings: usize,
    pub id_tolerance_misses: usize,
}

/// Decouple the residual indices of box `b` from the rest of the operator,
/// reading nothing but the sketch set. On return the sketches sample the
/// eliminated operator and the box's active set has shrunk to its skeleton.
pub fn skeletonize_box(
    s: &mut SketchSet,
    tree: &mut BoxTree,
    b: usize,
    atol: f64,
    kmax: usize,
    oversampling: usize,
) -> Result<(EliminationStep, StepStats)> {
    let rows_b = tree.active(b).to_vec();
    assert!(!rows_b.is_empty(), "skeletonize_box on an inactive box");
    let level = tree.box_ref(b).level;
    let near = tree.near_active(b);
    let width_cap = kmax + oversampling;
    let mut stats = StepStats::default();

    // Pure far-field samples of the current operator, both sides. The
    // 1/sqrt(width) scaling calibrates Gaussian sample magnitudes back to
    // operator scale so `atol` means the same thing it would on the
    // explicit far-field block.
    let fwd = s.far_field_sample(tree, b, Side::Forward, width_cap)?;
    let adj = s.far_field_sample(tree, b, Side::Adjoint, width_cap)?;
    stats.sample_width = fwd.width.min(adj.width);
    let fwd_scaled = fwd.sample.scaled(1.0 / (fwd.width.max(1) as f64).sqrt());
    let adj_scaled = adj.sample.scaled(1.0 / (adj.width.max(1) as f64).sqrt());

    // Row skeleton from the forward sample; column skeleton from the adjoint
    // sample (a row ID of A(far, b)* seen through Psi). One shared index
    // split: union of the two skeleton position sets, coefficients refit.
    let id_f = row_id(&fwd_scaled, atol, kmax);
    let id_a = row_id(&adj_scaled, atol, kmax);
    stats.id_tolerance_misses =
        usize::from(!id_f.tol_reached) + usize::from(!id_a.tol_reached);
    let mut in_skel = vec![false; rows_b.len()];
    for &pos in id_f.skel.iter().chain(id_a.skel.iter()) {
        in_skel[pos] = true;
    }
    let skel_pos: Vec<usize> = (0..rows_b.len()).filter(|&i| in_skel[i]).collect();
    let resid_pos: Vec<usize> = (0..rows_b.len()).filter(|&i| !in_skel[i]).collect();
    let idx_skel: Vec<usize> = skel_pos.iter().map(|&i| rows_b[i]).collect();
    let idx_resid: Vec<usize> = resid_pos.iter().map(|&i| rows_b[i]).collect();
    stats.rank = idx_skel.len();
    stats.resid = idx_resid.len();

    if idx_resid.is_empty() {
        // Nothing to decouple; the box survives whole.
        tree.mark_processed(b);
        let step = EliminationStep {
            box_id: b,
            level,
            idx_resid,
            idx_skel,
            interp_rows: None,
            interp_cols: None,
            elim_rows: None,
            elim_cols: None,
            pivot_lu: LuFactors::factor(&Mat::zeros(0, 0)).expect("empty LU"),
        };
        return Ok((step, stats));
    }

    let t_rs = fit_rows(&fwd_scaled, &skel_pos, &resid_pos);
    let t_sr = fit_rows(&adj_scaled, &skel_pos, &resid_pos).transpose();

    let interp_rows = super::drop_negligible_block(t_rs, idx_resid.clone(), idx_skel.clone(), 1.0);
    let interp_cols = super::drop_negligible_block(t_sr, idx_skel.clone(), idx_resid.clone(), 1.0);
    s.update_elim(interp_rows.as_ref(), interp_cols.as_ref())?;

    // The resid rows/columns of the eliminated operator now live entirely on
    // the box and its active near field; extract them.
    let mut src = rows_b.clone();
    src.extend_from_slice(&near);
    let ex_f = s.extract_block(&idx_resid, &src, Side::Forward, oversampling)?;
    let ex_a = s.extract_block(&idx_resid, &src, Side::Adjoint, oversampling)?;
    stats.extraction_warnings =
        usize::from(ex_f.ill_conditioned) + usize::from(ex_a.ill_conditioned);
    let pivot_f = ex_f.block.cols(&resid_pos);
    let pivot_a = ex_a.block.rows(&resid_pos);
    stats.pivot_mismatch =
        pivot_f.sub(&pivot_a).fro_norm() / pivot_f.fro_norm().max(1.0);

    // Couplings to eliminate: skeleton part of the box, then the near field,
    // in source order.
    let mut sn_pos: Vec<usize> = skel_pos.clone();
    sn_pos.extend(rows_b.len()..src.len());
    let mut sn_idx: Vec<usize> = idx_skel.clone();
    sn_idx.extend_from_slice(&near);
    let coupling_right = ex_f.block.cols(&sn_pos); // resid x (skel+near)
    let coupling_left = ex_a.block.rows(&sn_pos); // (skel+near) x resid

    let pivot_lu = LuFactors::factor(&pivot_f)
        .map_err(|_| Error::SingularPivotBlock { box_id: b })?;
    let pivot_scale = pivot_f.fro_norm();
    let g_left = pivot_lu.solve(&coupling_left.transpose(), true).transpose();
    let g_right = pivot_lu.solve(&coupling_right, false);

    let elim_rows = super::drop_negligible_block(g_left, sn_idx.clone(), idx_resid.clone(), pivot_scale);
    let elim_cols = super::drop_negligible_block(g_right, idx_resid.clone(), sn_idx, pivot_scale);
    s.update_elim(elim_rows.as_ref(), elim_cols.as_ref())?;

    tree.set_active(b, idx_skel.clone());
    tree.mark_processed(b);

    let step = EliminationStep {
        box_id: b,
        level,
        idx_resid,
        idx_skel,
        interp_rows,
        interp_cols,
        elim_rows,
        elim_cols,
        pivot_lu,
    };
    Ok((step, stats))
}

/// Replay a completed step's two elimination pairs onto a sketch set.
pub fn update_sketches_elim(s: &mut SketchSet, step: &EliminationStep) -> Result<()> {
    s.update_elim(step.interp_rows.as_ref(), step.interp_cols.as_ref())?;
    s.update_elim(step.elim_rows.as_ref(), step.elim_cols.as_ref())
}

/// Black-box multilevel factorization: sketch once, skeletonize every box
/// from the finest level up to `stop_level`, then extract and factor the
/// final skeleton block.
pub fn rsrs_factor(
    o: &dyn LinearOracle,
    tree: &mut BoxTree,
    p: usize,
    sched: &ToleranceSchedule,
    seed: u64,
    opts: &RsrsOptions,
) -> Result<SkelFactorization> {
    let n = o.dim();
    if n != tree.n_points() {
        return Err(Error::DimensionMismatch {
            context: format!("oracle dim {n} vs tree points {}", tree.n_points()),
        });
    }
    let sketch_clock = Stopwatch::start();
    let mut s = SketchSet::build(o, p, seed)?;
    let t_sketch_s = sketch_clock.elapsed_s();

    let factor_clock = Stopwatch::start();
    let depth = tree.depth();
    let stop = opts.stop_level;
    let mut steps: Vec<EliminationStep> = Vec::new();
    let mut diag = Diagnostics {
        t_sketch_s,
        ..Diagnostics::default()
    };
    let mut level_atols = Vec::new();

    if depth >= stop {
        for level in (stop..=depth).rev() {
            let atol = sched.atol(level, depth);
            level_atols.push(atol);
            let mut level_resids: Vec<(usize, Vec<usize>)> = Vec::new();
            let mut ld = LevelDiag {
                level,
                atol,
                boxes: 0,
                rank_min: usize::MAX,
                rank_max: 0,
                rank_total: 0,
                resid_total: 0,
                coupling_fwd_max: 0.0,
                coupling_adj_max: 0.0,
            };
            for b in tree.level_order(level) {
                if tree.active(b).is_empty() {
                    tree.mark_processed(b);
                    continue;
                }
                let (step, stats) =
                    skeletonize_box(&mut s, tree, b, atol, sched.kmax, opts.oversampling)
                        .map_err(|e| annotate(e, level, b))?;
                ld.boxes += 1;
                ld.rank_min = ld.rank_min.min(stats.rank);
                ld.rank_max = ld.rank_max.max(stats.rank);
                ld.rank_total += stats.rank;
                ld.resid_total += stats.resid;
                diag.pivot_mismatch_max = diag.pivot_mismatch_max.max(stats.pivot_mismatch);
                diag.extraction_warnings += stats.extraction_warnings;
                diag.id_tolerance_misses += stats.id_tolerance_misses;
                level_resids.push((b, step.idx_resid.clone()));
                steps.push(step);
            }
            if ld.boxes == 0 {
                ld.rank_min = 0;
            }
            for est in s.coupling_estimates(tree, &level_resids)? {
                ld.coupling_fwd_max = ld.coupling_fwd_max.max(est.forward);
                ld.coupling_adj_max = ld.coupling_adj_max.max(est.adjoint);
            }
            diag.levels.push(ld);
            if level > stop {
                for parent in tree.level_order(level - 1) {
                    tree.merged_active_indices(parent)?;
                }
            }
        }
    }

    // Surviving skeleton: actives of the last processed level (or the leaves
    // when the tree is too shallow to process at all).
    let final_level = depth.min(stop);
    let mut skel: Vec<usize> = Vec::new();
    for b in tree.level_order(final_level) {
        skel.extend_from_slice(tree.active(b));
    }
    if skel.len() + opts.oversampling > p {
        return Err(Error::FinalSkeletonTooLarge {
            skeleton: skel.len(),
            p,
        });
    }
    let ex = s.extract_block(&skel, &skel, Side::Forward, opts.oversampling)?;
    diag.extraction_warnings += usize::from(ex.ill_conditioned);
    let final_lu = LuFactors::factor(&ex.block).map_err(|e| match e {
        Error::SingularPivot { index } => Error::SingularPivot { index },
        other => other,
    })?;
    diag.t_factor_s = factor_clock.elapsed_s();

    Ok(SkelFactorization {
        n,
        steps,
        skel,
        final_lu,
        level_atols,
        diagnostics: diag,
    })
}

fn annotate(e: Error, level: usize, b: usize) -> Error {
    match e {
        Error::InsufficientSamples {
            context,
            needed,
            available,
        } => Error::InsufficientSamples {
            context: format!("level {level}, box {b}: {context}"),
            needed,
            available,
        },
        other => other,
    }
}
