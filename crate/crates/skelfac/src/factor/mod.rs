//! The factorization engine: per-box strong skeletonization, the multilevel
//! black-box driver, the entry-access proxy baseline, and application/solve
//! on the resulting invertible factorization.

mod apply;
mod blackbox;
pub mod container;
mod proxy;

pub use blackbox::{rsrs_factor, skeletonize_box, update_sketches_elim, RsrsOptions};
pub use proxy::{srs_proxy_factor, ProxyConfig};

use crate::linalg::{ElimBlock, LuFactors};
use crate::mat::Mat;
use serde::Serialize;

/// Elimination blocks with Frobenius norm at or below this threshold
/// (relative to the pivot block scale) are dropped: eliminating negligible
/// coupling would only store noise.
pub(crate) const ELIM_DROP_TOL: f64 = 1e-13;

pub(crate) fn drop_negligible_block(
    block: Mat,
    rows: Vec<usize>,
    cols: Vec<usize>,
    scale: f64,
) -> Option<ElimBlock> {
    if block.is_empty() || block.fro_norm() <= ELIM_DROP_TOL * scale.max(1.0) {
        None
    } else {
        Some(ElimBlock::new(block, rows, cols))
    }
}

/// Everything recorded when one box is decoupled: the interpolation pair
/// `(E, F)` from the row/column IDs, the Gaussian-elimination pair `(L, U)`
/// against the skeleton and active near field, and the factored pivot block.
///
/// The step's left/right operators are `V = E L` and `W = U F`; absent blocks
/// are identities.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationStep {
    pub box_id: usize,
    pub level: usize,
    /// Global indices decoupled by this step.
    pub idx_resid: Vec<usize>,
    /// Global indices kept to represent the box's far field.
    pub idx_skel: Vec<usize>,
    /// `E`: row interpolation, resid rows against skeleton rows.
    pub interp_rows: Option<ElimBlock>,
    /// `F`: column interpolation, skeleton rows against resid rows.
    pub interp_cols: Option<ElimBlock>,
    /// `L`: eliminates (skeleton + near) x resid coupling.
    pub elim_rows: Option<ElimBlock>,
    /// `U`: eliminates resid x (skeleton + near) coupling.
    pub elim_cols: Option<ElimBlock>,
    /// LU factors of the decoupled diagonal block.
    pub pivot_lu: LuFactors,
}

impl EliminationStep {
    pub fn rank(&self) -> usize {
        self.idx_skel.len()
    }

    pub fn stored_scalars(&self) -> usize {
        let blk = |b: &Option<ElimBlock>| b.as_ref().map_or(0, ElimBlock::stored_scalars);
        blk(&self.interp_rows)
            + blk(&self.interp_cols)
            + blk(&self.elim_rows)
            + blk(&self.elim_cols)
            + self.pivot_lu.stored_scalars()
    }

    /// Apply this step to an explicitly stored operator:
    /// `m <- V^{-1} m W^{-1}`. Used by the proxy path and by tests that keep
    /// a dense mirror of the eliminated operator.
    pub fn eliminate_dense(&self, m: &mut Mat) {
        if let Some(e) = &self.interp_rows {
            e.apply(m, true, false).expect("interp_rows shape");
        }
        if let Some(l) = &self.elim_rows {
            l.apply(m, true, false).expect("elim_rows shape");
        }
        if let Some(f) = &self.interp_cols {
            f.apply_right(m, true).expect("interp_cols shape");
        }
        if let Some(u) = &self.elim_cols {
            u.apply_right(m, true).expect("elim_cols shape");
        }
    }
}

/// Per-level absolute compression tolerances: `atol(level) =
/// atol_leaf * growth^(depth - level)`, so coarser levels are relaxed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceSchedule {
    pub atol_leaf: f64,
    pub growth: f64,
    pub kmax: usize,
}

impl ToleranceSchedule {
    pub fn new(atol_leaf: f64, growth: f64, kmax: usize) -> ToleranceSchedule {
        assert!(atol_leaf >= 0.0 && growth >= 1.0 && kmax > 0);
        ToleranceSchedule {
            atol_leaf,
            growth,
            kmax,
        }
    }

    pub fn atol(&self, level: usize, depth: usize) -> f64 {
        self.atol_leaf * self.growth.powi((depth - level) as i32)
    }
}

/// Summary of one processed level.
#[derive(Debug, Clone, Serialize)]
pub struct LevelDiag {
    pub level: usize,
    pub atol: f64,
    pub boxes: usize,
    pub rank_min: usize,
    pub rank_max: usize,
    pub rank_total: usize,
    pub resid_total: usize,
    pub coupling_fwd_max: f64,
    pub coupling_adj_max: f64,
}

/// Run-wide diagnostics of a factorization.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub levels: Vec<LevelDiag>,
    /// Seconds spent drawing sketches (oracle products); zero for the proxy
    /// path and on wasm.
    pub t_sketch_s: f64,
    /// Seconds spent in the factorization proper, sketch drawing excluded.
    pub t_factor_s: f64,
    /// Worst disagreement between the forward and adjoint pivot-block
    /// estimates, relative to the block scale.
    pub pivot_mismatch_max: f64,
    /// Extractions whose pseudo-inverse residual exceeded 1e-8.
    pub extraction_warnings: usize,
    /// ID calls that hit the rank cap before reaching tolerance.
    pub id_tolerance_misses: usize,
}

/// An invertible multilevel skeletonization `K ≈ A`:
/// `K = V_1 ... V_q D W_q ... W_1` with `D` block diagonal over the steps'
/// pivot blocks and the final skeleton block.
pub struct SkelFactorization {
    pub n: usize,
    /// Steps in processing order: finest level first, ascending box id.
    pub steps: Vec<EliminationStep>,
    /// Skeleton indices surviving at termination.
    pub skel: Vec<usize>,
    /// LU factors of the final skeleton block.
    pub final_lu: LuFactors,
    /// Per-level tolerances actually used, finest level first.
    pub level_atols: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl SkelFactorization {
    /// Total stored scalars across all steps and the final block.
    pub fn memory_scalars(&self) -> usize {
        self.steps
            .iter()
            .map(EliminationStep::stored_scalars)
            .sum::<usize>()
            + self.final_lu.stored_scalars()
    }

    pub fn report(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Index conservation: every index appears in exactly one step's resid
    /// set or in the final skeleton.
    pub fn validate_index_partition(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut count = 0usize;
        for idx in self
            .steps
            .iter()
            .flat_map(|s| s.idx_resid.iter())
            .chain(self.skel.iter())
        {
            if *idx >= self.n || seen[*idx] {
                return false;
            }
            seen[*idx] = true;
            count += 1;
        }
        count == self.n
    }

    /// Per-box skeleton ranks, as (level, box id, rank) rows.
    pub fn rank_table(&self) -> Vec<(usize, usize, usize)> {
        self.steps
            .iter()
            .map(|s| (s.level, s.box_id, s.rank()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_relaxes_upward() {
        let sched = ToleranceSchedule::new(1e-8, 2.0, 40);
        assert_eq!(sched.atol(5, 5), 1e-8);
        assert_eq!(sched.atol(4, 5), 2e-8);
        assert_eq!(sched.atol(2, 5), 8e-8);
    }
}
