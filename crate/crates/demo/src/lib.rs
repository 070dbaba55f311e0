//! Interactive browser demo over the core factorization library.
//!
//! Three operations, each taking and returning JSON strings so the page
//! needs no generated bindings beyond `wasm-bindgen`'s string passing:
//!
//! * [`factor_stages`] — factor a 2d log-kernel operator and report which
//!   points survive as skeletons after each level, for the thinning
//!   animation.
//! * [`accuracy_sweep`] — factor across a range of tolerances and report the
//!   error/memory/rank trade-off curve.
//! * [`solve_point_source`] — build the fast direct solver and apply it to a
//!   point-source right-hand side, returning the solution field.
//!
//! Everything is deterministic in the provided seed. The functions compile
//! and run natively as well, which is how the crate is unit tested.

use serde::{Deserialize, Serialize};
use skelfac::factor::{rsrs_factor, RsrsOptions, SkelFactorization, ToleranceSchedule};
use skelfac::mat::Mat;
use skelfac::oracle::{KernelOracle, LinearOracle};
use skelfac::rng::uniform;
use skelfac::tree::{BoxTree, PointSet};
use wasm_bindgen::prelude::wasm_bindgen;

#[derive(Deserialize)]
struct StageParams {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_leaf")]
    leaf_size: usize,
    /// log10 of the leaf tolerance, e.g. -6.
    #[serde(default = "default_atol_log10")]
    atol_log10: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    geometry: Geometry,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Default)]
#[serde(rename_all = "kebab-case")]
enum Geometry {
    #[default]
    Disk,
    Ring,
    Spiral,
}

fn default_n() -> usize {
    600
}

fn default_leaf() -> usize {
    32
}

fn default_atol_log10() -> f64 {
    -6.0
}

fn make_points(geometry: Geometry, n: usize, seed: u64) -> PointSet {
    let mut coords = Vec::with_capacity(2 * n);
    let tau = std::f64::consts::TAU;
    for k in 0..n {
        let u = uniform(seed, 11, 2 * k as u64);
        let v = uniform(seed, 11, 2 * k as u64 + 1);
        let (x, y) = match geometry {
            Geometry::Disk => {
                let r = u.sqrt() * 0.48;
                (0.5 + r * (tau * v).cos(), 0.5 + r * (tau * v).sin())
            }
            Geometry::Ring => {
                let r = 0.35 + 0.1 * u;
                (0.5 + r * (tau * v).cos(), 0.5 + r * (tau * v).sin())
            }
            Geometry::Spiral => {
                let t = u * 3.0;
                let r = 0.04 + 0.15 * t;
                let jitter = 0.012 * (v - 0.5);
                (
                    0.5 + (r + jitter) * (tau * t).cos(),
                    0.5 + (r + jitter) * (tau * t).sin(),
                )
            }
        };
        coords.push(x);
        coords.push(y);
    }
    PointSet::new(2, coords).expect("points")
}

fn factor_kernel(
    points: &PointSet,
    leaf_size: usize,
    atol: f64,
    seed: u64,
) -> Result<(KernelOracle, SkelFactorization, usize), String> {
    let n = points.len();
    // Second-kind shift keeps the demo operators uniformly well conditioned.
    let oracle = KernelOracle::log2d(points.clone(), 2.0 * n as f64).map_err(|e| e.to_string())?;
    let kmax = leaf_size.min(64);
    let sched = ToleranceSchedule::new(atol, 2.0, kmax);
    // Small shallow 2d clouds can need more samples at the coarsest level
    // than the finest-level policy suggests; grow the budget on deficit, as
    // the driver's error message recommends.
    let mut p = {
        let tree = BoxTree::build(points, leaf_size).map_err(|e| e.to_string())?;
        (skelfac::config::auto_p(&tree, kmax, 10) + leaf_size).min(n)
    };
    loop {
        let mut tree = BoxTree::build(points, leaf_size).map_err(|e| e.to_string())?;
        match rsrs_factor(&oracle, &mut tree, p, &sched, seed, &RsrsOptions::default()) {
            Ok(f) => return Ok((oracle, f, p)),
            Err(
                skelfac::Error::InsufficientSamples { .. }
                | skelfac::Error::FinalSkeletonTooLarge { .. },
            ) if p < n => {
                p = (p + p / 2).min(n);
            }
            Err(e) => return Err(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct StageLevel {
    level: usize,
    atol: f64,
    boxes: usize,
    rank_min: usize,
    rank_max: usize,
    /// Point indices still active once this level has been processed.
    active_after: Vec<usize>,
    coupling_max: f64,
}

#[derive(Serialize)]
struct StageReport {
    n: usize,
    p: usize,
    points: Vec<[f64; 2]>,
    levels: Vec<StageLevel>,
    final_skeleton: Vec<usize>,
    memory_scalars: usize,
    error: Option<String>,
}

fn stages_impl(params: &str) -> StageReport {
    let params: StageParams = match serde_json::from_str(params) {
        Ok(p) => p,
        Err(e) => {
            return StageReport {
                n: 0,
                p: 0,
                points: vec![],
                levels: vec![],
                final_skeleton: vec![],
                memory_scalars: 0,
                error: Some(format!("bad parameters: {e}")),
            }
        }
    };
    let n = params.n.clamp(64, 3000);
    let points = make_points(params.geometry, n, params.seed);
    let pts_out: Vec<[f64; 2]> = (0..n)
        .map(|i| [points.point(i)[0], points.point(i)[1]])
        .collect();
    let atol = 10f64.powf(params.atol_log10);
    match factor_kernel(&points, params.leaf_size.clamp(8, 256), atol, params.seed) {
        Ok((_, f, p)) => {
            // Survivors after each processed level: drop every residual set
            // eliminated at that level or finer.
            let mut alive = vec![true; n];
            let mut levels = Vec::new();
            for ld in &f.diagnostics.levels {
                for step in f.steps.iter().filter(|s| s.level == ld.level) {
                    for &i in &step.idx_resid {
                        alive[i] = false;
                    }
                }
                levels.push(StageLevel {
                    level: ld.level,
                    atol: ld.atol,
                    boxes: ld.boxes,
                    rank_min: ld.rank_min,
                    rank_max: ld.rank_max,
                    active_after: (0..n).filter(|&i| alive[i]).collect(),
                    coupling_max: ld.coupling_fwd_max.max(ld.coupling_adj_max),
                });
            }
            StageReport {
                n,
                p,
                points: pts_out,
                levels,
                final_skeleton: f.skel.clone(),
                memory_scalars: f.memory_scalars(),
                error: None,
            }
        }
        Err(e) => StageReport {
            n,
            p: 0,
            points: pts_out,
            levels: vec![],
            final_skeleton: vec![],
            memory_scalars: 0,
            error: Some(e),
        },
    }
}

/// Factor a 2d log-kernel operator over a synthetic point cloud and report
/// the per-level skeleton thinning.
#[wasm_bindgen]
pub fn factor_stages(params_json: &str) -> String {
    serde_json::to_string(&stages_impl(params_json)).expect("serialize")
}

#[derive(Deserialize)]
struct SweepParams {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_leaf")]
    leaf_size: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    geometry: Geometry,
    /// Inclusive range of log10 tolerances, coarse to fine.
    #[serde(default = "default_sweep_range")]
    atol_log10_range: [f64; 2],
    #[serde(default = "default_sweep_count")]
    count: usize,
}

fn default_sweep_range() -> [f64; 2] {
    [-2.0, -9.0]
}

fn default_sweep_count() -> usize {
    6
}

#[derive(Serialize)]
struct SweepPoint {
    atol: f64,
    errsolve_est: f64,
    relerr_est: f64,
    memory_scalars: usize,
    rank_max: usize,
}

#[derive(Serialize)]
struct SweepReport {
    n: usize,
    rows: Vec<SweepPoint>,
    error: Option<String>,
}

fn sweep_impl(params: &str) -> SweepReport {
    let params: SweepParams = match serde_json::from_str(params) {
        Ok(p) => p,
        Err(e) => {
            return SweepReport {
                n: 0,
                rows: vec![],
                error: Some(format!("bad parameters: {e}")),
            }
        }
    };
    let n = params.n.clamp(64, 2000);
    let points = make_points(params.geometry, n, params.seed);
    let count = params.count.clamp(2, 12);
    let [lo, hi] = params.atol_log10_range;
    let mut rows = Vec::new();
    for k in 0..count {
        let e = lo + (hi - lo) * k as f64 / (count - 1) as f64;
        let atol = 10f64.powf(e);
        match factor_kernel(&points, params.leaf_size.clamp(8, 256), atol, params.seed) {
            Ok((oracle, f, _)) => {
                let verify = skelfac::config::VerifyConfig::default();
                let (relerr, errsolve, _) =
                    skelfac::config::verify_metrics(&oracle, &f, &verify, params.seed);
                rows.push(SweepPoint {
                    atol,
                    errsolve_est: errsolve,
                    relerr_est: relerr,
                    memory_scalars: f.memory_scalars(),
                    rank_max: f.rank_table().iter().map(|r| r.2).max().unwrap_or(0),
                });
            }
            Err(e) => {
                return SweepReport {
                    n,
                    rows,
                    error: Some(format!("atol {atol:.1e}: {e}")),
                }
            }
        }
    }
    SweepReport {
        n,
        rows,
        error: None,
    }
}

/// Factor across a tolerance range and report the accuracy/cost trade-off.
#[wasm_bindgen]
pub fn accuracy_sweep(params_json: &str) -> String {
    serde_json::to_string(&sweep_impl(params_json)).expect("serialize")
}

#[derive(Deserialize)]
struct SolveParams {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_leaf")]
    leaf_size: usize,
    #[serde(default = "default_atol_log10")]
    atol_log10: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    geometry: Geometry,
    /// Source location in the unit square.
    #[serde(default = "default_source")]
    source: [f64; 2],
}

fn default_source() -> [f64; 2] {
    [0.85, 0.85]
}

#[derive(Serialize)]
struct SolveReport {
    n: usize,
    points: Vec<[f64; 2]>,
    /// Solution values at the points, one per point.
    solution: Vec<f64>,
    /// Relative residual of the produced solution under the true operator.
    residual: f64,
    memory_scalars: usize,
    error: Option<String>,
}

fn solve_impl(params: &str) -> SolveReport {
    let params: SolveParams = match serde_json::from_str(params) {
        Ok(p) => p,
        Err(e) => {
            return SolveReport {
                n: 0,
                points: vec![],
                solution: vec![],
                residual: f64::NAN,
                memory_scalars: 0,
                error: Some(format!("bad parameters: {e}")),
            }
        }
    };
    let n = params.n.clamp(64, 3000);
    let points = make_points(params.geometry, n, params.seed);
    let pts_out: Vec<[f64; 2]> = (0..n)
        .map(|i| [points.point(i)[0], points.point(i)[1]])
        .collect();
    let atol = 10f64.powf(params.atol_log10);
    match factor_kernel(&points, params.leaf_size.clamp(8, 256), atol, params.seed) {
        Ok((oracle, f, _)) => {
            // Right-hand side: the field of a point source at the chosen
            // location, sampled at the cloud.
            let mut rhs = Mat::zeros(n, 1);
            for i in 0..n {
                rhs[(i, 0)] = oracle
                    .eval_kernel(&params.source, i)
                    .expect("kernel evaluation");
            }
            let u = f.solve(&rhs);
            let residual = oracle.apply(&u).sub(&rhs).fro_norm() / rhs.fro_norm();
            SolveReport {
                n,
                points: pts_out,
                solution: u.col(0).to_vec(),
                residual,
                memory_scalars: f.memory_scalars(),
                error: None,
            }
        }
        Err(e) => SolveReport {
            n,
            points: pts_out,
            solution: vec![],
            residual: f64::NAN,
            memory_scalars: 0,
            error: Some(e),
        },
    }
}

/// Build the direct solver and solve against a point-source right-hand side.
#[wasm_bindgen]
pub fn solve_point_source(params_json: &str) -> String {
    serde_json::to_string(&solve_impl(params_json)).expect("serialize")
}
