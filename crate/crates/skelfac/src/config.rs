//! Experiment configuration (JSON) and the runner glue shared by the CLI,
//! tests, and the browser demo.

use crate::error::{Error, Result};
use crate::factor::{
    rsrs_factor, srs_proxy_factor, ProxyConfig, RsrsOptions, SkelFactorization,
    ToleranceSchedule,
};
use crate::linalg::spectral_norm_estimate;
use crate::oracle::{DenseOracle, KernelOracle, LinearOracle, SchurSlabOracle};
use crate::rng::{uniform, STREAM_GEOMETRY};
use crate::tree::{BoxTree, PointSet};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum ProblemConfig {
    #[serde(rename = "log-kernel-1d")]
    LogKernel1d {
        n: usize,
        #[serde(default)]
        geometry_seed: u64,
        #[serde(default)]
        diag_shift: f64,
    },
    #[serde(rename = "log-kernel-2d")]
    LogKernel2d {
        n: usize,
        #[serde(default)]
        geometry_seed: u64,
        #[serde(default)]
        diag_shift: f64,
    },
    #[serde(rename = "schur-slab-2d")]
    SchurSlab2d { n: usize, b: usize },
    #[serde(rename = "dense-file")]
    DenseFile { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeConfig {
    pub leaf_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rsrs,
    SrsProxy,
}

fn default_kmax() -> usize {
    48
}

fn default_oversampling() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Explicit sample count; omit for the automatic policy.
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default = "default_kmax")]
    pub kmax: usize,
    #[serde(default = "default_oversampling")]
    pub oversampling: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            p: None,
            kmax: default_kmax(),
            oversampling: default_oversampling(),
        }
    }
}

fn default_growth() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub atol_leaf: f64,
    #[serde(default = "default_growth")]
    pub growth: f64,
}

fn default_power_iters() -> usize {
    14
}

fn default_probes() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_power_iters")]
    pub power_iters: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            power_iters: default_power_iters(),
            probes: default_probes(),
        }
    }
}

fn default_radius_factor() -> f64 {
    3.0
}

fn default_n_proxy() -> usize {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxyFileConfig {
    #[serde(default = "default_radius_factor")]
    pub radius_factor: f64,
    #[serde(default = "default_n_proxy")]
    pub n_proxy: usize,
}

impl Default for ProxyFileConfig {
    fn default() -> Self {
        ProxyFileConfig {
            radius_factor: default_radius_factor(),
            n_proxy: default_n_proxy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub tree: TreeConfig,
    pub method: Method,
    #[serde(default)]
    pub sampling: SamplingConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub proxy: ProxyFileConfig,
    /// Problem sizes for the bench sweep; each replaces the problem's `n`.
    #[serde(default)]
    pub bench_n: Option<Vec<usize>>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.problem {
            ProblemConfig::LogKernel1d { n, .. } | ProblemConfig::LogKernel2d { n, .. } => {
                if *n == 0 {
                    return Err(Error::Config("problem.n must be positive".into()));
                }
            }
            ProblemConfig::SchurSlab2d { n, b } => {
                if *n < 3 || *b == 0 || *b >= *n {
                    return Err(Error::Config(
                        "schur-slab-2d needs n >= 3 and 1 <= b < n".into(),
                    ));
                }
            }
            ProblemConfig::DenseFile { path } => {
                if path.is_empty() {
                    return Err(Error::Config("problem.path must be nonempty".into()));
                }
            }
        }
        if self.tree.leaf_size == 0 {
            return Err(Error::Config("tree.leaf_size must be positive".into()));
        }
        if self.schedule.atol_leaf < 0.0 || self.schedule.growth < 1.0 {
            return Err(Error::Config(
                "schedule.atol_leaf must be >= 0 and schedule.growth >= 1".into(),
            ));
        }
        if self.sampling.kmax == 0 {
            return Err(Error::Config("sampling.kmax must be positive".into()));
        }
        if self.verify.power_iters < 2 {
            return Err(Error::Config("verify.power_iters must be >= 2".into()));
        }
        if self.proxy.n_proxy == 0 || self.proxy.radius_factor <= 1.0 {
            return Err(Error::Config(
                "proxy.n_proxy must be positive and proxy.radius_factor > 1".into(),
            ));
        }
        Ok(())
    }

    pub fn schedule(&self, _depth: usize) -> ToleranceSchedule {
        ToleranceSchedule::new(
            self.schedule.atol_leaf,
            self.schedule.growth,
            self.sampling.kmax,
        )
    }
}

/// A constructed problem instance: the oracle plus tree geometry.
pub struct Problem {
    pub oracle: Box<dyn LinearOracle>,
    pub points: PointSet,
}

/// Build the oracle and point geometry for a config, optionally overriding
/// the problem size (bench sweeps).
pub fn build_problem(cfg: &ExperimentConfig, n_override: Option<usize>) -> Result<Problem> {
    match &cfg.problem {
        ProblemConfig::LogKernel1d {
            n,
            geometry_seed,
            diag_shift,
        } => {
            let n = n_override.unwrap_or(*n);
            // Equispaced sites with sub-cell jitter: the jitter never moves a
            // point across a dyadic cell boundary, so trees stay fully
            // populated and the automatic sample count is geometry-stable.
            let xs: Vec<f64> = (0..n)
                .map(|k| {
                    let u = uniform(*geometry_seed, STREAM_GEOMETRY, k as u64);
                    (k as f64 + 0.5 + 0.9 * (u - 0.5)) / n as f64
                })
                .collect();
            let points = PointSet::from_1d(&xs)?;
            let oracle = KernelOracle::log2d(points.clone(), *diag_shift)?;
            Ok(Problem {
                oracle: Box::new(oracle),
                points,
            })
        }
        ProblemConfig::LogKernel2d {
            n,
            geometry_seed,
            diag_shift,
        } => {
            let n = n_override.unwrap_or(*n);
            let points = PointSet::random_unit(2, n, *geometry_seed)?;
            let oracle = KernelOracle::log2d(points.clone(), *diag_shift)?;
            Ok(Problem {
                oracle: Box::new(oracle),
                points,
            })
        }
        ProblemConfig::SchurSlab2d { n, b } => {
            let n = n_override.unwrap_or(*n);
            let oracle = SchurSlabOracle::new(n, *b)?;
            let points = oracle.points().expect("slab exposes points").clone();
            Ok(Problem {
                oracle: Box::new(oracle),
                points,
            })
        }
        ProblemConfig::DenseFile { path } => {
            let oracle = DenseOracle::from_file(Path::new(path))?;
            let n = oracle.dim();
            // No geometry in the file: embed indices on a line.
            let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
            let points = PointSet::from_1d(&xs)?;
            Ok(Problem {
                oracle: Box::new(oracle),
                points,
            })
        }
    }
}

/// Automatic sample-count policy: the largest finest-level nullification set
/// plus headroom for the rank cap and extraction oversampling, clamped to
/// the operator dimension.
pub fn auto_p(tree: &BoxTree, kmax: usize, oversampling: usize) -> usize {
    let depth = tree.depth();
    let mut worst = 0usize;
    for b in tree.level_order(depth) {
        let size = tree.box_ref(b).point_indices.len()
            + tree
                .neighbors(b)
                .into_iter()
                .filter(|&nb| nb != b)
                .map(|nb| tree.box_ref(nb).point_indices.len())
                .sum::<usize>();
        worst = worst.max(size);
    }
    (worst + kmax + oversampling).min(tree.n_points())
}

/// Everything produced by one factorization run.
pub struct RunOutput {
    pub factorization: SkelFactorization,
    pub problem: Problem,
    pub p: usize,
    pub n: usize,
}

/// Build the problem and run the configured method.
pub fn run_factor(cfg: &ExperimentConfig, n_override: Option<usize>) -> Result<RunOutput> {
    let problem = build_problem(cfg, n_override)?;
    let n = problem.oracle.dim();
    let mut tree = BoxTree::build(&problem.points, cfg.tree.leaf_size)?;
    let sched = cfg.schedule(tree.depth());
    let (p, factorization) = match cfg.method {
        Method::Rsrs => {
            let p = cfg
                .sampling
                .p
                .unwrap_or_else(|| auto_p(&tree, cfg.sampling.kmax, cfg.sampling.oversampling));
            let opts = RsrsOptions {
                oversampling: cfg.sampling.oversampling,
                ..RsrsOptions::default()
            };
            let f = rsrs_factor(problem.oracle.as_ref(), &mut tree, p, &sched, cfg.seed, &opts)?;
            (p, f)
        }
        Method::SrsProxy => {
            let proxy = ProxyConfig {
                radius_factor: cfg.proxy.radius_factor,
                n_proxy: cfg.proxy.n_proxy,
            };
            let f = srs_proxy_factor(problem.oracle.as_ref(), &mut tree, &sched, &proxy)?;
            (0, f)
        }
    };
    Ok(RunOutput {
        factorization,
        problem,
        p,
        n,
    })
}

/// Error metrics for a factorization against its oracle:
/// `relerr_est = ||A - K|| / ||A||` and `errsolve_est = ||I - K^{-1} A||`,
/// all spectral norms estimated by seeded power iteration.
pub fn verify_metrics(
    o: &dyn LinearOracle,
    f: &SkelFactorization,
    verify: &VerifyConfig,
    seed: u64,
) -> (f64, f64, f64) {
    let n = o.dim();
    let iters = verify.power_iters;
    let norm_a = spectral_norm_estimate(
        &mut |x| o.apply(x),
        &mut |x| o.apply_adjoint(x),
        n,
        iters,
        seed,
    );
    let relerr = spectral_norm_estimate(
        &mut |x| o.apply(x).sub(&f.apply(x)),
        &mut |x| o.apply_adjoint(x).sub(&f.apply_adjoint(x)),
        n,
        iters,
        seed.wrapping_add(1),
    ) / norm_a.max(1e-300);
    let errsolve = spectral_norm_estimate(
        &mut |x| {
            let ax = o.apply(x);
            x.sub(&f.solve(&ax))
        },
        &mut |x| {
            let atx = o.apply_adjoint(&f.solve_adjoint(x));
            x.sub(&atx)
        },
        n,
        iters,
        seed.wrapping_add(2),
    );
    (relerr, errsolve, norm_a)
}

/// One row of the bench CSV. Column order is part of the interface:
/// `N,m,p,atol,t_factor_s,memory_scalars,relerr_est,errsolve_est,status`.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub atol: f64,
    pub t_factor_s: f64,
    pub memory_scalars: usize,
    pub relerr_est: f64,
    pub errsolve_est: f64,
    pub status: String,
}

pub const BENCH_CSV_HEADER: &str =
    "N,m,p,atol,t_factor_s,memory_scalars,relerr_est,errsolve_est,status";

impl BenchRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{:e},{:.6},{},{:e},{:e},{}",
            self.n,
            self.m,
            self.p,
            self.atol,
            self.t_factor_s,
            self.memory_scalars,
            self.relerr_est,
            self.errsolve_est,
            self.status
        )
    }
}

/// Run the configured bench sweep; per-size failures land in the status
/// column and the sweep continues.
pub fn run_bench(cfg: &ExperimentConfig) -> Vec<BenchRow> {
    let sizes = cfg.bench_n.clone().unwrap_or_default();
    let mut rows = Vec::new();
    for n in sizes {
        match run_factor(cfg, Some(n)) {
            Ok(out) => {
                let (relerr, errsolve, _) = verify_metrics(
                    out.problem.oracle.as_ref(),
                    &out.factorization,
                    &cfg.verify,
                    cfg.seed,
                );
                rows.push(BenchRow {
                    n: out.n,
                    m: cfg.tree.leaf_size,
                    p: out.p,
                    atol: cfg.schedule.atol_leaf,
                    t_factor_s: out.factorization.diagnostics.t_factor_s,
                    memory_scalars: out.factorization.memory_scalars(),
                    relerr_est: relerr,
                    errsolve_est: errsolve,
                    status: "ok".into(),
                });
            }
            Err(e) => rows.push(BenchRow {
                n,
                m: cfg.tree.leaf_size,
                p: 0,
                atol: cfg.schedule.atol_leaf,
                t_factor_s: 0.0,
                memory_scalars: 0,
                relerr_est: f64::NAN,
                errsolve_est: f64::NAN,
                status: format!("error: {e}").replace(',', ";"),
            }),
        }
    }
    rows
}
