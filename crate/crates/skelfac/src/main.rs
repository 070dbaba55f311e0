//! Command-line front end: factor, verify, bench, selftest.

use skelfac::config::{run_bench, run_factor, verify_metrics, ExperimentConfig, BENCH_CSV_HEADER};
use skelfac::factor::container;
use skelfac::oracle::oracle_selftest;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "\
usage: skelfac <command> [flags]

commands:
  factor    --config PATH [--out PATH] [--seed N]   run a factorization, print stats
  verify    --config PATH FACTORIZATION [--seed N]  error metrics for a saved factorization
  bench     --config PATH [--csv PATH] [--seed N]   run the bench_n sweep, emit CSV
  selftest  --config PATH [--seed N]                probe the configured oracle

exit codes: 0 success, 1 runtime failure, 2 configuration error";

struct Args {
    command: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    seed: Option<u64>,
    positional: Vec<PathBuf>,
}

fn parse_args(mut argv: std::env::Args) -> Result<Args, String> {
    let _ = argv.next();
    let command = argv.next().ok_or_else(|| USAGE.to_string())?;
    let mut args = Args {
        command,
        config: None,
        out: None,
        csv: None,
        seed: None,
        positional: Vec::new(),
    };
    while let Some(a) = argv.next() {
        match a.as_str() {
            "--config" => args.config = Some(next_path(&mut argv, "--config")?),
            "--out" => args.out = Some(next_path(&mut argv, "--out")?),
            "--csv" => args.csv = Some(next_path(&mut argv, "--csv")?),
            "--seed" => {
                let v = argv.next().ok_or("--seed needs a value")?;
                args.seed = Some(v.parse().map_err(|_| format!("bad --seed value {v}"))?);
            }
            "--help" | "-h" => return Err(USAGE.to_string()),
            other if !other.starts_with('-') => args.positional.push(PathBuf::from(other)),
            other => return Err(format!("unknown flag {other}\n{USAGE}")),
        }
    }
    Ok(args)
}

fn next_path(argv: &mut std::env::Args, flag: &str) -> Result<PathBuf, String> {
    argv.next()
        .map(PathBuf::from)
        .ok_or_else(|| format!("{flag} needs a value"))
}

fn load_config(args: &Args) -> Result<ExperimentConfig, String> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| format!("{} needs --config PATH", args.command))?;
    let mut cfg = ExperimentConfig::from_path(path).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match parse_args(std::env::args()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    let cfg = match load_config(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let result = match args.command.as_str() {
        "factor" => cmd_factor(&cfg, &args),
        "verify" => cmd_verify(&cfg, &args),
        "bench" => cmd_bench(&cfg, &args),
        "selftest" => cmd_selftest(&cfg),
        other => {
            eprintln!("unknown command {other}\n{USAGE}");
            return ExitCode::from(2);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn cmd_factor(cfg: &ExperimentConfig, args: &Args) -> Result<(), String> {
    let out = run_factor(cfg, None).map_err(|e| e.to_string())?;
    let f = &out.factorization;
    let stats = serde_json::json!({
        "cmd": "factor",
        "method": cfg.method,
        "n": out.n,
        "m": cfg.tree.leaf_size,
        "p": out.p,
        "atol_leaf": cfg.schedule.atol_leaf,
        "seed": cfg.seed,
        "memory_scalars": f.memory_scalars(),
        "final_skeleton": f.skel.len(),
        "steps": f.steps.len(),
        "diagnostics": f.report(),
    });
    println!("{stats}");
    if let Some(path) = &args.out {
        container::save(path, f).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn cmd_verify(cfg: &ExperimentConfig, args: &Args) -> Result<(), String> {
    let path = args
        .positional
        .first()
        .or(args.out.as_ref())
        .ok_or("verify needs the factorization path (positional or --out)")?;
    let f = container::load(path).map_err(|e| e.to_string())?;
    let problem = skelfac::config::build_problem(cfg, None).map_err(|e| e.to_string())?;
    if f.n != problem.oracle.dim() {
        return Err(format!(
            "dimension mismatch: factorization has n = {}, config problem has n = {}",
            f.n,
            problem.oracle.dim()
        ));
    }
    let (relerr, errsolve, norm_a) =
        verify_metrics(problem.oracle.as_ref(), &f, &cfg.verify, cfg.seed);
    let stats = serde_json::json!({
        "cmd": "verify",
        "n": f.n,
        "seed": cfg.seed,
        "power_iters": cfg.verify.power_iters,
        "norm_a_est": norm_a,
        "relerr_est": relerr,
        "errsolve_est": errsolve,
    });
    println!("{stats}");
    Ok(())
}

fn cmd_bench(cfg: &ExperimentConfig, args: &Args) -> Result<(), String> {
    let rows = run_bench(cfg);
    let mut csv = String::from(BENCH_CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv_line());
        csv.push('\n');
    }
    match &args.csv {
        Some(path) => std::fs::write(path, csv).map_err(|e| e.to_string())?,
        None => print!("{csv}"),
    }
    if rows.iter().any(|r| r.status != "ok") {
        eprintln!(
            "note: {} of {} rows failed; see status column",
            rows.iter().filter(|r| r.status != "ok").count(),
            rows.len()
        );
    }
    Ok(())
}

fn cmd_selftest(cfg: &ExperimentConfig) -> Result<(), String> {
    let problem = skelfac::config::build_problem(cfg, None).map_err(|e| e.to_string())?;
    let report = oracle_selftest(problem.oracle.as_ref(), cfg.seed);
    println!(
        "{}",
        serde_json::json!({
            "cmd": "selftest",
            "n": problem.oracle.dim(),
            "pass": report.pass,
            "probes": report.probes,
            "linearity_resid": report.linearity_resid,
            "adjoint_resid": report.adjoint_resid,
        })
    );
    if report.pass {
        Ok(())
    } else {
        Err(format!("oracle selftest failed: {report}"))
    }
}
