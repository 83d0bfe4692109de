//! `susfl` command-line front end: single runs, scheme comparisons and
//! parameter sweeps, with CSV aggregates and SVG charts.

pub mod charts;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use susfl_core::engine::{self, parse_axis, write_run_dir, GridAxis, GridValue, SweepRun};
use susfl_core::metrics::RunSummary;
use susfl_core::par::{with_jobs, Execution};
use susfl_core::{validate_config, Error, RunResult, ScenarioConfig, SchemeId};

#[derive(Debug, Parser)]
#[command(name = "susfl", version, about = "Energy-aware hierarchical FL smart-farm simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute one run and write its run directory.
    Run(RunArgs),
    /// Run several schemes over a seed range and aggregate per round.
    Compare(CompareArgs),
    /// Sweep parameters over a seed range.
    Sweep(SweepArgs),
    /// Re-render charts from the CSV files in a directory.
    Charts(ChartsArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario TOML; omitted means all defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "SUSFL_OUT_DIR", default_value = "runs")]
    pub out: PathBuf,
    #[arg(long)]
    pub quiet: bool,
    /// Worker threads for independent runs (1 = sequential).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write energy_events.csv.
    #[arg(long)]
    pub energy_events: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "susfl,fedavg_full")]
    pub schemes: String,
    /// Inclusive range `a..b`, a list `1,2,5`, or one seed.
    #[arg(long, default_value = "1..10")]
    pub seeds: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// `KEY=v1,v2,...`; repeat for a Cartesian product.
    #[arg(long = "param")]
    pub params: Vec<String>,
    #[arg(long, default_value = "1..10")]
    pub seeds: String,
    #[arg(long)]
    pub scheme: Option<String>,
    /// Print the run matrix and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct ChartsArgs {
    #[arg(long)]
    pub dir: PathBuf,
}

/// Exit-code classes: 1 for bad input, 2 for a run that aborted.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Invalid(_) | Error::Parse { .. } | Error::Schema(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn io_fail(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

pub fn parse_seeds(spec: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::Config(format!("bad seed spec '{spec}' (use a..b, a list, or one seed)"));
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

pub fn parse_schemes(spec: &str) -> Result<Vec<SchemeId>, Failure> {
    spec.split(',').filter(|s| !s.trim().is_empty()).map(|s| s.parse::<SchemeId>().map_err(Failure::from)).collect()
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    let cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    Ok(validate_config(cfg).map_err(Error::from)?)
}

fn execution(jobs: Option<usize>) -> Execution {
    if jobs == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-round metrics averaged over seeds.
pub const AGGREGATE_METRICS: [&str; 6] = ["accuracy", "ec", "welfare", "mtbf", "selected", "node_energy"];
/// Run-summary fields averaged over seeds.
pub const SUMMARY_METRICS: [&str; 7] =
    ["final_accuracy", "mean_accuracy", "ec", "welfare", "mtbf", "selected", "energy_per_node"];

fn round_metric(r: &susfl_core::metrics::RoundRecord, m: &str) -> f64 {
    match m {
        "accuracy" => r.global_accuracy,
        "ec" => r.ec_total,
        "welfare" => r.social_welfare,
        "mtbf" => r.mtbf_s,
        "selected" => r.n_selected as f64,
        "node_energy" => r.mean_node_energy,
        _ => unreachable!(),
    }
}

pub fn summary_metric(s: &RunSummary, m: &str) -> f64 {
    match m {
        "final_accuracy" => s.final_accuracy,
        "mean_accuracy" => s.mean_accuracy,
        "ec" => s.mean_ec,
        "welfare" => s.mean_social_welfare,
        "mtbf" => s.mtbf_s,
        "selected" => s.mean_selected,
        "energy_per_node" => s.energy_per_node,
        _ => unreachable!(),
    }
}

fn headers(lead: &[&str], metrics: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    for m in metrics {
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_std"));
    }
    h
}

fn push_stats(row: &mut Vec<String>, xs: &[f64]) {
    let (m, s) = mean_std(xs);
    row.push(m.to_string());
    row.push(s.to_string());
}

fn write_csv(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(io_fail)?;
    w.write_record(&header).map_err(io_fail)?;
    for r in rows {
        w.write_record(&r).map_err(io_fail)?;
    }
    w.flush().map_err(io_fail)
}

fn note(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

pub fn execute(cli: Cli, stdout: &mut impl Write) -> Result<(), Failure> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Charts(a) => {
            let written = charts::render_dir(&a.dir).map_err(io_fail)?;
            if written.is_empty() {
                return Err(Failure::Config(format!("no aggregate.csv or sweep.csv in {}", a.dir.display())));
            }
            Ok(())
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(a.common.config.as_deref())?;
    if let Some(s) = &a.scheme {
        cfg.scheme = s.parse()?;
    }
    cfg.engine.record_energy_events |= a.energy_events;
    let seed = a.seed.unwrap_or(cfg.rng_seed);
    note(a.common.quiet, format!("run: scheme={} seed={seed}", cfg.scheme));
    let exec = execution(a.common.jobs);
    let result = with_jobs(a.common.jobs, || engine::run_with(&cfg, seed, exec))?;
    write_run_dir(&result, &a.common.out)?;
    note(a.common.quiet, format!("wrote {}", a.common.out.display()));
    Ok(())
}

fn run_matrix(
    base: &ScenarioConfig,
    grid: &[GridAxis],
    seeds: &[u64],
    common: &Common,
) -> Result<Vec<SweepRun>, Failure> {
    let n = engine::plan(base, grid, seeds)?.len();
    note(common.quiet, format!("{n} runs"));
    let exec = execution(common.jobs);
    Ok(with_jobs(common.jobs, || engine::sweep(base, grid, seeds, exec))?)
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    let schemes = parse_schemes(&a.schemes)?;
    if schemes.is_empty() {
        return Err(Failure::Config("no schemes given".into()));
    }
    let seeds = parse_seeds(&a.seeds)?;
    let base = load_config(a.common.config.as_deref())?;
    let axis = GridAxis {
        key: "scheme".into(),
        values: schemes.iter().map(|s| GridValue::Text(s.as_str().into())).collect(),
    };
    let runs = run_matrix(&base, &[axis], &seeds, &a.common)?;

    let out = &a.common.out;
    fs::create_dir_all(out).map_err(io_fail)?;
    for r in &runs {
        write_run_dir(&r.result, &out.join(r.result.config.scheme.as_str()).join(format!("seed_{}", r.seed)))?;
    }

    let mut agg_rows = Vec::new();
    let mut sum_rows = Vec::new();
    for scheme in &schemes {
        let results: Vec<&RunResult> = runs.iter().map(|r| &r.result).filter(|r| r.config.scheme == *scheme).collect();
        let n_rounds = results.iter().map(|r| r.rounds.len()).min().unwrap_or(0);
        for i in 0..n_rounds {
            let mut row = vec![scheme.to_string(), i.to_string(), results[0].rounds[i].t_s.to_string()];
            for m in AGGREGATE_METRICS {
                let xs: Vec<f64> = results.iter().map(|r| round_metric(&r.rounds[i], m)).collect();
                push_stats(&mut row, &xs);
            }
            agg_rows.push(row);
        }
        let mut row = vec![scheme.to_string(), results.len().to_string()];
        for m in SUMMARY_METRICS {
            let xs: Vec<f64> = results.iter().map(|r| summary_metric(&r.summary, m)).collect();
            push_stats(&mut row, &xs);
        }
        sum_rows.push(row);
    }
    write_csv(&out.join("aggregate.csv"), headers(&["scheme", "round", "t_s"], &AGGREGATE_METRICS), agg_rows)?;
    write_csv(&out.join("summary.csv"), headers(&["scheme", "runs"], &SUMMARY_METRICS), sum_rows)?;
    charts::render_dir(out).map_err(io_fail)?;
    note(a.common.quiet, format!("wrote {}", out.display()));
    Ok(())
}

fn params_label(params: &[(String, GridValue)]) -> String {
    let rest: Vec<String> = params.iter().filter(|(k, _)| k != "scheme").map(|(k, v)| format!("{k}={v}")).collect();
    if rest.is_empty() {
        "base".into()
    } else {
        rest.join(";")
    }
}

fn cmd_sweep(a: SweepArgs, stdout: &mut impl Write) -> Result<(), Failure> {
    let grid: Vec<GridAxis> = a.params.iter().map(|p| parse_axis(p)).collect::<Result<_, _>>()?;
    let seeds = parse_seeds(&a.seeds)?;
    let mut base = load_config(a.common.config.as_deref())?;
    if let Some(s) = &a.scheme {
        base.scheme = s.parse()?;
    }
    let planned = engine::plan(&base, &grid, &seeds)?;
    if a.dry_run {
        for p in &planned {
            writeln!(stdout, "point={} scheme={} seed={} {}", p.point, p.config.scheme, p.seed, params_label(&p.params))
                .map_err(io_fail)?;
        }
        return Ok(());
    }
    let runs = run_matrix(&base, &grid, &seeds, &a.common)?;
    let out = &a.common.out;
    fs::create_dir_all(out).map_err(io_fail)?;
    let n_points = runs.iter().map(|r| r.point + 1).max().unwrap_or(0);
    let mut rows = Vec::new();
    for point in 0..n_points {
        let group: Vec<&SweepRun> = runs.iter().filter(|r| r.point == point).collect();
        let first = group[0];
        let mut row = vec![
            point.to_string(),
            first.result.config.scheme.to_string(),
            params_label(&first.params),
            group.len().to_string(),
        ];
        for m in SUMMARY_METRICS {
            let xs: Vec<f64> = group.iter().map(|r| summary_metric(&r.result.summary, m)).collect();
            push_stats(&mut row, &xs);
        }
        rows.push(row);
    }
    write_csv(&out.join("sweep.csv"), headers(&["point", "scheme", "params", "runs"], &SUMMARY_METRICS), rows)?;
    charts::render_dir(out).map_err(io_fail)?;
    note(a.common.quiet, format!("wrote {}", out.display()));
    Ok(())
}
