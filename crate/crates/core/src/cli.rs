//! Command-line front end: `generate`, `solve`, `bench` and `report`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{
    aggregate, overflow_ratio, path_change_ratio_minus_one, read_records, run_campaign, total_min_changes,
    write_aggregates, write_plots, Aggregate, CampaignSpec, RunStatus,
};
use crate::instance::{generate_instance, read_instance, write_instance, Preset};
use crate::lp::resolve_backend;
use crate::solvers::{solve, IntegerSolution, SolverConfig, SolverKind};

#[derive(Debug, Parser)]
#[command(name = "dynflow", version, about = "Dynamic unsplittable flow routing with path-change penalties")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Random seed (generator seed for `generate`, rounding seed otherwise).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Wall-clock limit per solver run, in seconds.
    #[arg(long, global = true)]
    pub time_limit: Option<f64>,
    /// LP backend; overrides DYNFLOW_LP_BACKEND and the config file.
    #[arg(long, global = true)]
    pub lp_backend: Option<String>,
    /// Worker threads for campaigns. Every solver run is single-threaded.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Solver settings in TOML.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an instance from a preset.
    Generate {
        #[arg(long)]
        preset: Preset,
        /// Size parameter of the preset.
        #[arg(long = "n", alias = "size")]
        size: usize,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve an instance and print metrics as JSON.
    Solve {
        instance: PathBuf,
        #[arg(long)]
        solver: SolverKind,
        /// Write the full solution (paths included) to this file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a campaign over generated instances.
    Bench {
        #[arg(long)]
        preset: Preset,
        /// Comma-separated size parameters.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Seed range `a..b` (inclusive) or comma-separated list.
        #[arg(long, value_parser = parse_seeds)]
        seeds: SeedList,
        /// Comma-separated solver names.
        #[arg(long, value_delimiter = ',', required = true)]
        solvers: Vec<SolverKind>,
        #[arg(long, default_value = "bench_out")]
        out_dir: PathBuf,
    },
    /// Rebuild aggregates and plots from a runs CSV.
    Report {
        runs: PathBuf,
        #[arg(long, default_value = "report_out")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seeds(s: &str) -> Result<SeedList, String> {
    let bad = |e: std::num::ParseIntError| format!("invalid seed list `{s}`: {e}");
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(bad)?;
        let b: u64 = b.trim_start_matches('=').trim().parse().map_err(bad)?;
        if b < a {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok(SeedList((a..=b).collect()));
    }
    let v = s.split(',').map(|x| x.trim().parse::<u64>()).collect::<Result<Vec<_>, _>>().map_err(bad)?;
    Ok(SeedList(v))
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    solver: SolverKind,
    status: RunStatus,
    optimal: bool,
    bound: Option<f64>,
    wall_time: f64,
    objective: f64,
    changes: usize,
    min_changes: usize,
    overflow_ratio: Option<f64>,
    path_change_ratio_minus_one: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<&'a IntegerSolution>,
}

type CliResult = Result<(), Box<dyn std::error::Error>>;

fn load_config(common: &CommonArgs) -> Result<SolverConfig, Box<dyn std::error::Error>> {
    let mut config = match &common.config {
        Some(p) => SolverConfig::from_toml(&std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?)?,
        None => SolverConfig::default(),
    };
    if let Some(s) = common.seed {
        config.seed = s;
    }
    if common.time_limit.is_some() {
        config.time_limit = common.time_limit;
    }
    config.validate()?;
    Ok(config)
}

/// Parses `args` (program name first) and runs the command. Returns the exit
/// status: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return 0;
            }
            if !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return 2;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> CliResult {
    let common = &cli.common;
    match cli.command {
        Command::Generate { preset, size, output } => {
            let inst = generate_instance(preset, size, common.seed.unwrap_or(0))?;
            match output {
                Some(p) => write_instance(&inst, p)?,
                None => println!("{}", inst.to_json()),
            }
        }
        Command::Solve { instance, solver, output } => {
            let config = load_config(common)?;
            let lp = resolve_backend(common.lp_backend.as_deref(), config.lp_backend.as_deref())?.solver();
            let inst = read_instance(&instance)?;
            let min_changes = total_min_changes(&inst)?;
            let start = Instant::now();
            let report = solve(&inst, solver, &config, lp.as_ref())?;
            let wall_time = start.elapsed().as_secs_f64();
            report.solution.check(&inst).map_err(|e| format!("solver returned an invalid solution: {e}"))?;
            let sol = &report.solution;
            let mut summary = SolveSummary {
                solver,
                status: if report.degraded { RunStatus::Degraded } else { RunStatus::Ok },
                optimal: report.optimal,
                bound: report.bound,
                wall_time,
                objective: sol.objective,
                changes: sol.changes,
                min_changes,
                overflow_ratio: overflow_ratio(sol, &inst),
                path_change_ratio_minus_one: path_change_ratio_minus_one(sol.changes, min_changes),
                solution: None,
            };
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if let Some(p) = output {
                summary.solution = Some(sol);
                std::fs::write(&p, serde_json::to_string_pretty(&summary)?)
                    .map_err(|e| format!("{}: {e}", p.display()))?;
            }
        }
        Command::Bench { preset, sizes, seeds, solvers, out_dir } => {
            let config = load_config(common)?;
            let lp = resolve_backend(common.lp_backend.as_deref(), config.lp_backend.as_deref())?.solver();
            let spec = CampaignSpec {
                preset,
                sizes,
                seeds: seeds.0,
                solvers,
                config,
                threads: common.threads,
                out_dir: Some(out_dir.clone()),
            };
            let campaign = run_campaign(&spec, lp.as_ref())?;
            print_table(&campaign.aggregates)?;
            eprintln!("{} runs written to {}", campaign.records.len(), out_dir.display());
        }
        Command::Report { runs, out_dir } => {
            let records = read_records(&runs)?;
            let aggregates = aggregate(&records, common.seed.unwrap_or(0));
            write_report(&out_dir, &aggregates)?;
            print_table(&aggregates)?;
        }
    }
    Ok(())
}

fn write_report(dir: &FsPath, aggregates: &[Aggregate]) -> CliResult {
    write_aggregates(dir, aggregates)?;
    write_plots(dir, aggregates)?;
    Ok(())
}

fn print_table(aggregates: &[Aggregate]) -> CliResult {
    let fmt = |e: Option<crate::bench::Estimate>, suppressed: bool| match e {
        Some(e) if !suppressed => format!("{:.4} [{:.4}, {:.4}]", e.mean, e.low, e.high),
        _ => "-".to_string(),
    };
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{:<18} {:>5} {:<30} {:>8} {:>30} {:>30} {:>30}",
        "dataset", "size", "solver", "finished", "wall_time", "overflow_ratio", "path_change_ratio_minus_one"
    )?;
    for a in aggregates {
        writeln!(
            out,
            "{:<18} {:>5} {:<30} {:>8} {:>30} {:>30} {:>30}",
            a.dataset,
            a.size,
            a.solver,
            format!("{}/{}", a.finished, a.runs),
            fmt(a.wall_time, a.suppressed),
            fmt(a.overflow_ratio, a.suppressed),
            fmt(a.path_change_ratio_minus_one, a.suppressed),
        )?;
    }
    Ok(())
}
