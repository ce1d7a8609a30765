use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    aggregate, overflow_ratio, path_change_ratio_minus_one, total_min_changes, write_plots, Aggregate, BenchError,
    Estimate, RunRecord, RunStatus,
};
use crate::instance::{generate_instance, Instance, Preset};
use crate::lp::LpSolver;
use crate::solvers::{solve, SolverConfig, SolverKind};

pub const RUNS_CSV: &str = "runs.csv";
const RUNS_JSON: &str = "runs.json";
const AGGREGATES_CSV: &str = "aggregates.csv";
const AGGREGATES_JSON: &str = "aggregates.json";

#[derive(Clone, Debug)]
pub struct CampaignSpec {
    pub preset: Preset,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub solvers: Vec<SolverKind>,
    /// Shared solver settings; `time_limit` bounds every run and `seed` is
    /// offset by the instance seed.
    pub config: SolverConfig,
    /// Worker threads; each run stays single-threaded.
    pub threads: usize,
    /// Where tables and plots are written, if anywhere.
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Campaign {
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<Aggregate>,
}

/// Runs every solver on every generated instance. Failed runs are recorded
/// with their status and never stop the campaign.
pub fn run_campaign(spec: &CampaignSpec, lp: &dyn LpSolver) -> Result<Campaign, BenchError> {
    if spec.sizes.is_empty() || spec.seeds.is_empty() || spec.solvers.is_empty() {
        return Err(BenchError::Spec("sizes, seeds and solvers must be non-empty".into()));
    }
    spec.config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads.max(1))
        .build()
        .map_err(|e| BenchError::Spec(e.to_string()))?;
    let cells: Vec<(usize, u64)> =
        spec.sizes.iter().flat_map(|&n| spec.seeds.iter().map(move |&s| (n, s))).collect();
    let records: Vec<RunRecord> = pool.install(|| {
        let instances: Vec<_> = cells
            .par_iter()
            .map(|&(size, seed)| {
                let inst = generate_instance(spec.preset, size, seed);
                let min = inst.as_ref().ok().and_then(|i| total_min_changes(i).ok());
                (inst, min)
            })
            .collect();
        let jobs: Vec<(usize, SolverKind)> =
            (0..cells.len()).flat_map(|i| spec.solvers.iter().map(move |&k| (i, k))).collect();
        jobs.par_iter()
            .map(|&(i, kind)| {
                let (size, seed) = cells[i];
                let base = RunRecord {
                    dataset: spec.preset.name().to_string(),
                    size,
                    seed,
                    solver: kind.name().to_string(),
                    wall_time: 0.0,
                    objective: None,
                    overflow_ratio: None,
                    path_change_ratio_minus_one: None,
                    changes: None,
                    min_changes: instances[i].1,
                    status: RunStatus::Failed,
                };
                match &instances[i].0 {
                    Ok(inst) => run_one(inst, kind, &spec.config, seed, lp, base),
                    Err(e) => {
                        eprintln!("{} size {size} seed {seed}: generation failed: {e}", spec.preset);
                        base
                    }
                }
            })
            .collect()
    });
    let aggregates = aggregate(&records, spec.config.seed);
    if let Some(dir) = &spec.out_dir {
        write_records(dir, &records)?;
        write_aggregates(dir, &aggregates)?;
        write_plots(dir, &aggregates)?;
    }
    Ok(Campaign { records, aggregates })
}

fn run_one(
    instance: &Instance,
    kind: SolverKind,
    config: &SolverConfig,
    seed: u64,
    lp: &dyn LpSolver,
    mut rec: RunRecord,
) -> RunRecord {
    let config = SolverConfig { seed: config.seed.wrapping_add(seed), ..config.clone() };
    let start = Instant::now();
    let result = solve(instance, kind, &config, lp);
    rec.wall_time = start.elapsed().as_secs_f64();
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            rec.status = if e.is_timeout() { RunStatus::TimedOut } else { RunStatus::Failed };
            if !e.is_timeout() {
                eprintln!("{} size {} seed {seed} {kind}: {e}", rec.dataset, rec.size);
            }
            return rec;
        }
    };
    let sol = &report.solution;
    if let Err(e) = sol.check(instance) {
        eprintln!("{} size {} seed {seed} {kind}: invalid solution: {e}", rec.dataset, rec.size);
        return rec;
    }
    rec.status = if report.degraded { RunStatus::Degraded } else { RunStatus::Ok };
    rec.objective = Some(sol.objective);
    rec.overflow_ratio = overflow_ratio(sol, instance);
    rec.changes = Some(sol.changes);
    rec.path_change_ratio_minus_one = rec.min_changes.map(|m| path_change_ratio_minus_one(sol.changes, m));
    rec
}

fn create_dir(dir: &FsPath) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|source| BenchError::Io { path: dir.to_path_buf(), source })
}

fn write_text(path: PathBuf, text: &str) -> Result<(), BenchError> {
    fs::write(&path, text).map_err(|source| BenchError::Io { path, source })
}

/// Writes `runs.csv` and `runs.json` into `dir`.
pub fn write_records(dir: &FsPath, records: &[RunRecord]) -> Result<(), BenchError> {
    create_dir(dir)?;
    let mut w = csv::Writer::from_path(dir.join(RUNS_CSV))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: dir.join(RUNS_CSV), source })?;
    write_text(dir.join(RUNS_JSON), &serde_json::to_string_pretty(records)?)
}

pub fn read_records(path: &FsPath) -> Result<Vec<RunRecord>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Serialize, Deserialize)]
struct AggregateRow {
    dataset: String,
    size: usize,
    solver: String,
    runs: usize,
    finished: usize,
    suppressed: bool,
    wall_time_mean: Option<f64>,
    wall_time_low: Option<f64>,
    wall_time_high: Option<f64>,
    overflow_ratio_mean: Option<f64>,
    overflow_ratio_low: Option<f64>,
    overflow_ratio_high: Option<f64>,
    path_change_ratio_minus_one_mean: Option<f64>,
    path_change_ratio_minus_one_low: Option<f64>,
    path_change_ratio_minus_one_high: Option<f64>,
}

/// Writes `aggregates.csv` (one flat row per group) and `aggregates.json`.
pub fn write_aggregates(dir: &FsPath, aggregates: &[Aggregate]) -> Result<(), BenchError> {
    create_dir(dir)?;
    let parts = |e: Option<Estimate>| (e.map(|e| e.mean), e.map(|e| e.low), e.map(|e| e.high));
    let mut w = csv::Writer::from_path(dir.join(AGGREGATES_CSV))?;
    for a in aggregates {
        let (wm, wl, wh) = parts(a.wall_time);
        let (om, ol, oh) = parts(a.overflow_ratio);
        let (pm, pl, ph) = parts(a.path_change_ratio_minus_one);
        w.serialize(AggregateRow {
            dataset: a.dataset.clone(),
            size: a.size,
            solver: a.solver.clone(),
            runs: a.runs,
            finished: a.finished,
            suppressed: a.suppressed,
            wall_time_mean: wm,
            wall_time_low: wl,
            wall_time_high: wh,
            overflow_ratio_mean: om,
            overflow_ratio_low: ol,
            overflow_ratio_high: oh,
            path_change_ratio_minus_one_mean: pm,
            path_change_ratio_minus_one_low: pl,
            path_change_ratio_minus_one_high: ph,
        })?;
    }
    w.flush().map_err(|source| BenchError::Io { path: dir.join(AGGREGATES_CSV), source })?;
    write_text(dir.join(AGGREGATES_JSON), &serde_json::to_string_pretty(aggregates)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::HighsBackend;

    fn spec(out: Option<PathBuf>) -> CampaignSpec {
        CampaignSpec {
            preset: Preset::GridHard,
            sizes: vec![2, 3],
            seeds: vec![0, 1, 2],
            solvers: vec![SolverKind::SrrArcNode, SolverKind::BnbRestrictedShort],
            config: SolverConfig { time_limit: Some(60.0), ..SolverConfig::default() },
            threads: 2,
            out_dir: out,
        }
    }

    #[test]
    fn campaign_counts_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lp = HighsBackend::new();
        let c = run_campaign(&spec(Some(dir.path().to_path_buf())), &lp).unwrap();
        assert_eq!(c.records.len(), 12);
        assert_eq!(c.aggregates.len(), 4);
        assert!(c.records.iter().all(|r| r.status.finished()));
        for r in &c.records {
            assert!(r.overflow_ratio.unwrap() >= 0.0);
            assert!(r.path_change_ratio_minus_one.unwrap() >= 0.0);
            assert!(r.changes.unwrap() >= r.min_changes.unwrap());
        }
        let back = read_records(&dir.path().join(RUNS_CSV)).unwrap();
        assert_eq!(back, c.records);
        for name in [RUNS_JSON, AGGREGATES_CSV, AGGREGATES_JSON, "grid_hard_overflow_ratio.svg"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }

        // Branch-and-bound stops on wall-clock limits, so only rounding runs repeat exactly.
        let again = run_campaign(&spec(None), &lp).unwrap();
        let strip = |rs: &[RunRecord]| {
            rs.iter()
                .filter(|r| r.solver.starts_with("srr"))
                .map(|r| RunRecord { wall_time: 0.0, ..r.clone() })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&again.records).len(), 6);
        assert_eq!(strip(&again.records), strip(&c.records));
    }

    #[test]
    fn timed_out_runs_are_recorded() {
        let mut s = spec(None);
        s.sizes = vec![3];
        s.solvers = vec![SolverKind::SrrPathSequence];
        s.config.time_limit = Some(1e-9);
        let c = run_campaign(&s, &HighsBackend::new()).unwrap();
        assert!(c.records.iter().all(|r| r.status == RunStatus::TimedOut && r.objective.is_none()));
        assert!(c.aggregates[0].suppressed);
        assert_eq!(c.aggregates[0].finished, 0);
    }
}
