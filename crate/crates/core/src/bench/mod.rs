//! Benchmark campaigns: per-run metrics, bootstrap aggregates, CSV/JSON
//! persistence and SVG plots.

mod campaign;
mod plot;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, InstanceError};
use crate::pricing::{min_path_changes, PricingError};
use crate::solvers::{IntegerSolution, SolverError};

pub use campaign::{
    read_records, run_campaign, write_aggregates, write_records, Campaign, CampaignSpec, RUNS_CSV,
};
pub use plot::{write_plots, PlotMetric};

/// Number of bootstrap resamples.
pub const RESAMPLES: usize = 1000;
/// Aggregates over this many finished runs or fewer are not displayed.
pub const SUPPRESS_AT: usize = 2;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bootstrap needs at least one value")]
    Empty,
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("plot error: {0}")]
    Plot(String),
    #[error("invalid campaign: {0}")]
    Spec(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// Finished, but some step fell back to a default path.
    Degraded,
    TimedOut,
    Failed,
}

impl RunStatus {
    pub fn finished(self) -> bool {
        matches!(self, RunStatus::Ok | RunStatus::Degraded)
    }

    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::Degraded => "degraded",
            RunStatus::TimedOut => "timed_out",
            RunStatus::Failed => "failed",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RunStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [RunStatus::Ok, RunStatus::Degraded, RunStatus::TimedOut, RunStatus::Failed]
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown run status `{s}`"))
    }
}

/// One solver run on one generated instance. Metric fields are empty for runs
/// that did not finish; `overflow_ratio` is also empty when the budget is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub size: usize,
    pub seed: u64,
    pub solver: String,
    pub wall_time: f64,
    pub objective: Option<f64>,
    pub overflow_ratio: Option<f64>,
    pub path_change_ratio_minus_one: Option<f64>,
    pub changes: Option<usize>,
    pub min_changes: Option<usize>,
    pub status: RunStatus,
}

/// Total penalized overflow over `horizon · budget`. `None` when the budget is 0.
pub fn overflow_ratio(solution: &IntegerSolution, instance: &Instance) -> Option<f64> {
    let denom = instance.horizon() as f64 * instance.budget;
    (denom > 0.0).then(|| solution.total_excess() / denom)
}

/// Changes over the minimum possible changes, minus one. When the minimum is 0
/// the raw change count is returned.
pub fn path_change_ratio_minus_one(changes: usize, min_changes: usize) -> f64 {
    if min_changes == 0 {
        changes as f64
    } else {
        changes as f64 / min_changes as f64 - 1.0
    }
}

/// Sum over commodities of the fewest path changes any routing needs.
pub fn total_min_changes(instance: &Instance) -> Result<usize, PricingError> {
    (0..instance.commodities.len()).map(|k| min_path_changes(instance, k)).sum()
}

/// Percentile bootstrap interval of the mean. The interval is widened to
/// contain the sample mean if needed.
pub fn bootstrap_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64), BenchError> {
    if values.is_empty() {
        return Err(BenchError::Empty);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let at = |q: f64| means[((q * means.len() as f64).floor() as usize).min(means.len() - 1)];
    Ok((at(tail).min(mean), at(1.0 - tail).max(mean)))
}

/// Mean and bootstrap interval of one metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl Estimate {
    pub fn of(values: &[f64], seed: u64) -> Option<Estimate> {
        let (low, high) = bootstrap_ci(values, RESAMPLES, 0.95, seed).ok()?;
        Some(Estimate { mean: values.iter().sum::<f64>() / values.len() as f64, low, high })
    }
}

/// Statistics of one (dataset, size, solver) group over its finished runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub dataset: String,
    pub size: usize,
    pub solver: String,
    pub runs: usize,
    pub finished: usize,
    pub suppressed: bool,
    pub wall_time: Option<Estimate>,
    pub overflow_ratio: Option<Estimate>,
    pub path_change_ratio_minus_one: Option<Estimate>,
}

/// Groups records by (dataset, size, solver), keeping first-seen solver order.
pub fn aggregate(records: &[RunRecord], seed: u64) -> Vec<Aggregate> {
    let mut solver_rank: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<(&str, usize, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let rank = match solver_rank.iter().position(|s| *s == r.solver) {
            Some(i) => i,
            None => {
                solver_rank.push(&r.solver);
                solver_rank.len() - 1
            }
        };
        groups.entry((&r.dataset, r.size, rank)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((dataset, size, rank), rs)| {
            let done: Vec<&RunRecord> = rs.iter().copied().filter(|r| r.status.finished()).collect();
            let collect = |f: fn(&RunRecord) -> Option<f64>| done.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
            Aggregate {
                dataset: dataset.to_string(),
                size,
                solver: solver_rank[rank].to_string(),
                runs: rs.len(),
                finished: done.len(),
                suppressed: done.len() <= SUPPRESS_AT,
                wall_time: Estimate::of(&collect(|r| Some(r.wall_time)), seed),
                overflow_ratio: Estimate::of(&collect(|r| r.overflow_ratio), seed),
                path_change_ratio_minus_one: Estimate::of(&collect(|r| r.path_change_ratio_minus_one), seed),
            }
        })
        .collect()
}
