//! End-to-end solvers: randomized rounding over several relaxations,
//! restricted branch-and-bound per step, and the exact arc-node model.

mod colgen;
mod config;
mod exact;
mod one_step;
mod restricted;
mod solution;
mod srr;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulations::FormulationError;
use crate::graph::GraphError;
use crate::instance::Instance;
use crate::lp::{LpError, LpSolver, SolveOutcome, Status};
use crate::pricing::PricingError;

pub use colgen::{solve_colgen_relaxation, ColgenResult, ColumnSource, IMPROVING_THRESHOLD};
pub use config::{BnbConfig, PricingChoice, SolverConfig, SolverKind, SrrConfig, BETA_LONG, BETA_SHORT};
pub use exact::solve_exact;
pub use one_step::{rolling_horizon, solve_one_step, OneStepVariant, StepResult};
pub use restricted::{restricted_path_sets, DEFAULT_KAPPA};
pub use solution::IntegerSolution;
pub use srr::{solve_multistep, srr_round};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("commodity {commodity} has no allowed path at step {step}")]
    NoPath { commodity: usize, step: usize },
    #[error("instance size {size} exceeds the exact solver cap {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("time limit reached")]
    TimedOut,
    #[error("negative weight {0} in rounding")]
    NegativeWeight(f64),
    #[error("unexpected LP status {0:?}")]
    LpStatus(Status),
    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<SolverError> },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl SolverError {
    pub fn is_timeout(&self) -> bool {
        match self {
            SolverError::TimedOut => true,
            SolverError::Step { source, .. } => source.is_timeout(),
            _ => false,
        }
    }
}

/// Wall-clock budget shared by every LP solve of one run.
#[derive(Clone, Copy, Debug, Default)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Deadline(None)
    }

    pub fn after(seconds: Option<f64>) -> Self {
        Deadline(seconds.map(|s| Instant::now() + Duration::from_secs_f64(s)))
    }

    /// Seconds left, `None` when unlimited.
    pub fn remaining(&self) -> Option<f64> {
        self.0.map(|d| d.saturating_duration_since(Instant::now()).as_secs_f64())
    }

    pub fn check(&self) -> Result<(), SolverError> {
        match self.remaining() {
            Some(r) if r <= 0.0 => Err(SolverError::TimedOut),
            _ => Ok(()),
        }
    }

    /// The smaller of `limit` and the time left.
    pub fn cap(&self, limit: Option<f64>) -> Option<f64> {
        match (limit, self.remaining()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Shared inputs of a solver run.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub lp: &'a dyn LpSolver,
    pub config: &'a SolverConfig,
    pub deadline: Deadline,
}

impl Context<'_> {
    /// Solves an LP within the deadline; a missing solution means time ran out.
    pub(crate) fn solve_lp(
        &self,
        model: &crate::lp::Model,
        warm: Option<&crate::lp::Basis>,
    ) -> Result<SolveOutcome, SolverError> {
        self.deadline.check()?;
        let opts = crate::lp::LpOptions { time_limit: self.deadline.remaining(), warm_start: warm };
        let out = self.lp.solve_continuous(model, &opts)?;
        match out.status {
            Status::Optimal => Ok(out),
            Status::NoSolution | Status::Feasible => Err(SolverError::TimedOut),
            s => Err(SolverError::LpStatus(s)),
        }
    }
}

/// Result of one solver run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub solution: IntegerSolution,
    /// Set when optimality was proven.
    pub optimal: bool,
    /// Set when some step fell back to previous or hop-shortest paths.
    pub degraded: bool,
    /// Proven lower bound, when known.
    pub bound: Option<f64>,
    pub wall_time: f64,
}

/// Runs `kind` on `instance`.
pub fn solve(
    instance: &Instance,
    kind: SolverKind,
    config: &SolverConfig,
    lp: &dyn LpSolver,
) -> Result<SolveReport, SolverError> {
    config.validate()?;
    let start = Instant::now();
    let ctx = Context { lp, config, deadline: Deadline::after(config.time_limit) };
    let mut report = match kind {
        SolverKind::SrrArcNode => rolling_horizon(instance, OneStepVariant::ArcNode, &ctx)?,
        SolverKind::SrrArcPath => rolling_horizon(instance, OneStepVariant::ArcPath, &ctx)?,
        SolverKind::SrrRestricted => rolling_horizon(instance, OneStepVariant::Restricted, &ctx)?,
        SolverKind::BnbRestrictedShort => {
            rolling_horizon(instance, OneStepVariant::Bnb(BnbConfig { beta: config.beta_short }), &ctx)?
        }
        SolverKind::BnbRestrictedLong => {
            rolling_horizon(instance, OneStepVariant::Bnb(BnbConfig { beta: config.beta_long }), &ctx)?
        }
        SolverKind::SrrPathSequence => solve_multistep(instance, false, &ctx)?,
        SolverKind::SrrPathSequenceRestricted => solve_multistep(instance, true, &ctx)?,
        SolverKind::Exact => solve_exact(instance, &ctx)?,
    };
    report.solver = kind;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}
