use rand::Rng;

use super::{Context, SolverError};
use crate::formulations::PathSequenceMaster;
use crate::graph::Path;
use crate::instance::Instance;
use crate::lp::SolveOutcome;
use crate::pricing::{CommodityPricer, DualValues, PricingScheme};

/// Columns are added only when their reduced cost is below this value.
pub const IMPROVING_THRESHOLD: f64 = -1e-6;

/// Where new path-sequences come from.
#[derive(Clone, Copy, Debug)]
pub enum ColumnSource<'a> {
    Scheme(PricingScheme),
    /// Sequences over fixed per-step candidates `sets[k][t]` (entry 0 unused).
    Candidates(&'a [Vec<Vec<Path>>]),
}

#[derive(Clone, Debug)]
pub struct ColgenResult {
    pub outcome: SolveOutcome,
    pub duals: DualValues,
    /// No improving column exists and every pricing was exact.
    pub converged: bool,
    pub iterations: usize,
    pub columns_added: usize,
}

/// Alternates master solves and pricing for at most `max_iters` rounds.
/// Before new columns enter, each non-basic column is deleted with
/// probability `deletion_prob`, except fixed columns and the last column of a
/// commodity.
pub fn solve_colgen_relaxation<R: Rng + ?Sized>(
    instance: &Instance,
    master: &mut PathSequenceMaster,
    source: ColumnSource<'_>,
    max_iters: usize,
    deletion_prob: f64,
    rng: &mut R,
    ctx: &Context<'_>,
) -> Result<ColgenResult, SolverError> {
    let mut outcome = ctx.solve_lp(&master.model, None)?;
    let mut duals = DualValues::from_master(master, &outcome);
    let mut converged = false;
    let mut iterations = 0;
    let mut columns_added = 0;
    while iterations < max_iters {
        ctx.deadline.check()?;
        let mut found = Vec::new();
        let mut exact = true;
        for k in 0..instance.commodities.len() {
            if master.fixed(k).is_some() {
                continue;
            }
            let pricer = CommodityPricer::new(instance, k, &duals, master.epsilon);
            let (col, is_exact) = match source {
                ColumnSource::Scheme(s) => s.price(&pricer)?,
                ColumnSource::Candidates(sets) => (pricer.candidate_dp(&sets[k][1..])?, true),
            };
            exact &= is_exact;
            if col.reduced_cost < IMPROVING_THRESHOLD {
                found.push((k, col.sequence));
            }
        }
        if found.is_empty() {
            converged = exact;
            break;
        }
        iterations += 1;
        if deletion_prob > 0.0 {
            delete_nonbasic(master, &outcome, deletion_prob, rng);
        }
        for (k, seq) in found {
            if master.add_column(instance, k, seq)?.is_some() {
                columns_added += 1;
            }
        }
        outcome = ctx.solve_lp(&master.model, outcome.basis.as_ref())?;
        duals = DualValues::from_master(master, &outcome);
    }
    Ok(ColgenResult { outcome, duals, converged, iterations, columns_added })
}

fn delete_nonbasic<R: Rng + ?Sized>(master: &mut PathSequenceMaster, outcome: &SolveOutcome, p: f64, rng: &mut R) {
    let mut doomed = Vec::new();
    for k in 0..master.convexity.len() {
        if master.fixed(k).is_some() {
            continue;
        }
        let cols = master.columns_of(k).to_vec();
        let mut left = cols.len();
        for v in cols {
            if left <= 1 {
                break;
            }
            if !outcome.is_basic(v) && outcome.value(v) <= 1e-9 && rng.gen_bool(p) {
                doomed.push(v);
                left -= 1;
            }
        }
    }
    master.remove_columns(&doomed);
}
