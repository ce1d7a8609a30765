use super::{rolling_horizon, Context, IntegerSolution, OneStepVariant, SolveReport, SolverError, SolverKind};
use crate::formulations::{build_extended_arc_node, PathSequence};
use crate::graph::{shortest_path, Path};
use crate::instance::Instance;
use crate::lp::{MipOptions, Status};

/// Relative gap at which the exact search stops.
const EXACT_GAP: f64 = 1e-6;

/// Keeps each path while valid and otherwise moves to a hop-shortest path.
fn greedy_sequences(instance: &Instance) -> Result<Vec<PathSequence>, SolverError> {
    let g = &instance.graph;
    let mut out = Vec::with_capacity(instance.commodities.len());
    for (k, c) in instance.commodities.iter().enumerate() {
        let mut prev = c.initial_path.clone();
        let mut seq: Vec<Path> = Vec::with_capacity(instance.horizon());
        for t in 1..=instance.horizon() {
            if !c.is_valid_path(g, t, &prev) {
                prev = shortest_path(g, &g.uniform_costs(t, 1.0), c.origin(t), c.destination(t))?
                    .ok_or(SolverError::NoPath { commodity: k, step: t })?
                    .0;
            }
            seq.push(prev.clone());
        }
        out.push(PathSequence::new(seq));
    }
    Ok(out)
}

fn penalized(instance: &Instance, paths: &[PathSequence], epsilon: f64) -> f64 {
    let arcs: usize = paths.iter().map(PathSequence::total_arcs).sum();
    IntegerSolution::from_paths(instance, paths.to_vec()).objective + epsilon * arcs as f64
}

/// Solves the multi-step arc-node MILP. The search starts from the better of
/// the greedy sequences and a rolling arc-node rounding; without an incumbent
/// that start is returned, flagged degraded.
pub fn solve_exact(instance: &Instance, ctx: &Context<'_>) -> Result<SolveReport, SolverError> {
    let cap = ctx.config.exact_size_cap;
    let size = instance.node_count() * instance.commodities.len() * instance.horizon();
    if size > cap {
        return Err(SolverError::TooLarge { size, cap });
    }
    ctx.deadline.check()?;
    let model = build_extended_arc_node(instance, ctx.config.epsilon);
    let eps = ctx.config.epsilon;
    let mut start = greedy_sequences(instance)?;
    if let Ok(r) = rolling_horizon(instance, OneStepVariant::ArcNode, ctx) {
        if !r.degraded && penalized(instance, &r.solution.paths, eps) < penalized(instance, &start, eps) {
            start = r.solution.paths;
        }
    }
    ctx.deadline.check()?;
    let x0 = model.start_vector(instance, &start);
    let opts = MipOptions {
        time_limit: ctx.deadline.cap(ctx.config.exact_time_limit),
        feasibility_emphasis: false,
        threads: 1,
        start: Some(&x0),
        relative_gap: Some(EXACT_GAP),
    };
    let out = ctx.lp.solve_integer(&model.model, &opts)?;
    let (paths, degraded) = if out.status.has_solution() {
        (model.extract_paths(instance, &out)?, false)
    } else {
        (start, true)
    };
    Ok(SolveReport {
        solver: SolverKind::Exact,
        solution: IntegerSolution::from_paths(instance, paths),
        optimal: out.status == Status::Optimal,
        degraded,
        bound: out.bound,
        wall_time: 0.0,
    })
}
