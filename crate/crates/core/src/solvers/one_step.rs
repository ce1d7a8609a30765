use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::srr::{by_demand, is_fractional};
use super::{restricted_path_sets, srr_round, BnbConfig, Context, IntegerSolution, SolveReport, SolverError, SolverKind};
use crate::formulations::{
    build_aggregated_arc_node, build_extended_arc_path, extract_commodity_paths, group_super_commodities,
};
use crate::graph::{shortest_path, Path};
use crate::instance::Instance;
use crate::lp::MipOptions;

/// Safety cap on pricing rounds of the one-step arc-path relaxation.
const MAX_PATH_ROUNDS: usize = 1000;

/// How one step is decided.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OneStepVariant {
    /// Rounding over the aggregated arc-node relaxation.
    ArcNode,
    /// Rounding over the arc-path relaxation with full path generation.
    ArcPath,
    /// Rounding over the arc-path relaxation on restricted paths.
    Restricted,
    /// Branch-and-bound on restricted paths.
    Bnb(BnbConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub paths: Vec<Path>,
    pub degraded: bool,
}

/// Path of each commodity when no model answer is available: the previous
/// path if still valid, else a hop-shortest path.
fn fallback_paths(window: &Instance) -> Result<Vec<Path>, SolverError> {
    let g = &window.graph;
    let hops = g.uniform_costs(1, 1.0);
    window
        .commodities
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if c.is_valid_path(g, 1, &c.initial_path) {
                return Ok(c.initial_path.clone());
            }
            shortest_path(g, &hops, c.origin(1), c.destination(1))?
                .map(|(p, _)| p)
                .ok_or(SolverError::NoPath { commodity: k, step: 1 })
        })
        .collect()
}

/// Decides step 1 of a two-step `window` whose initial paths are the paths of
/// the previous step. `allowed[k]` lists the restricted paths of commodity `k`
/// and is required by the restricted variants.
pub fn solve_one_step<R: Rng + ?Sized>(
    window: &Instance,
    variant: OneStepVariant,
    allowed: Option<&[Vec<Path>]>,
    rng: &mut R,
    ctx: &Context<'_>,
) -> Result<StepResult, SolverError> {
    let need_allowed = || allowed.ok_or_else(|| SolverError::Config("restricted variant without path sets".into()));
    match variant {
        OneStepVariant::ArcNode => srr_arc_node(window, rng, ctx),
        OneStepVariant::ArcPath => srr_arc_path(window, None, rng, ctx),
        OneStepVariant::Restricted => srr_arc_path(window, Some(need_allowed()?), rng, ctx),
        OneStepVariant::Bnb(b) => bnb_restricted(window, need_allowed()?, b, ctx),
    }
}

fn srr_arc_node<R: Rng + ?Sized>(window: &Instance, rng: &mut R, ctx: &Context<'_>) -> Result<StepResult, SolverError> {
    let cfg = ctx.config.srr(window.node_count(), false);
    let n = window.commodities.len();
    let previous: Vec<Path> = window.commodities.iter().map(|c| c.initial_path.clone()).collect();
    let mut chosen: Vec<Option<Path>> = vec![None; n];
    let mut base_load = vec![0.0; window.graph.arc_count()];
    loop {
        let unfixed: Vec<usize> = (0..n).filter(|&k| chosen[k].is_none()).collect();
        if unfixed.is_empty() {
            break;
        }
        let supers = group_super_commodities(&window.commodities, &unfixed, 1);
        let model = build_aggregated_arc_node(window, 1, &previous, supers, &base_load, cfg.epsilon);
        let out = ctx.solve_lp(&model.model, None)?;
        let shares = extract_commodity_paths(&model, window, &previous, &out)?;
        let frac: Vec<usize> = unfixed.iter().copied().filter(|&k| is_fractional(&shares[k])).collect();
        let pick: Vec<usize> = if frac.is_empty() { unfixed } else { by_demand(window, frac).into_iter().take(cfg.theta).collect() };
        for k in pick {
            let w = &shares[k];
            let i = if w.len() == 1 { 0 } else { srr_round(w, rng)? };
            let p = w[i].0.clone();
            for a in p.arcs() {
                base_load[a.0] += window.commodities[k].demand;
            }
            chosen[k] = Some(p);
        }
    }
    Ok(StepResult { paths: chosen.into_iter().map(|p| p.expect("all fixed")).collect(), degraded: false })
}

fn srr_arc_path<R: Rng + ?Sized>(
    window: &Instance,
    allowed: Option<&[Vec<Path>]>,
    rng: &mut R,
    ctx: &Context<'_>,
) -> Result<StepResult, SolverError> {
    let cfg = ctx.config.srr(window.node_count(), false);
    let g = &window.graph;
    let n = window.commodities.len();
    let start = match allowed {
        Some(sets) => sets.to_vec(),
        None => fallback_paths(window)?.into_iter().map(|p| vec![p]).collect(),
    };
    let per_step: Vec<Vec<Vec<Path>>> = start.into_iter().map(|ps| vec![Vec::new(), ps]).collect();
    let mut model = build_extended_arc_path(window, &per_step, cfg.epsilon)?;
    let mut fixed = vec![false; n];
    let mut basis = None;
    loop {
        let mut out = ctx.solve_lp(&model.model, basis.as_ref())?;
        if allowed.is_none() {
            for _ in 0..MAX_PATH_ROUNDS {
                let mut added = 0;
                for (k, c) in window.commodities.iter().enumerate() {
                    if fixed[k] {
                        continue;
                    }
                    let costs: Vec<Option<f64>> = model.capacity[1]
                        .iter()
                        .map(|row| {
                            row.map(|r| {
                                let u = out.dual(r);
                                let u = if u.abs() < crate::pricing::DUAL_CLAMP { 0.0 } else { u };
                                (cfg.epsilon - c.demand * u).max(0.0)
                            })
                        })
                        .collect();
                    let Some((p, cost)) = shortest_path(g, &costs, c.origin(1), c.destination(1))? else {
                        return Err(SolverError::NoPath { commodity: k, step: 1 });
                    };
                    let change = if p != c.initial_path { window.alpha } else { 0.0 };
                    let rc = change + cost - out.dual(model.convexity[k][1].expect("step 1 row"));
                    if rc < super::IMPROVING_THRESHOLD && model.add_path(window, k, 1, p)?.is_some() {
                        added += 1;
                    }
                }
                if added == 0 {
                    break;
                }
                out = ctx.solve_lp(&model.model, out.basis.as_ref())?;
            }
        }
        let unfixed: Vec<usize> = (0..n).filter(|&k| !fixed[k]).collect();
        if unfixed.is_empty() {
            break;
        }
        let weights: Vec<Vec<(Path, f64)>> = (0..n).map(|k| model.weights(&out, k, 1)).collect();
        let frac: Vec<usize> = unfixed.iter().copied().filter(|&k| is_fractional(&weights[k])).collect();
        let pick: Vec<usize> = if frac.is_empty() { unfixed } else { by_demand(window, frac).into_iter().take(cfg.theta).collect() };
        for k in pick {
            let w = &weights[k];
            let i = if w.len() == 1 { 0 } else { srr_round(w, rng)? };
            model.fix(k, 1, &w[i].0);
            fixed[k] = true;
        }
        if fixed.iter().all(|&f| f) {
            break;
        }
        basis = out.basis;
    }
    let paths = (0..n)
        .map(|k| model.paths(k, 1).map(|(p, _)| p.clone()).next().expect("fixed commodity keeps one path"))
        .collect();
    Ok(StepResult { paths, degraded: false })
}

fn bnb_restricted(
    window: &Instance,
    allowed: &[Vec<Path>],
    bnb: BnbConfig,
    ctx: &Context<'_>,
) -> Result<StepResult, SolverError> {
    ctx.deadline.check()?;
    let per_step: Vec<Vec<Vec<Path>>> = allowed.iter().map(|ps| vec![Vec::new(), ps.clone()]).collect();
    let mut model = build_extended_arc_path(window, &per_step, ctx.config.epsilon)?;
    model.set_integer(true);
    let start: Vec<Vec<Path>> = window
        .commodities
        .iter()
        .zip(allowed)
        .map(|(c, ps)| {
            let keep = ps.iter().find(|p| **p == c.initial_path);
            let p = keep.or_else(|| ps.iter().min_by_key(|p| p.len())).expect("non-empty set");
            vec![p.clone()]
        })
        .collect();
    let x0 = model.start_vector(window, &start);
    let opts = MipOptions {
        time_limit: ctx.deadline.cap(Some(bnb.time_limit(window.node_count()))),
        feasibility_emphasis: true,
        threads: 1,
        start: Some(&x0),
        relative_gap: None,
    };
    let out = ctx.lp.solve_integer(&model.model, &opts)?;
    if !out.status.has_solution() {
        ctx.deadline.check()?;
        return Ok(StepResult { paths: start.into_iter().map(|mut v| v.remove(0)).collect(), degraded: true });
    }
    let paths = (0..window.commodities.len())
        .map(|k| {
            model
                .paths(k, 1)
                .find(|(_, v)| out.value(v.x) > 0.5)
                .map(|(p, _)| p.clone())
                .unwrap_or_else(|| start[k][0].clone())
        })
        .collect();
    Ok(StepResult { paths, degraded: false })
}

/// Chains one-step decisions, handing each step's paths to the next.
pub fn rolling_horizon(
    instance: &Instance,
    variant: OneStepVariant,
    ctx: &Context<'_>,
) -> Result<SolveReport, SolverError> {
    let restricted = matches!(variant, OneStepVariant::Restricted | OneStepVariant::Bnb(_));
    let sets = if restricted { Some(restricted_path_sets(instance, ctx.config.kappa)?) } else { None };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let mut previous: Vec<Path> = instance.commodities.iter().map(|c| c.initial_path.clone()).collect();
    let mut steps = Vec::with_capacity(instance.horizon());
    let mut degraded = false;
    for t in 1..=instance.horizon() {
        let window = instance.window(t - 1, t, &previous);
        let allowed: Option<Vec<Vec<Path>>> = sets.as_ref().map(|s| s.iter().map(|per_t| per_t[t].clone()).collect());
        let step = solve_one_step(&window, variant, allowed.as_deref(), &mut rng, ctx)
            .map_err(|e| SolverError::Step { step: t, source: Box::new(e) })?;
        degraded |= step.degraded;
        previous = step.paths.clone();
        steps.push(step.paths);
    }
    let solver = match variant {
        OneStepVariant::ArcNode => SolverKind::SrrArcNode,
        OneStepVariant::ArcPath => SolverKind::SrrArcPath,
        OneStepVariant::Restricted => SolverKind::SrrRestricted,
        OneStepVariant::Bnb(b) if b.beta >= super::BETA_LONG => SolverKind::BnbRestrictedLong,
        OneStepVariant::Bnb(_) => SolverKind::BnbRestrictedShort,
    };
    Ok(SolveReport {
        solver,
        solution: IntegerSolution::from_steps(instance, steps),
        optimal: false,
        degraded,
        bound: None,
        wall_time: 0.0,
    })
}
