use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    restricted_path_sets, solve_colgen_relaxation, ColumnSource, Context, IntegerSolution, SolveReport, SolverError,
    SolverKind,
};
use crate::formulations::build_path_sequence_master;
use crate::instance::Instance;
use crate::pricing::{zero_dual_columns, CommodityPricer, DualValues};

/// A share is integral when it is within this distance of 1.
pub(crate) const INTEGRAL_TOL: f64 = 1e-6;

/// Draws an index with probability proportional to its weight.
pub fn srr_round<T, R: Rng + ?Sized>(weights: &[(T, f64)], rng: &mut R) -> Result<usize, SolverError> {
    if let Some(&(_, w)) = weights.iter().find(|(_, w)| *w < -1e-9 || !w.is_finite()) {
        return Err(SolverError::NegativeWeight(w));
    }
    let total: f64 = weights.iter().map(|(_, w)| w.max(0.0)).sum();
    if weights.is_empty() || total <= 0.0 {
        return Err(SolverError::NegativeWeight(total));
    }
    let mut x = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, (_, w)) in weights.iter().enumerate() {
        let w = w.max(0.0);
        if w <= 0.0 {
            continue;
        }
        if x < w {
            return Ok(i);
        }
        x -= w;
        last = i;
    }
    Ok(last)
}

pub(crate) fn is_fractional<T>(weights: &[(T, f64)]) -> bool {
    !(weights.len() == 1 && weights[0].1 >= 1.0 - INTEGRAL_TOL)
}

/// Ids in `ids` sorted by decreasing demand, then increasing id.
pub(crate) fn by_demand(instance: &Instance, mut ids: Vec<usize>) -> Vec<usize> {
    ids.sort_by(|&a, &b| {
        instance.commodities[b].demand.total_cmp(&instance.commodities[a].demand).then(a.cmp(&b))
    });
    ids
}

/// Rounding over the path-sequence relaxation solved by column generation.
/// With `restricted`, pricing only combines paths of the restricted sets.
pub fn solve_multistep(instance: &Instance, restricted: bool, ctx: &Context<'_>) -> Result<SolveReport, SolverError> {
    let cfg = ctx.config.srr(instance.node_count(), true);
    let sets = if restricted { Some(restricted_path_sets(instance, ctx.config.kappa)?) } else { None };
    let seeds = match &sets {
        Some(sets) => {
            let zero = DualValues::zero(instance);
            (0..instance.commodities.len())
                .map(|k| Ok(CommodityPricer::new(instance, k, &zero, cfg.epsilon).candidate_dp(&sets[k][1..])?.sequence))
                .collect::<Result<Vec<_>, SolverError>>()?
        }
        None => zero_dual_columns(instance, cfg.epsilon)?,
    };
    let mut master = build_path_sequence_master(instance, seeds.into_iter().map(|s| vec![s]).collect(), cfg.epsilon)?;
    let source = match &sets {
        Some(sets) => ColumnSource::Candidates(sets),
        None => ColumnSource::Scheme(ctx.config.pricing_scheme()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cg = solve_colgen_relaxation(
        instance,
        &mut master,
        source,
        cfg.initial_iterations,
        cfg.deletion_probability,
        &mut rng,
        ctx,
    )?;
    loop {
        let unfixed: Vec<usize> = (0..instance.commodities.len()).filter(|&k| master.fixed(k).is_none()).collect();
        if unfixed.is_empty() {
            break;
        }
        let frac: Vec<usize> =
            unfixed.iter().copied().filter(|&k| is_fractional(&master.weights(&cg.outcome, k))).collect();
        if frac.is_empty() {
            for k in unfixed {
                let w = master.weights(&cg.outcome, k);
                master.fix(k, w[0].0);
            }
            break;
        }
        for k in by_demand(instance, frac).into_iter().take(cfg.theta) {
            let w = master.weights(&cg.outcome, k);
            let i = srr_round(&w, &mut rng)?;
            master.fix(k, w[i].0);
        }
        if (0..instance.commodities.len()).all(|k| master.fixed(k).is_some()) {
            break;
        }
        cg = solve_colgen_relaxation(
            instance,
            &mut master,
            source,
            cfg.iterations_between_roundings,
            cfg.deletion_probability,
            &mut rng,
            ctx,
        )?;
    }
    let paths = (0..instance.commodities.len())
        .map(|k| master.column(master.fixed(k).expect("all fixed")).sequence.clone())
        .collect();
    let kind = if restricted { SolverKind::SrrPathSequenceRestricted } else { SolverKind::SrrPathSequence };
    Ok(SolveReport {
        solver: kind,
        solution: IntegerSolution::from_paths(instance, paths),
        optimal: false,
        degraded: false,
        bound: None,
        wall_time: 0.0,
    })
}
