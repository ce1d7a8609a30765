use super::SolverError;
use crate::graph::{k_shortest_paths, Path};
use crate::instance::Instance;

/// Number of hop-shortest paths per step in restricted path sets.
pub const DEFAULT_KAPPA: usize = 4;

/// Allowed paths `sets[k][t]` for `t >= 1` (entry 0 is empty): the union over
/// all steps `t'` of the `kappa` hop-shortest paths between the endpoints of
/// `t'`, kept where valid at `t`, plus the initial path where valid.
pub fn restricted_path_sets(instance: &Instance, kappa: usize) -> Result<Vec<Vec<Vec<Path>>>, SolverError> {
    let g = &instance.graph;
    let h = instance.horizon();
    let kappa = kappa.max(1);
    let hops: Vec<Vec<Option<f64>>> = (0..=h).map(|t| g.uniform_costs(t, 1.0)).collect();
    let mut out = Vec::with_capacity(instance.commodities.len());
    for (k, c) in instance.commodities.iter().enumerate() {
        let mut pool: Vec<Path> = Vec::new();
        let mut seen_ends = Vec::new();
        for t in 1..=h {
            let ends = (t, c.origin(t), c.destination(t));
            // Steps with the same endpoints and arc set give the same paths.
            if seen_ends.iter().any(|&(s, o, d)| o == ends.1 && d == ends.2 && g.active_mask(s) == g.active_mask(t)) {
                continue;
            }
            seen_ends.push(ends);
            pool.extend(k_shortest_paths(g, &hops[t], ends.1, ends.2, kappa)?);
        }
        pool.push(c.initial_path.clone());
        pool.sort();
        pool.dedup();
        let mut per_step = vec![Vec::new()];
        for t in 1..=h {
            let valid: Vec<Path> = pool.iter().filter(|p| c.is_valid_path(g, t, p)).cloned().collect();
            if valid.is_empty() {
                return Err(SolverError::NoPath { commodity: k, step: t });
            }
            per_step.push(valid);
        }
        out.push(per_step);
    }
    Ok(out)
}
