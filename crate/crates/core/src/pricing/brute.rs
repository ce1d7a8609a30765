use super::{reduced_cost, DualValues, PricedColumn, PricingError};
use crate::formulations::PathSequence;
use crate::graph::{ArcId, DynamicGraph, NodeId, Path};
use crate::instance::Instance;

/// Largest number of sequences [`brute_force_pricing`] accepts to enumerate.
pub const MAX_BRUTE_FORCE_SEQUENCES: f64 = 1e6;

/// Every simple path from `source` to `target` on the arcs active at `t`.
pub fn enumerate_simple_paths(graph: &DynamicGraph, t: usize, source: NodeId, target: NodeId) -> Vec<Path> {
    fn walk(
        g: &DynamicGraph,
        t: usize,
        v: NodeId,
        target: NodeId,
        seen: &mut Vec<bool>,
        arcs: &mut Vec<ArcId>,
        out: &mut Vec<Path>,
    ) {
        if v == target {
            out.push(Path::new(g, arcs.clone()).expect("walk builds simple paths"));
            return;
        }
        for &a in g.out_arcs(v) {
            let w = g.arc(a).1;
            if !g.is_active(t, a) || seen[w.0] {
                continue;
            }
            seen[w.0] = true;
            arcs.push(a);
            walk(g, t, w, target, seen, arcs, out);
            arcs.pop();
            seen[w.0] = false;
        }
    }
    let mut out = Vec::new();
    if source == target {
        return out;
    }
    let mut seen = vec![false; graph.node_count()];
    seen[source.0] = true;
    walk(graph, t, source, target, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive minimum of the reduced cost over all valid sequences.
pub fn brute_force_pricing(
    instance: &Instance,
    k: usize,
    duals: &DualValues,
    epsilon: f64,
) -> Result<PricedColumn, PricingError> {
    let c = &instance.commodities[k];
    let h = instance.horizon();
    let mut layers = Vec::with_capacity(h);
    let mut size = 1.0;
    for t in 1..=h {
        let layer = enumerate_simple_paths(&instance.graph, t, c.origin(t), c.destination(t));
        if layer.is_empty() {
            return Err(PricingError::Infeasible { commodity: k, step: t });
        }
        size *= layer.len() as f64;
        if size > MAX_BRUTE_FORCE_SEQUENCES {
            return Err(PricingError::SearchTooLarge(size));
        }
        layers.push(layer);
    }
    let mut pick = vec![0; h];
    let mut best: Option<PricedColumn> = None;
    loop {
        let seq = PathSequence::new(pick.iter().zip(&layers).map(|(&i, l)| l[i].clone()).collect());
        let rc = reduced_cost(instance, k, &seq, duals, epsilon)?;
        if best.as_ref().is_none_or(|b| rc < b.reduced_cost) {
            best = Some(PricedColumn { sequence: seq, reduced_cost: rc });
        }
        let mut i = 0;
        while i < h {
            pick[i] += 1;
            if pick[i] < layers[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
        if i == h {
            break;
        }
    }
    Ok(best.expect("at least one sequence"))
}
