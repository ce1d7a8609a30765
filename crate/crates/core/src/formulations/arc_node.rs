use std::collections::BTreeMap;

use super::FormulationError;
use crate::graph::{flow_decomposition, NodeId, Path};
use crate::instance::{Commodity, Instance};
use crate::lp::{ConId, Model, Sense, SolveOutcome, VarId};

/// Commodities sharing an origin at one step, routed as a single flow.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperCommodity {
    pub origin: NodeId,
    /// Member commodity ids in ascending order.
    pub members: Vec<usize>,
    pub demand: f64,
    pub per_destination: BTreeMap<NodeId, f64>,
}

/// Groups the commodities listed in `ids` by their origin at step `t`.
pub fn group_super_commodities(commodities: &[Commodity], ids: &[usize], t: usize) -> Vec<SuperCommodity> {
    let mut groups: BTreeMap<NodeId, SuperCommodity> = BTreeMap::new();
    for &k in ids {
        let c = &commodities[k];
        let s = groups.entry(c.origin(t)).or_insert_with(|| SuperCommodity {
            origin: c.origin(t),
            members: Vec::new(),
            demand: 0.0,
            per_destination: BTreeMap::new(),
        });
        s.members.push(k);
        s.demand += c.demand;
        *s.per_destination.entry(c.destination(t)).or_insert(0.0) += c.demand;
    }
    let mut out: Vec<SuperCommodity> = groups.into_values().collect();
    for s in &mut out {
        s.members.sort_unstable();
    }
    out
}

/// One-step aggregated arc-node model. Members whose previous path is still
/// valid get a variable telling which share of them stays on it.
#[derive(Clone, Debug)]
pub struct AggregatedArcNode {
    pub model: Model,
    pub step: usize,
    pub supers: Vec<SuperCommodity>,
    /// `flow[s][arc]` for arcs active at the step.
    pub flow: Vec<Vec<Option<VarId>>>,
    /// `keep[k]`, present for modeled commodities with a valid previous path.
    pub keep: Vec<Option<VarId>>,
    pub capacity: Vec<Option<ConId>>,
    pub budget: ConId,
    pub arc_overflow: Vec<Option<VarId>>,
    pub step_excess: VarId,
}

/// Builds the model of step `t`. `previous[k]` is the path of commodity `k` at
/// step `t - 1`; `base_load` is per-arc load already committed by commodities
/// left out of `supers`.
pub fn build_aggregated_arc_node(
    instance: &Instance,
    t: usize,
    previous: &[Path],
    supers: Vec<SuperCommodity>,
    base_load: &[f64],
    epsilon: f64,
) -> AggregatedArcNode {
    let g = &instance.graph;
    let mut model = Model::new();
    let mut keep = vec![None; instance.commodities.len()];
    let mut offset = 0.0;
    for s in &supers {
        for &k in &s.members {
            offset += instance.alpha;
            if instance.commodities[k].is_valid_path(g, t, &previous[k]) {
                keep[k] = Some(model.add_variable(0.0, 1.0, -instance.alpha, false));
            }
        }
    }
    model.set_objective_offset(offset);

    let mut flow = Vec::with_capacity(supers.len());
    for s in &supers {
        let mut f = vec![None; g.arc_count()];
        for a in g.active_arcs(t) {
            f[a.0] = Some(model.add_variable(0.0, f64::INFINITY, epsilon, false));
        }
        for v in 0..g.node_count() {
            let v = NodeId(v);
            let mut row: Vec<(VarId, f64)> = Vec::new();
            row.extend(g.out_arcs(v).iter().filter_map(|a| f[a.0]).map(|x| (x, 1.0)));
            row.extend(g.in_arcs(v).iter().filter_map(|a| f[a.0]).map(|x| (x, -1.0)));
            let supply = if v == s.origin { s.demand } else { 0.0 };
            let rhs = supply - s.per_destination.get(&v).copied().unwrap_or(0.0);
            if row.is_empty() && rhs == 0.0 {
                continue;
            }
            model.add_constraint(&row, Sense::Eq, rhs);
        }
        let mut linking: BTreeMap<usize, Vec<(VarId, f64)>> = BTreeMap::new();
        for &k in &s.members {
            if let Some(x) = keep[k] {
                for a in previous[k].arcs() {
                    linking.entry(a.0).or_default().push((x, instance.commodities[k].demand));
                }
            }
        }
        for (a, mut row) in linking {
            row.push((f[a].expect("valid path arcs are active"), -1.0));
            model.add_constraint(&row, Sense::Le, 0.0);
        }
        flow.push(f);
    }

    let step_excess = model.add_variable(0.0, f64::INFINITY, 1.0, false);
    let mut capacity = vec![None; g.arc_count()];
    let mut arc_overflow = vec![None; g.arc_count()];
    let mut budget_row = Vec::new();
    for a in g.active_arcs(t) {
        let o = model.add_variable(0.0, f64::INFINITY, 0.0, false);
        let mut row: Vec<(VarId, f64)> = flow.iter().filter_map(|f| f[a.0]).map(|x| (x, 1.0)).collect();
        row.push((o, -1.0));
        capacity[a.0] = Some(model.add_constraint(&row, Sense::Le, g.capacity(t, a) - base_load[a.0]));
        arc_overflow[a.0] = Some(o);
        budget_row.push((o, 1.0));
    }
    budget_row.push((step_excess, -1.0));
    let budget = model.add_constraint(&budget_row, Sense::Le, instance.budget);

    AggregatedArcNode { model, step: t, supers, flow, keep, capacity, budget, arc_overflow, step_excess }
}

/// Turns an aggregated solution into path fractions per modeled commodity;
/// other entries are empty. Shares kept on previous paths are assigned first,
/// the rest of each super-commodity flow is decomposed into paths that are
/// handed to members by destination in id order.
pub fn extract_commodity_paths(
    model: &AggregatedArcNode,
    instance: &Instance,
    previous: &[Path],
    outcome: &SolveOutcome,
) -> Result<Vec<Vec<(Path, f64)>>, FormulationError> {
    let g = &instance.graph;
    let mut out: Vec<BTreeMap<Path, f64>> = vec![BTreeMap::new(); instance.commodities.len()];
    for (s, f) in model.supers.iter().zip(&model.flow) {
        let mut arc_flow: Vec<f64> = f.iter().map(|x| x.map_or(0.0, |x| outcome.value(x).max(0.0))).collect();
        let mut sources = BTreeMap::new();
        let mut sinks: BTreeMap<NodeId, f64> = BTreeMap::new();
        let mut rest = vec![0.0; instance.commodities.len()];
        for &k in &s.members {
            let c = &instance.commodities[k];
            let kept = model.keep[k].map_or(0.0, |x| outcome.value(x).clamp(0.0, 1.0));
            if kept > 0.0 {
                for a in previous[k].arcs() {
                    arc_flow[a.0] = (arc_flow[a.0] - kept * c.demand).max(0.0);
                }
                out[k].insert(previous[k].clone(), kept);
            }
            rest[k] = (1.0 - kept) * c.demand;
            *sources.entry(s.origin).or_insert(0.0) += rest[k];
            *sinks.entry(c.destination(model.step)).or_insert(0.0) += rest[k];
        }
        let dec = flow_decomposition(g, &arc_flow, &sources, &sinks)?;
        for (p, mut amount) in dec.paths {
            let end = p.target(g);
            for &k in &s.members {
                if amount <= 0.0 {
                    break;
                }
                let c = &instance.commodities[k];
                if c.destination(model.step) != end || rest[k] <= 0.0 {
                    continue;
                }
                let take = amount.min(rest[k]);
                rest[k] -= take;
                amount -= take;
                *out[k].entry(p.clone()).or_insert(0.0) += take / c.demand;
            }
        }
    }
    let mut result = Vec::with_capacity(out.len());
    for (k, m) in out.into_iter().enumerate() {
        let sum: f64 = m.values().sum();
        let modeled = model.supers.iter().any(|s| s.members.contains(&k));
        if modeled && (sum - 1.0).abs() > 1e-6 {
            if (sum - 1.0).abs() > 1e-4 || sum <= 0.0 {
                return Err(FormulationError::WeightSum { step: model.step, sum });
            }
            result.push(m.into_iter().map(|(p, w)| (p, w / sum)).collect());
        } else {
            result.push(m.into_iter().collect());
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ArcId, DynamicGraph};
    use crate::instance::fixtures::diamond;
    use crate::lp::{HighsBackend, LpOptions, LpSolver};

    fn star(origins: &[usize]) -> Vec<Commodity> {
        let g = DynamicGraph::from_arcs(4, &[(0, 3), (1, 3), (2, 3)], 1.0, 1);
        origins
            .iter()
            .map(|&o| Commodity {
                origins: vec![NodeId(o)],
                destinations: vec![NodeId(3)],
                demand: 1.0 + o as f64,
                initial_path: Path::new(&g, vec![ArcId(o)]).unwrap(),
            })
            .collect()
    }

    fn solve(m: &AggregatedArcNode) -> SolveOutcome {
        HighsBackend::new().solve_continuous(&m.model, &LpOptions::default()).unwrap()
    }

    #[test]
    fn grouping() {
        let cs = star(&[0, 1, 2]);
        assert_eq!(group_super_commodities(&cs, &[0, 1, 2], 0).len(), 3);
        let cs = star(&[1, 1, 1]);
        let s = group_super_commodities(&cs, &[0, 1, 2], 0);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].demand, 6.0);
        let cs = star(&[0, 2, 0, 2, 2]);
        let s = group_super_commodities(&cs, &[4, 0, 1, 2, 3], 0);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].origin, s[0].members.clone(), s[0].demand), (NodeId(0), vec![0, 2], 2.0));
        assert_eq!((s[1].origin, s[1].members.clone(), s[1].demand), (NodeId(2), vec![1, 3, 4], 9.0));
    }

    #[test]
    fn keeping_the_path() {
        let inst = diamond(2, 10.0, 1.0);
        let prev = vec![inst.commodities[0].initial_path.clone()];
        let supers = group_super_commodities(&inst.commodities, &[0], 1);
        let m = build_aggregated_arc_node(&inst, 1, &prev, supers, &[0.0; 4], 1e-4);
        let out = solve(&m);
        assert!((out.objective - 2e-4).abs() < 1e-9);
        assert!((out.value(m.keep[0].unwrap()) - 1.0).abs() < 1e-9);
        let paths = extract_commodity_paths(&m, &inst, &prev, &out).unwrap();
        assert_eq!(paths[0], vec![(prev[0].clone(), 1.0)]);
    }

    #[test]
    fn removed_arc_forces_a_change() {
        let mut g = DynamicGraph::from_arcs(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], 10.0, 1);
        g.push_step(vec![false, true, true, true], vec![10.0; 4]);
        let c = Commodity {
            origins: vec![NodeId(0); 2],
            destinations: vec![NodeId(3); 2],
            demand: 1.0,
            initial_path: Path::new(&g, vec![ArcId(0), ArcId(1)]).unwrap(),
        };
        let inst = Instance::new(g, vec![c], 1.0, 0.0).unwrap();
        let prev = vec![inst.commodities[0].initial_path.clone()];
        let m = build_aggregated_arc_node(&inst, 1, &prev, group_super_commodities(&inst.commodities, &[0], 1), &[0.0; 4], 1e-4);
        assert!(m.keep[0].is_none());
        let out = solve(&m);
        assert!(out.objective >= 1.0);
    }

    fn shared_origin(capacity: f64) -> (Instance, Vec<Path>) {
        // Node 0 feeds sinks 3 and 4 through 1 or 2.
        let arcs = [(0, 1), (0, 2), (1, 3), (2, 3), (1, 4), (2, 4)];
        let g = DynamicGraph::from_arcs(5, &arcs, capacity, 2);
        let p = |a: &[usize]| Path::new(&g, a.iter().map(|&i| ArcId(i)).collect()).unwrap();
        let prev = vec![p(&[0, 2]), p(&[0, 4]), p(&[0, 2])];
        let cs = vec![(3, 2.0), (4, 1.0), (3, 1.0)]
            .into_iter()
            .zip(&prev)
            .map(|((d, dem), q)| Commodity {
                origins: vec![NodeId(0); 2],
                destinations: vec![NodeId(d); 2],
                demand: dem,
                initial_path: q.clone(),
            })
            .collect();
        (Instance::new(g, cs, 1.0, 0.0).unwrap(), prev)
    }

    #[test]
    fn aggregation_shrinks_the_model_and_keeps_its_value() {
        let (inst, prev) = shared_origin(2.0);
        let all = group_super_commodities(&inst.commodities, &[0, 1, 2], 1);
        assert_eq!(all.len(), 1);
        let singles: Vec<SuperCommodity> =
            (0..3).flat_map(|k| group_super_commodities(&inst.commodities, &[k], 1)).collect();
        let a = build_aggregated_arc_node(&inst, 1, &prev, all, &[0.0; 6], 1e-4);
        let b = build_aggregated_arc_node(&inst, 1, &prev, singles, &[0.0; 6], 1e-4);
        let count = |m: &AggregatedArcNode| m.flow.iter().flatten().flatten().count();
        assert_eq!(count(&a), 6);
        assert_eq!(count(&b), 18);
        let (oa, ob) = (solve(&a), solve(&b));
        assert!((oa.objective - ob.objective).abs() < 1e-7);

        let paths = extract_commodity_paths(&a, &inst, &prev, &oa).unwrap();
        for (k, ps) in paths.iter().enumerate() {
            let sum: f64 = ps.iter().map(|(_, w)| w).sum();
            assert!((sum - 1.0).abs() < 1e-6);
            let kept = oa.value(a.keep[k].unwrap());
            let on_prev = ps.iter().find(|(p, _)| *p == prev[k]).map_or(0.0, |(_, w)| *w);
            assert!(on_prev >= kept - 1e-6);
            for (p, _) in ps {
                assert!(inst.commodities[k].is_valid_path(&inst.graph, 1, p));
            }
        }
    }
}
