use std::collections::BTreeMap;

use super::{ArcId, DynamicGraph, GraphError, NodeId, Path};

/// Flow below this value is treated as zero during extraction.
const FLOW_EPS: f64 = 1e-12;
/// Maximum conservation residue accepted on input, relative to the largest
/// flow value (or 1 if that is smaller).
const CONSERVATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Cycle {
    pub arcs: Vec<ArcId>,
    pub amount: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowDecomposition {
    pub paths: Vec<(Path, f64)>,
    pub cycles: Vec<Cycle>,
}

impl FlowDecomposition {
    /// Per-arc flow rebuilt from the extracted paths and cycles.
    pub fn arc_flow(&self, arc_count: usize) -> Vec<f64> {
        let mut flow = vec![0.0; arc_count];
        for (p, amount) in &self.paths {
            for a in p.arcs() {
                flow[a.0] += amount;
            }
        }
        for c in &self.cycles {
            for a in &c.arcs {
                flow[a.0] += c.amount;
            }
        }
        flow
    }
}

/// Splits an arc flow into source-to-sink simple paths plus residual cycles.
///
/// `sources` and `sinks` give the net outflow and inflow of each node. Arcs
/// are scanned in ascending id order so the output is deterministic.
pub fn flow_decomposition(
    graph: &DynamicGraph,
    arc_flow: &[f64],
    sources: &BTreeMap<NodeId, f64>,
    sinks: &BTreeMap<NodeId, f64>,
) -> Result<FlowDecomposition, GraphError> {
    let n = graph.node_count();
    if arc_flow.len() != graph.arc_count() {
        return Err(GraphError::CostLength { expected: graph.arc_count(), got: arc_flow.len() });
    }
    let scale = arc_flow.iter().chain(sources.values()).chain(sinks.values()).fold(1.0f64, |m, f| m.max(f.abs()));
    let tol = CONSERVATION_TOL * scale;
    let mut balance = vec![0.0; n];
    for (i, &f) in arc_flow.iter().enumerate() {
        let (u, v) = graph.arc(ArcId(i));
        balance[u.0] += f;
        balance[v.0] -= f;
    }
    for (&v, &s) in sources {
        balance[v.0] -= s;
    }
    for (&v, &d) in sinks {
        balance[v.0] += d;
    }
    for (i, &b) in balance.iter().enumerate() {
        if b.abs() > tol {
            return Err(GraphError::Conservation { node: NodeId(i), residue: b });
        }
    }

    let mut rest: Vec<f64> = arc_flow.iter().map(|&f| if f > FLOW_EPS { f } else { 0.0 }).collect();
    let mut supply: BTreeMap<NodeId, f64> = sources.clone();
    let mut demand: Vec<f64> = vec![0.0; n];
    for (&v, &d) in sinks {
        demand[v.0] += d;
    }
    let mut out = FlowDecomposition::default();

    for (&src, _) in sources {
        loop {
            let s = supply[&src];
            if s <= FLOW_EPS {
                break;
            }
            let mut walk: Vec<ArcId> = Vec::new();
            let mut pos = vec![usize::MAX; n];
            pos[src.0] = 0;
            let mut v = src;
            let reached_sink = loop {
                if v != src && demand[v.0] > FLOW_EPS {
                    break true;
                }
                let Some(&a) = graph.out_arcs(v).iter().find(|a| rest[a.0] > 0.0) else {
                    break false;
                };
                let w = graph.arc(a).1;
                if pos[w.0] != usize::MAX {
                    // Closed a cycle: peel it off and resume from w.
                    let start = pos[w.0];
                    let mut arcs: Vec<ArcId> = walk[start..].to_vec();
                    arcs.push(a);
                    peel(&mut rest, &arcs, &mut out.cycles);
                    for &b in &walk[start..] {
                        pos[graph.arc(b).1 .0] = usize::MAX;
                    }
                    walk.truncate(start);
                    v = w;
                    continue;
                }
                walk.push(a);
                pos[w.0] = walk.len();
                v = w;
            };
            if !reached_sink {
                let dust = walk.iter().map(|a| rest[a.0]).fold(f64::INFINITY, f64::min);
                if dust <= tol {
                    // The walk followed rounding residue; drop it and retry.
                    for a in &walk {
                        if rest[a.0] <= tol {
                            rest[a.0] = 0.0;
                        }
                    }
                    continue;
                }
                if s > tol {
                    return Err(GraphError::Conservation { node: v, residue: s });
                }
                supply.insert(src, 0.0);
                break;
            }
            let mut amount = s.min(demand[v.0]);
            for a in &walk {
                amount = amount.min(rest[a.0]);
            }
            for a in &walk {
                rest[a.0] -= amount;
                if rest[a.0] <= FLOW_EPS {
                    rest[a.0] = 0.0;
                }
            }
            demand[v.0] -= amount;
            if demand[v.0] <= FLOW_EPS {
                demand[v.0] = 0.0;
            }
            let left = s - amount;
            supply.insert(src, if left <= FLOW_EPS { 0.0 } else { left });
            out.paths.push((Path::from_arcs_unchecked(walk), amount));
        }
    }

    // Whatever is left circulates.
    for start in 0..graph.arc_count() {
        while rest[start] > 0.0 {
            let mut walk = vec![ArcId(start)];
            let mut pos = vec![usize::MAX; n];
            let (s0, w0) = graph.arc(ArcId(start));
            pos[s0.0] = 0;
            pos[w0.0] = 1;
            let mut v = w0;
            loop {
                let Some(&a) = graph.out_arcs(v).iter().find(|a| rest[a.0] > 0.0) else {
                    // Residue below tolerance left dangling.
                    for a in &walk {
                        rest[a.0] = 0.0;
                    }
                    break;
                };
                let w = graph.arc(a).1;
                if pos[w.0] != usize::MAX {
                    let from = pos[w.0];
                    let mut arcs = walk[from..].to_vec();
                    arcs.push(a);
                    peel(&mut rest, &arcs, &mut out.cycles);
                    break;
                }
                walk.push(a);
                pos[w.0] = walk.len();
                v = w;
            }
        }
    }
    Ok(out)
}

fn peel(rest: &mut [f64], arcs: &[ArcId], cycles: &mut Vec<Cycle>) {
    let amount = arcs.iter().map(|a| rest[a.0]).fold(f64::INFINITY, f64::min);
    for a in arcs {
        rest[a.0] -= amount;
        if rest[a.0] <= FLOW_EPS {
            rest[a.0] = 0.0;
        }
    }
    cycles.push(Cycle { arcs: arcs.to_vec(), amount });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: usize, x: f64) -> BTreeMap<NodeId, f64> {
        BTreeMap::from([(NodeId(v), x)])
    }

    #[test]
    fn single_chain() {
        let g = DynamicGraph::from_arcs(3, &[(0, 1), (1, 2)], 1.0, 1);
        let d = flow_decomposition(&g, &[5.0, 5.0], &one(0, 5.0), &one(2, 5.0)).unwrap();
        assert_eq!(d.paths.len(), 1);
        assert_eq!(d.paths[0].0.arcs(), &[ArcId(0), ArcId(1)]);
        assert_eq!(d.paths[0].1, 5.0);
        assert!(d.cycles.is_empty());
    }

    #[test]
    fn diamond_recovers_both_routes() {
        let g = DynamicGraph::from_arcs(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], 1.0, 1);
        let flow = [3.0, 3.0, 2.0, 2.0];
        let d = flow_decomposition(&g, &flow, &one(0, 5.0), &one(3, 5.0)).unwrap();
        let mut amounts: Vec<f64> = d.paths.iter().map(|p| p.1).collect();
        amounts.sort_by(f64::total_cmp);
        assert_eq!(amounts, vec![2.0, 3.0]);
        assert_eq!(d.arc_flow(4), flow.to_vec());
    }

    #[test]
    fn zero_flow_is_empty() {
        let g = DynamicGraph::from_arcs(3, &[(0, 1), (1, 2)], 1.0, 1);
        let d = flow_decomposition(&g, &[0.0, 0.0], &BTreeMap::new(), &BTreeMap::new()).unwrap();
        assert_eq!(d, FlowDecomposition::default());
    }

    #[test]
    fn cycle_is_reported_separately() {
        // 0 -> 1 -> 2 plus a circulation 1 -> 3 -> 1.
        let g = DynamicGraph::from_arcs(4, &[(0, 1), (1, 2), (1, 3), (3, 1)], 1.0, 1);
        let flow = [2.0, 2.0, 1.0, 1.0];
        let d = flow_decomposition(&g, &flow, &one(0, 2.0), &one(2, 2.0)).unwrap();
        assert_eq!(d.arc_flow(4), flow.to_vec());
        assert_eq!(d.cycles.len(), 1);
        assert_eq!(d.cycles[0].amount, 1.0);
    }

    #[test]
    fn conservation_violation_rejected() {
        let g = DynamicGraph::from_arcs(3, &[(0, 1), (1, 2)], 1.0, 1);
        let err = flow_decomposition(&g, &[5.0, 4.0], &one(0, 5.0), &one(2, 5.0)).unwrap_err();
        assert!(matches!(err, GraphError::Conservation { .. }));
    }

    #[test]
    fn rounding_dust_is_skipped() {
        // 0 -> 1 carries a hair more than 1 -> 2, leaving dust stuck at 1.
        let g = DynamicGraph::from_arcs(4, &[(0, 1), (1, 2), (0, 3)], 1.0, 1);
        let flow = [1.0 + 5e-12, 1.0, 2500.0];
        let mut sinks = one(2, 1.0);
        sinks.insert(NodeId(3), 2500.0);
        let d = flow_decomposition(&g, &flow, &one(0, 2501.0), &sinks).unwrap();
        let total: f64 = d.paths.iter().map(|p| p.1).sum();
        assert!((total - 2501.0).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            /// Flows built from random paths and cycles on a complete digraph
            /// decompose back to the same arc flow.
            #[test]
            fn reconstruction_identity(
                n in 3usize..7,
                routes in proptest::collection::vec((proptest::collection::vec(0usize..7, 1..5), 1u32..20), 1..6),
            ) {
                let mut arcs = Vec::new();
                for u in 0..n { for v in 0..n { if u != v { arcs.push((u, v)); } } }
                let g = DynamicGraph::from_arcs(n, &arcs, 1.0, 1);
                let mut flow = vec![0.0; g.arc_count()];
                let mut sinks: BTreeMap<NodeId, f64> = BTreeMap::new();
                let mut total = 0.0;
                for (hops, amount) in &routes {
                    // Walk from node 0 through distinct nodes.
                    let mut seen = vec![false; n];
                    seen[0] = true;
                    let mut v = 0;
                    for &h in hops {
                        let w = h % n;
                        if seen[w] { continue; }
                        seen[w] = true;
                        let a = g.find_arc(NodeId(v), NodeId(w)).unwrap();
                        flow[a.0] += *amount as f64;
                        v = w;
                    }
                    if v == 0 { continue; }
                    *sinks.entry(NodeId(v)).or_default() += *amount as f64;
                    total += *amount as f64;
                }
                let sources = if total > 0.0 { one(0, total) } else { BTreeMap::new() };
                let d = flow_decomposition(&g, &flow, &sources, &sinks).unwrap();
                let back = d.arc_flow(g.arc_count());
                for (a, b) in back.iter().zip(&flow) {
                    prop_assert!((a - b).abs() <= 1e-9);
                }
                prop_assert!(d.paths.len() + d.cycles.len() <= g.arc_count() + sinks.len());
                for (p, amount) in &d.paths {
                    prop_assert!(Path::new(&g, p.arcs().to_vec()).is_ok());
                    prop_assert!(*amount > 0.0);
                }
            }
        }
    }
}
