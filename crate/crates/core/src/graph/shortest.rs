use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use super::{ArcId, DynamicGraph, GraphError, NodeId, Path, COST_TOL};

fn check_costs(graph: &DynamicGraph, costs: &[Option<f64>]) -> Result<(), GraphError> {
    if costs.len() != graph.arc_count() {
        return Err(GraphError::CostLength { expected: graph.arc_count(), got: costs.len() });
    }
    for (i, c) in costs.iter().enumerate() {
        if let Some(c) = *c {
            if c < 0.0 || c.is_nan() {
                return Err(GraphError::NegativeCost { arc: ArcId(i), cost: c });
            }
        }
    }
    Ok(())
}

fn check_endpoints(graph: &DynamicGraph, source: NodeId, target: NodeId) -> Result<(), GraphError> {
    for v in [source, target] {
        if v.0 >= graph.node_count() {
            return Err(GraphError::UnknownNode(v));
        }
    }
    if source == target {
        return Err(GraphError::SameEndpoints(source));
    }
    Ok(())
}

/// Minimum-cost simple path from `source` to `target`.
///
/// `costs[a]` is the cost of arc `a`, or `None` when the arc is absent from the
/// snapshot. Among paths of equal cost (within [`COST_TOL`]) the one with the
/// fewest arcs wins, then the lexicographically smallest node sequence.
pub fn shortest_path(
    graph: &DynamicGraph,
    costs: &[Option<f64>],
    source: NodeId,
    target: NodeId,
) -> Result<Option<(Path, f64)>, GraphError> {
    check_costs(graph, costs)?;
    check_endpoints(graph, source, target)?;
    let blocked_nodes = vec![false; graph.node_count()];
    Ok(dijkstra(graph, costs, source, target, &blocked_nodes, &HashSet::new()))
}

#[derive(Clone, Copy)]
struct Label {
    cost: f64,
    hops: usize,
    pred: Option<ArcId>,
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    hops: usize,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.hops.cmp(&self.hops))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn node_chain(graph: &DynamicGraph, labels: &[Option<Label>], mut v: usize) -> Vec<usize> {
    let mut chain = vec![v];
    while let Some(a) = labels[v].and_then(|l| l.pred) {
        v = graph.arc(a).0 .0;
        chain.push(v);
    }
    chain.reverse();
    chain
}

/// Label-setting search honoring the crate-wide tie-break rule.
fn dijkstra(
    graph: &DynamicGraph,
    costs: &[Option<f64>],
    source: NodeId,
    target: NodeId,
    blocked_nodes: &[bool],
    blocked_arcs: &HashSet<ArcId>,
) -> Option<(Path, f64)> {
    let n = graph.node_count();
    let mut labels: Vec<Option<Label>> = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    labels[source.0] = Some(Label { cost: 0.0, hops: 0, pred: None });
    heap.push(HeapEntry { cost: 0.0, hops: 0, node: source.0 });

    while let Some(HeapEntry { node: u, cost, hops }) = heap.pop() {
        if done[u] {
            continue;
        }
        let lu = labels[u].expect("labelled");
        if lu.cost != cost || lu.hops != hops {
            continue;
        }
        done[u] = true;
        if u == target.0 {
            break;
        }
        for &a in graph.out_arcs(NodeId(u)) {
            let Some(c) = costs[a.0] else { continue };
            if blocked_arcs.contains(&a) {
                continue;
            }
            let v = graph.arc(a).1 .0;
            if blocked_nodes[v] || done[v] {
                continue;
            }
            let cand = Label { cost: lu.cost + c, hops: lu.hops + 1, pred: Some(a) };
            let better = match labels[v] {
                None => true,
                Some(lv) => {
                    if cand.cost < lv.cost - COST_TOL {
                        true
                    } else if cand.cost > lv.cost + COST_TOL {
                        false
                    } else if cand.hops != lv.hops {
                        cand.hops < lv.hops
                    } else {
                        // Same cost and length: compare the node sequences of
                        // the two predecessors.
                        let old_pred = graph.arc(lv.pred.expect("non-source label")).0 .0;
                        let a_chain = node_chain(graph, &labels, u);
                        let b_chain = node_chain(graph, &labels, old_pred);
                        a_chain < b_chain
                    }
                }
            };
            if better {
                labels[v] = Some(cand);
                heap.push(HeapEntry { cost: cand.cost, hops: cand.hops, node: v });
            }
        }
    }

    let lt = labels[target.0]?;
    if !done[target.0] {
        return None;
    }
    let mut arcs = Vec::with_capacity(lt.hops);
    let mut v = target.0;
    while let Some(a) = labels[v].and_then(|l| l.pred) {
        arcs.push(a);
        v = graph.arc(a).0 .0;
    }
    arcs.reverse();
    Some((Path::from_arcs_unchecked(arcs), lt.cost))
}

/// Candidate ordering for Yen's algorithm: cost (with tolerance), hops, nodes.
#[derive(Clone, Debug)]
struct Candidate {
    cost: f64,
    nodes: Vec<usize>,
    path: Path,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_cost = if (self.cost - other.cost).abs() <= COST_TOL {
            Ordering::Equal
        } else {
            self.cost.total_cmp(&other.cost)
        };
        by_cost
            .then_with(|| self.path.len().cmp(&other.path.len()))
            .then_with(|| self.nodes.cmp(&other.nodes))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lazy loopless k-shortest path enumeration (Yen). Yields `(path, cost)` in
/// non-decreasing cost order.
pub struct KShortestPaths<'g> {
    graph: &'g DynamicGraph,
    costs: Vec<Option<f64>>,
    target: NodeId,
    found: Vec<(Path, f64)>,
    seen: HashSet<Path>,
    candidates: BTreeSet<Candidate>,
    started: bool,
    source: NodeId,
}

impl<'g> KShortestPaths<'g> {
    pub fn new(
        graph: &'g DynamicGraph,
        costs: &[Option<f64>],
        source: NodeId,
        target: NodeId,
    ) -> Result<Self, GraphError> {
        check_costs(graph, costs)?;
        check_endpoints(graph, source, target)?;
        Ok(KShortestPaths {
            graph,
            costs: costs.to_vec(),
            target,
            found: Vec::new(),
            seen: HashSet::new(),
            candidates: BTreeSet::new(),
            started: false,
            source,
        })
    }

    fn push_candidate(&mut self, path: Path, cost: f64) {
        if self.seen.insert(path.clone()) {
            let nodes = path.nodes(self.graph).into_iter().map(|v| v.0).collect();
            self.candidates.insert(Candidate { cost, nodes, path });
        }
    }

    fn spur_from_last(&mut self) {
        let (last, _) = self.found.last().cloned().expect("at least one path");
        let nodes = last.nodes(self.graph);
        let mut blocked_nodes = vec![false; self.graph.node_count()];
        let mut root_cost = 0.0;
        for i in 0..last.len() {
            let spur = nodes[i];
            let root = &last.arcs()[..i];
            let mut blocked_arcs = HashSet::new();
            for (p, _) in &self.found {
                if p.len() > i && &p.arcs()[..i] == root {
                    blocked_arcs.insert(p.arcs()[i]);
                }
            }
            if let Some((spur_path, spur_cost)) =
                dijkstra(self.graph, &self.costs, spur, self.target, &blocked_nodes, &blocked_arcs)
            {
                let mut arcs = root.to_vec();
                arcs.extend_from_slice(spur_path.arcs());
                self.push_candidate(Path::from_arcs_unchecked(arcs), root_cost + spur_cost);
            }
            blocked_nodes[spur.0] = true;
            root_cost += self.costs[last.arcs()[i].0].expect("path arc present");
        }
    }
}

impl Iterator for KShortestPaths<'_> {
    type Item = (Path, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            let blocked = vec![false; self.graph.node_count()];
            let (p, c) = dijkstra(self.graph, &self.costs, self.source, self.target, &blocked, &HashSet::new())?;
            self.seen.insert(p.clone());
            self.found.push((p.clone(), c));
            return Some((p, c));
        }
        if self.found.is_empty() {
            return None;
        }
        self.spur_from_last();
        let best = self.candidates.pop_first()?;
        self.found.push((best.path.clone(), best.cost));
        Some((best.path, best.cost))
    }
}

/// Up to `k` distinct simple paths in non-decreasing cost order.
pub fn k_shortest_paths(
    graph: &DynamicGraph,
    costs: &[Option<f64>],
    source: NodeId,
    target: NodeId,
    k: usize,
) -> Result<Vec<Path>, GraphError> {
    Ok(KShortestPaths::new(graph, costs, source, target)?
        .take(k)
        .map(|(p, _)| p)
        .collect())
}
