//! Dynamic graph data model and the graph algorithms the solvers are built on.

mod decompose;
mod interval;
mod random_path;
mod shortest;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use decompose::{flow_decomposition, Cycle, FlowDecomposition};
pub use interval::{build_interval_graphs, IntervalGraph, IntervalGraphs};
pub use random_path::random_simple_path;
pub use shortest::{k_shortest_paths, shortest_path, KShortestPaths};

/// Absolute tolerance used when comparing path costs.
pub const COST_TOL: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl ArcId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for ArcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("negative cost {cost} on arc {arc}")]
    NegativeCost { arc: ArcId, cost: f64 },
    #[error("source and target are the same node {0}")]
    SameEndpoints(NodeId),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    #[error("arc {0} does not exist")]
    UnknownArc(ArcId),
    #[error("arcs {0} and {1} are not consecutive")]
    Disconnected(ArcId, ArcId),
    #[error("path visits node {0} twice")]
    NotSimple(NodeId),
    #[error("empty path")]
    EmptyPath,
    #[error("flow conservation violated at node {node} by {residue}")]
    Conservation { node: NodeId, residue: f64 },
    #[error("cost vector has {got} entries, graph has {expected} arcs")]
    CostLength { expected: usize, got: usize },
}

/// A directed graph whose arc set and capacities vary over time steps.
///
/// The arc list is the union of all arcs ever active; `active[t][a]` tells
/// whether arc `a` belongs to the arc set of step `t`. Capacities of inactive
/// arcs are stored as zero and never read by the models.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicGraph {
    node_count: usize,
    arcs: Vec<(NodeId, NodeId)>,
    active: Vec<Vec<bool>>,
    capacity: Vec<Vec<f64>>,
    index: Adjacency,
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Adjacency {
    by_pair: HashMap<(NodeId, NodeId), ArcId>,
    out_arcs: Vec<Vec<ArcId>>,
    in_arcs: Vec<Vec<ArcId>>,
}

impl Adjacency {
    fn build(node_count: usize, arcs: &[(NodeId, NodeId)]) -> Self {
        let mut adj = Adjacency {
            by_pair: HashMap::with_capacity(arcs.len()),
            out_arcs: vec![Vec::new(); node_count],
            in_arcs: vec![Vec::new(); node_count],
        };
        for (i, &(u, v)) in arcs.iter().enumerate() {
            adj.by_pair.insert((u, v), ArcId(i));
            adj.out_arcs[u.0].push(ArcId(i));
            adj.in_arcs[v.0].push(ArcId(i));
        }
        adj
    }
}

impl DynamicGraph {
    /// Creates a graph with `node_count` nodes, no arcs and no time steps.
    pub fn new(node_count: usize) -> Self {
        DynamicGraph {
            node_count,
            arcs: Vec::new(),
            active: Vec::new(),
            capacity: Vec::new(),
            index: Adjacency::build(node_count, &[]),
        }
    }

    /// Builds a graph where every listed arc is active with the given capacity
    /// at each of `steps` time steps. Duplicate pairs are merged.
    pub fn from_arcs(node_count: usize, arcs: &[(usize, usize)], capacity: f64, steps: usize) -> Self {
        let mut g = DynamicGraph::new(node_count);
        for &(u, v) in arcs {
            g.add_arc(NodeId(u), NodeId(v));
        }
        for _ in 0..steps {
            g.push_step(vec![true; g.arc_count()], vec![capacity; g.arc_count()]);
        }
        g
    }

    /// Returns the id of arc `(tail, head)`, adding it if it does not exist yet.
    /// A newly added arc is inactive at every existing step.
    pub fn add_arc(&mut self, tail: NodeId, head: NodeId) -> ArcId {
        assert!(tail.0 < self.node_count && head.0 < self.node_count, "node out of range");
        if let Some(&a) = self.index.by_pair.get(&(tail, head)) {
            return a;
        }
        let id = ArcId(self.arcs.len());
        self.arcs.push((tail, head));
        self.index.by_pair.insert((tail, head), id);
        self.index.out_arcs[tail.0].push(id);
        self.index.in_arcs[head.0].push(id);
        for step in &mut self.active {
            step.push(false);
        }
        for step in &mut self.capacity {
            step.push(0.0);
        }
        id
    }

    /// Appends a time step. Both vectors are indexed by arc id.
    pub fn push_step(&mut self, active: Vec<bool>, capacity: Vec<f64>) {
        assert_eq!(active.len(), self.arcs.len());
        assert_eq!(capacity.len(), self.arcs.len());
        self.active.push(active);
        self.capacity.push(capacity);
    }

    pub(crate) fn set_active(&mut self, t: usize, arc: ArcId, on: bool) {
        self.active[t][arc.0] = on;
    }

    pub(crate) fn set_capacity(&mut self, t: usize, arc: ArcId, cap: f64) {
        self.capacity[t][arc.0] = cap;
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Number of stored time steps (initial step included).
    pub fn step_count(&self) -> usize {
        self.active.len()
    }

    pub fn arc(&self, a: ArcId) -> (NodeId, NodeId) {
        self.arcs[a.0]
    }

    pub fn arcs(&self) -> &[(NodeId, NodeId)] {
        &self.arcs
    }

    pub fn find_arc(&self, tail: NodeId, head: NodeId) -> Option<ArcId> {
        self.index.by_pair.get(&(tail, head)).copied()
    }

    pub fn out_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.index.out_arcs[v.0]
    }

    pub fn in_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.index.in_arcs[v.0]
    }

    pub fn is_active(&self, t: usize, a: ArcId) -> bool {
        self.active[t][a.0]
    }

    pub fn active_mask(&self, t: usize) -> &[bool] {
        &self.active[t]
    }

    pub fn capacity(&self, t: usize, a: ArcId) -> f64 {
        self.capacity[t][a.0]
    }

    pub fn capacities(&self, t: usize) -> &[f64] {
        &self.capacity[t]
    }

    /// Active arcs of step `t` in ascending id order.
    pub fn active_arcs(&self, t: usize) -> impl Iterator<Item = ArcId> + '_ {
        self.active[t]
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| ArcId(i))
    }

    pub fn active_count(&self, t: usize) -> usize {
        self.active[t].iter().filter(|&&a| a).count()
    }

    /// Per-arc cost vector of step `t` with the same cost on every active arc.
    pub fn uniform_costs(&self, t: usize, cost: f64) -> Vec<Option<f64>> {
        self.active[t].iter().map(|&on| on.then_some(cost)).collect()
    }

    /// Keeps only steps in `from..=to`, renumbering them from zero.
    pub fn window(&self, from: usize, to: usize) -> DynamicGraph {
        DynamicGraph {
            node_count: self.node_count,
            arcs: self.arcs.clone(),
            active: self.active[from..=to].to_vec(),
            capacity: self.capacity[from..=to].to_vec(),
            index: self.index.clone(),
        }
    }

    /// True when every node reaches every other node using arcs active at `t`.
    pub fn is_strongly_connected(&self, t: usize) -> bool {
        if self.node_count == 0 {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; self.node_count];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                let arcs = if forward { &self.index.out_arcs[v] } else { &self.index.in_arcs[v] };
                for &a in arcs {
                    if !self.active[t][a.0] {
                        continue;
                    }
                    let (u, w) = self.arcs[a.0];
                    let next = if forward { w.0 } else { u.0 };
                    if !seen[next] {
                        seen[next] = true;
                        stack.push(next);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// A simple directed path stored as its arc list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path {
    arcs: Vec<ArcId>,
}

impl Path {
    /// Validates contiguity and simplicity against `graph`.
    pub fn new(graph: &DynamicGraph, arcs: Vec<ArcId>) -> Result<Self, GraphError> {
        if arcs.is_empty() {
            return Err(GraphError::EmptyPath);
        }
        for &a in &arcs {
            if a.0 >= graph.arc_count() {
                return Err(GraphError::UnknownArc(a));
            }
        }
        for w in arcs.windows(2) {
            if graph.arc(w[0]).1 != graph.arc(w[1]).0 {
                return Err(GraphError::Disconnected(w[0], w[1]));
            }
        }
        let path = Path { arcs };
        let mut seen = vec![false; graph.node_count()];
        for v in path.nodes(graph) {
            if std::mem::replace(&mut seen[v.0], true) {
                return Err(GraphError::NotSimple(v));
            }
        }
        Ok(path)
    }

    pub(crate) fn from_arcs_unchecked(arcs: Vec<ArcId>) -> Self {
        Path { arcs }
    }

    pub fn arcs(&self) -> &[ArcId] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn source(&self, graph: &DynamicGraph) -> NodeId {
        graph.arc(self.arcs[0]).0
    }

    pub fn target(&self, graph: &DynamicGraph) -> NodeId {
        graph.arc(*self.arcs.last().expect("non-empty path")).1
    }

    /// Node sequence, source first.
    pub fn nodes(&self, graph: &DynamicGraph) -> Vec<NodeId> {
        let mut nodes = Vec::with_capacity(self.arcs.len() + 1);
        if let Some(&first) = self.arcs.first() {
            nodes.push(graph.arc(first).0);
        }
        nodes.extend(self.arcs.iter().map(|&a| graph.arc(a).1));
        nodes
    }

    pub fn contains(&self, a: ArcId) -> bool {
        self.arcs.contains(&a)
    }

    /// True when every arc is active at `t` and the path joins `source` to `target`.
    pub fn is_valid_at(&self, graph: &DynamicGraph, t: usize, source: NodeId, target: NodeId) -> bool {
        !self.arcs.is_empty()
            && self.source(graph) == source
            && self.target(graph) == target
            && self.arcs.iter().all(|&a| graph.is_active(t, a))
    }

    /// Sum of `costs` over the path arcs; `None` if some arc is absent.
    pub fn cost(&self, costs: &[Option<f64>]) -> Option<f64> {
        self.arcs.iter().map(|a| costs[a.0]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_arcs_are_merged() {
        let g = DynamicGraph::from_arcs(3, &[(0, 1), (0, 1), (1, 2)], 5.0, 2);
        assert_eq!(g.arc_count(), 2);
        assert_eq!(g.find_arc(NodeId(0), NodeId(1)), Some(ArcId(0)));
        assert_eq!(g.step_count(), 2);
        assert_eq!(g.out_arcs(NodeId(0)), &[ArcId(0)]);
        assert_eq!(g.in_arcs(NodeId(2)), &[ArcId(1)]);
    }

    #[test]
    fn path_validation() {
        let g = DynamicGraph::from_arcs(4, &[(0, 1), (1, 2), (2, 0), (2, 3)], 1.0, 1);
        assert!(Path::new(&g, vec![ArcId(0), ArcId(1), ArcId(3)]).is_ok());
        assert_eq!(Path::new(&g, vec![]), Err(GraphError::EmptyPath));
        assert_eq!(
            Path::new(&g, vec![ArcId(0), ArcId(3)]),
            Err(GraphError::Disconnected(ArcId(0), ArcId(3)))
        );
        assert_eq!(
            Path::new(&g, vec![ArcId(0), ArcId(1), ArcId(2)]),
            Err(GraphError::NotSimple(NodeId(0)))
        );
        let p = Path::new(&g, vec![ArcId(0), ArcId(1)]).unwrap();
        assert_eq!(p.nodes(&g), vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert!(p.is_valid_at(&g, 0, NodeId(0), NodeId(2)));
        assert!(!p.is_valid_at(&g, 0, NodeId(0), NodeId(3)));
    }

    #[test]
    fn added_arc_is_inactive_in_old_steps() {
        let mut g = DynamicGraph::from_arcs(3, &[(0, 1)], 1.0, 2);
        let a = g.add_arc(NodeId(1), NodeId(2));
        assert!(!g.is_active(0, a));
        assert!(!g.is_active(1, a));
        assert_eq!(g.capacity(1, a), 0.0);
    }

    #[test]
    fn strong_connectivity() {
        let cyc = DynamicGraph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)], 1.0, 1);
        assert!(cyc.is_strongly_connected(0));
        let line = DynamicGraph::from_arcs(3, &[(0, 1), (1, 2)], 1.0, 1);
        assert!(!line.is_strongly_connected(0));
    }
}
