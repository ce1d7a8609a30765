use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Commodity, Instance, InstanceError, InstanceMeta};
use crate::graph::{random_simple_path, ArcId, DynamicGraph, NodeId, Path};

pub const DEFAULT_CAPACITY: f64 = 10_000.0;
pub const DEFAULT_MAX_DEMAND: f64 = 1500.0;
pub const DEFAULT_CHANGE_PROBABILITY: f64 = 0.03;
pub const DEFAULT_HORIZON: usize = 10;

const GRID_EASY_CAPACITY: f64 = 15_000.0;
const ARC_PROBABILITY_NUMERATOR: f64 = 5.0;
const ORIGIN_PROBABILITY: f64 = 0.1;
const PERIOD_SCALING_NODES: usize = 100;
const COMMODITY_SIZE_GRID: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphKind {
    /// `n x n` toric grid plus `n` origin nodes.
    Grid { n: usize },
    RandomConnected { nodes: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemandRule {
    /// `D = U(min(c_p, max_demand))`
    Easy,
    /// `D = min(c_p, U(max_demand))`
    Hard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub graph_kind: GraphKind,
    /// Capacity of grid arcs, or of every arc for random graphs.
    pub capacity: f64,
    /// Capacity of the arcs leaving grid origin nodes.
    pub extra_capacity: f64,
    pub max_demand: f64,
    pub demand_rule: DemandRule,
    pub change_probability: f64,
    pub horizon: usize,
    pub seed: u64,
}

impl GenParams {
    pub fn new(graph_kind: GraphKind, seed: u64) -> Self {
        GenParams {
            graph_kind,
            capacity: DEFAULT_CAPACITY,
            extra_capacity: DEFAULT_CAPACITY,
            max_demand: DEFAULT_MAX_DEMAND,
            demand_rule: DemandRule::Hard,
            change_probability: DEFAULT_CHANGE_PROBABILITY,
            horizon: DEFAULT_HORIZON,
            seed,
        }
    }

    fn validate(&self) -> Result<(), InstanceError> {
        if !(0.0..=1.0).contains(&self.change_probability) {
            return Err(InstanceError::InvalidParameter(format!(
                "change probability {} outside [0, 1]",
                self.change_probability
            )));
        }
        if !(self.max_demand >= 1.0) {
            return Err(InstanceError::InvalidParameter(format!("max demand {} below 1", self.max_demand)));
        }
        if self.horizon == 0 {
            return Err(InstanceError::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    GridEasy,
    GridHard,
    RandomConnected,
    CommoditySize,
    PeriodScaling,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::GridEasy, Preset::GridHard, Preset::RandomConnected, Preset::CommoditySize, Preset::PeriodScaling];

    pub fn name(self) -> &'static str {
        match self {
            Preset::GridEasy => "grid_easy",
            Preset::GridHard => "grid_hard",
            Preset::RandomConnected => "random_connected",
            Preset::CommoditySize => "commodity_size",
            Preset::PeriodScaling => "period_scaling",
        }
    }

    /// Generator parameters for a preset. `size` is the grid side for grid
    /// presets, the node count for random graphs, the uniform arc capacity for
    /// `commodity_size` and the horizon for `period_scaling`.
    pub fn params(self, size: usize, seed: u64) -> GenParams {
        match self {
            Preset::GridEasy => GenParams {
                capacity: GRID_EASY_CAPACITY,
                demand_rule: DemandRule::Easy,
                ..GenParams::new(GraphKind::Grid { n: size }, seed)
            },
            Preset::GridHard => GenParams::new(GraphKind::Grid { n: size }, seed),
            Preset::RandomConnected => GenParams::new(GraphKind::RandomConnected { nodes: size }, seed),
            Preset::CommoditySize => {
                let c = size as f64;
                GenParams {
                    capacity: c,
                    extra_capacity: c,
                    max_demand: c.sqrt().max(1.0),
                    ..GenParams::new(GraphKind::Grid { n: COMMODITY_SIZE_GRID }, seed)
                }
            }
            Preset::PeriodScaling => GenParams {
                horizon: size,
                ..GenParams::new(GraphKind::RandomConnected { nodes: PERIOD_SCALING_NODES }, seed)
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| InstanceError::UnknownPreset(s.to_string()))
    }
}

/// A single-step graph plus the nodes that act as commodity origins.
#[derive(Clone, Debug)]
pub struct GraphTemplate {
    pub graph: DynamicGraph,
    pub is_origin: Vec<bool>,
}

impl GraphTemplate {
    pub fn origins(&self) -> Vec<NodeId> {
        (0..self.is_origin.len()).filter(|&v| self.is_origin[v]).map(NodeId).collect()
    }
}

/// `n x n` torus with bidirectional neighbour arcs plus `n` origin nodes, each
/// wired to `2n` distinct random grid nodes. Node ids: grid cell `(i, j)` is
/// `i * n + j`, origins follow from `n * n`.
pub fn build_grid_graph<R: Rng + ?Sized>(
    n: usize,
    grid_capacity: f64,
    extra_capacity: f64,
    rng: &mut R,
) -> Result<GraphTemplate, InstanceError> {
    if n < 2 {
        return Err(InstanceError::InvalidParameter(format!("grid size {n} below 2")));
    }
    let cells = n * n;
    let mut g = DynamicGraph::new(cells + n);
    for i in 0..n {
        for j in 0..n {
            let u = NodeId(i * n + j);
            for (di, dj) in [(1, 0), (n - 1, 0), (0, 1), (0, n - 1)] {
                let v = NodeId(((i + di) % n) * n + (j + dj) % n);
                if u != v {
                    g.add_arc(u, v);
                }
            }
        }
    }
    let grid_arcs = g.arc_count();
    for o in 0..n {
        let origin = NodeId(cells + o);
        for cell in sample(rng, cells, 2 * n) {
            g.add_arc(origin, NodeId(cell));
        }
    }
    let caps = (0..g.arc_count()).map(|a| if a < grid_arcs { grid_capacity } else { extra_capacity }).collect();
    g.push_step(vec![true; g.arc_count()], caps);
    let mut is_origin = vec![false; cells + n];
    is_origin[cells..].iter_mut().for_each(|o| *o = true);
    Ok(GraphTemplate { graph: g, is_origin })
}

/// Strongly connected random digraph: every ordered pair is an arc with
/// probability `5 / |V|`, resampled until one strongly connected component
/// remains. Each node is an origin with probability 1/10; at least one origin
/// and one non-origin are forced.
pub fn build_random_connected_graph<R: Rng + ?Sized>(
    node_count: usize,
    capacity: f64,
    rng: &mut R,
) -> Result<GraphTemplate, InstanceError> {
    if node_count < 3 {
        return Err(InstanceError::InvalidParameter(format!("random graph needs 3 nodes, got {node_count}")));
    }
    let p = (ARC_PROBABILITY_NUMERATOR / node_count as f64).min(1.0);
    let g = loop {
        let mut g = DynamicGraph::new(node_count);
        for u in 0..node_count {
            for v in 0..node_count {
                if u != v && rng.gen_bool(p) {
                    g.add_arc(NodeId(u), NodeId(v));
                }
            }
        }
        g.push_step(vec![true; g.arc_count()], vec![capacity; g.arc_count()]);
        if g.is_strongly_connected(0) {
            break g;
        }
    };
    let mut is_origin: Vec<bool> = (0..node_count).map(|_| rng.gen_bool(ORIGIN_PROBABILITY)).collect();
    if !is_origin.iter().any(|&o| o) {
        is_origin[rng.gen_range(0..node_count)] = true;
    }
    if is_origin.iter().all(|&o| o) {
        is_origin[rng.gen_range(0..node_count)] = false;
    }
    Ok(GraphTemplate { graph: g, is_origin })
}

/// A commodity as created at step 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CommoditySeed {
    pub origin: NodeId,
    pub destination: NodeId,
    pub demand: f64,
    pub path: Path,
}

/// Nodes reachable from `origin` through arcs with at least one unit left.
fn reachable(graph: &DynamicGraph, usable: &[f64], origin: NodeId) -> Vec<bool> {
    let mut seen = vec![false; graph.node_count()];
    seen[origin.0] = true;
    let mut queue = VecDeque::from([origin]);
    while let Some(v) = queue.pop_front() {
        for &a in graph.out_arcs(v) {
            let w = graph.arc(a).1;
            if usable[a.0] > 0.0 && !seen[w.0] {
                seen[w.0] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Uniform integer in `[1, floor(x)]`.
fn uniform_demand<R: Rng + ?Sized>(rng: &mut R, x: f64) -> f64 {
    let hi = (x.floor() as u64).max(1);
    rng.gen_range(1..=hi) as f64
}

/// Adds commodities on random simple paths until none fits in the remaining
/// capacity of step 0. Returns the commodities and the residual capacities.
pub fn generate_commodities<R: Rng + ?Sized>(
    template: &GraphTemplate,
    params: &GenParams,
    rng: &mut R,
) -> Result<(Vec<CommoditySeed>, Vec<f64>), InstanceError> {
    let g = &template.graph;
    let origins = template.origins();
    if origins.is_empty() {
        return Err(InstanceError::InvalidParameter("graph has no origin node".into()));
    }
    let mut remaining: Vec<f64> = g.capacities(0).to_vec();
    for a in 0..g.arc_count() {
        if !g.is_active(0, ArcId(a)) {
            remaining[a] = 0.0;
        }
    }
    let mut out = Vec::new();
    loop {
        // Demands are integers, so an arc is usable while one unit is left.
        let usable: Vec<f64> = remaining.iter().map(|&r| if r >= 1.0 { r } else { 0.0 }).collect();
        let reach: Vec<Vec<bool>> = origins.iter().map(|&o| reachable(g, &usable, o)).collect();
        let destinations: Vec<NodeId> = (0..g.node_count())
            .filter(|&v| !template.is_origin[v] && reach.iter().any(|r| r[v]))
            .map(NodeId)
            .collect();
        let Some(&d) = destinations.choose(rng) else { break };
        let sources: Vec<NodeId> =
            origins.iter().zip(&reach).filter(|(_, r)| r[d.0]).map(|(&o, _)| o).collect();
        let o = *sources.choose(rng).expect("destination reachable from an origin");
        let path = random_simple_path(g, &usable, o, d, rng)
            .expect("origin differs from destination")
            .expect("destination reachable");
        let c_p = path.arcs().iter().map(|a| remaining[a.0]).fold(f64::INFINITY, f64::min);
        let demand = match params.demand_rule {
            DemandRule::Easy => uniform_demand(rng, c_p.min(params.max_demand)),
            DemandRule::Hard => c_p.min(uniform_demand(rng, params.max_demand)),
        };
        for a in path.arcs() {
            remaining[a.0] -= demand;
        }
        out.push(CommoditySeed { origin: o, destination: d, demand, path });
    }
    Ok((out, remaining))
}

/// Appends step `t = step_count()` to `graph`, derived from the last step:
/// each arc leaving an origin is rewired with probability `mu` to a non-origin
/// node `v` such that `(v, head)` exists, then each destination moves with
/// probability `mu` to a non-origin successor. Capacities follow the arcs.
pub fn evolve_timestep<R: Rng + ?Sized>(
    graph: &mut DynamicGraph,
    is_origin: &[bool],
    destinations: &mut [NodeId],
    mu: f64,
    rng: &mut R,
) {
    let prev = graph.step_count() - 1;
    let t = prev + 1;
    graph.push_step(graph.active_mask(prev).to_vec(), graph.capacities(prev).to_vec());

    for o in (0..graph.node_count()).filter(|&v| is_origin[v]).map(NodeId) {
        let leaving: Vec<ArcId> = graph.out_arcs(o).iter().copied().filter(|&a| graph.is_active(t, a)).collect();
        for a in leaving {
            if !rng.gen_bool(mu) {
                continue;
            }
            let u = graph.arc(a).1;
            let mut candidates: Vec<NodeId> = graph
                .in_arcs(u)
                .iter()
                .filter(|&&b| graph.is_active(t, b))
                .map(|&b| graph.arc(b).0)
                .filter(|&v| !is_origin[v.0] && v != o)
                .filter(|&v| graph.find_arc(o, v).map_or(true, |e| !graph.is_active(t, e)))
                .collect();
            candidates.sort();
            let Some(&v) = candidates.choose(rng) else { continue };
            let cap = graph.capacity(t, a);
            let e = graph.add_arc(o, v);
            graph.set_active(t, a, false);
            graph.set_capacity(t, a, 0.0);
            graph.set_active(t, e, true);
            graph.set_capacity(t, e, cap);
        }
    }

    for d in destinations.iter_mut() {
        if !rng.gen_bool(mu) {
            continue;
        }
        let mut candidates: Vec<NodeId> = graph
            .out_arcs(*d)
            .iter()
            .filter(|&&a| graph.is_active(t, a))
            .map(|&a| graph.arc(a).1)
            .filter(|v| !is_origin[v.0])
            .collect();
        candidates.sort();
        if let Some(&u) = candidates.choose(rng) {
            *d = u;
        }
    }
}

/// Full generation pipeline for explicit parameters.
pub fn generate_with_params(params: &GenParams) -> Result<Instance, InstanceError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let template = match params.graph_kind {
        GraphKind::Grid { n } => build_grid_graph(n, params.capacity, params.extra_capacity, &mut rng)?,
        GraphKind::RandomConnected { nodes } => build_random_connected_graph(nodes, params.capacity, &mut rng)?,
    };
    let (seeds, _) = generate_commodities(&template, params, &mut rng)?;
    let mut graph = template.graph.clone();
    let mut dests: Vec<NodeId> = seeds.iter().map(|s| s.destination).collect();
    let mut history = vec![dests.clone()];
    for _ in 0..params.horizon {
        evolve_timestep(&mut graph, &template.is_origin, &mut dests, params.change_probability, &mut rng);
        history.push(dests.clone());
    }
    let commodities: Vec<Commodity> = seeds
        .into_iter()
        .enumerate()
        .map(|(k, s)| Commodity {
            origins: vec![s.origin; params.horizon + 1],
            destinations: history.iter().map(|d| d[k]).collect(),
            demand: s.demand,
            initial_path: s.path,
        })
        .collect();
    let total: f64 = commodities.iter().map(|c| c.demand).sum();
    let mut inst = Instance::new(graph, commodities, 1.0, 0.01 * total)?;
    inst.meta = InstanceMeta { preset: None, seed: Some(params.seed) };
    Ok(inst)
}

pub fn generate_instance(preset: Preset, size: usize, seed: u64) -> Result<Instance, InstanceError> {
    let mut inst = generate_with_params(&preset.params(size, seed))?;
    inst.meta.preset = Some(preset.name().to_string());
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_node_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = build_grid_graph(2, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(t.graph.node_count(), 6);
        // 2x2 torus: neighbours coincide, so 8 grid arcs, plus 2 * 4 origin arcs.
        assert_eq!(t.graph.arc_count(), 16);
        let t = build_grid_graph(12, 1.0, 1.0, &mut rng).unwrap();
        assert_eq!(t.graph.node_count(), 156);
        assert!(build_grid_graph(1, 1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn grid_origins_have_2n_distinct_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let t = build_grid_graph(3, 1.0, 1.0, &mut rng).unwrap();
        for o in t.origins() {
            let heads: std::collections::HashSet<_> =
                t.graph.out_arcs(o).iter().map(|&a| t.graph.arc(a).1).collect();
            assert_eq!(t.graph.out_arcs(o).len(), 6);
            assert_eq!(heads.len(), 6);
            assert!(heads.iter().all(|h| h.0 < 9));
            assert!(t.graph.in_arcs(o).is_empty());
        }
        assert!(t.graph.is_strongly_connected(0) == false);
    }

    #[test]
    fn random_graph_is_strongly_connected() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = build_random_connected_graph(12, 1.0, &mut rng).unwrap();
            assert!(t.graph.is_strongly_connected(0));
            assert!(!t.origins().is_empty());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = build_random_connected_graph(3, 1.0, &mut rng).unwrap();
        assert!(t.graph.is_strongly_connected(0));
        assert!(!t.origins().is_empty() && t.origins().len() < 3);
    }

    #[test]
    fn random_graph_mean_degree() {
        // Expected out-degree is (|V| - 1) * 5 / |V| = 4.95 before the
        // connectivity filter; the average over 30 graphs has a standard
        // deviation of about 0.04, so [3.5, 6.5] is a very loose band.
        let mut total = 0.0;
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = build_random_connected_graph(100, 1.0, &mut rng).unwrap();
            total += t.graph.arc_count() as f64 / 100.0;
        }
        let mean = total / 30.0;
        assert!((3.5..=6.5).contains(&mean), "mean out-degree {mean}");
    }

    #[test]
    fn no_capacity_no_commodity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = build_grid_graph(2, 0.0, 0.0, &mut rng).unwrap();
        let (cs, _) = generate_commodities(&t, &GenParams::new(GraphKind::Grid { n: 2 }, 1), &mut rng).unwrap();
        assert!(cs.is_empty());
    }

    #[test]
    fn initial_routing_fits() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = GenParams::new(GraphKind::Grid { n: 3 }, seed);
            let t = build_grid_graph(3, 10_000.0, 10_000.0, &mut rng).unwrap();
            let (cs, residual) = generate_commodities(&t, &params, &mut rng).unwrap();
            let mut load = vec![0.0; t.graph.arc_count()];
            for c in &cs {
                for a in c.path.arcs() {
                    load[a.0] += c.demand;
                }
            }
            for a in 0..load.len() {
                assert!(load[a] <= t.graph.capacity(0, ArcId(a)));
                assert_eq!(residual[a], t.graph.capacity(0, ArcId(a)) - load[a]);
            }
            // Nothing else fits: no origin reaches a destination through arcs
            // with a unit of capacity left.
            let usable: Vec<f64> = residual.iter().map(|&r| if r >= 1.0 { r } else { 0.0 }).collect();
            for o in t.origins() {
                let r = reachable(&t.graph, &usable, o);
                assert!((0..9).all(|v| !r[v]));
            }
        }
    }

    #[test]
    fn single_arc_clips_demand_to_capacity() {
        // One arc o -> d with capacity 10: hard-rule demand is min(10, U(1500)),
        // which is 10 unless the draw falls below 10.
        let mut g = DynamicGraph::new(2);
        g.add_arc(NodeId(0), NodeId(1));
        g.push_step(vec![true], vec![10.0]);
        let t = GraphTemplate { graph: g, is_origin: vec![true, false] };
        let params = GenParams::new(GraphKind::Grid { n: 2 }, 0);
        let mut saw_clip = false;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (cs, residual) = generate_commodities(&t, &params, &mut rng).unwrap();
            assert!(residual[0] < 1.0);
            if cs[0].demand == 10.0 {
                assert_eq!(cs.len(), 1);
                saw_clip = true;
            }
        }
        assert!(saw_clip);
    }

    #[test]
    fn zero_change_probability_copies_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = build_grid_graph(3, 1.0, 1.0, &mut rng).unwrap();
        let mut g = t.graph.clone();
        let mut dests = vec![NodeId(0), NodeId(4)];
        evolve_timestep(&mut g, &t.is_origin, &mut dests, 0.0, &mut rng);
        assert_eq!(g.active_mask(1), g.active_mask(0));
        assert_eq!(g.capacities(1), g.capacities(0));
        assert_eq!(dests, vec![NodeId(0), NodeId(4)]);
    }

    #[test]
    fn destination_without_successor_stays() {
        let mut g = DynamicGraph::new(3);
        g.add_arc(NodeId(0), NodeId(1));
        g.add_arc(NodeId(1), NodeId(2));
        g.push_step(vec![true, true], vec![1.0, 1.0]);
        let mut dests = vec![NodeId(2)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        evolve_timestep(&mut g, &[true, false, false], &mut dests, 1.0, &mut rng);
        assert_eq!(dests, vec![NodeId(2)]);
    }

    #[test]
    fn destination_change_rate() {
        // 50 x 1000 Bernoulli(0.03) trials: the pooled rate has a standard
        // deviation of about 0.00076, far inside [0.02, 0.04].
        let mut g = DynamicGraph::new(3);
        g.add_arc(NodeId(1), NodeId(2));
        g.add_arc(NodeId(2), NodeId(1));
        g.push_step(vec![true, true], vec![1.0, 1.0]);
        let is_origin = [true, false, false];
        let mut changed = 0usize;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut gg = g.clone();
            let mut dests = vec![NodeId(1); 1000];
            evolve_timestep(&mut gg, &is_origin, &mut dests, 0.03, &mut rng);
            changed += dests.iter().filter(|&&d| d != NodeId(1)).count();
        }
        let rate = changed as f64 / 50_000.0;
        assert!((0.02..=0.04).contains(&rate), "rate {rate}");
    }

    #[test]
    fn rewiring_keeps_random_graph_connected_and_arc_count() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = build_random_connected_graph(30, 1.0, &mut rng).unwrap();
            let mut g = t.graph.clone();
            let mut dests = vec![];
            for _ in 0..10 {
                evolve_timestep(&mut g, &t.is_origin, &mut dests, 0.5, &mut rng);
            }
            for s in 0..g.step_count() {
                assert!(g.is_strongly_connected(s));
                assert_eq!(g.active_count(s), t.graph.arc_count());
            }
        }
    }

    #[test]
    fn presets() {
        let inst = generate_instance(Preset::GridHard, 2, 11).unwrap();
        assert_eq!(inst.node_count(), 6);
        assert_eq!(inst.horizon(), 10);
        assert_eq!(inst.alpha, 1.0);
        assert!((inst.budget - 0.01 * inst.total_demand()).abs() < 1e-9);
        assert_eq!(inst, generate_instance(Preset::GridHard, 2, 11).unwrap());

        let inst = generate_instance(Preset::CommoditySize, 1, 3).unwrap();
        assert!(inst.commodities.iter().all(|c| c.demand == 1.0));
        assert_eq!(inst.node_count(), 42);

        assert!("nope".parse::<Preset>().is_err());
        assert_eq!("grid_easy".parse::<Preset>().unwrap(), Preset::GridEasy);
    }
}
