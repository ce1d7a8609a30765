//! Problem instances: commodities over a dynamic graph, their generator and file format.

mod generate;
mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DynamicGraph, NodeId, Path};

pub use generate::{
    build_grid_graph, build_random_connected_graph, evolve_timestep, generate_commodities, generate_instance,
    generate_with_params, CommoditySeed, DemandRule, GenParams, GraphKind, GraphTemplate, Preset, DEFAULT_CAPACITY,
    DEFAULT_CHANGE_PROBABILITY, DEFAULT_HORIZON, DEFAULT_MAX_DEMAND,
};
pub use io::{read_instance, write_instance, InstanceFile};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("commodity {commodity}: {reason}")]
    InvalidCommodity { commodity: usize, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("parse error at {field}: {message}")]
    Parse { field: String, message: String },
    #[error("malformed instance file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Origin/destination pair per step, a fixed demand and the path used at step 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Commodity {
    pub origins: Vec<NodeId>,
    pub destinations: Vec<NodeId>,
    pub demand: f64,
    pub initial_path: Path,
}

impl Commodity {
    pub fn origin(&self, t: usize) -> NodeId {
        self.origins[t]
    }

    pub fn destination(&self, t: usize) -> NodeId {
        self.destinations[t]
    }

    /// True when `path` can carry this commodity at step `t`.
    pub fn is_valid_path(&self, graph: &DynamicGraph, t: usize, path: &Path) -> bool {
        path.is_valid_at(graph, t, self.origins[t], self.destinations[t])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub preset: Option<String>,
    pub seed: Option<u64>,
}

/// A dynamic unsplittable flow instance. Step 0 is the fixed initial state and
/// decisions are taken for steps `1..=horizon()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub graph: DynamicGraph,
    pub commodities: Vec<Commodity>,
    pub alpha: f64,
    pub budget: f64,
    pub meta: InstanceMeta,
}

impl Instance {
    pub fn new(
        graph: DynamicGraph,
        commodities: Vec<Commodity>,
        alpha: f64,
        budget: f64,
    ) -> Result<Self, InstanceError> {
        if graph.step_count() < 1 {
            return Err(InstanceError::InvalidParameter("graph has no time step".into()));
        }
        if !(alpha > 0.0) {
            return Err(InstanceError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(budget >= 0.0) {
            return Err(InstanceError::InvalidParameter(format!("budget must be non-negative, got {budget}")));
        }
        let steps = graph.step_count();
        for (k, c) in commodities.iter().enumerate() {
            let bad = |reason: String| InstanceError::InvalidCommodity { commodity: k, reason };
            if c.origins.len() != steps || c.destinations.len() != steps {
                return Err(bad(format!("expected {steps} origins and destinations")));
            }
            if !(c.demand > 0.0) {
                return Err(bad(format!("demand must be positive, got {}", c.demand)));
            }
            for t in 0..steps {
                for v in [c.origins[t], c.destinations[t]] {
                    if v.0 >= graph.node_count() {
                        return Err(bad(format!("node {v} out of range at step {t}")));
                    }
                }
                if c.origins[t] == c.destinations[t] {
                    return Err(bad(format!("origin equals destination at step {t}")));
                }
            }
            Path::new(&graph, c.initial_path.arcs().to_vec()).map_err(|e| bad(format!("initial path: {e}")))?;
            if !c.is_valid_path(&graph, 0, &c.initial_path) {
                return Err(bad("initial path is not valid at step 0".into()));
            }
        }
        Ok(Instance { graph, commodities, alpha, budget, meta: InstanceMeta::default() })
    }

    pub fn horizon(&self) -> usize {
        self.graph.step_count() - 1
    }

    pub fn total_demand(&self) -> f64 {
        self.commodities.iter().map(|c| c.demand).sum()
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Sub-instance covering steps `from..=to`, with `initial_paths` (valid at
    /// `from`) replacing the commodities' initial paths.
    pub fn window(&self, from: usize, to: usize, initial_paths: &[Path]) -> Instance {
        assert!(from < to && to <= self.horizon());
        assert_eq!(initial_paths.len(), self.commodities.len());
        let commodities = self
            .commodities
            .iter()
            .zip(initial_paths)
            .map(|(c, p)| Commodity {
                origins: c.origins[from..=to].to_vec(),
                destinations: c.destinations[from..=to].to_vec(),
                demand: c.demand,
                initial_path: p.clone(),
            })
            .collect();
        Instance {
            graph: self.graph.window(from, to),
            commodities,
            alpha: self.alpha,
            budget: self.budget,
            meta: self.meta.clone(),
        }
    }

    /// Per-arc load when commodity `k` uses `paths[k]`.
    pub fn load(&self, paths: &[&Path]) -> Vec<f64> {
        let mut load = vec![0.0; self.graph.arc_count()];
        for (c, p) in self.commodities.iter().zip(paths) {
            for a in p.arcs() {
                load[a.0] += c.demand;
            }
        }
        load
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::graph::ArcId;

    /// Diamond 0 -> {1, 2} -> 3 over `steps` steps, one commodity 0 -> 3 of
    /// demand `demand` whose initial path is the upper route.
    pub fn diamond(steps: usize, capacity: f64, demand: f64) -> Instance {
        let g = DynamicGraph::from_arcs(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], capacity, steps);
        let c = Commodity {
            origins: vec![NodeId(0); steps],
            destinations: vec![NodeId(3); steps],
            demand,
            initial_path: Path::new(&g, vec![ArcId(0), ArcId(1)]).unwrap(),
        };
        Instance::new(g, vec![c], 1.0, 0.0).unwrap()
    }

    /// Small random instance, `None` when some commodity has no path at some
    /// step. Destinations occasionally move between steps.
    pub fn random_tiny(seed: u64, nodes: usize, horizon: usize, commodities: usize) -> Option<Instance> {
        use crate::pricing::enumerate_simple_paths;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut g = DynamicGraph::new(nodes);
        for u in 0..nodes {
            for v in 0..nodes {
                if u != v && rng.gen_bool(0.5) {
                    g.add_arc(NodeId(u), NodeId(v));
                }
            }
        }
        for _ in 0..=horizon {
            let active = (0..g.arc_count()).map(|_| rng.gen_bool(0.85)).collect();
            let cap = (0..g.arc_count()).map(|_| rng.gen_range(1..6) as f64).collect();
            g.push_step(active, cap);
        }
        let mut cs = Vec::new();
        for _ in 0..commodities {
            let o = NodeId(rng.gen_range(0..nodes));
            let mut d = NodeId((o.0 + rng.gen_range(1..nodes)) % nodes);
            let mut dests = Vec::new();
            for _ in 0..=horizon {
                if rng.gen_bool(0.2) {
                    d = NodeId((o.0 + rng.gen_range(1..nodes)) % nodes);
                }
                dests.push(d);
            }
            let first = enumerate_simple_paths(&g, 0, o, dests[0]);
            if first.is_empty() {
                return None;
            }
            let initial_path = first[rng.gen_range(0..first.len())].clone();
            for (t, &d) in dests.iter().enumerate() {
                if enumerate_simple_paths(&g, t, o, d).is_empty() {
                    return None;
                }
            }
            cs.push(Commodity {
                origins: vec![o; horizon + 1],
                destinations: dests,
                demand: rng.gen_range(1..4) as f64,
                initial_path,
            });
        }
        let budget = rng.gen_range(0..3) as f64;
        Some(Instance::new(g, cs, 1.0, budget).unwrap())
    }
}
