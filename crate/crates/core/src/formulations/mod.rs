//! Linear and mixed-integer models of the dynamic unsplittable flow problem.
//!
//! Time step 0 of an instance is the fixed initial state; every model covers
//! the decision steps `1..=horizon`.

mod arc_node;
mod arc_path;
mod decomposition;
mod extended_arc_node;
mod path_sequence;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DynamicGraph, GraphError, Path};
use crate::instance::{Commodity, Instance};
use crate::lp::LpError;

pub use arc_node::{
    build_aggregated_arc_node, extract_commodity_paths, group_super_commodities, AggregatedArcNode, SuperCommodity,
};
pub use arc_path::{build_extended_arc_path, ArcPathModel, PathVars};
pub use decomposition::{dantzig_wolfe_decompose, ConvexCombination};
pub use extended_arc_node::{build_extended_arc_node, ExtendedArcNode};
pub use path_sequence::{build_path_sequence_master, Column, PathSequenceMaster};

/// Cost per arc and step added to every flow variable so that shorter paths
/// are preferred among otherwise equal solutions.
pub const FLOW_PENALTY: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("commodity {commodity}, step {step}: path {path:?} is not valid")]
    InvalidPath { commodity: usize, step: usize, path: Vec<usize> },
    #[error("commodity {0} has no column")]
    NoColumn(usize),
    #[error("step {step}: weights sum to {sum}, expected 1")]
    WeightSum { step: usize, sum: f64 },
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

impl FormulationError {
    pub(crate) fn invalid_path(commodity: usize, step: usize, path: &Path) -> Self {
        FormulationError::InvalidPath { commodity, step, path: path.arcs().iter().map(|a| a.0).collect() }
    }
}

/// One path per decision step `1..=H`; `paths()[t - 1]` is used at step `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathSequence(Vec<Path>);

impl PathSequence {
    pub fn new(paths: Vec<Path>) -> Self {
        PathSequence(paths)
    }

    /// The same path at every step.
    pub fn repeat(path: &Path, horizon: usize) -> Self {
        PathSequence(vec![path.clone(); horizon])
    }

    pub fn paths(&self) -> &[Path] {
        &self.0
    }

    pub fn into_paths(self) -> Vec<Path> {
        self.0
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    /// Path used at decision step `t >= 1`.
    pub fn at(&self, t: usize) -> &Path {
        &self.0[t - 1]
    }

    /// Number of steps whose path differs from the previous one, starting from `initial`.
    pub fn changes(&self, initial: &Path) -> usize {
        let mut prev = initial;
        let mut n = 0;
        for p in &self.0 {
            n += (p != prev) as usize;
            prev = p;
        }
        n
    }

    pub fn total_arcs(&self) -> usize {
        self.0.iter().map(Path::len).sum()
    }

    /// Step of the first path that cannot carry `commodity`, if any.
    pub fn first_invalid_step(&self, graph: &DynamicGraph, commodity: &Commodity) -> Option<usize> {
        (1..=self.horizon()).find(|&t| !commodity.is_valid_path(graph, t, self.at(t)))
    }
}

/// Objective coefficient of a path-sequence column.
pub fn sequence_cost(instance: &Instance, k: usize, seq: &PathSequence, epsilon: f64) -> f64 {
    instance.alpha * seq.changes(&instance.commodities[k].initial_path) as f64 + epsilon * seq.total_arcs() as f64
}
