//! Pricing of path-sequence columns: reduced costs and the search for the
//! sequence of smallest reduced cost of one commodity.

mod brute;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formulations::{FormulationError, PathSequence, PathSequenceMaster};
use crate::graph::{build_interval_graphs, shortest_path, GraphError, KShortestPaths, Path, COST_TOL};
use crate::instance::Instance;
use crate::lp::SolveOutcome;

pub use brute::{brute_force_pricing, enumerate_simple_paths, MAX_BRUTE_FORCE_SEQUENCES};

/// Duals smaller than this in magnitude are treated as zero.
pub const DUAL_CLAMP: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("commodity {commodity} has no valid path at step {step}")]
    Infeasible { commodity: usize, step: usize },
    #[error("no candidate path at step {0}")]
    EmptyCandidates(usize),
    #[error("{0} sequences exceed the enumeration limit")]
    SearchTooLarge(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
}

/// Row duals of a path-sequence master.
#[derive(Clone, Debug, PartialEq)]
pub struct DualValues {
    /// `capacity[t][arc]`, zero for arcs without a row; row 0 is unused.
    pub capacity: Vec<Vec<f64>>,
    pub convexity: Vec<f64>,
}

fn clamp(u: f64) -> f64 {
    if u.abs() < DUAL_CLAMP {
        0.0
    } else {
        u
    }
}

impl DualValues {
    pub fn zero(instance: &Instance) -> Self {
        DualValues {
            capacity: vec![vec![0.0; instance.graph.arc_count()]; instance.horizon() + 1],
            convexity: vec![0.0; instance.commodities.len()],
        }
    }

    pub fn from_master(master: &PathSequenceMaster, outcome: &SolveOutcome) -> Self {
        let capacity = master
            .capacity
            .iter()
            .map(|row| row.iter().map(|c| c.map_or(0.0, |c| clamp(outcome.dual(c)))).collect())
            .collect();
        let convexity = master.convexity.iter().map(|&c| clamp(outcome.dual(c))).collect();
        DualValues { capacity, convexity }
    }
}

/// `alpha * changes + epsilon * arcs - u_k - d * sum of capacity duals` along `seq`.
pub fn reduced_cost(
    instance: &Instance,
    k: usize,
    seq: &PathSequence,
    duals: &DualValues,
    epsilon: f64,
) -> Result<f64, PricingError> {
    let c = &instance.commodities[k];
    if let Some(t) = seq.first_invalid_step(&instance.graph, c) {
        return Err(FormulationError::invalid_path(k, t, seq.at(t)).into());
    }
    let mut dual_sum = 0.0;
    for t in 1..=seq.horizon() {
        dual_sum += seq.at(t).arcs().iter().map(|a| duals.capacity[t][a.0]).sum::<f64>();
    }
    Ok(crate::formulations::sequence_cost(instance, k, seq, epsilon) - duals.convexity[k] - c.demand * dual_sum)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PricedColumn {
    pub sequence: PathSequence,
    pub reduced_cost: f64,
}

/// Best path of each interval `t1..=t2` on the arcs present throughout it.
#[derive(Clone, Debug, Default)]
pub struct IntervalPathCache {
    /// Missing keys and `None` values both mean no valid path.
    pub entries: BTreeMap<(usize, usize), Option<(Path, f64)>>,
    pub shortest_path_calls: usize,
}

impl IntervalPathCache {
    pub fn get(&self, t1: usize, t2: usize) -> Option<&(Path, f64)> {
        self.entries.get(&(t1, t2)).and_then(Option::as_ref)
    }
}

/// Per-step arc costs of one commodity under fixed duals.
#[derive(Clone, Debug)]
pub struct CommodityPricer<'a> {
    instance: &'a Instance,
    k: usize,
    alpha: f64,
    convexity_dual: f64,
    /// `costs[t][arc]`, `None` for inactive arcs and for `t = 0`.
    costs: Vec<Vec<Option<f64>>>,
}

impl<'a> CommodityPricer<'a> {
    pub fn new(instance: &'a Instance, k: usize, duals: &DualValues, epsilon: f64) -> Self {
        let g = &instance.graph;
        let d = instance.commodities[k].demand;
        let mut costs = vec![vec![None; g.arc_count()]];
        for t in 1..=instance.horizon() {
            costs.push(
                (0..g.arc_count())
                    .map(|a| {
                        g.active_mask(t)[a].then(|| (epsilon - d * clamp(duals.capacity[t][a])).max(0.0))
                    })
                    .collect(),
            );
        }
        CommodityPricer { instance, k, alpha: instance.alpha, convexity_dual: duals.convexity[k], costs }
    }

    /// Pricer whose reduced cost counts path changes only.
    pub fn changes_only(instance: &'a Instance, k: usize) -> Self {
        let mut p = CommodityPricer::new(instance, k, &DualValues::zero(instance), 0.0);
        p.alpha = 1.0;
        p
    }

    pub fn step_costs(&self, t: usize) -> &[Option<f64>] {
        &self.costs[t]
    }

    fn horizon(&self) -> usize {
        self.instance.horizon()
    }

    fn initial(&self) -> &'a Path {
        &self.instance.commodities[self.k].initial_path
    }

    fn endpoints(&self, t: usize) -> (crate::graph::NodeId, crate::graph::NodeId) {
        let c = &self.instance.commodities[self.k];
        (c.origin(t), c.destination(t))
    }

    fn is_valid(&self, t: usize, p: &Path) -> bool {
        self.instance.commodities[self.k].is_valid_path(&self.instance.graph, t, p)
    }

    fn path_cost(&self, t: usize, p: &Path) -> f64 {
        p.cost(&self.costs[t]).unwrap_or(f64::INFINITY)
    }

    /// Reduced cost of `seq` under the pricer's costs.
    pub fn evaluate(&self, seq: &PathSequence) -> f64 {
        let arcs: f64 = (1..=seq.horizon()).map(|t| self.path_cost(t, seq.at(t))).sum();
        self.alpha * seq.changes(self.initial()) as f64 + arcs - self.convexity_dual
    }

    fn column(&self, paths: Vec<Path>) -> PricedColumn {
        let sequence = PathSequence::new(paths);
        PricedColumn { reduced_cost: self.evaluate(&sequence), sequence }
    }

    /// Shortest path of every interval. An interval starting at `t1` stops
    /// growing once no path exists or the endpoints move.
    pub fn interval_paths(&self) -> Result<IntervalPathCache, PricingError> {
        let g = &self.instance.graph;
        let h = self.horizon();
        let mut cache = IntervalPathCache::default();
        for t1 in 1..=h {
            let ends = self.endpoints(t1);
            for ig in build_interval_graphs(&self.costs, t1) {
                if self.endpoints(ig.t2) != ends {
                    break;
                }
                cache.shortest_path_calls += 1;
                let found = shortest_path(g, &ig.costs, ends.0, ends.1)?;
                let stop = found.is_none();
                cache.entries.insert((t1, ig.t2), found);
                if stop {
                    break;
                }
            }
            if cache.get(t1, t1).is_none() {
                return Err(PricingError::Infeasible { commodity: self.k, step: t1 });
            }
        }
        Ok(cache)
    }

    /// Cheapest sequence picking the path of step `t` among `candidates[t - 1]`.
    pub fn candidate_dp(&self, candidates: &[Vec<Path>]) -> Result<PricedColumn, PricingError> {
        let h = self.horizon();
        let mut layers: Vec<Vec<&Path>> = Vec::with_capacity(h);
        for t in 1..=h {
            let mut layer: Vec<&Path> = candidates[t - 1].iter().filter(|p| self.is_valid(t, p)).collect();
            layer.sort();
            layer.dedup();
            if layer.is_empty() {
                return Err(PricingError::EmptyCandidates(t));
            }
            layers.push(layer);
        }
        let p0 = self.initial();
        let mut best: Vec<f64> = layers[0]
            .iter()
            .map(|p| self.path_cost(1, p) + if *p != p0 { self.alpha } else { 0.0 })
            .collect();
        let mut back: Vec<Vec<usize>> = vec![vec![0; layers[0].len()]];
        for t in 2..=h {
            let (prev, cur) = (&layers[t - 2], &layers[t - 1]);
            let mut next = Vec::with_capacity(cur.len());
            let mut from = Vec::with_capacity(cur.len());
            for p in cur {
                let mut arg = 0;
                let mut val = f64::INFINITY;
                for (j, q) in prev.iter().enumerate() {
                    let v = best[j] + if p != q { self.alpha } else { 0.0 };
                    if v < val {
                        val = v;
                        arg = j;
                    }
                }
                next.push(val + self.path_cost(t, p));
                from.push(arg);
            }
            best = next;
            back.push(from);
        }
        let mut i = (0..best.len()).fold(0, |a, i| if best[i] < best[a] { i } else { a });
        let mut paths = vec![layers[h - 1][i].clone()];
        for t in (2..=h).rev() {
            i = back[t - 1][i];
            paths.push(layers[t - 2][i].clone());
        }
        paths.reverse();
        Ok(self.column(paths))
    }

    /// Candidate sets built from interval paths, then the candidate DP.
    pub fn price_shortest_paths(&self) -> Result<PricedColumn, PricingError> {
        let cache = self.interval_paths()?;
        let h = self.horizon();
        let mut candidates: Vec<Vec<Path>> = vec![Vec::new(); h];
        for (&(t1, t2), entry) in &cache.entries {
            if let Some((p, _)) = entry {
                for layer in &mut candidates[t1 - 1..t2] {
                    layer.push(p.clone());
                }
            }
        }
        for (i, layer) in candidates.iter_mut().enumerate() {
            if self.is_valid(i + 1, self.initial()) {
                layer.push(self.initial().clone());
            }
        }
        self.candidate_dp(&candidates)
    }

    /// Recursion over the position of each path change, using one shortest
    /// path per interval.
    pub fn price_all_in_one(&self) -> Result<PricedColumn, PricingError> {
        Ok(self.all_in_one_with_cache()?.0)
    }

    pub fn all_in_one_with_cache(&self) -> Result<(PricedColumn, IntervalPathCache), PricingError> {
        let h = self.horizon();
        let cache = self.interval_paths()?;
        // suffix[t] = cheapest cost of steps t..=H given a change right before t.
        let mut suffix = vec![f64::INFINITY; h + 2];
        let mut end_of = vec![0; h + 2];
        suffix[h + 1] = 0.0;
        for t in (1..=h).rev() {
            for t2 in t..=h {
                let Some((_, c)) = cache.get(t, t2) else { break };
                let tail = if t2 < h { self.alpha + suffix[t2 + 1] } else { 0.0 };
                if c + tail < suffix[t] {
                    suffix[t] = c + tail;
                    end_of[t] = t2;
                }
            }
            if !suffix[t].is_finite() {
                return Err(PricingError::Infeasible { commodity: self.k, step: t });
            }
        }
        let p0 = self.initial();
        let mut best = self.alpha + suffix[1];
        let mut keep_until = 0;
        let mut kept = 0.0;
        for t in 1..=h {
            if !self.is_valid(t, p0) {
                break;
            }
            kept += self.path_cost(t, p0);
            let total = kept + if t < h { self.alpha + suffix[t + 1] } else { 0.0 };
            if total <= best {
                best = total;
                keep_until = t;
            }
        }
        let mut paths = vec![p0.clone(); keep_until];
        let mut t = keep_until + 1;
        while t <= h {
            let t2 = end_of[t];
            let (p, _) = cache.get(t, t2).expect("chosen interval exists");
            paths.extend(std::iter::repeat_n(p.clone(), t2 - t + 1));
            t = t2 + 1;
        }
        Ok((self.column(paths), cache))
    }

    /// Candidate sets from k-shortest paths per step, stopped once a path
    /// costs more than the shortest plus `2 * alpha` or `k_cap` paths were
    /// found. The flag is false when some step hit `k_cap`.
    pub fn price_k_shortest(&self, k_cap: usize) -> Result<(PricedColumn, bool), PricingError> {
        let g = &self.instance.graph;
        let h = self.horizon();
        let k_cap = k_cap.max(1);
        let mut exact = true;
        let mut candidates = Vec::with_capacity(h);
        for t in 1..=h {
            let (o, d) = self.endpoints(t);
            let mut it = KShortestPaths::new(g, &self.costs[t], o, d)?;
            let Some((first, c1)) = it.next() else {
                return Err(PricingError::Infeasible { commodity: self.k, step: t });
            };
            let limit = c1 + 2.0 * self.alpha + COST_TOL;
            let mut layer = vec![first];
            loop {
                match it.next() {
                    Some((p, c)) if c <= limit => {
                        if layer.len() == k_cap {
                            exact = false;
                            break;
                        }
                        layer.push(p);
                    }
                    _ => break,
                }
            }
            if self.is_valid(t, self.initial()) {
                layer.push(self.initial().clone());
            }
            candidates.push(layer);
        }
        Ok((self.candidate_dp(&candidates)?, exact))
    }
}

/// Method used to search for improving path-sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PricingScheme {
    AllInOne,
    ShortestPaths,
    KShortest { k_cap: usize },
}

impl PricingScheme {
    /// Best column of the pricer and whether it is guaranteed optimal.
    pub fn price(self, pricer: &CommodityPricer<'_>) -> Result<(PricedColumn, bool), PricingError> {
        match self {
            PricingScheme::AllInOne => Ok((pricer.price_all_in_one()?, true)),
            PricingScheme::ShortestPaths => Ok((pricer.price_shortest_paths()?, true)),
            PricingScheme::KShortest { k_cap } => pricer.price_k_shortest(k_cap),
        }
    }
}

/// Fewest path changes commodity `k` needs when capacities are ignored.
pub fn min_path_changes(instance: &Instance, k: usize) -> Result<usize, PricingError> {
    let col = CommodityPricer::changes_only(instance, k).price_all_in_one()?;
    Ok(col.sequence.changes(&instance.commodities[k].initial_path))
}

/// Best sequence of every commodity under zero duals: the usual seed column.
pub fn zero_dual_columns(instance: &Instance, epsilon: f64) -> Result<Vec<PathSequence>, PricingError> {
    let duals = DualValues::zero(instance);
    (0..instance.commodities.len())
        .map(|k| Ok(CommodityPricer::new(instance, k, &duals, epsilon).price_all_in_one()?.sequence))
        .collect()
}

#[cfg(test)]
mod tests;
