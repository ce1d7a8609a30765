use std::collections::HashSet;

use super::{FormulationError, PathSequence};
use crate::graph::{ArcId, NodeId, Path};
use crate::instance::Instance;
use crate::lp::{ConId, Model, Sense, SolveOutcome, VarId};

/// Exact multi-step arc-node MILP: one binary per commodity, active arc and
/// step, plus a change indicator per commodity and step.
#[derive(Clone, Debug)]
pub struct ExtendedArcNode {
    pub model: Model,
    /// `arc[k][t][a]` for arcs active at `t >= 1`.
    pub arc: Vec<Vec<Vec<Option<VarId>>>>,
    /// `change[k][t]` for `t >= 1`.
    pub change: Vec<Vec<Option<VarId>>>,
    pub capacity: Vec<Vec<Option<ConId>>>,
    pub budget: Vec<Option<ConId>>,
    pub arc_overflow: Vec<Vec<Option<VarId>>>,
    pub step_excess: Vec<Option<VarId>>,
}

/// The change indicator of a step is bounded below by the difference of arc
/// usage in both directions, so that dropping an arc also counts when the
/// endpoints move.
pub fn build_extended_arc_node(instance: &Instance, epsilon: f64) -> ExtendedArcNode {
    let g = &instance.graph;
    let h = instance.horizon();
    let mut model = Model::new();
    let mut arc = Vec::with_capacity(instance.commodities.len());
    let mut change = Vec::with_capacity(instance.commodities.len());
    for c in &instance.commodities {
        let mut xs = vec![vec![None; g.arc_count()]; h + 1];
        let mut ns = vec![None; h + 1];
        for t in 1..=h {
            for a in g.active_arcs(t) {
                xs[t][a.0] = Some(model.add_variable(0.0, 1.0, epsilon, true));
            }
            for v in 0..g.node_count() {
                let v = NodeId(v);
                let mut row: Vec<(VarId, f64)> = Vec::new();
                row.extend(g.out_arcs(v).iter().filter_map(|a| xs[t][a.0]).map(|x| (x, 1.0)));
                row.extend(g.in_arcs(v).iter().filter_map(|a| xs[t][a.0]).map(|x| (x, -1.0)));
                let rhs = (v == c.origin(t)) as u8 as f64 - (v == c.destination(t)) as u8 as f64;
                if !row.is_empty() || rhs != 0.0 {
                    model.add_constraint(&row, Sense::Eq, rhs);
                }
            }
            let n = model.add_variable(0.0, 1.0, instance.alpha, false);
            ns[t] = Some(n);
            for a in 0..g.arc_count() {
                let cur = xs[t][a];
                let (prev, prev_const) = if t == 1 {
                    (None, c.initial_path.contains(ArcId(a)) as u8 as f64)
                } else {
                    (xs[t - 1][a], 0.0)
                };
                if cur.is_none() && prev.is_none() && prev_const == 0.0 {
                    continue;
                }
                // n >= x_t - x_{t-1} and n >= x_{t-1} - x_t.
                for sign in [1.0, -1.0] {
                    let mut row = vec![(n, -1.0)];
                    if let Some(x) = cur {
                        row.push((x, sign));
                    }
                    if let Some(x) = prev {
                        row.push((x, -sign));
                    }
                    model.add_constraint(&row, Sense::Le, sign * prev_const);
                }
            }
        }
        arc.push(xs);
        change.push(ns);
    }

    let mut capacity = vec![vec![None; g.arc_count()]; h + 1];
    let mut arc_overflow = vec![vec![None; g.arc_count()]; h + 1];
    let mut budget = vec![None; h + 1];
    let mut step_excess = vec![None; h + 1];
    for t in 1..=h {
        let excess = model.add_variable(0.0, f64::INFINITY, 1.0, false);
        let mut brow = Vec::new();
        for a in g.active_arcs(t) {
            let o = model.add_variable(0.0, f64::INFINITY, 0.0, false);
            let mut row: Vec<(VarId, f64)> = instance
                .commodities
                .iter()
                .zip(&arc)
                .map(|(c, xs)| (xs[t][a.0].unwrap(), c.demand))
                .collect();
            row.push((o, -1.0));
            capacity[t][a.0] = Some(model.add_constraint(&row, Sense::Le, g.capacity(t, a)));
            arc_overflow[t][a.0] = Some(o);
            brow.push((o, 1.0));
        }
        brow.push((excess, -1.0));
        budget[t] = Some(model.add_constraint(&brow, Sense::Le, instance.budget));
        step_excess[t] = Some(excess);
    }
    ExtendedArcNode { model, arc, change, capacity, budget, arc_overflow, step_excess }
}

impl ExtendedArcNode {
    /// Reads the path of every commodity at every step from an integer solution.
    pub fn extract_paths(&self, instance: &Instance, outcome: &SolveOutcome) -> Result<Vec<PathSequence>, FormulationError> {
        let g = &instance.graph;
        let mut out = Vec::with_capacity(instance.commodities.len());
        for (k, c) in instance.commodities.iter().enumerate() {
            let mut seq = Vec::with_capacity(instance.horizon());
            for t in 1..=instance.horizon() {
                let used = |a: &ArcId| self.arc[k][t][a.0].is_some_and(|x| outcome.value(x) > 0.5);
                let mut arcs = Vec::new();
                let mut seen = HashSet::from([c.origin(t)]);
                let mut v = c.origin(t);
                while v != c.destination(t) {
                    match g.out_arcs(v).iter().find(|a| used(a) && !seen.contains(&g.arc(**a).1)) {
                        Some(&a) => {
                            arcs.push(a);
                            v = g.arc(a).1;
                            seen.insert(v);
                        }
                        None => break,
                    }
                }
                let p = Path::new(g, arcs.clone()).ok().filter(|p| c.is_valid_path(g, t, p));
                match p {
                    Some(p) => seq.push(p),
                    None => {
                        return Err(FormulationError::InvalidPath {
                            commodity: k,
                            step: t,
                            path: arcs.iter().map(|a| a.0).collect(),
                        })
                    }
                }
            }
            out.push(PathSequence::new(seq));
        }
        Ok(out)
    }

    /// Primal vector encoding the given sequences, usable as a MIP start.
    pub fn start_vector(&self, instance: &Instance, sequences: &[PathSequence]) -> Vec<f64> {
        let g = &instance.graph;
        let mut x = vec![0.0; self.model.variable_slots()];
        let mut load = vec![vec![0.0; g.arc_count()]; instance.horizon() + 1];
        for (k, (c, s)) in instance.commodities.iter().zip(sequences).enumerate() {
            let mut prev = &c.initial_path;
            for t in 1..=instance.horizon() {
                let p = s.at(t);
                for a in p.arcs() {
                    if let Some(v) = self.arc[k][t][a.0] {
                        x[v.0] = 1.0;
                    }
                    load[t][a.0] += c.demand;
                }
                x[self.change[k][t].unwrap().0] = (p != prev) as u8 as f64;
                prev = p;
            }
        }
        for t in 1..=instance.horizon() {
            let mut over = 0.0;
            for a in g.active_arcs(t) {
                let o = (load[t][a.0] - g.capacity(t, a)).max(0.0);
                x[self.arc_overflow[t][a.0].unwrap().0] = o;
                over += o;
            }
            x[self.step_excess[t].unwrap().0] = (over - instance.budget).max(0.0);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DynamicGraph;
    use crate::instance::fixtures::diamond;
    use crate::instance::Commodity;
    use crate::lp::{HighsBackend, LpSolver, MipOptions};

    #[test]
    fn static_line_keeps_its_path() {
        let g = DynamicGraph::from_arcs(3, &[(0, 1), (1, 2)], 5.0, 3);
        let p = Path::new(&g, vec![ArcId(0), ArcId(1)]).unwrap();
        let c = Commodity {
            origins: vec![NodeId(0); 3],
            destinations: vec![NodeId(2); 3],
            demand: 1.0,
            initial_path: p.clone(),
        };
        let inst = Instance::new(g, vec![c], 1.0, 0.0).unwrap();
        let m = build_extended_arc_node(&inst, 1e-4);
        let out = HighsBackend::new().solve_integer(&m.model, &MipOptions::default()).unwrap();
        assert!((out.objective - 4e-4).abs() < 1e-9);
        for t in 1..=2 {
            assert!(out.value(m.change[0][t].unwrap()) < 0.5);
        }
        assert_eq!(m.extract_paths(&inst, &out).unwrap(), vec![PathSequence::repeat(&p, 2)]);
    }

    #[test]
    fn variable_count() {
        let inst = diamond(4, 10.0, 1.0);
        let m = build_extended_arc_node(&inst, 1e-4);
        // 1 commodity * 4 arcs * 3 steps binaries, 3 change vars,
        // 12 arc overflows and 3 step excesses.
        assert_eq!(m.model.variable_count(), 12 + 3 + 12 + 3);
    }

    #[test]
    fn congestion_moves_one_commodity() {
        // Two unit commodities on the upper route with capacity 1: one moves.
        let g = DynamicGraph::from_arcs(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], 1.0, 2);
        let up = Path::new(&g, vec![ArcId(0), ArcId(1)]).unwrap();
        let c = Commodity {
            origins: vec![NodeId(0); 2],
            destinations: vec![NodeId(3); 2],
            demand: 1.0,
            initial_path: up.clone(),
        };
        let inst = Instance::new(g, vec![c.clone(), c], 1.0, 0.0).unwrap();
        let m = build_extended_arc_node(&inst, 1e-4);
        let keep = vec![PathSequence::repeat(&up, 1); 2];
        assert!(m.model.max_violation(&m.start_vector(&inst, &keep)) < 1e-9);
        let out = HighsBackend::new().solve_integer(&m.model, &MipOptions::default()).unwrap();
        assert!((out.objective - (1.0 + 4e-4)).abs() < 1e-7);
        let seqs = m.extract_paths(&inst, &out).unwrap();
        assert_eq!(seqs.iter().filter(|s| s.at(1) == &up).count(), 1);
    }
}
