use std::collections::{HashMap, HashSet};

use super::{sequence_cost, FormulationError, PathSequence};
use crate::instance::Instance;
use crate::lp::{ConId, LpOptions, LpSolver, Model, Sense, SolveOutcome, VarId};

#[derive(Clone, Debug)]
pub struct Column {
    pub commodity: usize,
    pub sequence: PathSequence,
}

/// Restricted master of the path-sequence formulation: one column per
/// path-sequence, a convexity row per commodity, a capacity row per active
/// arc and step, and a budget row per step.
#[derive(Clone, Debug)]
pub struct PathSequenceMaster {
    pub model: Model,
    pub epsilon: f64,
    pub convexity: Vec<ConId>,
    /// `capacity[t][arc]`, present for arcs active at `t >= 1`.
    pub capacity: Vec<Vec<Option<ConId>>>,
    pub budget: Vec<Option<ConId>>,
    pub arc_overflow: Vec<Vec<Option<VarId>>>,
    pub step_excess: Vec<Option<VarId>>,
    columns: HashMap<VarId, Column>,
    by_commodity: Vec<Vec<VarId>>,
    known: Vec<HashSet<PathSequence>>,
    fixed: Vec<Option<VarId>>,
}

pub fn build_path_sequence_master(
    instance: &Instance,
    initial_columns: Vec<Vec<PathSequence>>,
    epsilon: f64,
) -> Result<PathSequenceMaster, FormulationError> {
    let g = &instance.graph;
    let h = instance.horizon();
    let k_count = instance.commodities.len();
    let mut model = Model::new();
    let convexity = (0..k_count).map(|_| model.add_constraint(&[], Sense::Eq, 1.0)).collect();
    let mut capacity = vec![vec![None; g.arc_count()]; h + 1];
    let mut arc_overflow = vec![vec![None; g.arc_count()]; h + 1];
    let mut budget = vec![None; h + 1];
    let mut step_excess = vec![None; h + 1];
    for t in 1..=h {
        let excess = model.add_variable(0.0, f64::INFINITY, 1.0, false);
        let mut row = Vec::new();
        for a in g.active_arcs(t) {
            let o = model.add_variable(0.0, f64::INFINITY, 0.0, false);
            capacity[t][a.0] = Some(model.add_constraint(&[(o, -1.0)], Sense::Le, g.capacity(t, a)));
            arc_overflow[t][a.0] = Some(o);
            row.push((o, 1.0));
        }
        row.push((excess, -1.0));
        budget[t] = Some(model.add_constraint(&row, Sense::Le, instance.budget));
        step_excess[t] = Some(excess);
    }
    let mut master = PathSequenceMaster {
        model,
        epsilon,
        convexity,
        capacity,
        budget,
        arc_overflow,
        step_excess,
        columns: HashMap::new(),
        by_commodity: vec![Vec::new(); k_count],
        known: vec![HashSet::new(); k_count],
        fixed: vec![None; k_count],
    };
    for (k, seqs) in initial_columns.into_iter().enumerate() {
        for s in seqs {
            master.add_column(instance, k, s)?;
        }
        if master.by_commodity[k].is_empty() {
            return Err(FormulationError::NoColumn(k));
        }
    }
    Ok(master)
}

impl PathSequenceMaster {
    /// Adds `seq` for commodity `k`; returns `None` if it is already present.
    pub fn add_column(
        &mut self,
        instance: &Instance,
        k: usize,
        seq: PathSequence,
    ) -> Result<Option<VarId>, FormulationError> {
        let c = &instance.commodities[k];
        if seq.horizon() != instance.horizon() {
            return Err(FormulationError::NoColumn(k));
        }
        if let Some(t) = seq.first_invalid_step(&instance.graph, c) {
            return Err(FormulationError::invalid_path(k, t, seq.at(t)));
        }
        if self.known[k].contains(&seq) {
            return Ok(None);
        }
        let mut entries = vec![(self.convexity[k], 1.0)];
        for t in 1..=seq.horizon() {
            for a in seq.at(t).arcs() {
                entries.push((self.capacity[t][a.0].expect("active arc has a row"), c.demand));
            }
        }
        let cost = sequence_cost(instance, k, &seq, self.epsilon);
        let upper = if self.fixed[k].is_some() { 0.0 } else { f64::INFINITY };
        let v = self.model.add_column(cost, &entries, 0.0, upper);
        self.known[k].insert(seq.clone());
        self.by_commodity[k].push(v);
        self.columns.insert(v, Column { commodity: k, sequence: seq });
        Ok(Some(v))
    }

    pub fn columns_of(&self, k: usize) -> &[VarId] {
        &self.by_commodity[k]
    }

    pub fn column(&self, v: VarId) -> &Column {
        &self.columns[&v]
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    /// Columns of `k` whose path at step `t` uses `arc`.
    pub fn columns_through(&self, k: usize, arc: crate::graph::ArcId, t: usize) -> Vec<VarId> {
        self.by_commodity[k].iter().copied().filter(|v| self.columns[v].sequence.at(t).contains(arc)).collect()
    }

    pub fn remove_columns(&mut self, vars: &[VarId]) {
        for v in vars {
            if let Some(col) = self.columns.remove(v) {
                self.by_commodity[col.commodity].retain(|x| x != v);
                self.known[col.commodity].remove(&col.sequence);
            }
        }
        self.model.remove_variables(vars);
    }

    /// Forces commodity `k` onto column `v` and drops its other columns.
    pub fn fix(&mut self, k: usize, v: VarId) {
        let others: Vec<VarId> = self.by_commodity[k].iter().copied().filter(|&x| x != v).collect();
        self.remove_columns(&others);
        self.model.set_bounds(v, 1.0, 1.0);
        self.fixed[k] = Some(v);
    }

    pub fn fixed(&self, k: usize) -> Option<VarId> {
        self.fixed[k]
    }

    pub fn solve(&self, solver: &dyn LpSolver, options: &LpOptions<'_>) -> Result<SolveOutcome, FormulationError> {
        Ok(solver.solve_continuous(&self.model, options)?)
    }

    /// Positive-weight columns of commodity `k` in `outcome`.
    pub fn weights(&self, outcome: &SolveOutcome, k: usize) -> Vec<(VarId, f64)> {
        self.by_commodity[k].iter().map(|&v| (v, outcome.value(v).max(0.0))).filter(|&(_, x)| x > 1e-9).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ArcId, Path};
    use crate::instance::fixtures::diamond;
    use crate::lp::HighsBackend;

    #[test]
    fn single_column_objective() {
        let inst = diamond(3, 10.0, 1.0);
        let up = inst.commodities[0].initial_path.clone();
        let m = build_path_sequence_master(&inst, vec![vec![PathSequence::repeat(&up, 2)]], 1e-4).unwrap();
        let out = m.solve(&HighsBackend::new(), &LpOptions::default()).unwrap();
        assert!((out.objective - 1e-4 * 4.0).abs() < 1e-12);
        for t in 1..=2 {
            for o in m.arc_overflow[t].iter().flatten() {
                assert_eq!(out.value(*o), 0.0);
            }
        }
    }

    #[test]
    fn cheaper_column_wins() {
        let inst = diamond(3, 10.0, 1.0);
        let up = inst.commodities[0].initial_path.clone();
        let down = Path::new(&inst.graph, vec![ArcId(2), ArcId(3)]).unwrap();
        let keep = PathSequence::repeat(&up, 2);
        let swap = PathSequence::new(vec![down.clone(), down]);
        let m = build_path_sequence_master(&inst, vec![vec![swap, keep]], 1e-4).unwrap();
        let out = m.solve(&HighsBackend::new(), &LpOptions::default()).unwrap();
        let w = m.weights(&out, 0);
        assert_eq!(w.len(), 1);
        assert_eq!(m.column(w[0].0).sequence.changes(&up), 0);
        assert!((w[0].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn duplicates_and_invalid_columns() {
        let inst = diamond(3, 10.0, 1.0);
        let up = inst.commodities[0].initial_path.clone();
        let mut m = build_path_sequence_master(&inst, vec![vec![PathSequence::repeat(&up, 2)]], 1e-4).unwrap();
        assert!(m.add_column(&inst, 0, PathSequence::repeat(&up, 2)).unwrap().is_none());
        let half = Path::new(&inst.graph, vec![ArcId(0)]).unwrap();
        assert!(m.add_column(&inst, 0, PathSequence::repeat(&half, 2)).is_err());
        assert!(matches!(build_path_sequence_master(&inst, vec![vec![]], 1e-4), Err(FormulationError::NoColumn(0))));
    }

    #[test]
    fn overloaded_arc_pays_overflow() {
        // Demand 5 on capacity 2 with no budget: 3 units over on two arcs at
        // each of two steps.
        let inst = diamond(3, 2.0, 5.0);
        let up = inst.commodities[0].initial_path.clone();
        let m = build_path_sequence_master(&inst, vec![vec![PathSequence::repeat(&up, 2)]], 0.0).unwrap();
        let out = m.solve(&HighsBackend::new(), &LpOptions::default()).unwrap();
        assert!((out.objective - 12.0).abs() < 1e-9);
    }
}
