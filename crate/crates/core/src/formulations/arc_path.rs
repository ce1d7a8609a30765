use std::collections::BTreeMap;

use super::FormulationError;
use crate::graph::Path;
use crate::instance::Instance;
use crate::lp::{ConId, Model, Sense, SolveOutcome, VarId};

/// Variables attached to one allowed path of a commodity at one step.
#[derive(Clone, Copy, Debug)]
pub struct PathVars {
    /// Share of the commodity on the path.
    pub x: VarId,
    /// Amount by which `x` grew since the previous step.
    pub n: VarId,
    pub change_row: ConId,
}

/// Extended arc-path formulation over explicit per-step path sets. The
/// initial paths are constants: step 0 has no variables.
#[derive(Clone, Debug)]
pub struct ArcPathModel {
    pub model: Model,
    pub epsilon: f64,
    /// `convexity[k][t]` for `t >= 1`.
    pub convexity: Vec<Vec<Option<ConId>>>,
    pub capacity: Vec<Vec<Option<ConId>>>,
    pub budget: Vec<Option<ConId>>,
    pub arc_overflow: Vec<Vec<Option<VarId>>>,
    pub step_excess: Vec<Option<VarId>>,
    paths: Vec<Vec<BTreeMap<Path, PathVars>>>,
    integer: bool,
}

/// `allowed[k][t]` lists the paths of commodity `k` at step `t`; entry 0 is
/// ignored since step 0 is fixed to the initial path.
pub fn build_extended_arc_path(
    instance: &Instance,
    allowed: &[Vec<Vec<Path>>],
    epsilon: f64,
) -> Result<ArcPathModel, FormulationError> {
    let g = &instance.graph;
    let h = instance.horizon();
    let k_count = instance.commodities.len();
    let mut model = Model::new();
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
    let convexity = (0..k_count)
        .map(|_| {
            let mut row = vec![None];
            row.extend((1..=h).map(|_| Some(model.add_constraint(&[], Sense::Eq, 1.0))));
            row
        })
        .collect();
    let mut m = ArcPathModel {
        model,
        epsilon,
        convexity,
        capacity,
        budget,
        arc_overflow,
        step_excess,
        paths: vec![vec![BTreeMap::new(); h + 1]; k_count],
        integer: false,
    };
    for (k, per_step) in allowed.iter().enumerate() {
        for (t, paths) in per_step.iter().enumerate().skip(1) {
            for p in paths {
                m.add_path(instance, k, t, p.clone())?;
            }
        }
    }
    Ok(m)
}

impl ArcPathModel {
    /// Adds path `p` for commodity `k` at step `t`; `None` if already present.
    pub fn add_path(
        &mut self,
        instance: &Instance,
        k: usize,
        t: usize,
        p: Path,
    ) -> Result<Option<PathVars>, FormulationError> {
        let c = &instance.commodities[k];
        if t == 0 || t > instance.horizon() || !c.is_valid_path(&instance.graph, t, &p) {
            return Err(FormulationError::invalid_path(k, t, &p));
        }
        if self.paths[k][t].contains_key(&p) {
            return Ok(None);
        }
        let mut entries = vec![(self.convexity[k][t].unwrap(), 1.0)];
        for a in p.arcs() {
            entries.push((self.capacity[t][a.0].expect("active arc has a row"), c.demand));
        }
        let x = self.model.add_column(self.epsilon * p.len() as f64, &entries, 0.0, 1.0);
        self.model.set_integer(x, self.integer);
        let n = self.model.add_variable(0.0, f64::INFINITY, instance.alpha, false);
        let mut row = vec![(x, 1.0), (n, -1.0)];
        let mut rhs = 0.0;
        if t == 1 {
            if p == c.initial_path {
                rhs = 1.0;
            }
        } else if let Some(prev) = self.paths[k][t - 1].get(&p) {
            row.push((prev.x, -1.0));
        }
        let change_row = self.model.add_constraint(&row, Sense::Le, rhs);
        if let Some(next) = self.paths[k].get(t + 1).and_then(|m| m.get(&p)) {
            self.model.set_coefficient(next.change_row, x, -1.0);
        }
        let vars = PathVars { x, n, change_row };
        self.paths[k][t].insert(p, vars);
        Ok(Some(vars))
    }

    pub fn paths(&self, k: usize, t: usize) -> impl Iterator<Item = (&Path, &PathVars)> {
        self.paths[k][t].iter()
    }

    pub fn path_count(&self) -> usize {
        self.paths.iter().flatten().map(BTreeMap::len).sum()
    }

    pub fn remove_path(&mut self, k: usize, t: usize, p: &Path) {
        if let Some(v) = self.paths[k][t].remove(p) {
            self.model.remove_variables(&[v.x, v.n]);
        }
    }

    /// Switches the share variables between binary and continuous.
    pub fn set_integer(&mut self, integer: bool) {
        self.integer = integer;
        for per_step in &self.paths {
            for m in per_step {
                for v in m.values() {
                    self.model.set_integer(v.x, integer);
                }
            }
        }
    }

    /// Forces commodity `k` onto `p` at step `t` and drops its other paths there.
    pub fn fix(&mut self, k: usize, t: usize, p: &Path) {
        let others: Vec<Path> = self.paths[k][t].keys().filter(|q| *q != p).cloned().collect();
        for q in &others {
            self.remove_path(k, t, q);
        }
        let x = self.paths[k][t][p].x;
        self.model.set_bounds(x, 1.0, 1.0);
    }

    /// Positive shares of commodity `k` at step `t`.
    pub fn weights(&self, outcome: &SolveOutcome, k: usize, t: usize) -> Vec<(Path, f64)> {
        self.paths[k][t]
            .iter()
            .map(|(p, v)| (p.clone(), outcome.value(v.x).max(0.0)))
            .filter(|&(_, x)| x > 1e-9)
            .collect()
    }

    /// Integer assignment `choice[k][t - 1]` as a primal vector, for MIP starts.
    pub fn start_vector(&self, instance: &Instance, choice: &[Vec<Path>]) -> Vec<f64> {
        let g = &instance.graph;
        let mut x = vec![0.0; self.model.variable_slots()];
        for (k, per_step) in choice.iter().enumerate() {
            let mut prev = &instance.commodities[k].initial_path;
            for (i, p) in per_step.iter().enumerate() {
                let t = i + 1;
                if let Some(v) = self.paths[k][t].get(p) {
                    x[v.x.0] = 1.0;
                    x[v.n.0] = (p != prev) as u8 as f64;
                }
                prev = p;
            }
        }
        let demand: Vec<f64> = instance.commodities.iter().map(|c| c.demand).collect();
        for t in 1..self.capacity.len() {
            let mut load = vec![0.0; g.arc_count()];
            for (k, per_step) in choice.iter().enumerate() {
                for a in per_step[t - 1].arcs() {
                    load[a.0] += demand[k];
                }
            }
            let mut over = 0.0;
            for a in g.active_arcs(t) {
                let o = (load[a.0] - g.capacity(t, a)).max(0.0);
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
    use crate::graph::{ArcId, DynamicGraph, NodeId};
    use crate::instance::fixtures::diamond;
    use crate::instance::Commodity;
    use crate::lp::{HighsBackend, LpOptions, LpSolver, MipOptions};

    fn down(inst: &Instance) -> Path {
        Path::new(&inst.graph, vec![ArcId(2), ArcId(3)]).unwrap()
    }

    #[test]
    fn forced_initial_path() {
        let inst = diamond(2, 10.0, 1.0);
        let up = inst.commodities[0].initial_path.clone();
        let m = build_extended_arc_path(&inst, &[vec![vec![], vec![up]]], 1e-4).unwrap();
        let out = HighsBackend::new().solve_continuous(&m.model, &LpOptions::default()).unwrap();
        assert!((out.objective - 2e-4).abs() < 1e-12);
    }

    #[test]
    fn variable_counts() {
        // Two commodities on the diamond, two paths each over two steps.
        let g = DynamicGraph::from_arcs(4, &[(0, 1), (1, 3), (0, 2), (2, 3)], 10.0, 3);
        let up = Path::new(&g, vec![ArcId(0), ArcId(1)]).unwrap();
        let dn = Path::new(&g, vec![ArcId(2), ArcId(3)]).unwrap();
        let c = |p: &Path| Commodity {
            origins: vec![NodeId(0); 3],
            destinations: vec![NodeId(3); 3],
            demand: 1.0,
            initial_path: p.clone(),
        };
        let inst = Instance::new(g, vec![c(&up), c(&dn)], 1.0, 0.0).unwrap();
        let both = vec![vec![], vec![up.clone(), dn.clone()], vec![up, dn]];
        let m = build_extended_arc_path(&inst, &[both.clone(), both], 1e-4).unwrap();
        // x and n per (k, t, p): 2 * 2 * 2 each; o_et: 4 arcs * 2 steps; o_t: 2.
        assert_eq!(m.path_count(), 8);
        assert_eq!(m.model.variable_count(), 8 + 8 + 8 + 2);
        // convexity 2 * 2, capacity 8, budget 2, change rows 8.
        assert_eq!(m.model.constraint_count(), 4 + 8 + 2 + 8);
    }

    #[test]
    fn zero_capacity_is_all_overflow() {
        let g = DynamicGraph::from_arcs(2, &[(0, 1)], 0.0, 2);
        let p = Path::new(&g, vec![ArcId(0)]).unwrap();
        let c = Commodity {
            origins: vec![NodeId(0); 2],
            destinations: vec![NodeId(1); 2],
            demand: 5.0,
            initial_path: p.clone(),
        };
        let inst = Instance::new(g, vec![c], 1.0, 0.0).unwrap();
        let m = build_extended_arc_path(&inst, &[vec![vec![], vec![p]]], 1e-4).unwrap();
        let out = HighsBackend::new().solve_continuous(&m.model, &LpOptions::default()).unwrap();
        assert!(out.objective >= 5.0);
        assert!((out.objective - 5.0 - 1e-4).abs() < 1e-9);
    }

    #[test]
    fn change_variables_are_minimal() {
        // Capacity 1 for demand 2 pushes half the flow to the lower route:
        // n on the new path equals its share, n on the kept path is zero.
        let inst = diamond(3, 1.0, 2.0);
        let up = inst.commodities[0].initial_path.clone();
        let both = vec![vec![], vec![up.clone(), down(&inst)], vec![up.clone(), down(&inst)]];
        let m = build_extended_arc_path(&inst, &[both], 1e-4).unwrap();
        let out = HighsBackend::new().solve_continuous(&m.model, &LpOptions::default()).unwrap();
        let mut prev: BTreeMap<Path, f64> = BTreeMap::from([(up.clone(), 1.0)]);
        for t in 1..=2 {
            let mut cur = BTreeMap::new();
            for (p, v) in m.paths(0, t) {
                let x = out.value(v.x);
                let want = (x - prev.get(p).copied().unwrap_or(0.0)).max(0.0);
                assert!((out.value(v.n) - want).abs() < 1e-7, "t={t} {} vs {want}", out.value(v.n));
                cur.insert(p.clone(), x);
            }
            prev = cur;
        }
    }

    #[test]
    fn rejects_invalid_path_and_solves_as_mip() {
        let inst = diamond(2, 10.0, 1.0);
        let half = Path::new(&inst.graph, vec![ArcId(0)]).unwrap();
        assert!(matches!(
            build_extended_arc_path(&inst, &[vec![vec![], vec![half]]], 1e-4),
            Err(FormulationError::InvalidPath { commodity: 0, step: 1, .. })
        ));
        let up = inst.commodities[0].initial_path.clone();
        let mut m = build_extended_arc_path(&inst, &[vec![vec![], vec![down(&inst), up.clone()]]], 1e-4).unwrap();
        m.set_integer(true);
        let start = m.start_vector(&inst, &[vec![up.clone()]]);
        assert!(m.model.max_violation(&start) < 1e-9);
        let out = HighsBackend::new().solve_integer(&m.model, &MipOptions::default()).unwrap();
        assert_eq!(m.weights(&out, 0, 1), vec![(up, 1.0)]);
    }
}
