use serde::{Deserialize, Serialize};

use crate::formulations::PathSequence;
use crate::graph::Path;
use crate::instance::Instance;

/// Tolerance of the invariant checks.
const CHECK_TOL: f64 = 1e-6;

/// One path per commodity and decision step, with every derived quantity
/// recomputed from the paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerSolution {
    pub paths: Vec<PathSequence>,
    /// `arc_overflow[t][arc]`; row 0 is the initial state and is all zero.
    pub arc_overflow: Vec<Vec<f64>>,
    /// `step_excess[t]`: overflow beyond the budget, entry 0 unused.
    pub step_excess: Vec<f64>,
    pub changes: usize,
    /// `alpha * changes + sum of step excesses`.
    pub objective: f64,
}

impl IntegerSolution {
    pub fn from_paths(instance: &Instance, paths: Vec<PathSequence>) -> Self {
        let g = &instance.graph;
        let h = instance.horizon();
        let mut arc_overflow = vec![vec![0.0; g.arc_count()]; h + 1];
        let mut step_excess = vec![0.0; h + 1];
        for t in 1..=h {
            let at_t: Vec<&Path> = paths.iter().map(|s| s.at(t)).collect();
            let load = instance.load(&at_t);
            let mut over = 0.0;
            for a in g.active_arcs(t) {
                let o = (load[a.0] - g.capacity(t, a)).max(0.0);
                arc_overflow[t][a.0] = o;
                over += o;
            }
            step_excess[t] = (over - instance.budget).max(0.0);
        }
        let changes =
            paths.iter().zip(&instance.commodities).map(|(s, c)| s.changes(&c.initial_path)).sum::<usize>();
        let objective = instance.alpha * changes as f64 + step_excess.iter().sum::<f64>();
        IntegerSolution { paths, arc_overflow, step_excess, changes, objective }
    }

    /// Builds a solution from per-step choices `steps[t - 1][k]`.
    pub fn from_steps(instance: &Instance, steps: Vec<Vec<Path>>) -> Self {
        let mut per_k: Vec<Vec<Path>> = vec![Vec::with_capacity(steps.len()); instance.commodities.len()];
        for step in steps {
            for (k, p) in step.into_iter().enumerate() {
                per_k[k].push(p);
            }
        }
        IntegerSolution::from_paths(instance, per_k.into_iter().map(PathSequence::new).collect())
    }

    pub fn total_excess(&self) -> f64 {
        self.step_excess.iter().sum()
    }

    /// Paths of every commodity at step `t`.
    pub fn step_paths(&self, t: usize) -> Vec<Path> {
        self.paths.iter().map(|s| s.at(t).clone()).collect()
    }

    /// Checks every structural property against the instance, recomputing
    /// derived values from the paths.
    pub fn check(&self, instance: &Instance) -> Result<(), String> {
        let h = instance.horizon();
        if self.paths.len() != instance.commodities.len() {
            return Err(format!("{} sequences for {} commodities", self.paths.len(), instance.commodities.len()));
        }
        for (k, (s, c)) in self.paths.iter().zip(&instance.commodities).enumerate() {
            if s.horizon() != h {
                return Err(format!("commodity {k}: {} steps instead of {h}", s.horizon()));
            }
            if let Some(t) = s.first_invalid_step(&instance.graph, c) {
                return Err(format!("commodity {k}: path at step {t} is not valid"));
            }
        }
        let fresh = IntegerSolution::from_paths(instance, self.paths.clone());
        if fresh.changes != self.changes {
            return Err(format!("changes {} but paths give {}", self.changes, fresh.changes));
        }
        for t in 1..=h {
            if (fresh.step_excess[t] - self.step_excess[t]).abs() > CHECK_TOL {
                return Err(format!("step {t}: excess {} but paths give {}", self.step_excess[t], fresh.step_excess[t]));
            }
            for (a, (x, y)) in fresh.arc_overflow[t].iter().zip(&self.arc_overflow[t]).enumerate() {
                if (x - y).abs() > CHECK_TOL {
                    return Err(format!("step {t}, arc {a}: overflow {y} but paths give {x}"));
                }
            }
        }
        if (fresh.objective - self.objective).abs() > CHECK_TOL * (1.0 + fresh.objective.abs()) {
            return Err(format!("objective {} but paths give {}", self.objective, fresh.objective));
        }
        Ok(())
    }
}
