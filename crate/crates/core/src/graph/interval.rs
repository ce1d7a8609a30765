/// Arcs present at every step of `t1..=t2`, each weighted by the sum of its
/// per-step costs over the interval.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalGraph {
    pub t1: usize,
    pub t2: usize,
    pub costs: Vec<Option<f64>>,
}

impl IntervalGraph {
    pub fn arc_count(&self) -> usize {
        self.costs.iter().filter(|c| c.is_some()).count()
    }
}

/// Yields the interval graphs `(t1, t1)`, `(t1, t1 + 1)`, ... up to the last
/// step of `step_costs`. Each extension intersects the previous arc set with
/// the next step in a single pass over the arcs.
pub struct IntervalGraphs<'a> {
    step_costs: &'a [Vec<Option<f64>>],
    t1: usize,
    current: Option<IntervalGraph>,
}

/// `step_costs[t][a]` is the cost of arc `a` at step `t`, `None` when inactive.
pub fn build_interval_graphs(step_costs: &[Vec<Option<f64>>], t1: usize) -> IntervalGraphs<'_> {
    IntervalGraphs { step_costs, t1, current: None }
}

impl Iterator for IntervalGraphs<'_> {
    type Item = IntervalGraph;

    fn next(&mut self) -> Option<IntervalGraph> {
        let next = match self.current.take() {
            None => {
                let costs = self.step_costs.get(self.t1)?.clone();
                IntervalGraph { t1: self.t1, t2: self.t1, costs }
            }
            Some(mut g) => {
                let t2 = g.t2 + 1;
                let step = self.step_costs.get(t2)?;
                for (acc, c) in g.costs.iter_mut().zip(step) {
                    *acc = match (*acc, *c) {
                        (Some(a), Some(b)) => Some(a + b),
                        _ => None,
                    };
                }
                g.t2 = t2;
                g
            }
        };
        self.current = Some(next.clone());
        Some(next)
    }
}
