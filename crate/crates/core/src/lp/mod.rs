//! Backend-neutral linear and mixed-integer programs.
//!
//! Models are minimization problems stored column-wise. Variables keep their
//! id after others are removed; removed slots are skipped when the model is
//! handed to a backend.

mod config;
mod highs;

use std::fmt::Write as _;

use thiserror::Error;

pub use config::{resolve_backend, BackendKind, LP_BACKEND_ENV};
pub use highs::HighsBackend;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("LP backend configuration: {0}")]
    Config(String),
    #[error("LP backend failure: {0}")]
    Backend(String),
}

#[derive(Clone, Debug)]
struct Column {
    lower: f64,
    upper: f64,
    cost: f64,
    integer: bool,
    entries: Vec<(ConId, f64)>,
}

#[derive(Clone, Debug)]
struct Row {
    sense: Sense,
    rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Model {
    columns: Vec<Option<Column>>,
    rows: Vec<Row>,
    offset: f64,
    live: usize,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, lower: f64, upper: f64, cost: f64, integer: bool) -> VarId {
        assert!(lower <= upper, "bounds [{lower}, {upper}]");
        self.columns.push(Some(Column { lower, upper, cost, integer, entries: Vec::new() }));
        self.live += 1;
        VarId(self.columns.len() - 1)
    }

    /// Adds a variable together with its coefficients in existing constraints.
    pub fn add_column(&mut self, cost: f64, entries: &[(ConId, f64)], lower: f64, upper: f64) -> VarId {
        let v = self.add_variable(lower, upper, cost, false);
        for &(c, a) in entries {
            assert!(c.0 < self.rows.len(), "unknown constraint {}", c.0);
            self.set_coefficient(c, v, a);
        }
        v
    }

    pub fn add_constraint(&mut self, row: &[(VarId, f64)], sense: Sense, rhs: f64) -> ConId {
        let c = ConId(self.rows.len());
        self.rows.push(Row { sense, rhs });
        for &(v, a) in row {
            self.set_coefficient(c, v, a);
        }
        c
    }

    /// Sets (or with 0, clears) the coefficient of `var` in `con`.
    pub fn set_coefficient(&mut self, con: ConId, var: VarId, value: f64) {
        let col = self.column_mut(var);
        match col.entries.iter().position(|&(c, _)| c == con) {
            Some(i) if value == 0.0 => {
                col.entries.swap_remove(i);
            }
            Some(i) => col.entries[i].1 = value,
            None if value != 0.0 => col.entries.push((con, value)),
            None => {}
        }
    }

    pub fn add_to_coefficient(&mut self, con: ConId, var: VarId, delta: f64) {
        let cur = self.coefficient(con, var);
        self.set_coefficient(con, var, cur + delta);
    }

    pub fn coefficient(&self, con: ConId, var: VarId) -> f64 {
        self.column(var).entries.iter().find(|&&(c, _)| c == con).map_or(0.0, |&(_, a)| a)
    }

    pub fn remove_variables(&mut self, vars: &[VarId]) {
        for &v in vars {
            if self.columns.get(v.0).is_some_and(Option::is_some) {
                self.columns[v.0] = None;
                self.live -= 1;
            }
        }
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        assert!(lower <= upper, "bounds [{lower}, {upper}]");
        let col = self.column_mut(var);
        col.lower = lower;
        col.upper = upper;
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.column_mut(var).cost = cost;
    }

    pub fn set_integer(&mut self, var: VarId, integer: bool) {
        self.column_mut(var).integer = integer;
    }

    pub fn set_rhs(&mut self, con: ConId, rhs: f64) {
        self.rows[con.0].rhs = rhs;
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn objective_offset(&self) -> f64 {
        self.offset
    }

    pub fn bounds(&self, var: VarId) -> (f64, f64) {
        let c = self.column(var);
        (c.lower, c.upper)
    }

    pub fn cost(&self, var: VarId) -> f64 {
        self.column(var).cost
    }

    pub fn is_integer(&self, var: VarId) -> bool {
        self.column(var).integer
    }

    pub fn has_integers(&self) -> bool {
        self.columns.iter().flatten().any(|c| c.integer)
    }

    pub fn entries(&self, var: VarId) -> &[(ConId, f64)] {
        &self.column(var).entries
    }

    pub fn rhs(&self, con: ConId) -> f64 {
        self.rows[con.0].rhs
    }

    pub fn sense(&self, con: ConId) -> Sense {
        self.rows[con.0].sense
    }

    pub fn is_live(&self, var: VarId) -> bool {
        self.columns.get(var.0).is_some_and(Option::is_some)
    }

    /// Number of live variables.
    pub fn variable_count(&self) -> usize {
        self.live
    }

    /// Upper bound on variable ids, including removed ones.
    pub fn variable_slots(&self) -> usize {
        self.columns.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.rows.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = VarId> + '_ {
        self.columns.iter().enumerate().filter(|(_, c)| c.is_some()).map(|(i, _)| VarId(i))
    }

    /// Objective value of `x` (indexed by variable id), offset included.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.offset + self.variables().map(|v| self.cost(v) * x[v.0]).sum::<f64>()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        let mut activity = vec![0.0; self.rows.len()];
        for v in self.variables() {
            let c = self.column(v);
            worst = worst.max(c.lower - x[v.0]).max(x[v.0] - c.upper);
            if c.integer {
                worst = worst.max((x[v.0] - x[v.0].round()).abs());
            }
            for &(r, a) in &c.entries {
                activity[r.0] += a * x[v.0];
            }
        }
        for (row, act) in self.rows.iter().zip(activity) {
            worst = worst.max(match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            });
        }
        worst
    }

    fn column(&self, var: VarId) -> &Column {
        self.columns[var.0].as_ref().unwrap_or_else(|| panic!("variable {} was removed", var.0))
    }

    fn column_mut(&mut self, var: VarId) -> &mut Column {
        self.columns[var.0].as_mut().unwrap_or_else(|| panic!("variable {} was removed", var.0))
    }

    /// The model in CPLEX LP text format, for debugging.
    pub fn to_lp_string(&self) -> String {
        let term = |out: &mut String, a: f64, name: &str| {
            let sign = if a < 0.0 { '-' } else { '+' };
            let _ = write!(out, " {sign} {} {name}", a.abs());
        };
        let mut out = String::from("Minimize\n obj:");
        for v in self.variables() {
            if self.cost(v) != 0.0 {
                term(&mut out, self.cost(v), &format!("x{}", v.0));
            }
        }
        if self.offset != 0.0 {
            let _ = write!(out, " + {} constant", self.offset);
        }
        out.push_str("\nSubject To\n");
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.rows.len()];
        for v in self.variables() {
            for &(c, a) in self.entries(v) {
                rows[c.0].push((v.0, a));
            }
        }
        for (i, (row, terms)) in self.rows.iter().zip(&mut rows).enumerate() {
            terms.sort_by_key(|t| t.0);
            let _ = write!(out, " r{i}:");
            if terms.is_empty() {
                out.push_str(" 0 x0");
            }
            for &(v, a) in terms.iter() {
                term(&mut out, a, &format!("x{v}"));
            }
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        if self.offset != 0.0 {
            out.push_str(" constant = 1\n");
        }
        let fmt_bound = |b: f64| {
            if b == f64::INFINITY {
                "+inf".to_string()
            } else if b == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                b.to_string()
            }
        };
        for v in self.variables() {
            let (l, u) = self.bounds(v);
            let _ = writeln!(out, " {} <= x{} <= {}", fmt_bound(l), v.0, fmt_bound(u));
        }
        let ints: Vec<String> = self.variables().filter(|&v| self.is_integer(v)).map(|v| format!("x{}", v.0)).collect();
        if !ints.is_empty() {
            let _ = writeln!(out, "General\n {}", ints.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// A solution is available but optimality was not proven (time limit).
    Feasible,
    Infeasible,
    Unbounded,
    /// Stopped before any feasible solution was found.
    NoSolution,
}

impl Status {
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::Feasible)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisStatus {
    Lower,
    Basic,
    Upper,
    Zero,
}

/// Simplex basis keyed by variable id and constraint id.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    pub columns: Vec<BasisStatus>,
    pub rows: Vec<BasisStatus>,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: Status,
    pub objective: f64,
    /// Indexed by variable id; removed variables read 0.
    pub primal: Vec<f64>,
    /// Row duals, present for continuous solves. For a minimization, `<=`
    /// rows have non-positive and `>=` rows non-negative duals.
    pub duals: Option<Vec<f64>>,
    pub reduced_costs: Option<Vec<f64>>,
    pub basis: Option<Basis>,
    /// Best proven lower bound for integer solves.
    pub bound: Option<f64>,
}

impl SolveOutcome {
    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    pub fn dual(&self, c: ConId) -> f64 {
        self.duals.as_ref().expect("continuous solve")[c.0]
    }

    pub fn is_basic(&self, v: VarId) -> bool {
        self.basis.as_ref().and_then(|b| b.columns.get(v.0)).is_some_and(|&s| s == BasisStatus::Basic)
    }

    fn empty(status: Status, slots: usize) -> Self {
        SolveOutcome {
            status,
            objective: f64::NAN,
            primal: vec![0.0; slots],
            duals: None,
            reduced_costs: None,
            basis: None,
            bound: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LpOptions<'a> {
    pub time_limit: Option<f64>,
    pub warm_start: Option<&'a Basis>,
}

#[derive(Clone, Debug)]
pub struct MipOptions<'a> {
    pub time_limit: Option<f64>,
    /// Favour finding good incumbents over proving optimality.
    pub feasibility_emphasis: bool,
    pub threads: usize,
    /// Initial incumbent, indexed by variable id.
    pub start: Option<&'a [f64]>,
    /// Relative optimality gap at which the search stops; backend default when absent.
    pub relative_gap: Option<f64>,
}

impl Default for MipOptions<'_> {
    fn default() -> Self {
        MipOptions { time_limit: None, feasibility_emphasis: false, threads: 1, start: None, relative_gap: None }
    }
}

pub trait LpSolver: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve_continuous(&self, model: &Model, options: &LpOptions<'_>) -> Result<SolveOutcome, LpError>;

    /// Integrality flags are honoured; a model without integer variables is
    /// solved as an LP without duals.
    fn solve_integer(&self, model: &Model, options: &MipOptions<'_>) -> Result<SolveOutcome, LpError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver() -> HighsBackend {
        HighsBackend::new()
    }

    #[test]
    fn one_variable_lp_dual() {
        let mut m = Model::new();
        let x = m.add_variable(f64::NEG_INFINITY, f64::INFINITY, 1.0, false);
        let c = m.add_constraint(&[(x, 1.0)], Sense::Ge, 1.0);
        let out = solver().solve_continuous(&m, &LpOptions::default()).unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-9);
        assert!((out.dual(c) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn le_rows_have_nonpositive_duals() {
        // min -x s.t. x <= 3
        let mut m = Model::new();
        let x = m.add_variable(0.0, f64::INFINITY, -1.0, false);
        let c = m.add_constraint(&[(x, 1.0)], Sense::Le, 3.0);
        let out = solver().solve_continuous(&m, &LpOptions::default()).unwrap();
        assert!((out.objective + 3.0).abs() < 1e-9);
        assert!((out.dual(c) + 1.0).abs() < 1e-9);
    }

    #[test]
    fn binary_knapsack_matches_enumeration() {
        let mut m = Model::new();
        let x = m.add_variable(0.0, 1.0, -1.0, true);
        let y = m.add_variable(0.0, 1.0, -1.0, true);
        m.add_constraint(&[(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
        let out = solver().solve_integer(&m, &MipOptions::default()).unwrap();
        let best = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
            .iter()
            .filter(|(a, b)| a + b <= 1.0)
            .map(|(a, b)| -a - b)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(out.status, Status::Optimal);
        assert!((out.objective - best).abs() < 1e-9);
        assert!(out.duals.is_none());
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut m = Model::new();
        let x = m.add_variable(0.0, 1.0, 1.0, false);
        m.add_constraint(&[(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(solver().solve_continuous(&m, &LpOptions::default()).unwrap().status, Status::Infeasible);
        let mut m = Model::new();
        let x = m.add_variable(0.0, f64::INFINITY, -1.0, false);
        m.add_constraint(&[(x, 1.0)], Sense::Ge, 0.0);
        assert_eq!(solver().solve_continuous(&m, &LpOptions::default()).unwrap().status, Status::Unbounded);
    }

    /// Two parallel routes from s to t; flow of 3 must be shipped, overflow
    /// beyond capacity 1 per route is paid at cost 10.
    fn routing_master() -> (Model, ConId, ConId, ConId) {
        let mut m = Model::new();
        let demand = m.add_constraint(&[], Sense::Eq, 3.0);
        let cap_a = m.add_constraint(&[], Sense::Le, 1.0);
        let cap_b = m.add_constraint(&[], Sense::Le, 1.0);
        let oa = m.add_variable(0.0, f64::INFINITY, 10.0, false);
        let ob = m.add_variable(0.0, f64::INFINITY, 10.0, false);
        m.set_coefficient(cap_a, oa, -1.0);
        m.set_coefficient(cap_b, ob, -1.0);
        m.add_column(1.0, &[(demand, 1.0), (cap_a, 1.0)], 0.0, f64::INFINITY);
        (m, demand, cap_a, cap_b)
    }

    #[test]
    fn adding_a_column_never_worsens() {
        let (mut m, demand, _, cap_b) = routing_master();
        let s = solver();
        let before = s.solve_continuous(&m, &LpOptions::default()).unwrap();
        m.add_column(2.0, &[(demand, 1.0), (cap_b, 1.0)], 0.0, f64::INFINITY);
        let after = s.solve_continuous(&m, &LpOptions { warm_start: before.basis.as_ref(), ..Default::default() }).unwrap();
        assert!(after.objective <= before.objective + 1e-9);
        assert!((before.objective - 23.0).abs() < 1e-9);
        assert!((after.objective - 14.0).abs() < 1e-9);
    }

    #[test]
    fn removing_nonbasic_column_keeps_optimum() {
        let (mut m, demand, cap_a, cap_b) = routing_master();
        let useless = m.add_column(100.0, &[(demand, 1.0), (cap_a, 1.0)], 0.0, f64::INFINITY);
        m.add_column(2.0, &[(demand, 1.0), (cap_b, 1.0)], 0.0, f64::INFINITY);
        let s = solver();
        let out = s.solve_continuous(&m, &LpOptions::default()).unwrap();
        assert!(!out.is_basic(useless));
        m.remove_variables(&[useless]);
        assert!(!m.is_live(useless));
        let again = s.solve_continuous(&m, &LpOptions { warm_start: out.basis.as_ref(), ..Default::default() }).unwrap();
        assert!((again.objective - out.objective).abs() < 1e-9);
        assert_eq!(again.primal[useless.0], 0.0);
    }

    #[test]
    fn mip_start_and_time_limit() {
        let mut m = Model::new();
        let xs: Vec<VarId> = (0..6).map(|i| m.add_variable(0.0, 1.0, -(i as f64 + 1.0), true)).collect();
        let row: Vec<(VarId, f64)> = xs.iter().map(|&x| (x, 2.0)).collect();
        m.add_constraint(&row, Sense::Le, 5.0);
        let start = vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let out = solver()
            .solve_integer(
                &m,
                &MipOptions { time_limit: Some(10.0), feasibility_emphasis: true, threads: 1, start: Some(&start), relative_gap: None },
            )
            .unwrap();
        assert_eq!(out.status, Status::Optimal);
        assert!((out.objective + 11.0).abs() < 1e-9);
        assert!(m.max_violation(&out.primal) < 1e-6);
    }

    #[test]
    fn lp_text_dump() {
        let (m, ..) = routing_master();
        let text = m.to_lp_string();
        assert!(text.starts_with("Minimize"));
        assert!(text.contains("r0: + 1 x2 = 3"));
        assert!(text.contains("r1: - 1 x0 + 1 x2 <= 1"));
        assert!(text.trim_end().ends_with("End"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            /// Random bounded LPs: cost equals the dual objective built from
            /// row duals and bound multipliers.
            #[test]
            fn strong_duality(
                n in 1usize..5,
                m_rows in 1usize..5,
                coeffs in proptest::collection::vec(-5i32..6, 25),
                costs in proptest::collection::vec(-5i32..6, 5),
                rhs in proptest::collection::vec(0i32..10, 5),
                senses in proptest::collection::vec(0u8..3, 5),
            ) {
                let mut m = Model::new();
                let xs: Vec<VarId> = (0..n).map(|j| m.add_variable(0.0, 4.0, costs[j] as f64, false)).collect();
                let mut cons = Vec::new();
                for i in 0..m_rows {
                    let row: Vec<(VarId, f64)> = (0..n).map(|j| (xs[j], coeffs[i * 5 + j] as f64)).collect();
                    let sense = [Sense::Le, Sense::Ge, Sense::Eq][senses[i] as usize];
                    cons.push(m.add_constraint(&row, sense, rhs[i] as f64 - 3.0));
                }
                let out = HighsBackend::new().solve_continuous(&m, &LpOptions::default()).unwrap();
                prop_assume!(out.status == Status::Optimal);
                prop_assert!(m.max_violation(&out.primal) < 1e-6);
                let y = out.duals.as_ref().unwrap();
                let r = out.reduced_costs.as_ref().unwrap();
                let mut dual_obj: f64 = cons.iter().map(|c| y[c.0] * m.rhs(*c)).sum();
                for &x in &xs {
                    let (lo, up) = m.bounds(x);
                    dual_obj += if r[x.0] > 0.0 { r[x.0] * lo } else { r[x.0] * up };
                }
                prop_assert!((dual_obj - out.objective).abs() < 1e-6, "{} vs {}", dual_obj, out.objective);
                for c in &cons {
                    match m.sense(*c) {
                        Sense::Le => prop_assert!(y[c.0] <= 1e-9),
                        Sense::Ge => prop_assert!(y[c.0] >= -1e-9),
                        Sense::Eq => {}
                    }
                }
            }
        }
    }
}
