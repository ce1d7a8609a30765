use std::ffi::{c_void, CString};
use std::ptr;

use highs_sys::*;

use super::{Basis, BasisStatus, LpError, LpOptions, LpSolver, MipOptions, Model, Sense, SolveOutcome, Status};

/// Heuristic effort used when feasibility is emphasised; HiGHS defaults to 0.05.
const EMPHASIS_HEURISTIC_EFFORT: f64 = 0.3;

/// The bundled HiGHS engine. Each solve builds a fresh solver instance.
#[derive(Clone, Copy, Debug, Default)]
pub struct HighsBackend;

impl HighsBackend {
    pub fn new() -> Self {
        HighsBackend
    }
}

struct Handle(*mut c_void);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.0) }
    }
}

impl Handle {
    fn new() -> Self {
        let h = Handle(unsafe { Highs_create() });
        h.set_bool("output_flag", false);
        h
    }

    fn check(status: HighsInt, what: &str) -> Result<(), LpError> {
        if status == STATUS_ERROR {
            Err(LpError::Backend(format!("{what} failed")))
        } else {
            Ok(())
        }
    }

    fn set_bool(&self, name: &str, v: bool) {
        let n = CString::new(name).unwrap();
        unsafe { Highs_setBoolOptionValue(self.0, n.as_ptr(), v as HighsInt) };
    }

    fn set_int(&self, name: &str, v: i32) {
        let n = CString::new(name).unwrap();
        unsafe { Highs_setIntOptionValue(self.0, n.as_ptr(), v as HighsInt) };
    }

    fn set_double(&self, name: &str, v: f64) {
        let n = CString::new(name).unwrap();
        unsafe { Highs_setDoubleOptionValue(self.0, n.as_ptr(), v) };
    }

    fn set_string(&self, name: &str, v: &str) {
        let (n, s) = (CString::new(name).unwrap(), CString::new(v).unwrap());
        unsafe { Highs_setStringOptionValue(self.0, n.as_ptr(), s.as_ptr()) };
    }

    fn int_info(&self, name: &str) -> i32 {
        let n = CString::new(name).unwrap();
        let mut v: HighsInt = 0;
        unsafe { Highs_getIntInfoValue(self.0, n.as_ptr(), &mut v) };
        v
    }

    fn double_info(&self, name: &str) -> f64 {
        let n = CString::new(name).unwrap();
        let mut v = 0.0;
        unsafe { Highs_getDoubleInfoValue(self.0, n.as_ptr(), &mut v) };
        v
    }
}

/// The model's live columns in compressed sparse column form.
struct Packed {
    slots: Vec<usize>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    row_lower: Vec<f64>,
    row_upper: Vec<f64>,
    start: Vec<HighsInt>,
    index: Vec<HighsInt>,
    value: Vec<f64>,
    integrality: Vec<HighsInt>,
}

fn pack(model: &Model) -> Packed {
    let mut p = Packed {
        slots: Vec::with_capacity(model.variable_count()),
        cost: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        row_lower: Vec::new(),
        row_upper: Vec::new(),
        start: Vec::new(),
        index: Vec::new(),
        value: Vec::new(),
        integrality: Vec::new(),
    };
    for v in model.variables() {
        let c = model.columns[v.0].as_ref().unwrap();
        p.slots.push(v.0);
        p.cost.push(c.cost);
        p.lower.push(c.lower);
        p.upper.push(c.upper);
        p.integrality.push(if c.integer { VAR_TYPE_INTEGER } else { VAR_TYPE_CONTINUOUS });
        p.start.push(p.index.len() as HighsInt);
        let mut entries = c.entries.clone();
        entries.sort_by_key(|e| e.0);
        for (r, a) in entries {
            p.index.push(r.0 as HighsInt);
            p.value.push(a);
        }
    }
    for row in &model.rows {
        let (lo, up) = match row.sense {
            Sense::Le => (f64::NEG_INFINITY, row.rhs),
            Sense::Ge => (row.rhs, f64::INFINITY),
            Sense::Eq => (row.rhs, row.rhs),
        };
        p.row_lower.push(lo);
        p.row_upper.push(up);
    }
    p
}

fn load(h: &Handle, model: &Model, p: &Packed, integer: bool) -> Result<(), LpError> {
    let (nc, nr, nz) = (p.slots.len() as HighsInt, model.rows.len() as HighsInt, p.index.len() as HighsInt);
    let status = unsafe {
        if integer {
            Highs_passMip(
                h.0,
                nc,
                nr,
                nz,
                MATRIX_FORMAT_COLUMN_WISE,
                OBJECTIVE_SENSE_MINIMIZE,
                model.offset,
                p.cost.as_ptr(),
                p.lower.as_ptr(),
                p.upper.as_ptr(),
                p.row_lower.as_ptr(),
                p.row_upper.as_ptr(),
                p.start.as_ptr(),
                p.index.as_ptr(),
                p.value.as_ptr(),
                p.integrality.as_ptr(),
            )
        } else {
            Highs_passLp(
                h.0,
                nc,
                nr,
                nz,
                MATRIX_FORMAT_COLUMN_WISE,
                OBJECTIVE_SENSE_MINIMIZE,
                model.offset,
                p.cost.as_ptr(),
                p.lower.as_ptr(),
                p.upper.as_ptr(),
                p.row_lower.as_ptr(),
                p.row_upper.as_ptr(),
                p.start.as_ptr(),
                p.index.as_ptr(),
                p.value.as_ptr(),
            )
        }
    };
    Handle::check(status, "loading the model")
}

fn to_highs(s: BasisStatus) -> HighsInt {
    match s {
        BasisStatus::Lower => kHighsBasisStatusLower,
        BasisStatus::Basic => kHighsBasisStatusBasic,
        BasisStatus::Upper => kHighsBasisStatusUpper,
        BasisStatus::Zero => kHighsBasisStatusZero,
    }
}

fn from_highs(s: HighsInt) -> BasisStatus {
    match s {
        x if x == kHighsBasisStatusBasic => BasisStatus::Basic,
        x if x == kHighsBasisStatusUpper => BasisStatus::Upper,
        x if x == kHighsBasisStatusZero => BasisStatus::Zero,
        _ => BasisStatus::Lower,
    }
}

fn nonbasic_default(lower: f64, upper: f64) -> BasisStatus {
    if lower.is_finite() {
        BasisStatus::Lower
    } else if upper.is_finite() {
        BasisStatus::Upper
    } else {
        BasisStatus::Zero
    }
}

/// Installs a previous basis. New columns start nonbasic and new rows basic,
/// which keeps the basis size consistent; HiGHS rejects it otherwise and the
/// solve starts cold.
fn warm_start(h: &Handle, model: &Model, p: &Packed, basis: &Basis) {
    let cols: Vec<HighsInt> = p
        .slots
        .iter()
        .enumerate()
        .map(|(j, &s)| to_highs(basis.columns.get(s).copied().unwrap_or(nonbasic_default(p.lower[j], p.upper[j]))))
        .collect();
    let rows: Vec<HighsInt> =
        (0..model.rows.len()).map(|i| to_highs(basis.rows.get(i).copied().unwrap_or(BasisStatus::Basic))).collect();
    let basic = cols.iter().chain(&rows).filter(|&&s| s == kHighsBasisStatusBasic).count();
    if basic == rows.len() {
        unsafe { Highs_setBasis(h.0, cols.as_ptr(), rows.as_ptr()) };
    }
}

fn scatter(p: &Packed, slots: usize, packed: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; slots];
    for (j, &s) in p.slots.iter().enumerate() {
        out[s] = packed[j];
    }
    out
}

struct RawSolution {
    col_value: Vec<f64>,
    col_dual: Vec<f64>,
    row_dual: Vec<f64>,
}

fn solution(h: &Handle, p: &Packed, rows: usize) -> RawSolution {
    let mut s = RawSolution {
        col_value: vec![0.0; p.slots.len()],
        col_dual: vec![0.0; p.slots.len()],
        row_dual: vec![0.0; rows],
    };
    let mut row_value = vec![0.0; rows];
    unsafe {
        Highs_getSolution(
            h.0,
            s.col_value.as_mut_ptr(),
            s.col_dual.as_mut_ptr(),
            row_value.as_mut_ptr(),
            s.row_dual.as_mut_ptr(),
        )
    };
    s
}

fn model_status(h: &Handle) -> HighsInt {
    unsafe { Highs_getModelStatus(h.0) }
}

impl LpSolver for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve_continuous(&self, model: &Model, options: &LpOptions<'_>) -> Result<SolveOutcome, LpError> {
        let slots = model.variable_slots();
        let p = pack(model);
        let h = Handle::new();
        h.set_string("solver", "simplex");
        if let Some(t) = options.time_limit {
            h.set_double("time_limit", t.max(0.0));
        }
        load(&h, model, &p, false)?;
        if let Some(b) = options.warm_start {
            warm_start(&h, model, &p, b);
        }
        Handle::check(unsafe { Highs_run(h.0) }, "simplex")?;
        let mut status = model_status(&h);
        if status == MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE {
            // Presolve cannot tell which; the simplex without it can.
            h.set_string("presolve", "off");
            unsafe { Highs_clearSolver(h.0) };
            Handle::check(unsafe { Highs_run(h.0) }, "simplex")?;
            status = model_status(&h);
        }
        let status = match status {
            MODEL_STATUS_OPTIMAL | MODEL_STATUS_MODEL_EMPTY => Status::Optimal,
            MODEL_STATUS_INFEASIBLE => Status::Infeasible,
            MODEL_STATUS_UNBOUNDED | MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => Status::Unbounded,
            MODEL_STATUS_REACHED_TIME_LIMIT | MODEL_STATUS_REACHED_ITERATION_LIMIT => Status::NoSolution,
            other => return Err(LpError::Backend(format!("simplex ended with model status {other}"))),
        };
        if status != Status::Optimal {
            return Ok(SolveOutcome::empty(status, slots));
        }
        let raw = solution(&h, &p, model.rows.len());
        let mut cols = vec![0 as HighsInt; p.slots.len()];
        let mut rows = vec![0 as HighsInt; model.rows.len()];
        let basis = if unsafe { Highs_getBasis(h.0, cols.as_mut_ptr(), rows.as_mut_ptr()) } != STATUS_ERROR {
            let mut columns = vec![BasisStatus::Lower; slots];
            for (j, &s) in p.slots.iter().enumerate() {
                columns[s] = from_highs(cols[j]);
            }
            Some(Basis { columns, rows: rows.into_iter().map(from_highs).collect() })
        } else {
            None
        };
        Ok(SolveOutcome {
            status,
            objective: unsafe { Highs_getObjectiveValue(h.0) },
            primal: scatter(&p, slots, &raw.col_value),
            duals: Some(raw.row_dual),
            reduced_costs: Some(scatter(&p, slots, &raw.col_dual)),
            basis,
            bound: None,
        })
    }

    fn solve_integer(&self, model: &Model, options: &MipOptions<'_>) -> Result<SolveOutcome, LpError> {
        let slots = model.variable_slots();
        let p = pack(model);
        let h = Handle::new();
        h.set_int("threads", options.threads.max(1) as i32);
        if let Some(t) = options.time_limit {
            h.set_double("time_limit", t.max(0.0));
        }
        if let Some(g) = options.relative_gap {
            h.set_double("mip_rel_gap", g.max(0.0));
        }
        if options.feasibility_emphasis {
            h.set_double("mip_heuristic_effort", EMPHASIS_HEURISTIC_EFFORT);
        }
        load(&h, model, &p, true)?;
        if let Some(start) = options.start {
            let packed: Vec<f64> = p.slots.iter().map(|&s| start[s]).collect();
            unsafe { Highs_setSolution(h.0, packed.as_ptr(), ptr::null(), ptr::null(), ptr::null()) };
        }
        Handle::check(unsafe { Highs_run(h.0) }, "branch and bound")?;
        let has_solution = h.int_info("primal_solution_status") == SOLUTION_STATUS_FEASIBLE;
        let status = match model_status(&h) {
            MODEL_STATUS_OPTIMAL | MODEL_STATUS_MODEL_EMPTY => Status::Optimal,
            MODEL_STATUS_INFEASIBLE => Status::Infeasible,
            MODEL_STATUS_UNBOUNDED => Status::Unbounded,
            MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE if !has_solution => Status::Infeasible,
            _ if has_solution => Status::Feasible,
            _ => Status::NoSolution,
        };
        if !status.has_solution() {
            return Ok(SolveOutcome::empty(status, slots));
        }
        let raw = solution(&h, &p, model.rows.len());
        let bound = if model.has_integers() { Some(h.double_info("mip_dual_bound")) } else { None };
        Ok(SolveOutcome {
            status,
            objective: unsafe { Highs_getObjectiveValue(h.0) },
            primal: scatter(&p, slots, &raw.col_value),
            duals: None,
            reduced_costs: None,
            basis: None,
            bound,
        })
    }
}
