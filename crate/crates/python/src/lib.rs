//! Python bindings: load problems, validate, simulate, enumerate and
//! optimise plans, emit answer-set programs and cross-check solver models.
//!
//! Structured results (plans, reports) cross the boundary as plain Python
//! dicts/lists decoded from the engine's JSON serialisation.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use nplan_core::aspgen;
use nplan_core::model;
use nplan_core::planner::{self, SearchConfig};
use nplan_core::semantics::{
    self, ComplianceMode, PendingPolicy, Schedule, ScheduleEntry,
};

fn value_err(msg: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(msg.to_string())
}

fn json_to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value)
        .map_err(|e| PyRuntimeError::new_err(format!("serialisation failed: {e}")))?;
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (text,))?.unbind())
}

fn parse_mode(mode: &str) -> PyResult<ComplianceMode> {
    mode.parse().map_err(value_err)
}

fn parse_pending(pending: &str) -> PyResult<PendingPolicy> {
    pending.parse().map_err(value_err)
}

fn build_schedule(entries: Vec<(String, u64)>) -> PyResult<Schedule> {
    Schedule::new(
        entries
            .into_iter()
            .map(|(action, start)| ScheduleEntry::new(action, start))
            .collect(),
    )
    .map_err(value_err)
}

fn build_config(
    horizon: u64,
    mode: &str,
    pending: &str,
    max_plans: Option<usize>,
    time_budget: Option<f64>,
) -> PyResult<SearchConfig> {
    let mut cfg = SearchConfig::new(horizon).map_err(value_err)?;
    cfg = cfg
        .with_mode(parse_mode(mode)?)
        .with_pending_policy(parse_pending(pending)?);
    if let Some(cap) = max_plans {
        cfg = cfg.with_max_plans(cap);
    }
    if let Some(secs) = time_budget {
        cfg = cfg.with_time_budget(std::time::Duration::from_secs_f64(secs));
    }
    Ok(cfg)
}

/// A validated normative planning problem.
#[pyclass(name = "Problem", frozen)]
struct PyProblem {
    inner: model::Problem,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<PyProblem> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| value_err(format!("cannot read {path}: {e}")))?;
        PyProblem::from_text(&text)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<PyProblem> {
        let (inner, _warnings) = model::parse_problem(text).map_err(value_err)?;
        Ok(PyProblem { inner })
    }

    fn fluents(&self) -> Vec<String> {
        self.inner.fluents().iter().cloned().collect()
    }

    fn initial(&self) -> Vec<String> {
        self.inner.initial().iter().cloned().collect()
    }

    fn actions(&self) -> Vec<(String, u64)> {
        self.inner
            .actions()
            .iter()
            .map(|a| (a.name.clone(), a.duration))
            .collect()
    }

    fn goals(&self) -> Vec<(String, u64)> {
        self.inner
            .goals()
            .iter()
            .map(|g| (g.name.clone(), g.value))
            .collect()
    }

    fn norms(&self) -> Vec<(String, String, String, String, u64, u64)> {
        self.inner
            .norms()
            .iter()
            .map(|n| {
                (
                    n.name.clone(),
                    n.kind.to_string(),
                    n.condition.clone(),
                    n.subject.clone(),
                    n.deadline,
                    n.cost,
                )
            })
            .collect()
    }

    /// Unordered pairs of actions that may not overlap.
    fn conflicting_actions(&self) -> Vec<(String, String)> {
        semantics::conflicting_actions(self.inner.actions())
            .pairs()
            .map(|(a, b)| (a.to_owned(), b.to_owned()))
            .collect()
    }

    fn makespan(&self, schedule: Vec<(String, u64)>) -> PyResult<u64> {
        let schedule = build_schedule(schedule)?;
        semantics::makespan(&schedule, &self.inner).map_err(value_err)
    }

    /// State sequence induced by a schedule, as a list of fluent lists.
    fn simulate(&self, schedule: Vec<(String, u64)>, horizon: u64) -> PyResult<Vec<Vec<String>>> {
        let schedule = build_schedule(schedule)?;
        let trace = semantics::simulate(&self.inner, &schedule, horizon).map_err(value_err)?;
        Ok(trace
            .states()
            .iter()
            .map(|s| s.iter().cloned().collect())
            .collect())
    }

    /// Validate a schedule as a plan and return its full report.
    #[pyo3(signature = (schedule, horizon, mode="start", pending="ignore"))]
    fn plan_report(
        &self,
        py: Python<'_>,
        schedule: Vec<(String, u64)>,
        horizon: u64,
        mode: &str,
        pending: &str,
    ) -> PyResult<Py<PyAny>> {
        let schedule = build_schedule(schedule)?;
        let cfg = build_config(horizon, mode, pending, None, None)?;
        let report = planner::plan_report(&self.inner, &schedule, &cfg).map_err(value_err)?;
        json_to_py(py, &report)
    }

    /// Enumerate valid plans (optionally capped) as a list of dicts.
    #[pyo3(signature = (horizon, mode="start", pending="ignore", max_plans=None, time_budget=None))]
    fn plans(
        &self,
        py: Python<'_>,
        horizon: u64,
        mode: &str,
        pending: &str,
        max_plans: Option<usize>,
        time_budget: Option<f64>,
    ) -> PyResult<Py<PyAny>> {
        let cfg = build_config(horizon, mode, pending, max_plans, time_budget)?;
        let plans: Vec<planner::PlanReport> =
            planner::enumerate_plans(&self.inner, &cfg).collect();
        json_to_py(py, &plans)
    }

    /// Branch-and-bound optimum: dict with max_utility, certified, plans.
    #[pyo3(signature = (horizon, mode="start", pending="ignore", time_budget=None))]
    fn optimal(
        &self,
        py: Python<'_>,
        horizon: u64,
        mode: &str,
        pending: &str,
        time_budget: Option<f64>,
    ) -> PyResult<Py<PyAny>> {
        let cfg = build_config(horizon, mode, pending, None, time_budget)?;
        let result = planner::optimal_plans(&self.inner, &cfg);
        json_to_py(py, &result)
    }

    /// Emit the answer-set program text for this problem.
    #[pyo3(signature = (horizon, optimize=true, label="problem"))]
    fn emit_asp(&self, horizon: u64, optimize: bool, label: &str) -> PyResult<String> {
        let mut program =
            aspgen::emit_base_program(&self.inner, horizon, label).map_err(value_err)?;
        if optimize {
            program = program.with_optimization(aspgen::emit_optimization(&self.inner));
        }
        Ok(program.text())
    }

    /// Cross-check one solver model line against the native engine.
    #[pyo3(signature = (line, horizon, mode="start", pending="ignore"))]
    fn check_answer_set(
        &self,
        py: Python<'_>,
        line: &str,
        horizon: u64,
        mode: &str,
        pending: &str,
    ) -> PyResult<Py<PyAny>> {
        let answer = aspgen::parse_answer_set(&self.inner, line).map_err(value_err)?;
        let report = aspgen::cross_check(
            &self.inner,
            horizon,
            &answer,
            parse_mode(mode)?,
            parse_pending(pending)?,
        );
        json_to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(fluents={}, actions={}, goals={}, norms={})",
            self.inner.fluents().len(),
            self.inner.actions().len(),
            self.inner.goals().len(),
            self.inner.norms().len()
        )
    }
}

/// Load and validate a problem file.
#[pyfunction]
fn load_problem(path: &str) -> PyResult<PyProblem> {
    PyProblem::from_file(path)
}

/// Parse and validate problem text.
#[pyfunction]
fn parse_problem(text: &str) -> PyResult<PyProblem> {
    PyProblem::from_text(text)
}

/// Validate problem text; returns (severity, field, message) findings
/// without rejecting invalid documents.
#[pyfunction]
fn validate(text: &str) -> PyResult<Vec<(String, String, String)>> {
    let doc = model::parse_document(text).map_err(value_err)?;
    let report = model::validate_document(&doc);
    Ok(report
        .findings
        .iter()
        .map(|f| {
            (
                match f.severity {
                    model::Severity::Error => "error".to_string(),
                    model::Severity::Warning => "warning".to_string(),
                },
                f.field.clone(),
                f.message.clone(),
            )
        })
        .collect())
}

#[pymodule]
fn nplan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(load_problem, m)?)?;
    m.add_function(wrap_pyfunction!(parse_problem, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
