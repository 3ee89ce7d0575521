//! Python bindings: instances, model building, both solution methods and reports.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use tgsep_core::benders::{BendersMode, BendersOptions, CutKind, TraceRecord};
use tgsep_core::formulation::{build_milp, check_solution, BuildOptions, CompactMilp, RpsReading};
use tgsep_core::rephours::reduce;
use tgsep_core::report::{dispatch_csv, dispatch_stack, PlanReport, SolutionDocument};
use tgsep_core::solve::{solve as run_solve, Method, PlanStatus};
use tgsep_core::system::{self as model, SystemData};
use tgsep_core::{corpus, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Consistency(_) | Error::Infeasible(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A planning instance.
#[pyclass(name = "System", module = "tgsep")]
struct PySystem {
    inner: SystemData,
}

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        model::load_system(path).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Generated test instance.
    #[staticmethod]
    fn generate(seed: u64) -> Self {
        Self { inner: corpus::generate(seed) }
    }

    fn save(&self, path: &str) -> PyResult<()> {
        model::save_system(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn stage_count(&self) -> u32 {
        self.inner.economics.stage_count
    }

    #[getter]
    fn bus_count(&self) -> usize {
        self.inner.buses.len()
    }

    fn digest(&self) -> String {
        model::instance_digest(&self.inner)
    }

    /// Problems found in the instance, empty when valid.
    fn validate(&self) -> Vec<String> {
        model::validate(&self.inner).iter().map(|v| v.to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "System({:?}, buses={}, stages={})",
            self.inner.name,
            self.inner.buses.len(),
            self.inner.economics.stage_count
        )
    }
}

/// The compact mixed-integer model of one instance under fixed case toggles.
#[pyclass(name = "Model", module = "tgsep")]
struct PyModel {
    inner: CompactMilp,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (system, with_bes=true, with_lcp=true, gamma=None, phi=None, max_angle=None, rps_reading="ramp"))]
    fn new(
        system: &PySystem,
        with_bes: bool,
        with_lcp: bool,
        gamma: Option<f64>,
        phi: Option<f64>,
        max_angle: Option<f64>,
        rps_reading: &str,
    ) -> PyResult<Self> {
        let rps_reading = match rps_reading {
            "ramp" => RpsReading::Ramp,
            "constant" => RpsReading::Constant,
            other => return Err(PyValueError::new_err(format!("rps_reading must be ramp or constant, not {other}"))),
        };
        let d = BuildOptions::default();
        let opts = BuildOptions {
            with_bes,
            with_lcp,
            shed_gamma: gamma,
            shed_phi: phi,
            max_angle: max_angle.unwrap_or(d.max_angle),
            rps_reading,
        };
        build_milp(&system.inner, &opts).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    #[getter]
    fn num_rows(&self) -> usize {
        self.inner.num_rows()
    }

    #[getter]
    fn num_binaries(&self) -> usize {
        self.inner.binaries().len()
    }

    #[getter]
    fn objective_offset(&self) -> f64 {
        self.inner.objective_offset
    }

    fn variable_names(&self) -> Vec<String> {
        self.inner.vars.iter().map(|v| v.name()).collect()
    }

    #[pyo3(signature = (name="tgsep"))]
    fn to_mps(&self, name: &str) -> String {
        self.inner.to_mps(name)
    }
}

/// A solved (or attempted) plan.
#[pyclass(name = "Solution", module = "tgsep")]
struct PySolution {
    doc: SolutionDocument,
    trace: Vec<TraceRecord>,
    iterations: usize,
    diagnosis: Option<String>,
}

#[pymethods]
impl PySolution {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc = SolutionDocument::from_json(text).map_err(json_err)?;
        Ok(Self { doc, trace: Vec::new(), iterations: 0, diagnosis: None })
    }

    fn to_json(&self) -> PyResult<String> {
        self.doc.to_json().map_err(json_err)
    }

    /// "optimal", "infeasible" or "not_converged".
    #[getter]
    fn status(&self) -> String {
        status_name(self.doc.status).into()
    }

    #[getter]
    fn method(&self) -> String {
        match self.doc.method {
            Method::Benders => "benders",
            Method::Monolithic => "monolithic",
        }
        .into()
    }

    #[getter]
    fn lower_bound(&self) -> Option<f64> {
        self.doc.lower_bound
    }

    #[getter]
    fn upper_bound(&self) -> Option<f64> {
        self.doc.upper_bound
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.iterations
    }

    #[getter]
    fn diagnosis(&self) -> Option<String> {
        self.diagnosis.clone()
    }

    /// Value of a variable by name, e.g. `LS_1_2_3`.
    fn value(&self, name: &str) -> Option<f64> {
        self.doc.values.get(name).copied()
    }

    /// Rows of (iteration, lower bound, upper bound, gap, cut kind).
    fn trace(&self) -> Vec<(usize, f64, f64, f64, String)> {
        self.trace
            .iter()
            .map(|t| {
                (
                    t.iteration,
                    t.lower_bound,
                    t.upper_bound,
                    t.gap,
                    match t.cut {
                        CutKind::Optimality => "optimality".into(),
                        CutKind::Feasibility => "feasibility".into(),
                    },
                )
            })
            .collect()
    }
}

fn status_name(s: PlanStatus) -> &'static str {
    match s {
        PlanStatus::Optimal => "optimal",
        PlanStatus::Infeasible => "infeasible",
        PlanStatus::NotConverged => "not_converged",
    }
}

/// Costs, builds and derived series of a plan.
#[pyclass(name = "Report", module = "tgsep")]
struct PyReport {
    inner: PlanReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn tc_p(&self) -> f64 {
        self.inner.costs.tc_p
    }

    /// (TC_Inv, TC_O, TC_M, TC_E).
    #[getter]
    fn components(&self) -> (f64, f64, f64, f64) {
        let c = &self.inner.costs;
        (c.tc_inv, c.tc_o, c.tc_m, c.tc_e)
    }

    #[getter]
    fn lcoe(&self) -> Vec<f64> {
        self.inner.trajectory.lcoe.clone()
    }

    #[getter]
    fn emission_factor(&self) -> Vec<f64> {
        self.inner.trajectory.emission_factor.clone()
    }

    /// Per stage (thermal, wind, pv, storage discharge).
    #[getter]
    fn shares(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner.stages.iter().map(|s| (s.shares.thermal, s.shares.wind, s.shares.pv, s.shares.discharge)).collect()
    }

    #[getter]
    fn served_mwh(&self) -> Vec<f64> {
        self.inner.stages.iter().map(|s| s.costs.served_mwh).collect()
    }

    #[getter]
    fn shed_mwh(&self) -> Vec<f64> {
        self.inner.stages.iter().map(|s| s.costs.shed_mwh).collect()
    }

    #[getter]
    fn emission_tons(&self) -> Vec<f64> {
        self.inner.stages.iter().map(|s| s.costs.emission_tons).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(json_err)
    }

    fn shares_csv(&self) -> String {
        self.inner.shares_csv()
    }

    fn trajectory_csv(&self) -> String {
        self.inner.trajectory_csv()
    }

    fn table(&self) -> String {
        self.inner.render_table()
    }
}

/// Solves by Benders decomposition or by branch and bound on the whole model.
#[pyfunction]
#[pyo3(signature = (system, model, method="benders", mode="pareto", tau=1e-6, iter_limit=200))]
fn solve(
    system: &PySystem,
    model: &PyModel,
    method: &str,
    mode: &str,
    tau: f64,
    iter_limit: usize,
) -> PyResult<PySolution> {
    let method = match method {
        "benders" => Method::Benders,
        "monolithic" => Method::Monolithic,
        other => return Err(PyValueError::new_err(format!("method must be benders or monolithic, not {other}"))),
    };
    let mode = match mode {
        "plain" => BendersMode::Plain,
        "pareto" => BendersMode::Pareto,
        other => return Err(PyValueError::new_err(format!("mode must be plain or pareto, not {other}"))),
    };
    let opts = BendersOptions { mode, tau, iteration_limit: iter_limit, ..BendersOptions::default() };
    let out = run_solve(&system.inner, &model.inner, method, &opts).map_err(to_py)?;
    Ok(PySolution {
        doc: SolutionDocument::new(&system.inner, &model.inner, &out),
        iterations: out.iterations,
        diagnosis: out.diagnosis.clone(),
        trace: out.trace,
    })
}

#[pyfunction]
fn report(system: &PySystem, model: &PyModel, solution: &PySolution) -> PyResult<PyReport> {
    PlanReport::new(&system.inner, &model.inner, &solution.doc).map(|inner| PyReport { inner }).map_err(to_py)
}

/// Violated constraints of a stored solution, empty when it is feasible.
#[pyfunction]
#[pyo3(signature = (system, model, solution, tol=1e-6))]
fn check(system: &PySystem, model: &PyModel, solution: &PySolution, tol: f64) -> PyResult<Vec<String>> {
    solution.doc.check_instance(&system.inner).map_err(to_py)?;
    let x = solution.doc.values_for(&model.inner).map_err(to_py)?;
    Ok(check_solution(&system.inner, &model.inner, &x, tol).iter().map(|v| v.to_string()).collect())
}

/// Per-hour supply stack of one stage as CSV.
#[pyfunction]
fn dispatch(system: &PySystem, model: &PyModel, solution: &PySolution, stage: u32) -> PyResult<String> {
    dispatch_stack(&system.inner, &model.inner, &solution.doc, stage).map(|r| dispatch_csv(&r)).map_err(to_py)
}

/// Representative hours of an hourly (load, wind, pv) series as (load, wind, pv, weight, span) rows.
#[pyfunction]
#[pyo3(signature = (series, k, dedupe=0.0))]
fn cluster(series: Vec<(f64, f64, f64)>, k: usize, dedupe: f64) -> PyResult<Vec<(f64, f64, f64, f64, usize)>> {
    let s: Vec<[f64; 3]> = series.iter().map(|&(a, b, c)| [a, b, c]).collect();
    let rep = reduce(&s, k, dedupe).map_err(to_py)?;
    Ok(rep.hours.iter().map(|h| (h.load_factor, h.wind_factor, h.pv_factor, h.weight, h.span_hours)).collect())
}

#[pyfunction]
fn annuity_factor(rate: f64, years: u32) -> PyResult<f64> {
    model::annuity_factor(rate, years).map_err(to_py)
}

#[pymodule]
fn tgsep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(dispatch, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    m.add_function(wrap_pyfunction!(annuity_factor, m)?)?;
    Ok(())
}
