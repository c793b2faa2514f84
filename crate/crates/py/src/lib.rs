//! Python bindings: `import ncspred`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ncspred_core::cclsynth::{ccl_synthesize, CclSettings};
use ncspred_core::demo;
use ncspred_core::densela::Matrix;
use ncspred_core::files::{GainFile, ModelFile};
use ncspred_core::ncsmodel::{self, verify_stability, ContinuousMode, GainSchedule, SwitchedPlant};
use ncspred_core::plot::render_svg;
use ncspred_core::sdp::SdpSettings;
use ncspred_core::sim::{self, DropModel, SimConfig, SwitchSignal};

type Rows = Vec<Vec<f64>>;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: &Rows) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(value_err)
}

fn schedule(gains: &[Rows]) -> PyResult<GainSchedule> {
    let mats = gains.iter().map(matrix).collect::<PyResult<Vec<_>>>()?;
    GainSchedule::new(mats).map_err(value_err)
}

/// Switched discrete-time plant with `n_drop` predicted inputs.
#[pyclass(module = "ncspred", frozen)]
struct Plant {
    inner: SwitchedPlant,
}

#[pymethods]
impl Plant {
    /// Parses a model file (continuous or discrete modes).
    #[staticmethod]
    #[pyo3(signature = (text, h=None, n_drop=None))]
    fn from_json(text: &str, h: Option<f64>, n_drop: Option<usize>) -> PyResult<Self> {
        let model_file = ModelFile::from_json(text).map_err(value_err)?;
        let inner = model_file.plant(h, n_drop).map_err(value_err)?;
        Ok(Self { inner })
    }

    /// The three-inertia DC-motor example.
    #[staticmethod]
    #[pyo3(signature = (h=0.1))]
    fn demo(h: f64) -> PyResult<Self> {
        Ok(Self {
            inner: demo::plant(h).map_err(value_err)?,
        })
    }

    #[getter]
    fn states(&self) -> usize {
        self.inner.states()
    }

    #[getter]
    fn inputs(&self) -> usize {
        self.inner.inputs()
    }

    #[getter]
    fn n_drop(&self) -> usize {
        self.inner.n_drop()
    }

    #[getter]
    fn sample_period(&self) -> f64 {
        self.inner.sample_period()
    }

    /// `[(F, G), ...]` per mode.
    fn modes(&self) -> Vec<(Rows, Rows)> {
        self.inner
            .modes()
            .iter()
            .map(|m| (m.f.to_rows(), m.g.to_rows()))
            .collect()
    }

    fn to_json(&self) -> String {
        ModelFile::from_plant(&self.inner).to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "Plant(modes={}, states={}, inputs={}, n_drop={}, h={})",
            self.inner.modes().len(),
            self.inner.states(),
            self.inner.inputs(),
            self.inner.n_drop(),
            self.inner.sample_period()
        )
    }
}

/// Zero-order-hold discretization of `(A, B)` at period `h`; returns `(F, G)`.
#[pyfunction]
fn discretize(a: Rows, b: Rows, h: f64) -> PyResult<(Rows, Rows)> {
    let mode = ContinuousMode::new(matrix(&a)?, matrix(&b)?, "").map_err(value_err)?;
    let d = ncsmodel::discretize(&mode, h).map_err(value_err)?;
    Ok((d.f.to_rows(), d.g.to_rows()))
}

/// Published gains of the DC-motor example for `h` in {0.1, 0.2}.
#[pyfunction]
fn published_gains(h: f64) -> Option<Vec<Rows>> {
    demo::published_gains(h).map(|g| g.gains().iter().map(Matrix::to_rows).collect())
}

/// Common-Lyapunov check of a gain schedule.
#[pyfunction]
#[pyo3(signature = (plant, gains, epsilon=ncsmodel::DEFAULT_EPSILON))]
fn verify<'py>(py: Python<'py>, plant: &Plant, gains: Vec<Rows>, epsilon: f64) -> PyResult<Bound<'py, PyDict>> {
    let gains = schedule(&gains)?;
    let v = verify_stability(&plant.inner, &gains, epsilon, &SdpSettings::default()).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("certified", v.is_certified())?;
    out.set_item("worst_margin", v.worst_margin())?;
    out.set_item("phase1_margin", v.phase1_margin())?;
    let schur: Vec<(usize, usize, bool)> = v
        .per_pair_schur()
        .iter()
        .map(|&((l, eta), ok)| (l + 1, eta, ok))
        .collect();
    out.set_item("schur", schur)?;
    out.set_item("p", v.certificate().map(|c| c.p.to_rows()))?;
    Ok(out)
}

/// Cone-complementarity synthesis. Returns the gain file contents as a dict.
#[pyfunction]
#[pyo3(signature = (plant, max_iterations=30, trace_tol=1e-4, epsilon=ncsmodel::DEFAULT_EPSILON))]
fn synthesize<'py>(
    py: Python<'py>,
    plant: &Plant,
    max_iterations: usize,
    trace_tol: f64,
    epsilon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let settings = CclSettings {
        max_iterations,
        trace_tol,
        epsilon,
        ..CclSettings::default()
    };
    let result = ccl_synthesize(&plant.inner, &settings).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let out = PyDict::new(py);
    out.set_item("status", format!("{:?}", result.status))?;
    out.set_item("gains", result.gains.gains().iter().map(Matrix::to_rows).collect::<Vec<_>>())?;
    out.set_item("iterations", result.history.last().map_or(0, |r| r.iteration))?;
    out.set_item("objective", result.history.iter().map(|r| r.objective).collect::<Vec<_>>())?;
    out.set_item("worst_margin", result.final_worst_margin())?;
    out.set_item("json", GainFile::from_result(&result, &settings, None).to_json())?;
    Ok(out)
}

/// Closed-loop simulation with Bernoulli losses and switching at effective
/// instants. Returns the trace as a dict; `csv` holds the trace file text.
#[pyfunction]
#[pyo3(signature = (plant, gains, x0, steps=200, p_loss=0.3, seed=0, enforce_bound=true))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    plant: &Plant,
    gains: Vec<Rows>,
    x0: Vec<f64>,
    steps: usize,
    p_loss: f64,
    seed: u64,
    enforce_bound: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mut drop = DropModel::bernoulli(p_loss, p_loss, seed);
    drop.enforce_bound = enforce_bound;
    let trace = sim::simulate(&SimConfig {
        plant: plant.inner.clone(),
        gains: schedule(&gains)?,
        x0,
        horizon: steps,
        drop,
        switching: SwitchSignal::random_at_effective(seed),
        settle_threshold: None,
    })
    .map_err(value_err)?;
    let mut csv = Vec::new();
    sim::write_trace_csv(&trace, &mut csv).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let out = PyDict::new(py);
    out.set_item("x", trace.records.iter().map(|r| r.x.clone()).collect::<Vec<_>>())?;
    out.set_item("u", trace.records.iter().map(|r| r.u.clone()).collect::<Vec<_>>())?;
    out.set_item("mode", trace.records.iter().map(|r| r.mode).collect::<Vec<_>>())?;
    out.set_item("effective", trace.records.iter().map(|r| r.effective).collect::<Vec<_>>())?;
    out.set_item("settled_at", trace.summary.settled_at)?;
    out.set_item("effective_steps", trace.summary.effective_steps)?;
    out.set_item("csv", String::from_utf8(csv).map_err(|e| PyRuntimeError::new_err(e.to_string()))?)?;
    Ok(out)
}

/// SVG chart of a trace CSV; `columns` are 1-based state indices.
#[pyfunction]
#[pyo3(signature = (csv, columns=Vec::new()))]
fn plot(csv: &str, columns: Vec<usize>) -> PyResult<String> {
    let trace = sim::read_trace_csv(csv.as_bytes()).map_err(value_err)?;
    render_svg(&trace, &columns).map_err(value_err)
}

#[pymodule]
fn ncspred(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Plant>()?;
    m.add_function(wrap_pyfunction!(discretize, m)?)?;
    m.add_function(wrap_pyfunction!(published_gains, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(plot, m)?)?;
    Ok(())
}
