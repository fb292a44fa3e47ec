//! Python bindings: divergences, one-shot bandit improvement, grid-world
//! models and the experiment sweeps.

use std::path::PathBuf;

use fdpi_core::bandit::{improve, linear_closed_form, softmax_closed_form, BanditError, BanditInstance};
use fdpi_core::distribution::DiscreteDistribution;
use fdpi_core::divergence::{AlphaDivergence, Divergence, DomainKind};
use fdpi_core::env::{build_env, EnvConfig};
use fdpi_core::harness::{
    aggregate_and_export, run_bandit_experiment, run_mdp_experiment, run_policy_demo, ExperimentConfig, ExperimentOutput,
    HarnessError,
};
use fdpi_core::mdp::{expected_return_exact, optimal_average_reward, TabularMdp, TabularPolicy};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn bandit_error(e: BanditError) -> PyErr {
    match e {
        BanditError::LengthMismatch { .. }
        | BanditError::InvalidTemperature(_)
        | BanditError::NonFiniteValue { .. }
        | BanditError::Distribution(_) => value_error(e),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn harness_error(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Io { .. } => PyOSError::new_err(e.to_string()),
        HarnessError::Model(_) => PyRuntimeError::new_err(e.to_string()),
        _ => value_error(e),
    }
}

/// The α-divergence generator `f_α` and its convex conjugate.
#[pyclass(name = "AlphaDivergence", frozen)]
struct PyAlphaDivergence {
    inner: AlphaDivergence,
}

#[pymethods]
impl PyAlphaDivergence {
    #[new]
    fn new(alpha: f64) -> PyResult<Self> {
        Ok(Self {
            inner: AlphaDivergence::new(alpha).map_err(value_error)?,
        })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn f(&self, x: f64) -> PyResult<f64> {
        self.inner.f(x).map_err(value_error)
    }

    fn f_prime(&self, x: f64) -> PyResult<f64> {
        self.inner.f_prime(x).map_err(value_error)
    }

    fn conjugate(&self, y: f64) -> PyResult<f64> {
        self.inner.conjugate(y).map_err(value_error)
    }

    fn conjugate_prime(&self, y: f64) -> PyResult<f64> {
        self.inner.conjugate_prime(y).map_err(value_error)
    }

    fn fenchel_residual(&self, y: f64) -> PyResult<f64> {
        self.inner.fenchel_residual(y).map_err(value_error)
    }

    /// `("all_reals", None)`, `("upper_bounded", b)` or `("lower_bounded", b)`.
    fn conjugate_domain(&self) -> (&'static str, Option<f64>) {
        let dom = self.inner.conjugate_domain();
        match dom.kind {
            DomainKind::AllReals => ("all_reals", None),
            DomainKind::UpperBounded => ("upper_bounded", Some(dom.bound)),
            DomainKind::LowerBounded => ("lower_bounded", Some(dom.bound)),
        }
    }

    fn __repr__(&self) -> String {
        format!("AlphaDivergence({})", self.inner.alpha())
    }
}

/// Improved policy and baseline λ* for one bandit problem.
#[pyfunction]
fn improve_bandit(alpha: f64, eta: f64, q: Vec<f64>, values: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
    let divergence = AlphaDivergence::new(alpha).map_err(value_error)?;
    let q = DiscreteDistribution::new(q).map_err(value_error)?;
    let inst = BanditInstance::new(q, values, eta, divergence).map_err(bandit_error)?;
    let (pi, sol) = improve(&inst).map_err(bandit_error)?;
    Ok((pi.weights().to_vec(), sol.lambda))
}

/// KL update `q·exp(Q/η)` normalized, with its log-sum-exp baseline.
#[pyfunction]
fn softmax_policy(q: Vec<f64>, values: Vec<f64>, eta: f64) -> PyResult<(Vec<f64>, f64)> {
    let q = DiscreteDistribution::new(q).map_err(value_error)?;
    let (pi, lambda) = softmax_closed_form(&q, &values, eta).map_err(bandit_error)?;
    Ok((pi.weights().to_vec(), lambda))
}

/// Pearson update `q·(1 + A/η)`, valid above the minimum temperature.
#[pyfunction]
fn linear_policy(q: Vec<f64>, values: Vec<f64>, eta: f64) -> PyResult<(Vec<f64>, f64)> {
    let q = DiscreteDistribution::new(q).map_err(value_error)?;
    let (pi, lambda) = linear_closed_form(&q, &values, eta).map_err(bandit_error)?;
    Ok((pi.weights().to_vec(), lambda))
}

/// A shipped grid world with its exact model.
#[pyclass(name = "GridWorld", frozen)]
struct PyGridWorld {
    name: String,
    model: TabularMdp,
}

#[pymethods]
impl PyGridWorld {
    /// `chain`, `cliffwalking` or `frozenlake` with default settings.
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        let config = EnvConfig::preset(name).ok_or_else(|| PyValueError::new_err(format!("unknown environment `{name}`")))?;
        Ok(Self {
            name: name.to_string(),
            model: build_env(&config).map_err(value_error)?,
        })
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.model.n_states()
    }

    #[getter]
    fn n_actions(&self) -> usize {
        self.model.n_actions()
    }

    /// Gain of the best deterministic policy.
    fn optimal_return(&self) -> PyResult<f64> {
        optimal_average_reward(&self.model, 1e-12, 10_000_000)
            .map(|s| s.gain)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Exact average reward of a policy given as one probability row per state.
    fn expected_return(&self, policy: Vec<Vec<f64>>) -> PyResult<f64> {
        let rows = policy
            .into_iter()
            .map(DiscreteDistribution::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_error)?;
        let pi = TabularPolicy::new(rows).map_err(value_error)?;
        expected_return_exact(&self.model, &pi).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("GridWorld('{}', states={}, actions={})", self.name, self.model.n_states(), self.model.n_actions())
    }
}

/// Run `bandit-regret`, `policy-demo` or `mdp-train` from a preset plus
/// `key=value` overrides, write the CSV/SVG outputs and return a summary:
/// `{"files": [...], "curves": {label: final mean}, "failures": n}`.
#[pyfunction]
#[pyo3(signature = (kind, preset=None, overrides=Vec::new(), output_dir=None))]
fn run_experiment<'py>(
    py: Python<'py>,
    kind: &str,
    preset: Option<&str>,
    overrides: Vec<String>,
    output_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let default = if kind == "mdp-train" { "chain" } else { "bandit-fig2" };
    let mut config = ExperimentConfig::preset(preset.unwrap_or(default))
        .and_then(|c| c.with_overrides(&overrides))
        .map_err(value_error)?;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    let (output, curves, failures): (ExperimentOutput, Vec<(String, f64)>, usize) = match kind {
        "bandit-regret" => {
            let exp = run_bandit_experiment(&config).map_err(harness_error)?;
            let curves = exp
                .curves
                .iter()
                .chain(std::iter::once(&exp.ucb))
                .map(|c| (c.label(), c.mean.last().copied().unwrap_or(f64::NAN)))
                .collect();
            let failures = exp.failures.len();
            (ExperimentOutput::Bandit(exp), curves, failures)
        }
        "mdp-train" => {
            let exp = run_mdp_experiment(&config).map_err(harness_error)?;
            let curves = exp
                .curves
                .iter()
                .map(|c| (c.alpha.to_string(), c.mean.last().copied().unwrap_or(f64::NAN)))
                .collect();
            let failures = exp.failures.len();
            (ExperimentOutput::Mdp(exp), curves, failures)
        }
        "policy-demo" => {
            let demo = run_policy_demo(&config).map_err(harness_error)?;
            let best = fdpi_core::distribution::argmax(&demo.values);
            let curves = demo
                .policies
                .iter()
                .map(|(alpha, seq)| (alpha.to_string(), seq.last().map_or(f64::NAN, |p| p.get(best))))
                .collect();
            let failures = demo.failures.len();
            (ExperimentOutput::Demo(demo), curves, failures)
        }
        other => return Err(PyValueError::new_err(format!("unknown experiment `{other}`"))),
    };
    let files = aggregate_and_export(&output, &config, &config.output_dir).map_err(harness_error)?;
    let summary = PyDict::new(py);
    summary.set_item("files", files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())?;
    let by_label = PyDict::new(py);
    for (label, value) in curves {
        by_label.set_item(label, value)?;
    }
    summary.set_item("curves", by_label)?;
    summary.set_item("failures", failures)?;
    Ok(summary)
}

/// Run the oracle self-checks; returns `(failed, report)`.
#[pyfunction]
fn self_check() -> PyResult<(usize, String)> {
    let mut out = Vec::new();
    let failed = fdpi_core::cli::self_check(&mut out).map_err(|e| PyOSError::new_err(e.to_string()))?;
    Ok((failed, String::from_utf8_lossy(&out).into_owned()))
}

#[pymodule]
fn fdpi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlphaDivergence>()?;
    m.add_class::<PyGridWorld>()?;
    m.add_function(wrap_pyfunction!(improve_bandit, m)?)?;
    m.add_function(wrap_pyfunction!(softmax_policy, m)?)?;
    m.add_function(wrap_pyfunction!(linear_policy, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(self_check, m)?)?;
    Ok(())
}
