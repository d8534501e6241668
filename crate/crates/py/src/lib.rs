//! Python bindings for `infokernel`.
//!
//! Input validation errors raise `ValueError`; solver failures
//! (infeasible targets, non-convergence) raise `NumericalError`.
//! Information is always in nats.

use std::sync::Arc;

use ::infokernel as ik;
use ik::asymptotics::{Partition, Representatives, Source};
use ik::kernels::{ChannelConfig, ChannelTarget, FiniteMap, JointUtility};
use ik::{Branch, FunctionalKind, InfoFunctional, Mode, ProbMeasure, Utility};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

create_exception!(infokernel, NumericalError, PyRuntimeError);

fn err(e: ik::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        NumericalError::new_err(e.to_string())
    }
}

fn value_err(msg: impl Into<String>) -> PyErr {
    PyValueError::new_err(msg.into())
}

/// JSON to Python; the strings "inf", "-inf" and "nan" become floats.
fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py_any(py)?,
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_py_any(py)?,
        },
        Value::String(s) => match s.as_str() {
            "inf" => f64::INFINITY.into_py_any(py)?,
            "-inf" => f64::NEG_INFINITY.into_py_any(py)?,
            "nan" => f64::NAN.into_py_any(py)?,
            _ => s.into_py_any(py)?,
        },
        Value::Array(a) => {
            let items = a
                .iter()
                .map(|x| to_py(py, x))
                .collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any().unbind()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any().unbind()
        }
    })
}

fn ser_to_py<T: serde::Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "simplex" => Ok(Mode::Simplex),
        "cone" => Ok(Mode::Cone),
        _ => Err(value_err(format!(
            "unknown mode {mode:?}; use 'simplex' or 'cone'"
        ))),
    }
}

fn parse_branch(branch: &str) -> PyResult<Branch> {
    match branch {
        "upper" => Ok(Branch::Upper),
        "lower" => Ok(Branch::Lower),
        _ => Err(value_err(format!(
            "unknown branch {branch:?}; use 'upper' or 'lower'"
        ))),
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Simplex => "simplex",
        Mode::Cone => "cone",
    }
}

/// Information functional with its reference measure.
#[pyclass(name = "InfoFunctional", module = "infokernel", frozen)]
struct PyFunctional {
    inner: InfoFunctional,
}

#[pymethods]
impl PyFunctional {
    /// Extended KL divergence from `reference`.
    #[staticmethod]
    #[pyo3(signature = (reference, mode = "simplex"))]
    fn extended_kl(reference: Vec<f64>, mode: &str) -> PyResult<Self> {
        let r = ik::Measure::from_weights(reference).map_err(err)?;
        let inner = InfoFunctional::extended_kl(r, parse_mode(mode)?).map_err(err)?;
        Ok(PyFunctional { inner })
    }

    /// Negative Shannon entropy on `n` points.
    #[staticmethod]
    #[pyo3(signature = (n, mode = "simplex"))]
    fn neg_entropy(n: usize, mode: &str) -> PyResult<Self> {
        let space = Arc::new(ik::FiniteSpace::with_size(n).map_err(err)?);
        Ok(PyFunctional {
            inner: InfoFunctional::neg_entropy(space, parse_mode(mode)?),
        })
    }

    /// L1 distance to `reference`.
    #[staticmethod]
    fn total_variation(reference: Vec<f64>) -> PyResult<Self> {
        let r = ik::Measure::from_weights(reference).map_err(err)?;
        let inner = InfoFunctional::total_variation(r, Mode::Simplex).map_err(err)?;
        Ok(PyFunctional { inner })
    }

    fn eval(&self, y: Vec<f64>) -> PyResult<f64> {
        let m = ik::Measure::new(self.inner.space().clone(), y).map_err(err)?;
        self.inner.eval(&m).map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            FunctionalKind::ExtendedKl => "extended_kl",
            FunctionalKind::NegEntropy => "neg_entropy",
            FunctionalKind::TotalVariation => "total_variation",
        }
    }

    #[getter]
    fn mode(&self) -> &'static str {
        mode_name(self.inner.mode())
    }

    #[getter]
    fn reference(&self) -> Vec<f64> {
        self.inner.reference().weights().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "InfoFunctional(kind={:?}, mode={:?})",
            self.kind(),
            self.mode()
        )
    }
}

/// Optimal measure of a single problem.
#[pyclass(name = "Solution", module = "infokernel", frozen)]
struct PySolution {
    inner: ik::OptimalSolution,
    unique: Option<bool>,
    on_boundary: Option<bool>,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn beta_inverse(&self) -> f64 {
        self.inner.beta_inverse()
    }

    /// Expected utility `<x, y>`.
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    /// `F(y)` in nats.
    #[getter]
    fn info(&self) -> f64 {
        self.inner.info
    }

    #[getter]
    fn saturated(&self) -> bool {
        self.inner.saturated()
    }

    #[getter]
    fn status(&self) -> String {
        serde_json::to_value(self.inner.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.measure.weights().to_vec()
    }

    /// Only set for total variation.
    #[getter]
    fn unique(&self) -> Option<bool> {
        self.unique
    }

    #[getter]
    fn on_boundary(&self) -> Option<bool> {
        self.on_boundary
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        ser_to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(value={}, info={}, beta={}, status={:?})",
            self.inner.value,
            self.inner.info,
            self.inner.beta,
            self.status()
        )
    }
}

/// Utility vector together with an information functional.
#[pyclass(name = "Problem", module = "infokernel", frozen)]
struct PyProblem {
    x: Utility,
    f: InfoFunctional,
}

#[pymethods]
impl PyProblem {
    /// `excluded` lists indices where the utility is `-inf`.
    #[new]
    #[pyo3(signature = (utility, functional, excluded = None))]
    fn new(
        utility: Vec<f64>,
        functional: &PyFunctional,
        excluded: Option<Vec<usize>>,
    ) -> PyResult<Self> {
        let f = functional.inner.clone();
        let n = utility.len();
        let mut mask = vec![false; n];
        for i in excluded.unwrap_or_default() {
            *mask
                .get_mut(i)
                .ok_or_else(|| value_err(format!("excluded index {i} out of range")))? = true;
        }
        let x = Utility::with_excluded(f.space().clone(), utility, mask).map_err(err)?;
        Ok(PyProblem { x, f })
    }

    /// Solve at exactly one of `lambda_`, `upsilon` or `beta`.
    #[pyo3(signature = (lambda_ = None, upsilon = None, beta = None, branch = "upper"))]
    fn solve(
        &self,
        lambda_: Option<f64>,
        upsilon: Option<f64>,
        beta: Option<f64>,
        branch: &str,
    ) -> PyResult<PySolution> {
        let branch = parse_branch(branch)?;
        let tv = self.f.kind() == FunctionalKind::TotalVariation;
        let plain = |inner| PySolution {
            inner,
            unique: None,
            on_boundary: None,
        };
        match (lambda_, upsilon, beta) {
            (Some(l), None, None) if tv => {
                let q = ProbMeasure::new(self.f.reference().clone()).map_err(err)?;
                let x = match branch {
                    Branch::Upper => self.x.clone(),
                    Branch::Lower => self.x.negated(),
                };
                let mut t = ik::solve_tv(&x, &q, l).map_err(err)?;
                if branch == Branch::Lower {
                    t.solution.value = -t.solution.value;
                    t.solution.beta = -t.solution.beta;
                }
                Ok(PySolution {
                    inner: t.solution,
                    unique: Some(t.unique),
                    on_boundary: Some(t.on_boundary),
                })
            }
            (Some(l), None, None) => Ok(plain(
                match branch {
                    Branch::Upper => ik::solve_for_lambda(&self.x, &self.f, l),
                    Branch::Lower => ik::lower_branch(&self.x, &self.f, l),
                }
                .map_err(err)?,
            )),
            (None, Some(u), None) if branch == Branch::Upper => Ok(plain(
                ik::solve_for_upsilon(&self.x, &self.f, u).map_err(err)?,
            )),
            (None, None, Some(b)) => Ok(plain(
                ik::solver::solution_at_beta(&self.x, &self.f, b).map_err(err)?,
            )),
            (None, Some(_), None) => {
                Err(value_err("upsilon targets support the upper branch only"))
            }
            _ => Err(value_err("give exactly one of lambda_, upsilon, beta")),
        }
    }

    fn special_values(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let sv = ik::special_values(&self.x, &self.f).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("lambda0", sv.lambda0)?;
        d.set_item("lambda_bar_upper", sv.lambda_bar_upper)?;
        d.set_item("lambda_bar_lower", sv.lambda_bar_lower)?;
        d.set_item("upsilon_bar", sv.upsilon_bar)?;
        d.set_item("upsilon_underbar", sv.upsilon_underbar)?;
        d.set_item("upsilon0_upper", sv.upsilon0_upper)?;
        d.set_item("upsilon0_lower", sv.upsilon0_lower)?;
        Ok(d.into_any().unbind())
    }

    /// Value curve as a list of `(lambda, upsilon, beta_inverse, saturated)`.
    #[pyo3(signature = (lambda_grid, branch = "upper"))]
    fn value_curve(
        &self,
        lambda_grid: Vec<f64>,
        branch: &str,
    ) -> PyResult<Vec<(f64, f64, f64, bool)>> {
        let c =
            ik::value_curve(&self.x, &self.f, &lambda_grid, parse_branch(branch)?).map_err(err)?;
        Ok(c.samples
            .iter()
            .map(|s| (s.lambda, s.upsilon, s.beta_inverse, s.saturated))
            .collect())
    }

    /// Minimal information per required value, same tuple layout as `value_curve`.
    fn upsilon_curve(&self, upsilon_grid: Vec<f64>) -> PyResult<Vec<(f64, f64, f64, bool)>> {
        let c = ik::solver::upsilon_curve(&self.x, &self.f, &upsilon_grid).map_err(err)?;
        Ok(c.samples
            .iter()
            .map(|s| (s.lambda, s.upsilon, s.beta_inverse, s.saturated))
            .collect())
    }

    /// Supports of the optimal measures along a `beta` grid (a `lambda`
    /// grid for total variation).
    #[pyo3(signature = (grid, eps = 1e-12))]
    fn support_profile(&self, py: Python<'_>, grid: Vec<f64>, eps: f64) -> PyResult<Py<PyAny>> {
        let p = ik::separation::support_profile(&self.x, &self.f, &grid, eps).map_err(err)?;
        ser_to_py(py, &p)
    }
}

/// Channel problem: utility rows per input `b`, input law over `b`.
#[pyclass(name = "Channel", module = "infokernel", frozen)]
struct PyChannel {
    x: JointUtility,
    input: ProbMeasure,
}

#[pyclass(name = "ChannelSolution", module = "infokernel", frozen)]
struct PyChannelSolution {
    inner: ik::kernels::ChannelSolution,
}

#[pymethods]
impl PyChannelSolution {
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn expected_utility(&self) -> f64 {
        self.inner.expected_utility
    }

    #[getter]
    fn mutual_info(&self) -> f64 {
        self.inner.mutual_info
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn saturated(&self) -> bool {
        self.inner.saturated
    }

    /// `kernel[b][a] = P(a | b)`.
    #[getter]
    fn kernel(&self) -> Vec<Vec<f64>> {
        self.inner.kernel.rows().to_vec()
    }

    #[getter]
    fn output_marginal(&self) -> Vec<f64> {
        self.inner.output_marginal.clone()
    }

    #[getter]
    fn unconstrained_rows(&self) -> Vec<usize> {
        self.inner.unconstrained_rows.clone()
    }

    #[getter]
    fn free_energy_trace(&self) -> Option<Vec<f64>> {
        self.inner.free_energy_trace.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "ChannelSolution(beta={}, expected_utility={}, mutual_info={}, converged={})",
            self.inner.beta,
            self.inner.expected_utility,
            self.inner.mutual_info,
            self.inner.converged
        )
    }
}

#[pymethods]
impl PyChannel {
    /// `None` entries of `utility_matrix` mark excluded outputs.
    #[new]
    fn new(utility_matrix: Vec<Vec<Option<f64>>>, input: Vec<f64>) -> PyResult<Self> {
        let x = JointUtility::from_rows(&utility_matrix).map_err(err)?;
        let input = ProbMeasure::from_weights(input).map_err(err)?;
        if input.len() != x.len_b() {
            return Err(value_err(format!(
                "{} input weights for {} utility rows",
                input.len(),
                x.len_b()
            )));
        }
        Ok(PyChannel { x, input })
    }

    /// Optimal channel at exactly one of `beta`, `lambda_`, `upsilon`.
    #[pyo3(signature = (beta = None, lambda_ = None, upsilon = None, tol = 1e-10, max_iter = 10_000, trace = false))]
    fn optimize(
        &self,
        beta: Option<f64>,
        lambda_: Option<f64>,
        upsilon: Option<f64>,
        tol: f64,
        max_iter: usize,
        trace: bool,
    ) -> PyResult<PyChannelSolution> {
        let target = match (beta, lambda_, upsilon) {
            (Some(b), None, None) => ChannelTarget::Beta(b),
            (None, Some(l), None) => ChannelTarget::Lambda(l),
            (None, None, Some(u)) => ChannelTarget::Upsilon(u),
            _ => return Err(value_err("give exactly one of beta, lambda_, upsilon")),
        };
        let cfg = ChannelConfig {
            tol,
            max_iter,
            trace,
            ..ChannelConfig::default()
        };
        let inner =
            ik::kernels::channel_optimize_with(&self.x, &self.input, target, &cfg).map_err(err)?;
        Ok(PyChannelSolution { inner })
    }

    /// One fixed-point run; check `converged` on the result.
    #[pyo3(signature = (beta, tol = 1e-10, max_iter = 10_000, trace = false))]
    fn blahut_arimoto(
        &self,
        beta: f64,
        tol: f64,
        max_iter: usize,
        trace: bool,
    ) -> PyResult<PyChannelSolution> {
        let cfg = ChannelConfig {
            tol,
            max_iter,
            trace,
            ..ChannelConfig::default()
        };
        let inner = ik::kernels::blahut_arimoto(&self.x, &self.input, beta, &cfg).map_err(err)?;
        Ok(PyChannelSolution { inner })
    }

    /// Information of the argmax channel.
    fn lambda_bar(&self) -> PyResult<f64> {
        ik::kernels::channel_lambda_bar(&self.x, &self.input).map_err(err)
    }

    /// Expected utility and information of the deterministic kernel `b -> map[b]`.
    fn deterministic(&self, map: Vec<usize>) -> PyResult<(f64, f64)> {
        let f = FiniteMap::new(map, self.x.len_a()).map_err(err)?;
        if f.len_b() != self.x.len_b() {
            return Err(value_err(format!("map needs {} entries", self.x.len_b())));
        }
        let k = ik::kernels::deterministic_kernel(&f);
        let e = self.x.expected(&self.input, &k).map_err(err)?;
        let j = ik::kernels::joint_from_kernel(&self.input, &k).map_err(err)?;
        Ok((e, ik::kernels::mutual_information(&j)))
    }

    /// Best deterministic kernel within `lambda_` against the optimal channel.
    fn separation(&self, py: Python<'_>, lambda_: f64) -> PyResult<Py<PyAny>> {
        let r =
            ik::separation::separation_experiment(&self.x, &self.input, lambda_).map_err(err)?;
        ser_to_py(py, &r)
    }
}

/// `I(a; b)` of a joint matrix `joint[a][b]`.
#[pyfunction]
fn mutual_information(joint: Vec<Vec<f64>>) -> PyResult<f64> {
    let j = ik::kernels::JointMeasure::from_matrix(joint).map_err(err)?;
    Ok(ik::kernels::mutual_information(&j))
}

/// Gibbs measure `q e^{beta x}` normalized.
#[pyfunction]
fn gibbs(x: Vec<f64>, q: Vec<f64>, beta: f64) -> PyResult<Vec<f64>> {
    let x = Utility::from_values(x).map_err(err)?;
    let q = ProbMeasure::new(ik::Measure::new(x.space().clone(), q).map_err(err)?).map_err(err)?;
    Ok(ik::functionals::gibbs(&x, &q, beta)
        .map_err(err)?
        .weights()
        .to_vec())
}

/// CONVERGENT, DIVERGENT or INCONCLUSIVE for a sequence of truncated values.
#[pyfunction]
fn series_verdict(values: Vec<f64>) -> String {
    ik::solver::series_verdict(&values).to_string()
}

/// Randomized comparison of deterministic kernels against optimal channels.
#[pyfunction]
fn separation_sweep(py: Python<'_>, trials: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let r = py
        .detach(|| ik::separation::separation_sweep(trials, seed))
        .map_err(err)?;
    ser_to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (beta, extent, points = 20_000, b = 0.0))]
fn gaussian_conditional_utility(beta: f64, extent: f64, points: usize, b: f64) -> PyResult<f64> {
    ik::asymptotics::gaussian_conditional_utility(beta, extent, points, b).map_err(err)
}

#[pyfunction]
fn beta_from_info_gaussian(h_b: f64, lambda_: f64) -> PyResult<f64> {
    ik::asymptotics::beta_from_info_gaussian(h_b, lambda_).map_err(err)
}

#[pyfunction]
fn cauchy_entropy() -> f64 {
    ik::asymptotics::cauchy_entropy()
}

/// Truncated quantization loss. `representatives` is a list with one
/// value per cell, or `None` for the conditional means.
#[pyfunction]
#[pyo3(signature = (cuts, representatives, truncations, source = "cauchy", sigma = 1.0))]
fn cauchy_truncated_loss(
    py: Python<'_>,
    cuts: Vec<f64>,
    representatives: Option<Vec<f64>>,
    truncations: Vec<f64>,
    source: &str,
    sigma: f64,
) -> PyResult<Py<PyAny>> {
    let source = match source {
        "cauchy" => Source::Cauchy,
        "gaussian" => Source::Gaussian { sigma },
        _ => return Err(value_err(format!("unknown source {source:?}"))),
    };
    let partition = Partition {
        cuts,
        representatives: match representatives {
            Some(r) => Representatives::Fixed(r),
            None => Representatives::ConditionalMean,
        },
    };
    let s = py
        .detach(|| ik::asymptotics::cauchy_truncated_loss(&partition, source, &truncations))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("truncations", &s.truncations)?;
    d.set_item("values", &s.values)?;
    d.set_item("verdict", s.verdict.to_string())?;
    d.set_item("magnitude_ratio", s.magnitude_ratio())?;
    Ok(d.into_any().unbind())
}

/// `(partial sum, closed form)`.
#[pyfunction]
fn series_example(beta: f64, n: u64) -> PyResult<(f64, f64)> {
    let e = ik::asymptotics::series_example(beta, n).map_err(err)?;
    Ok((e.partial, e.closed_form))
}

#[pyfunction]
fn zeta(s: f64) -> PyResult<f64> {
    if !(s > 1.0) {
        return Err(value_err("zeta needs s > 1"));
    }
    Ok(ik::asymptotics::zeta(s))
}

/// Zeta-source loss of a deterministic map: `"identity"`, `"constant"`
/// (`b -> value`) or `"cap"` (`b -> min(b, value)`).
#[pyfunction]
#[pyo3(signature = (m, truncations, map = "constant", value = 1))]
fn zeta_tail_loss(
    py: Python<'_>,
    m: u32,
    truncations: Vec<u64>,
    map: &str,
    value: u64,
) -> PyResult<Py<PyAny>> {
    let z = match map {
        "identity" => ik::asymptotics::zeta_tail_loss(m, &truncations, |b| b),
        "constant" => ik::asymptotics::zeta_tail_loss(m, &truncations, |_| value),
        "cap" => ik::asymptotics::zeta_tail_loss(m, &truncations, |b| b.min(value)),
        _ => return Err(value_err(format!("unknown map {map:?}"))),
    }
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("truncations", &z.sweep.truncations)?;
    d.set_item("values", &z.sweep.values)?;
    d.set_item("verdict", z.sweep.verdict.to_string())?;
    d.set_item("image_info", &z.image_info)?;
    Ok(d.into_any().unbind())
}

#[pymodule]
fn infokernel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyFunctional>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyChannelSolution>()?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs, m)?)?;
    m.add_function(wrap_pyfunction!(series_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(separation_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_conditional_utility, m)?)?;
    m.add_function(wrap_pyfunction!(beta_from_info_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(cauchy_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(cauchy_truncated_loss, m)?)?;
    m.add_function(wrap_pyfunction!(series_example, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(zeta_tail_loss, m)?)?;
    Ok(())
}
