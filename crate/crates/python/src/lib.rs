//! Python bindings. Reports cross the boundary as plain dicts and lists;
//! series travel as the `Series` class or as their JSON text.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyComplex;

use solenoid_core::classification::{self as cls, ClassifyOptions, ExperimentConfig};
use solenoid_core::flows::{self, ConjugacyOptions, GeneratedFlow, DEFAULT_STEP, DEFAULT_TOL};
use solenoid_core::series::{self as ser, BohrSeries, Part};
use solenoid_core::solenoid::{SolenoidPoint, SolenoidSpec};
use solenoid_core::LabError;

fn err(e: LabError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Turns any serializable value into the matching Python object.
fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_part(part: &str) -> PyResult<Part> {
    match part {
        "real" => Ok(Part::Real),
        "imaginary" => Ok(Part::Imaginary),
        "full" => Ok(Part::Full),
        other => Err(PyValueError::new_err(format!("unknown part {other:?}"))),
    }
}

fn spec_from(factors: Vec<u64>) -> PyResult<Arc<SolenoidSpec>> {
    SolenoidSpec::new(factors).map(Arc::new).map_err(err)
}

/// A Fourier–Bohr series on Σ_N.
#[pyclass(name = "Series", module = "solenoid_lab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySeries {
    inner: BohrSeries,
}

impl From<BohrSeries> for PySeries {
    fn from(inner: BohrSeries) -> Self {
        PySeries { inner }
    }
}

#[pymethods]
impl PySeries {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        BohrSeries::from_json_str(text).map(Into::into).map_err(err)
    }

    #[staticmethod]
    fn constant(factors: Vec<u64>, value: f64) -> PyResult<Self> {
        Ok(BohrSeries::real_constant(spec_from(factors)?, value).into())
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn factors(&self) -> Vec<u64> {
        self.inner.spec().factors().to_vec()
    }

    #[getter]
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }

    #[getter]
    fn is_finite(&self) -> bool {
        self.inner.is_finite()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn mean_value<'py>(&self, py: Python<'py>) -> Bound<'py, PyComplex> {
        let c = self.inner.mean_value();
        PyComplex::from_doubles(py, c.re, c.im)
    }

    fn l1_norm(&self) -> f64 {
        self.inner.l1_norm()
    }

    /// (value, truncation bound) at time t.
    #[pyo3(signature = (t, tol = 1e-12))]
    fn evaluate<'py>(&self, py: Python<'py>, t: f64, tol: f64) -> PyResult<(Bound<'py, PyComplex>, f64)> {
        let e = self.inner.evaluate_at_time(t, tol).map_err(err)?;
        Ok((PyComplex::from_doubles(py, e.value.re, e.value.im), e.error_bound))
    }

    /// (value, truncation bound) at the point with the given angles.
    #[pyo3(signature = (angles, tol = 1e-12))]
    fn evaluate_at_point<'py>(
        &self,
        py: Python<'py>,
        angles: Vec<f64>,
        tol: f64,
    ) -> PyResult<(Bound<'py, PyComplex>, f64)> {
        let x = SolenoidPoint::new(angles).map_err(err)?;
        let e = self.inner.evaluate_at_point(&x, tol).map_err(err)?;
        Ok((PyComplex::from_doubles(py, e.value.re, e.value.im), e.error_bound))
    }

    fn __add__(&self, other: &PySeries) -> PyResult<Self> {
        self.inner.add(&other.inner).map(Into::into).map_err(err)
    }

    fn __sub__(&self, other: &PySeries) -> PyResult<Self> {
        self.inner.sub(&other.inner).map(Into::into).map_err(err)
    }

    fn __mul__(&self, other: &PySeries) -> PyResult<Self> {
        self.inner.mul(&other.inner).map(Into::into).map_err(err)
    }

    fn derivative(&self) -> Self {
        self.inner.derivative().into()
    }

    fn formal_integral(&self) -> PyResult<Self> {
        self.inner.formal_integral().map(Into::into).map_err(err)
    }

    fn partial_sum(&self, level: usize) -> PyResult<Self> {
        self.inner.partial_sum(level).map(Into::into).map_err(err)
    }

    #[pyo3(signature = (tol = 1e-12))]
    fn reciprocal(&self, tol: f64) -> PyResult<Self> {
        ser::reciprocal(&self.inner, self.inner.max_level(), tol)
            .map(|r| r.series.into())
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Series(factors={:?}, terms={}, tail={})",
            self.inner.spec().factors(),
            self.inner.len(),
            self.inner.tail().is_some()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (factors, m, part = "imaginary", scale = 1.0))]
fn make_rho(factors: Vec<u64>, m: usize, part: &str, scale: f64) -> PyResult<PySeries> {
    cls::make_rho(spec_from(factors)?, m, parse_part(part)?, scale)
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (series, n_max = 5, t_max = 1e12))]
fn classify<'py>(py: Python<'py>, series: &PySeries, n_max: u32, t_max: f64) -> PyResult<Bound<'py, PyAny>> {
    let report = cls::classify(&series.inner, n_max, t_max).map_err(err)?;
    to_py(py, &report)
}

/// List of (T, I(T), truncation bound).
#[pyfunction]
#[pyo3(signature = (series, times, tol = 1e-9))]
fn integral_curve<'py>(
    py: Python<'py>,
    series: &PySeries,
    times: Vec<f64>,
    tol: f64,
) -> PyResult<Vec<(f64, Bound<'py, PyComplex>, f64)>> {
    let rows = cls::integral_curve(&series.inner, &times, tol).map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|p| (p.t, PyComplex::from_doubles(py, p.value.re, p.value.im), p.truncation_bound))
        .collect())
}

/// Returns (perturbed series, summary dict).
#[pyfunction]
#[pyo3(signature = (series, epsilon, n_max = 5, t_max = 1e12))]
fn perturb_to_generic<'py>(
    py: Python<'py>,
    series: &PySeries,
    epsilon: f64,
    n_max: u32,
    t_max: f64,
) -> PyResult<(PySeries, Bound<'py, PyAny>)> {
    let p = cls::perturb_to_generic(&series.inner, epsilon, &ClassifyOptions { n_max, t_max }).map_err(err)?;
    let info = serde_json::json!({
        "m": p.m,
        "part": p.part,
        "sup_bound": p.sup_bound,
        "min_bound": p.min_bound,
        "report": p.report,
    });
    Ok((p.series.into(), to_py(py, &info)?))
}

#[pyfunction]
#[pyo3(signature = (series, n = 1, trials = 100, seed = 0, t_max = 1e12))]
fn un_openness_check<'py>(
    py: Python<'py>,
    series: &PySeries,
    n: u32,
    trials: usize,
    seed: u64,
    t_max: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let rep = cls::un_openness_check(&series.inner, n, trials, seed, t_max).map_err(err)?;
    to_py(py, &rep)
}

/// Conjugacy of the field v to a linear flow, as its report dict.
#[pyfunction]
#[pyo3(signature = (v, grid = 20, step = DEFAULT_STEP, seed = 0))]
fn build_conjugacy<'py>(
    py: Python<'py>,
    v: &PySeries,
    grid: usize,
    step: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = ConjugacyOptions {
        times: grid,
        points: grid,
        step,
        seed,
        ..Default::default()
    };
    let data = py
        .detach(|| flows::build_conjugacy_with(&v.inner, &opts))
        .map_err(err)?;
    to_py(py, &data.report())
}

/// Return time of the field v from the point with the given angles:
/// dict with the series, quadrature and timed values.
#[pyfunction]
#[pyo3(signature = (v, angles, step = DEFAULT_STEP))]
fn return_time<'py>(py: Python<'py>, v: &PySeries, angles: Vec<f64>, step: f64) -> PyResult<Bound<'py, PyAny>> {
    let x = SolenoidPoint::new(angles).map_err(err)?;
    let lambda = ser::reciprocal(&v.inner, v.inner.max_level(), 1e-13).map_err(err)?.series;
    let tau = flows::return_time_series(&lambda, 1e-13).map_err(err)?;
    let series = tau.evaluate_at_point(&x, 1e-13).map_err(err)?.value.re;
    let quadrature = flows::return_time_quadrature(&lambda, &x, 1e-12).map_err(err)?;
    let flow = GeneratedFlow::with_settings(v.inner.clone(), step, DEFAULT_TOL).map_err(err)?;
    let section = flow.section_return(&x).map_err(err)?.time;
    to_py(
        py,
        &serde_json::json!({"series": series, "quadrature": quadrature, "section": section}),
    )
}

/// Angles of φ(t, x) for the field v.
#[pyfunction]
#[pyo3(signature = (v, t, angles, step = DEFAULT_STEP))]
fn flow_evolve(v: &PySeries, t: f64, angles: Vec<f64>, step: f64) -> PyResult<Vec<f64>> {
    let x = SolenoidPoint::new(angles).map_err(err)?;
    let flow = GeneratedFlow::with_settings(v.inner.clone(), step, DEFAULT_TOL).map_err(err)?;
    Ok(flow.evolve(t, &x).map_err(err)?.angles().to_vec())
}

#[pyfunction]
#[pyo3(signature = (factors, samples, epsilons, seed, threads = 0))]
fn genericity_experiment<'py>(
    py: Python<'py>,
    factors: Vec<u64>,
    samples: usize,
    epsilons: Vec<f64>,
    seed: u64,
    threads: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = spec_from(factors)?;
    let mut cfg = ExperimentConfig::new(samples, epsilons, seed);
    cfg.threads = threads;
    let summary = py
        .detach(|| cls::genericity_experiment(spec, &cfg))
        .map_err(err)?;
    to_py(py, &summary)
}

#[pymodule]
pub fn solenoid_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySeries>()?;
    m.add_function(wrap_pyfunction!(make_rho, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(integral_curve, m)?)?;
    m.add_function(wrap_pyfunction!(perturb_to_generic, m)?)?;
    m.add_function(wrap_pyfunction!(un_openness_check, m)?)?;
    m.add_function(wrap_pyfunction!(build_conjugacy, m)?)?;
    m.add_function(wrap_pyfunction!(return_time, m)?)?;
    m.add_function(wrap_pyfunction!(flow_evolve, m)?)?;
    m.add_function(wrap_pyfunction!(genericity_experiment, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn part_names() {
        assert_eq!(parse_part("real").unwrap(), Part::Real);
        assert_eq!(parse_part("imaginary").unwrap(), Part::Imaginary);
        assert!(parse_part("sideways").is_err());
    }

    #[test]
    fn series_round_trip_and_arithmetic() {
        let c = PySeries::constant(vec![2, 2], 2.0).unwrap();
        let r = make_rho(vec![2, 2], 1, "real", 1.0).unwrap();
        let sum = c.__add__(&r).unwrap();
        assert!(sum.is_real() && !sum.is_finite());
        let back = PySeries::from_json(&sum.to_json()).unwrap();
        assert_eq!(back.inner, sum.inner);
        assert_eq!(c.__sub__(&c).unwrap().__len__(), 0);
        assert!(PySeries::from_json("[]").is_err());
    }
}
