//! Python bindings: devices and grid maps, post-processing and metrics,
//! saved models, and the experiment pipeline commands.

use std::path::PathBuf;

use ndarray::Array2;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use beamsel::antenna::{coverage_diagnostic, Design};
use beamsel::beamcore::{candidate_list, label_generic, postprocess};
use beamsel::evalkit::{effective_se as se_eff, OverheadConfig};
use beamsel::harness::{self, device_with_grid, ExperimentConfig, Mismatch, Profile, Scenario};
use beamsel::neural;
use beamsel::sphgrid::{fibonacci_grid as fib, Direction};
use beamsel::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Csv(_) => PyOSError::new_err(e.to_string()),
        Error::Numerical(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for beamsel::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Fibonacci grid as `(azimuth, zenith)` pairs in radians.
#[pyfunction]
fn fibonacci_grid(n_fib: usize) -> PyResult<Vec<(f64, f64)>> {
    Ok(fib(n_fib).py()?.points().iter().map(|d| (d.azimuth(), d.zenith())).collect())
}

/// One of the reference terminals (E, F, EF) with its grid map.
#[pyclass(frozen)]
struct Device {
    inner: beamsel::antenna::Device,
}

#[pymethods]
impl Device {
    #[new]
    #[pyo3(signature = (design, n_fib = 100))]
    fn new(design: &str, n_fib: usize) -> PyResult<Self> {
        let d: Design = design.parse().py()?;
        Ok(Device {
            inner: device_with_grid(d, n_fib).py()?,
        })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id().to_string()
    }

    #[getter]
    fn n_beams(&self) -> usize {
        self.inner.n_beams()
    }

    #[getter]
    fn n_fib(&self) -> usize {
        self.inner.fib_map().map_or(0, |m| m.n_fib())
    }

    /// Gains of every beam toward a device-frame direction.
    fn beam_gains(&self, azimuth: f64, zenith: f64) -> Vec<f64> {
        self.inner.beam_gains(&Direction::new(azimuth, zenith))
    }

    fn best_beam(&self, azimuth: f64, zenith: f64) -> usize {
        self.inner.best_beam(&Direction::new(azimuth, zenith))
    }

    /// Best beam of every grid point.
    fn fib_map(&self) -> PyResult<Vec<usize>> {
        Ok(self.inner.require_fib_map().py()?.beam_of_point.clone())
    }

    /// Beams that own no grid point.
    fn coverage(&self) -> PyResult<Vec<usize>> {
        coverage_diagnostic(&self.inner).py()
    }

    /// Collapses grid-direction probabilities onto the codebook.
    fn postprocess(&self, p: Vec<f64>) -> PyResult<Vec<f64>> {
        postprocess(&p, &self.inner).py()
    }

    fn label_generic(&self, j_star: usize) -> PyResult<Vec<u8>> {
        label_generic(j_star, &self.inner).py()
    }

    fn __repr__(&self) -> String {
        format!("Device({:?}, n_beams={}, n_fib={})", self.inner.id(), self.n_beams(), self.n_fib())
    }
}

/// Indices of the `n_b` largest probabilities, ties to the lower index.
#[pyfunction]
fn candidates(p: Vec<f64>, n_b: usize) -> PyResult<Vec<usize>> {
    candidate_list(&p, n_b).py()
}

/// Rate after sensing `n_b` pairs within one frame.
#[pyfunction]
#[pyo3(signature = (snr, n_b, frame_s = 20e-3, sense_s = 1e-4))]
fn effective_se(snr: f64, n_b: usize, frame_s: f64, sense_s: f64) -> PyResult<f64> {
    se_eff(snr, n_b, &OverheadConfig { frame_s, sense_s }).py()
}

/// A trained network loaded from disk.
#[pyclass(frozen)]
struct Model {
    inner: neural::Model,
}

fn rows_to_array(x: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let cols = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("feature rows differ in length"));
    }
    let rows = x.len();
    Array2::from_shape_vec((rows, cols), x.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn array_to_rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Model {
            inner: neural::Model::load(&path).py()?,
        })
    }

    #[getter]
    fn role(&self) -> String {
        self.inner.role.clone()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.shape().input_dim
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.shape().output_dim
    }

    #[getter]
    fn loss_trace(&self) -> Vec<f64> {
        self.inner.loss_trace.clone()
    }

    /// Softmax outputs for raw feature rows.
    #[pyo3(signature = (x, cond = None))]
    fn predict(&self, x: Vec<Vec<f64>>, cond: Option<Vec<usize>>) -> PyResult<Vec<Vec<f64>>> {
        let a = rows_to_array(x)?;
        Ok(array_to_rows(&self.inner.predict(a.view(), cond.as_deref()).py()?))
    }
}

/// Joint `N_AP × N_UT` probabilities from a generic NET_I/NET_II pair.
#[pyfunction]
fn predict_joint(net1: &Model, net2: &Model, features: Vec<f64>, device: &Device) -> PyResult<Vec<Vec<f64>>> {
    let p = neural::predict_joint(&net1.inner, &net2.inner, &features, &device.inner).py()?;
    Ok(array_to_rows(&p))
}

/// Default experiment config as JSON.
#[pyfunction]
#[pyo3(signature = (scenario = "indoor", profile = "desk"))]
fn default_config(scenario: &str, profile: &str) -> PyResult<String> {
    let profile: Profile = profile.parse().py()?;
    let scenario = match scenario {
        "indoor" => Scenario::Indoor,
        "sub6" => Scenario::Sub6,
        other => return Err(PyValueError::new_err(format!("unknown scenario {other:?}"))),
    };
    serde_json::to_string_pretty(&ExperimentConfig::for_scenario(scenario, profile))
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_config(config_json: &str) -> PyResult<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    cfg.validate().py()?;
    Ok(cfg)
}

/// Generates datasets; returns sample counts keyed `split/id`.
#[pyfunction]
fn gen_dataset(py: Python<'_>, config_json: &str, out: PathBuf) -> PyResult<Vec<(String, usize)>> {
    let cfg = parse_config(config_json)?;
    let data = py.detach(|| harness::cmd_gen_dataset(&cfg, &out)).py()?;
    let mut counts: Vec<(String, usize)> = data.train.iter().map(|(k, d)| (format!("train/{k}"), d.len())).collect();
    counts.extend(data.test.iter().map(|(k, d)| (format!("test/{k}"), d.len())));
    Ok(counts)
}

/// Trains all networks; returns the saved model keys.
#[pyfunction]
fn train(py: Python<'_>, config_json: &str, out: PathBuf) -> PyResult<Vec<String>> {
    let cfg = parse_config(config_json)?;
    let models = py.detach(|| harness::cmd_train(&cfg, &out)).py()?;
    Ok(models.into_keys().collect())
}

/// Evaluates saved models; returns metric rows as tuples
/// `(experiment, seed, n, metric, value, sample_count)`.
#[pyfunction]
#[pyo3(signature = (config_json, out, mismatch = None))]
#[allow(clippy::type_complexity)]
fn evaluate(
    py: Python<'_>,
    config_json: &str,
    out: PathBuf,
    mismatch: Option<&str>,
) -> PyResult<Vec<(String, String, usize, String, f64, usize)>> {
    let cfg = parse_config(config_json)?;
    let mm: Option<Mismatch> = mismatch.map(str::parse).transpose().py()?;
    let ev = py.detach(|| harness::cmd_eval(&cfg, &out, mm.as_ref())).py()?;
    Ok(ev
        .rows
        .into_iter()
        .map(|r| (r.experiment, r.seed, r.n, r.metric, r.value, r.sample_count))
        .collect())
}

#[pymodule]
fn pybeamsel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Device>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(fibonacci_grid, m)?)?;
    m.add_function(wrap_pyfunction!(candidates, m)?)?;
    m.add_function(wrap_pyfunction!(effective_se, m)?)?;
    m.add_function(wrap_pyfunction!(predict_joint, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(gen_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
