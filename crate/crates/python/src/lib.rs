//! Python bindings: `import psqi`.

use std::collections::BTreeMap;

use psqi_core::cmaes::CmaConfig;
use psqi_core::eval::EvalRecord;
use psqi_core::{Detector, Error, PeakList, PerturbationParams, SnrConfig, TaskBinding};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(psqi, PsqiError, PyValueError);

fn py_err(e: Error) -> PyErr {
    PsqiError::new_err(e.to_string())
}

fn detector(name: &str) -> PyResult<Detector> {
    match name {
        "reference" => Ok(Detector::Reference),
        "alternate" => Ok(Detector::Alternate),
        other => Err(PyValueError::new_err(format!(
            "unknown detector {other:?}; use \"reference\" or \"alternate\""
        ))),
    }
}

fn peaks(indices: Vec<usize>) -> PyResult<PeakList> {
    PeakList::new(indices).map_err(py_err)
}

fn records(sqi: Vec<f64>, metric: Vec<f64>) -> PyResult<Vec<EvalRecord>> {
    if sqi.len() != metric.len() {
        return Err(py_err(Error::LengthMismatch(sqi.len(), metric.len())));
    }
    Ok(sqi
        .into_iter()
        .zip(metric)
        .enumerate()
        .map(|(i, (q, h))| EvalRecord::new(i.to_string(), q, h))
        .collect())
}

/// A uniformly sampled univariate signal.
#[pyclass(name = "Signal", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySignal {
    inner: psqi_core::Signal,
}

#[pymethods]
impl PySignal {
    #[new]
    fn new(samples: Vec<f64>, fs: f64) -> PyResult<Self> {
        psqi_core::Signal::new(samples, fs)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.inner.fs()
    }

    fn duration_s(&self) -> f64 {
        self.inner.duration_s()
    }

    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    /// Zero-phase 0.5 Hz highpassed copy.
    fn useful_component(&self) -> PyResult<Self> {
        psqi_core::useful_component(&self.inner)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Signal(n={}, fs={})", self.inner.len(), self.inner.fs())
    }
}

#[pyclass(name = "PsqiConfig", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyPsqiConfig {
    gamma_db: f64,
    beta_db: f64,
    local_floor: f64,
    population: usize,
    iterations: usize,
    initial_sigma: f64,
    master_seed: u64,
}

#[pymethods]
impl PyPsqiConfig {
    #[new]
    #[pyo3(signature = (gamma_db=25.0, beta_db=10.0, population=5, iterations=2, master_seed=0, local_floor=0.0, initial_sigma=0.3))]
    fn new(
        gamma_db: f64,
        beta_db: f64,
        population: usize,
        iterations: usize,
        master_seed: u64,
        local_floor: f64,
        initial_sigma: f64,
    ) -> Self {
        Self {
            gamma_db,
            beta_db,
            local_floor,
            population,
            iterations,
            initial_sigma,
            master_seed,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "PsqiConfig(gamma_db={}, beta_db={}, population={}, iterations={}, master_seed={})",
            self.gamma_db, self.beta_db, self.population, self.iterations, self.master_seed
        )
    }
}

impl PyPsqiConfig {
    fn to_core(&self) -> psqi_core::PsqiConfig {
        psqi_core::PsqiConfig {
            snr: SnrConfig {
                gamma_db: self.gamma_db,
                beta_db: self.beta_db,
                local_floor: self.local_floor,
            },
            cma: CmaConfig {
                population: self.population,
                max_iterations: self.iterations,
                initial_sigma: self.initial_sigma,
                ..CmaConfig::default()
            },
            master_seed: self.master_seed,
        }
    }
}

fn config_or_default(config: Option<PyRef<'_, PyPsqiConfig>>) -> psqi_core::PsqiConfig {
    config.map(|c| c.to_core()).unwrap_or_default()
}

#[pyclass(name = "PsqiResult", frozen, get_all)]
struct PyPsqiResult {
    score: f64,
    /// `(f_low, f_high)` of the worst perturbation band.
    worst_band: Option<(f64, f64)>,
    clean_peaks: Vec<usize>,
    worst_peaks: Option<Vec<usize>>,
    degenerate: bool,
    task_calls: usize,
    noise_seed: u64,
    /// `(f_low, f_high, metric, failed)` per candidate, in evaluation order.
    evaluations: Vec<(f64, f64, f64, bool)>,
}

#[pymethods]
impl PyPsqiResult {
    fn __repr__(&self) -> String {
        format!(
            "PsqiResult(score={}, degenerate={})",
            self.score, self.degenerate
        )
    }
}

#[pyclass(name = "MarginResult", frozen, get_all)]
struct PyMarginResult {
    tau_star: f64,
    delta_star: f64,
    above_mean: f64,
    below_mean: f64,
    above_count: usize,
    below_count: usize,
}

/// pSQI of one window for R-peak detection judged by tolerance-F1.
#[pyfunction]
#[pyo3(signature = (signal, config=None, window=0, detector="reference", tolerance_s=0.02))]
fn psqi_score(
    signal: &PySignal,
    config: Option<PyRef<'_, PyPsqiConfig>>,
    window: u64,
    detector: &str,
    tolerance_s: f64,
) -> PyResult<PyPsqiResult> {
    let binding = TaskBinding::rpeaks(self::detector(detector)?, tolerance_s);
    let r = psqi_core::psqi_score(&signal.inner, &binding, &config_or_default(config), window)
        .map_err(py_err)?;
    Ok(PyPsqiResult {
        score: r.score,
        worst_band: r.worst_theta.map(|t| (t.f_low, t.f_high)),
        clean_peaks: r.clean_output.indices().to_vec(),
        worst_peaks: r.worst_output.map(|p| p.indices().to_vec()),
        degenerate: r.degenerate,
        task_calls: r.task_calls,
        noise_seed: r.noise_seed,
        evaluations: r
            .evaluations
            .iter()
            .map(|e| (e.theta.f_low, e.theta.f_high, e.metric, e.failed))
            .collect(),
    })
}

#[pyfunction]
#[pyo3(signature = (signal, detector="reference"))]
fn detect_rpeaks(signal: &PySignal, detector: &str) -> PyResult<Vec<usize>> {
    let found = self::detector(detector)?
        .detect(&signal.inner)
        .map_err(py_err)?;
    Ok(found.indices().to_vec())
}

#[pyfunction]
#[pyo3(signature = (reference, detected, fs, tolerance_s=0.02))]
fn peak_f1(
    reference: Vec<usize>,
    detected: Vec<usize>,
    fs: f64,
    tolerance_s: f64,
) -> PyResult<f64> {
    Ok(psqi_core::peak_f1(
        &peaks(reference)?,
        &peaks(detected)?,
        tolerance_s,
        fs,
    ))
}

/// `x + delta` for the noise band `(f_low, f_high)` and white noise drawn
/// from `seed`.
#[pyfunction]
#[pyo3(signature = (signal, f_low, f_high, seed, config=None))]
fn apply_perturbation(
    signal: &PySignal,
    f_low: f64,
    f_high: f64,
    seed: u64,
    config: Option<PyRef<'_, PyPsqiConfig>>,
) -> PyResult<PySignal> {
    let cfg = config_or_default(config);
    let x_filt = psqi_core::useful_component(&signal.inner).map_err(py_err)?;
    let z = psqi_core::sample_noise(seed, signal.inner.len()).map_err(py_err)?;
    psqi_core::apply_perturbation(
        &signal.inner,
        &x_filt,
        &z,
        PerturbationParams::new(f_low, f_high),
        &cfg.snr,
    )
    .map(|inner| PySignal { inner })
    .map_err(py_err)
}

#[pyfunction]
fn extract_features(signal: &PySignal) -> PyResult<BTreeMap<String, Option<f64>>> {
    let f = psqi_core::extract_features(&signal.inner).map_err(py_err)?;
    let names = &psqi_core::features::FEATURE_HEADER[1..10];
    Ok(names
        .iter()
        .map(|n| n.to_string())
        .zip(f.values())
        .collect())
}

#[pyfunction]
fn spearman(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    psqi_core::spearman(&xs, &ys).map_err(py_err)
}

#[pyfunction]
fn separation_margin(sqi: Vec<f64>, metric: Vec<f64>, tau: f64) -> PyResult<f64> {
    psqi_core::separation_margin(&records(sqi, metric)?, tau).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (sqi, metric, min_count=5))]
fn optimal_margin(sqi: Vec<f64>, metric: Vec<f64>, min_count: usize) -> PyResult<PyMarginResult> {
    let m = psqi_core::optimal_margin(&records(sqi, metric)?, min_count).map_err(py_err)?;
    Ok(PyMarginResult {
        tau_star: m.tau_star,
        delta_star: m.delta_star,
        above_mean: m.above_mean,
        below_mean: m.below_mean,
        above_count: m.above_count,
        below_count: m.below_count,
    })
}

#[pyfunction]
fn binary_margin(sqi: Vec<f64>, metric: Vec<f64>) -> PyResult<f64> {
    psqi_core::binary_margin(&records(sqi, metric)?).map_err(py_err)
}

/// `(lower, upper, count, mean_metric)` for each nonempty bin.
#[pyfunction]
#[pyo3(signature = (sqi, metric, n_bins=25))]
fn monotonicity_bins(
    sqi: Vec<f64>,
    metric: Vec<f64>,
    n_bins: usize,
) -> PyResult<Vec<(f64, f64, usize, f64)>> {
    let bins = psqi_core::monotonicity_bins(&records(sqi, metric)?, n_bins).map_err(py_err)?;
    Ok(bins
        .into_iter()
        .map(|b| (b.lower, b.upper, b.count, b.mean_metric))
        .collect())
}

/// `(window_id, signal, peaks)` for each synthetic window.
#[pyfunction]
#[pyo3(signature = (n_windows=20, seed=0, snr_db=Some((0.0, 40.0)), weak_fraction=0.0))]
fn synth_corpus(
    n_windows: usize,
    seed: u64,
    snr_db: Option<(f64, f64)>,
    weak_fraction: f64,
) -> PyResult<Vec<(String, PySignal, Vec<usize>)>> {
    let spec = psqi_core::SynthSpec {
        n_windows,
        snr_db,
        weak_fraction,
        ..Default::default()
    };
    let corpus = psqi_core::synth_corpus(&spec, seed).map_err(py_err)?;
    Ok(corpus
        .into_iter()
        .map(|w| {
            let peaks = w
                .truth
                .peaks()
                .map(|p| p.indices().to_vec())
                .unwrap_or_default();
            (w.window_id, PySignal { inner: w.signal }, peaks)
        })
        .collect())
}

#[pymodule]
fn psqi(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PsqiError", m.py().get_type::<PsqiError>())?;
    m.add("PRNG_ID", psqi_core::PRNG_ID)?;
    m.add_class::<PySignal>()?;
    m.add_class::<PyPsqiConfig>()?;
    m.add_class::<PyPsqiResult>()?;
    m.add_class::<PyMarginResult>()?;
    m.add_function(wrap_pyfunction!(psqi_score, m)?)?;
    m.add_function(wrap_pyfunction!(detect_rpeaks, m)?)?;
    m.add_function(wrap_pyfunction!(peak_f1, m)?)?;
    m.add_function(wrap_pyfunction!(apply_perturbation, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(separation_margin, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_margin, m)?)?;
    m.add_function(wrap_pyfunction!(binary_margin, m)?)?;
    m.add_function(wrap_pyfunction!(monotonicity_bins, m)?)?;
    m.add_function(wrap_pyfunction!(synth_corpus, m)?)?;
    Ok(())
}
