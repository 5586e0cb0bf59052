//! Python bindings: `import adb_relay`.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use adb::analytic as an;
use adb::channel::{self, RngStream};
use adb::experiments::{self, ExperimentKind, Overrides};
use adb::power::{self, Evaluation, MaximizeOptions, PowerBudget};
use adb::sim::{self, ProtocolKind, SimConfig};
use adb::special;
use adb::Error;

create_exception!(adb_relay, ConfigError, PyValueError);
create_exception!(adb_relay, DomainError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::Io(_) => ConfigError::new_err(e.to_string()),
        Error::Domain(_) | Error::Overflow(_) => DomainError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for adb::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn protocol(name: &str) -> PyResult<ProtocolKind> {
    name.parse().py_err()
}

/// Fading parameters: `relays` relays, link variances `sigma_g2`, `sigma_h2`.
#[pyclass(name = "ChannelParams", frozen, skip_from_py_object)]
struct PyChannelParams {
    inner: channel::ChannelParams,
}

#[pymethods]
impl PyChannelParams {
    #[new]
    #[pyo3(signature = (relays, sigma_g2 = 1.0, sigma_h2 = 1.0))]
    fn new(relays: usize, sigma_g2: f64, sigma_h2: f64) -> PyResult<Self> {
        Ok(PyChannelParams { inner: channel::ChannelParams::new(relays, sigma_g2, sigma_h2).py_err()? })
    }

    #[getter]
    fn relays(&self) -> usize {
        self.inner.relays()
    }

    #[getter]
    fn sigma_g2(&self) -> f64 {
        self.inner.sigma_g2()
    }

    #[getter]
    fn sigma_h2(&self) -> f64 {
        self.inner.sigma_h2()
    }

    /// Amplitudes `(g, h)` of slot `index` of stream `(seed, stream)`.
    #[pyo3(signature = (index, seed = 0, stream = 0))]
    fn sample_slot(&self, index: u64, seed: u64, stream: u64) -> (Vec<f64>, Vec<f64>) {
        let s = channel::sample_slot(self.inner, RngStream::new(seed, stream), index);
        (s.g, s.h)
    }

    fn __repr__(&self) -> String {
        format!("ChannelParams(relays={}, sigma_g2={}, sigma_h2={})", self.relays(), self.sigma_g2(), self.sigma_h2())
    }
}

#[pyclass(name = "ThroughputEstimate", frozen, get_all, skip_from_py_object)]
struct PyThroughputEstimate {
    mean: f64,
    std_error: f64,
    n_slots: u64,
    aux: BTreeMap<String, f64>,
}

impl From<sim::ThroughputEstimate> for PyThroughputEstimate {
    fn from(e: sim::ThroughputEstimate) -> Self {
        PyThroughputEstimate { mean: e.mean, std_error: e.std_error, n_slots: e.n_slots, aux: e.aux }
    }
}

#[pymethods]
impl PyThroughputEstimate {
    fn __repr__(&self) -> String {
        format!("ThroughputEstimate(mean={}, std_error={}, n_slots={})", self.mean, self.std_error, self.n_slots)
    }
}

#[pyclass(name = "AdbAnalyticResult", frozen, get_all, skip_from_py_object)]
struct PyAdbAnalyticResult {
    c11: f64,
    c12: f64,
    c21: f64,
    c22: f64,
    c_adb: f64,
    active_case: String,
}

#[pymethods]
impl PyAdbAnalyticResult {
    fn __repr__(&self) -> String {
        format!("AdbAnalyticResult(c_adb={}, active_case={})", self.c_adb, self.active_case)
    }
}

#[pyclass(name = "PowerSolution", frozen, get_all, skip_from_py_object)]
struct PyPowerSolution {
    p_s: f64,
    p_r: f64,
    rho: f64,
    throughput: f64,
    std_error: f64,
    evaluations: usize,
    binding: bool,
}

#[pymethods]
impl PyPowerSolution {
    fn __repr__(&self) -> String {
        format!("PowerSolution(p_s={}, p_r={}, throughput={})", self.p_s, self.p_r, self.throughput)
    }
}

#[pyfunction]
fn exp_integral_e1(x: f64) -> PyResult<f64> {
    special::exp_integral_e1(x).py_err()
}

#[pyfunction]
fn scaled_exp_e1(x: f64) -> PyResult<f64> {
    special::scaled_exp_e1(x).py_err()
}

#[pyfunction]
#[pyo3(signature = (z, m, sigma2 = 1.0))]
fn min_exponential_cdf(z: f64, m: u32, sigma2: f64) -> PyResult<f64> {
    special::min_exponential_cdf(z, m, sigma2).py_err()
}

#[pyfunction]
#[pyo3(signature = (t, m, sigma_h2 = 1.0))]
fn saa_pdf(t: f64, m: u32, sigma_h2: f64) -> PyResult<f64> {
    special::saa_pdf(t, &special::SaaParams::new(m, sigma_h2).py_err()?).py_err()
}

#[pyfunction]
#[pyo3(signature = (t, m, sigma_h2 = 1.0))]
fn saa_cdf(t: f64, m: u32, sigma_h2: f64) -> PyResult<f64> {
    special::saa_cdf(t, &special::SaaParams::new(m, sigma_h2).py_err()?).py_err()
}

#[pyfunction]
#[pyo3(signature = (p_s, m, sigma_g2 = 1.0))]
fn c11_closed(p_s: f64, m: usize, sigma_g2: f64) -> PyResult<f64> {
    an::c11_closed(p_s, m, sigma_g2).py_err()
}

#[pyfunction]
#[pyo3(signature = (p_s, relays, m, sigma_g2 = 1.0))]
fn c21_closed(p_s: f64, relays: usize, m: usize, sigma_g2: f64) -> PyResult<f64> {
    an::c21_closed(p_s, relays, m, sigma_g2).py_err()
}

#[pyfunction]
#[pyo3(signature = (p_r, m, sigma_h2 = 1.0))]
fn c22_closed(p_r: f64, m: usize, sigma_h2: f64) -> PyResult<f64> {
    an::c22_closed(p_r, m, sigma_h2).py_err()
}

#[pyfunction]
#[pyo3(signature = (p_r, relays, m, sigma_h2 = 1.0))]
fn c12_closed(p_r: f64, relays: usize, m: usize, sigma_h2: f64) -> PyResult<f64> {
    an::c12_closed(p_r, relays, m, sigma_h2).py_err()
}

#[pyfunction]
#[pyo3(signature = (relays, group_size, p_s, p_r, sigma_g2 = 1.0, sigma_h2 = 1.0))]
fn adb_closed_form(
    relays: usize,
    group_size: usize,
    p_s: f64,
    p_r: f64,
    sigma_g2: f64,
    sigma_h2: f64,
) -> PyResult<PyAdbAnalyticResult> {
    let cfg = an::AdbAnalyticConfig { relays, group_size, sigma_g2, sigma_h2, p_s, p_r };
    let r = an::adb_closed_form(&cfg).py_err()?;
    Ok(PyAdbAnalyticResult {
        c11: r.c11,
        c12: r.c12,
        c21: r.c21,
        c22: r.c22,
        c_adb: r.c_adb,
        active_case: format!("{:?}", r.active_case),
    })
}

#[allow(clippy::too_many_arguments)]
fn sim_config(
    protocol_name: &str,
    channel: &PyChannelParams,
    p_s: f64,
    p_r: f64,
    group_size: Option<usize>,
    n_slots: u64,
    seed: u64,
    workers: usize,
    switch_period: u64,
) -> PyResult<SimConfig> {
    let mut cfg = SimConfig::new(protocol(protocol_name)?, channel.inner, p_s, p_r)
        .with_slots(n_slots)
        .with_seed(seed)
        .with_workers(workers)
        .with_switch_period(switch_period);
    if let Some(m) = group_size {
        cfg = cfg.with_group_size(m);
    }
    Ok(cfg)
}

/// Monte Carlo throughput of `protocol` ("CRS", "SFD-MMRS", "DF", "ADB").
#[pyfunction]
#[pyo3(signature = (protocol, channel, p_s, p_r, group_size = None, n_slots = 1_000_000, seed = 0, workers = 1))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    protocol: &str,
    channel: &PyChannelParams,
    p_s: f64,
    p_r: f64,
    group_size: Option<usize>,
    n_slots: u64,
    seed: u64,
    workers: usize,
) -> PyResult<PyThroughputEstimate> {
    let cfg = sim_config(protocol, channel, p_s, p_r, group_size, n_slots, seed, workers, 1)?;
    py.detach(|| sim::simulate(&cfg)).py_err().map(Into::into)
}

/// Slot-level ADB run with relay buffers; returns the estimate and the
/// two group buffer traces.
#[pyfunction]
#[pyo3(signature = (channel, p_s, p_r, group_size = None, n_slots = 100_000, switch_period = 1, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn adb_queue_sim(
    py: Python<'_>,
    channel: &PyChannelParams,
    p_s: f64,
    p_r: f64,
    group_size: Option<usize>,
    n_slots: u64,
    switch_period: u64,
    seed: u64,
) -> PyResult<(PyThroughputEstimate, Vec<f64>, Vec<f64>)> {
    let cfg = sim_config("ADB", channel, p_s, p_r, group_size, n_slots, seed, 1, switch_period)?;
    let (est, trace) = py.detach(|| sim::adb_queue_sim(&cfg)).py_err()?;
    let [q1, q2] = trace.group_queues;
    Ok((est.into(), q1, q2))
}

/// Relay power that makes the scheme's budget tight for source power `p_s`.
#[pyfunction]
fn pr_from_ps(scheme: &str, snr_total: f64, relays: usize, p_s: f64) -> PyResult<f64> {
    PowerBudget::new(snr_total, protocol(scheme)?, relays).py_err()?.pr_from_ps(p_s).py_err()
}

/// Best power split. `estimator` is "analytic" (ADB only) or "simulated".
#[pyfunction]
#[pyo3(signature = (scheme, snr_total, relays, group_size = None, estimator = "simulated", n_slots = 200_000, seed = 0, grid_points = 64))]
#[allow(clippy::too_many_arguments)]
fn maximize(
    py: Python<'_>,
    scheme: &str,
    snr_total: f64,
    relays: usize,
    group_size: Option<usize>,
    estimator: &str,
    n_slots: u64,
    seed: u64,
    grid_points: usize,
) -> PyResult<PyPowerSolution> {
    let kind = protocol(scheme)?;
    let budget = PowerBudget::new(snr_total, kind, relays).py_err()?;
    let m = group_size.unwrap_or((relays / 2).max(1));
    let channel = channel::ChannelParams::unit(relays).py_err()?;
    let opts = MaximizeOptions { grid_points, ..MaximizeOptions::default() };
    let analytic = match estimator {
        "analytic" if kind == ProtocolKind::Adb => true,
        "analytic" => return Err(ConfigError::new_err(format!("no closed form for {kind}"))),
        "simulated" => false,
        other => return Err(ConfigError::new_err(format!("unknown estimator `{other}`"))),
    };
    let sol = py
        .detach(|| {
            power::maximize(
                &budget,
                |p_s, p_r| {
                    if analytic {
                        let cfg = an::AdbAnalyticConfig { relays, group_size: m, sigma_g2: 1.0, sigma_h2: 1.0, p_s, p_r };
                        Ok(Evaluation::exact(an::adb_closed_form(&cfg)?.c_adb))
                    } else {
                        let cfg = SimConfig::new(kind, channel, p_s, p_r).with_group_size(m).with_slots(n_slots).with_seed(seed);
                        let e = sim::simulate(&cfg)?;
                        Ok(Evaluation { throughput: e.mean, std_error: e.std_error })
                    }
                },
                &opts,
            )
        })
        .py_err()?;
    Ok(PyPowerSolution {
        p_s: sol.p_s,
        p_r: sol.p_r,
        rho: sol.rho,
        throughput: sol.throughput,
        std_error: sol.std_error,
        evaluations: sol.evaluations,
        binding: sol.binding,
    })
}

/// Runs a figure sweep ("fig3".."fig6" or "point") from a JSON config
/// string and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (figure, config_json = ""))]
fn run_experiment(py: Python<'_>, figure: &str, config_json: &str) -> PyResult<String> {
    let kind = match figure {
        "fig3" => ExperimentKind::RatioSweep,
        "fig4" => ExperimentKind::SnrSweep,
        "fig5" => ExperimentKind::GroupingSweep,
        "fig6" => ExperimentKind::RelayCountSweep,
        "point" => ExperimentKind::SinglePoint,
        other => return Err(ConfigError::new_err(format!("unknown figure `{other}`"))),
    };
    let spec = experiments::spec_from_parts(kind, config_json, &Overrides::default()).py_err()?;
    let out = py.detach(|| experiments::run(&spec)).py_err()?;
    let mut buf = Vec::new();
    experiments::write_csv(&out.rows, &mut buf).py_err()?;
    String::from_utf8(buf).map_err(|e| ConfigError::new_err(e.to_string()))
}

#[pymodule]
fn adb_relay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("DomainError", py.get_type::<DomainError>())?;
    m.add_class::<PyChannelParams>()?;
    m.add_class::<PyThroughputEstimate>()?;
    m.add_class::<PyAdbAnalyticResult>()?;
    m.add_class::<PyPowerSolution>()?;
    m.add_function(wrap_pyfunction!(exp_integral_e1, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_exp_e1, m)?)?;
    m.add_function(wrap_pyfunction!(min_exponential_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(saa_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(saa_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(c11_closed, m)?)?;
    m.add_function(wrap_pyfunction!(c21_closed, m)?)?;
    m.add_function(wrap_pyfunction!(c22_closed, m)?)?;
    m.add_function(wrap_pyfunction!(c12_closed, m)?)?;
    m.add_function(wrap_pyfunction!(adb_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(adb_queue_sim, m)?)?;
    m.add_function(wrap_pyfunction!(pr_from_ps, m)?)?;
    m.add_function(wrap_pyfunction!(maximize, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
