//! Python module `corrrb`: channel transforms, crosstalk metrics, decay fits
//! and full simulated experiments.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use corrrb::channel::{
    decays_from_weight_params, fixed_weight_from_decays, kappa_weight2, probs_from_ptm, ptm_from_probs,
    weight_params_from_decays, PauliChannelProbs, PtmDiagonal, SubspaceDecays, WeightParams,
};
use corrrb::error::Error;
use corrrb::experiment::{cmd_echo_compare, cmd_inject, cmd_run, ExperimentConfig};
use corrrb::metrics::{eta_from_fixed_weight, eta_pauli, eta_two_qubit_weight_param};
use corrrb::pauli::Partition;
use corrrb::protocol::{fit_decay, FitPoint};

fn py_err(e: Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn n_qubits(len: usize) -> PyResult<usize> {
    let mut n = 0;
    while 1usize << (2 * n) < len {
        n += 1;
    }
    if 1usize << (2 * n) != len {
        return Err(PyValueError::new_err(format!("length {len} is not a power of 4")));
    }
    Ok(n)
}

fn partition(b: Vec<Vec<usize>>) -> PyResult<Partition> {
    Partition::new(b).map_err(py_err)
}

/// PTM diagonal of a Pauli channel given its probabilities (Pauli index order, qubit 0 least significant).
#[pyfunction]
fn ptm_diagonal(probs: Vec<f64>) -> PyResult<Vec<f64>> {
    let n = n_qubits(probs.len())?;
    let p = PauliChannelProbs::new(n, probs).map_err(py_err)?;
    Ok(ptm_from_probs(&p).diag().to_vec())
}

/// Pauli probabilities from a PTM diagonal.
#[pyfunction]
fn probs_from_ptm_diagonal(diag: Vec<f64>) -> PyResult<Vec<f64>> {
    let n = n_qubits(diag.len())?;
    let r = PtmDiagonal::new(n, diag).map_err(py_err)?;
    Ok(probs_from_ptm(&r).probs().to_vec())
}

/// Pauli channel probabilities as JSON keyed by Pauli string.
#[pyfunction]
fn channel_json(probs: Vec<f64>) -> PyResult<String> {
    let n = n_qubits(probs.len())?;
    let p = PauliChannelProbs::new(n, probs).map_err(py_err)?;
    serde_json::to_string(&p).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Weight-parameterized eps (indexed by pattern integer, entry 0 unused) from decays alpha_S.
#[pyfunction]
fn eps_from_decays(alpha: Vec<f64>, b: Vec<Vec<usize>>) -> PyResult<Vec<f64>> {
    let b = partition(b)?;
    let a = SubspaceDecays::new(b.len(), alpha).map_err(py_err)?;
    Ok(weight_params_from_decays(&a, &b).map_err(py_err)?.values().to_vec())
}

/// Decays alpha_S of a weight-parameterized channel.
#[pyfunction]
fn decays_from_eps(eps: Vec<f64>, b: Vec<Vec<usize>>) -> PyResult<Vec<f64>> {
    let b = partition(b)?;
    let e = WeightParams::new(eps, &b).map_err(py_err)?;
    Ok(decays_from_weight_params(&e, &b).map_err(py_err)?.values().to_vec())
}

/// Crosstalk metric of a Pauli channel for the given partition.
#[pyfunction]
fn eta(probs: Vec<f64>, b: Vec<Vec<usize>>) -> PyResult<f64> {
    let n = n_qubits(probs.len())?;
    let p = PauliChannelProbs::new(n, probs).map_err(py_err)?;
    Ok(eta_pauli(&p, &partition(b)?).map_err(py_err)?.eta)
}

/// Crosstalk metric computed from measured decays alpha_S.
#[pyfunction]
fn eta_from_decays(alpha: Vec<f64>, b: Vec<Vec<usize>>) -> PyResult<f64> {
    let b = partition(b)?;
    let a = SubspaceDecays::new(b.len(), alpha).map_err(py_err)?;
    let p = fixed_weight_from_decays(&a, &b).map_err(py_err)?;
    Ok(eta_from_fixed_weight(&p, &b).map_err(py_err)?.eta)
}

/// `(eta, q1, q2)` for a two-qubit weight-parameterized channel.
#[pyfunction]
fn eta_two_qubit(e1: f64, e2: f64, e12: f64) -> (f64, f64, f64) {
    let r = eta_two_qubit_weight_param(e1, e2, e12);
    (r.eta, r.q1, r.q2)
}

#[pyfunction]
fn kappa12(k1: f64, k2: f64) -> PyResult<f64> {
    kappa_weight2(k1, k2).map_err(py_err)
}

/// Fit `A alpha^l + B`; returns a dict with a, alpha, b, their standard errors, and flags.
#[pyfunction]
#[pyo3(signature = (lengths, means, stderrs=None))]
fn fit(py: Python<'_>, lengths: Vec<f64>, means: Vec<f64>, stderrs: Option<Vec<f64>>) -> PyResult<Py<PyAny>> {
    if lengths.len() != means.len() || stderrs.as_ref().is_some_and(|s| s.len() != means.len()) {
        return Err(PyValueError::new_err("lengths, means and stderrs must have equal length"));
    }
    let se = stderrs.unwrap_or_else(|| vec![0.0; means.len()]);
    let pts: Vec<FitPoint> = (0..means.len()).map(|i| FitPoint { l: lengths[i], y: means[i], stderr: se[i] }).collect();
    let f = fit_decay(&pts).map_err(py_err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("a", f.a)?;
    d.set_item("alpha", f.alpha)?;
    d.set_item("b", f.b)?;
    d.set_item("stderr_a", f.stderr_a)?;
    d.set_item("stderr_alpha", f.stderr_alpha)?;
    d.set_item("stderr_b", f.stderr_b)?;
    d.set_item("chi2_red", f.chi2_red)?;
    d.set_item("flags", f.flags.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>())?;
    Ok(d.into_any().unbind())
}

/// Run an experiment from a JSON config (or preset name) and return report.json as a string.
/// `command` is "run", "inject" or "echo-compare". No files are written.
#[pyfunction]
#[pyo3(signature = (config, command="run", seed=None))]
fn run_experiment(py: Python<'_>, config: &str, command: &str, seed: Option<u64>) -> PyResult<String> {
    let mut cfg = if config.trim_start().starts_with('{') {
        ExperimentConfig::from_json(config).map_err(py_err)?
    } else {
        ExperimentConfig::preset(config).map_err(py_err)?
    };
    if seed.is_some() {
        cfg.seed = seed;
    }
    let files = py
        .detach(|| match command {
            "run" => cmd_run(&cfg).map(|r| r.1),
            "inject" => cmd_inject(&cfg, None, None).map(|r| r.1),
            "echo-compare" => cmd_echo_compare(&cfg).map(|r| r.1),
            other => Err(Error::Config(format!("unknown command {other:?}"))),
        })
        .map_err(py_err)?;
    Ok(files.get("report.json").expect("every command renders a report").to_string())
}

#[pymodule]
#[pyo3(name = "corrrb")]
fn corrrb_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(ptm_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(probs_from_ptm_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(channel_json, m)?)?;
    m.add_function(wrap_pyfunction!(eps_from_decays, m)?)?;
    m.add_function(wrap_pyfunction!(decays_from_eps, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(eta_from_decays, m)?)?;
    m.add_function(wrap_pyfunction!(eta_two_qubit, m)?)?;
    m.add_function(wrap_pyfunction!(kappa12, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
