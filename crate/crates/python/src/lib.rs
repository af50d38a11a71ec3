//! Python bindings: run and validate experiment configs, plus the HMM filter
//! and detection helpers for interactive use.

use cograd::harness::{run_experiment, Cell, Config, ExperimentKind, Table};
use cograd::spectrum_hmm::{transmit_decision, Decision, HmmModel, Occupancy};
use cograd::{tracking, Error};
use nalgebra::Matrix2;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn to_py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        3 => PyArithmeticError::new_err(e.to_string()),
        _ => PyOSError::new_err(e.to_string()),
    }
}

fn load(config_json: &str, seed: Option<u64>, trials: Option<usize>) -> Result<Config, Error> {
    let mut cfg = Config::from_json(config_json)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if trials.is_some() {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Columns keyed by header, each a list of floats, ints or strings.
fn table_to_py<'py>(py: Python<'py>, table: &Table) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    for (j, header) in table.headers.iter().enumerate() {
        let col = PyList::empty(py);
        for row in &table.rows {
            match &row[j] {
                Cell::Num(v) => col.append(*v)?,
                Cell::Int(v) => col.append(*v)?,
                Cell::Text(s) => col.append(s)?,
            }
        }
        out.set_item(header, col)?;
    }
    Ok(out)
}

/// Names of the experiments a config would run; raises `ValueError` if the
/// config is invalid.
#[pyfunction]
fn validate(config_json: &str) -> PyResult<Vec<&'static str>> {
    let cfg = load(config_json, None, None).map_err(to_py_err)?;
    Ok(cfg.experiments().iter().map(|k| k.as_str()).collect())
}

/// Runs the experiments of a JSON config and returns, per experiment, its
/// summary and the tables the CLI would write as CSV.
#[pyfunction]
#[pyo3(signature = (config_json, experiment=None, seed=None, trials=None))]
fn run<'py>(
    py: Python<'py>,
    config_json: &str,
    experiment: Option<&str>,
    seed: Option<u64>,
    trials: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = load(config_json, seed, trials).map_err(to_py_err)?;
    if let Some(name) = experiment {
        cfg.experiment = Some(ExperimentKind::parse(name).map_err(to_py_err)?);
        cfg.validate().map_err(to_py_err)?;
    }
    let outputs = py
        .detach(|| cfg.experiments().into_iter().map(|k| run_experiment(&cfg, k)).collect::<Result<Vec<_>, _>>())
        .map_err(to_py_err)?;
    let json = py.import("json")?;
    let result = PyDict::new(py);
    for o in outputs {
        let entry = PyDict::new(py);
        entry.set_item("seed", o.seed)?;
        entry.set_item("trials", o.trials)?;
        entry.set_item("elapsed_s", o.elapsed_s)?;
        entry.set_item("summary", json.call_method1("loads", (o.summary.to_string(),))?)?;
        let tables = PyDict::new(py);
        for (stem, table) in &o.tables {
            tables.set_item(stem, table_to_py(py, table)?)?;
        }
        entry.set_item("tables", tables)?;
        result.set_item(o.kind.as_str(), entry)?;
    }
    Ok(result)
}

/// Filtered occupancy posteriors `[Pr[free], Pr[busy]]` after each
/// observation. `a` and `b` are column-stochastic, indexed `[next][current]`
/// and `[observed][true]`; observations are `True` when declared busy.
#[pyfunction]
fn filter_posteriors(a: [[f64; 2]; 2], b: [[f64; 2]; 2], pi: [f64; 2], busy: Vec<bool>) -> PyResult<Vec<[f64; 2]>> {
    let m = |x: [[f64; 2]; 2]| Matrix2::new(x[0][0], x[0][1], x[1][0], x[1][1]);
    let mut model = HmmModel::new(m(a), m(b), pi).map_err(to_py_err)?;
    busy.into_iter()
        .map(|o| model.filter_update(Occupancy::from_index(usize::from(o))).map_err(to_py_err))
        .collect()
}

/// Transmit iff the spectrum-opportunity probability exceeds `lam`.
#[pyfunction]
fn should_transmit(p_so: f64, lam: f64) -> bool {
    transmit_decision(p_so, lam) == Decision::Transmit
}

/// Swerling-1 detection probability at linear SNR `snr` and false-alarm
/// probability `pfa`.
#[pyfunction]
fn detection_probability(snr: f64, pfa: f64) -> PyResult<f64> {
    if !(pfa > 0.0 && pfa < 1.0) || snr.is_nan() || snr < 0.0 {
        return Err(PyValueError::new_err("need 0 < pfa < 1 and snr >= 0"));
    }
    Ok(tracking::detection_probability(snr, pfa))
}

#[pymodule]
fn pycograd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(filter_posteriors, m)?)?;
    m.add_function(wrap_pyfunction!(should_transmit, m)?)?;
    m.add_function(wrap_pyfunction!(detection_probability, m)?)?;
    Ok(())
}
