//! Seeded Monte Carlo execution of the four experiments and CSV/JSON output.
//!
//! Trial `i` of a run with base seed `s` draws from ChaCha8 seeded with `s`
//! on stream `i`, so changing the trial count never perturbs earlier
//! trials. Trials run in parallel and are reduced in index order, which
//! keeps every emitted number bit-identical across runs.

pub mod config;
mod experiments;
mod table;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{Config, ExperimentKind};
pub use experiments::*;
pub use table::{Cell, Table};

use crate::error::{Error, Result};

/// Stream reserved for draws shared by every trial (network layouts).
pub const SHARED_STREAM: u64 = u64::MAX;

pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    /// Accumulates in iteration order.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut a = Accum::default();
        values.into_iter().for_each(|v| a.add(v));
        a.stat()
    }

    /// Root-mean-square of values given as squares.
    pub fn rms_of(squares: impl IntoIterator<Item = f64>) -> Self {
        let mut a = Accum::default();
        squares.into_iter().for_each(|v| a.add(v));
        a.rms()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub elapsed_s: f64,
    pub summary: serde_json::Value,
    pub outputs: Vec<String>,
}

/// Tables written for one experiment, keyed by file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub elapsed_s: f64,
    pub summary: serde_json::Value,
    pub tables: Vec<(String, Table)>,
}

impl ExperimentOutput {
    pub fn primary_table(&self) -> &Table {
        &self.tables[0].1
    }
}

/// Runs one experiment of a validated config.
pub fn run_experiment(config: &Config, kind: ExperimentKind) -> Result<ExperimentOutput> {
    config.validate()?;
    let trials = config.trials_for(kind)?;
    let seed = config.seed;
    let start = Instant::now();
    let (summary, tables) = match kind {
        ExperimentKind::Spectrum => {
            let r = run_spectrum_experiment(config.spectrum()?, seed, trials)?;
            (r.summary(config.spectrum()?), r.tables(seed))
        }
        ExperimentKind::Tracking => {
            let r = run_tracking_experiment(config.tracking()?, seed, trials)?;
            (r.summary(), r.tables(seed))
        }
        ExperimentKind::PassiveSelection => {
            let r = run_passive_selection_experiment(config.passive_selection()?)?;
            (r.summary(), r.tables(seed))
        }
        ExperimentKind::Symbiotic => {
            let r = run_symbiotic_experiment(config.symbiotic()?, seed, trials)?;
            (r.summary(), r.tables(seed))
        }
    };
    Ok(ExperimentOutput {
        kind,
        seed,
        trials,
        elapsed_s: start.elapsed().as_secs_f64(),
        summary,
        tables,
    })
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    config: serde_json::Value,
    runs: &'a [RunReport],
}

/// Writes each table as `<out>/<stem>.csv` and a `report.json` echoing the
/// resolved config. Returns the reports.
pub fn write_outputs(out_dir: &Path, config: &Config, outputs: &[ExperimentOutput]) -> Result<Vec<RunReport>> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut reports = Vec::with_capacity(outputs.len());
    for o in outputs {
        let mut files = Vec::new();
        for (stem, table) in &o.tables {
            let path: PathBuf = out_dir.join(format!("{stem}.csv"));
            table.write_csv(&path)?;
            files.push(path.display().to_string());
        }
        reports.push(RunReport {
            experiment: o.kind.as_str().to_string(),
            seed: o.seed,
            trials: o.trials,
            elapsed_s: o.elapsed_s,
            summary: o.summary.clone(),
            outputs: files,
        });
    }
    let report = ReportFile {
        config: config.to_json_value(),
        runs: &reports,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(out_dir.join("report.json"), text + "\n")?;
    Ok(reports)
}
