//! CSV and JSON artifacts. Everything written here is a pure function of the
//! report, so identical runs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use muonkit::muon::Trace;
use muonkit::sweep::SweepResult;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::experiment::Experiment;

pub const REPORT_FILE: &str = "report.json";

#[derive(Serialize)]
struct TraceRow {
    t: usize,
    eta: f64,
    b: usize,
    loss: f64,
    grad_norm: f64,
    momentum_gap: f64,
    nesterov_gap: f64,
    ortho_defect: f64,
}

pub fn replica_file(replica: usize) -> String {
    format!("replica_{replica:04}.csv")
}

pub fn sweep_file(coupling: muonkit::sweep::Coupling) -> String {
    format!("sweep_{coupling}.csv")
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Output(format!("{}: {e}", path.display()))
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in &trace.records {
        w.serialize(TraceRow {
            t: r.t,
            eta: r.eta,
            b: r.b,
            loss: r.loss,
            grad_norm: r.grad_norm,
            momentum_gap: r.momentum_gap,
            nesterov_gap: r.nesterov_gap,
            ortho_defect: r.ortho_defect,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))
}

/// Writes one CSV per replica and `report.json` into `dir`; returns the
/// report path.
pub fn write_experiment(dir: &Path, exp: &Experiment) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    for (r, trace) in exp.traces.iter().enumerate() {
        write_trace(&dir.join(replica_file(r)), trace)?;
    }
    let report = dir.join(REPORT_FILE);
    write_json(&report, &exp.report)?;
    Ok(report)
}

#[derive(Serialize)]
struct SweepCsvRow {
    t: usize,
    eta: f64,
    b: f64,
    bound: f64,
    bound_recomputed: f64,
    normalized: f64,
}

pub fn write_sweep(path: &Path, result: &SweepResult) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in &result.rows {
        w.serialize(SweepCsvRow {
            t: r.t,
            eta: r.eta,
            b: r.b,
            bound: r.bound,
            bound_recomputed: r.bound_recomputed,
            normalized: r.normalized,
        })
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(CliError::io(path))
}
