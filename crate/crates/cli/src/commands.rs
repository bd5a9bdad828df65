//! The subcommands, separated from argument parsing so tests can drive them
//! directly. Each returns the process exit status on success.

use std::io::Write;
use std::path::{Path, PathBuf};

use muonkit::sweep::{sweep, Coupling, SweepTemplate};
use muonkit::verify::{verify_suite, Level, Status};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::experiment::{a_priori_constants, bounds_report, run_experiment, workers_from_env};
use crate::output::{sweep_file, to_json, write_experiment, write_sweep};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;

fn io_out(e: std::io::Error) -> CliError {
    CliError::Output(e.to_string())
}

/// `muonkit run`: simulate, write traces and `report.json`, and exit 1 when
/// any report check fails.
pub fn run(config: &Path, output_dir: Option<&Path>, out: &mut dyn Write) -> Result<u8> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(dir) = output_dir {
        cfg.run.output_dir = dir.to_path_buf();
    }
    let workers = workers_from_env()?;
    let exp = run_experiment(&cfg, workers)?;
    let path = write_experiment(&cfg.run.output_dir, &exp)?;
    let r = &exp.report;
    writeln!(
        out,
        "{} replicas x {} steps: min of mean grad norm {:.6e} (t = {}), mean of min {:.6e}",
        r.replicas.len(),
        cfg.run.steps,
        r.min_of_mean,
        r.argmin_of_mean,
        r.mean_of_min
    )
    .map_err(io_out)?;
    writeln!(
        out,
        "theorem bound: realized C3 {:.6e}, a-priori C3 {:.6e}",
        r.theorem.realized.terms.total, r.theorem.a_priori.terms.total
    )
    .map_err(io_out)?;
    for c in &r.corollary {
        writeln!(
            out,
            "case {}: closed form {:.6e}, exact {:.6e}",
            c.case, c.value, c.theorem
        )
        .map_err(io_out)?;
    }
    writeln!(out, "report: {}", path.display()).map_err(io_out)?;
    Ok(if r.checks.all_passed() {
        EXIT_OK
    } else {
        writeln!(out, "check failure: {:?}", r.checks).map_err(io_out)?;
        EXIT_CHECK_FAILED
    })
}

/// `muonkit bounds`: print the bound report as JSON.
pub fn bounds(config: &Path, out: &mut dyn Write) -> Result<u8> {
    let cfg = ExperimentConfig::load(config)?;
    let report = bounds_report(&cfg)?;
    writeln!(out, "{}", to_json(&report)?).map_err(io_out)?;
    Ok(EXIT_OK)
}

/// Powers of two from `tmin` up to `tmax`.
pub fn doubling_grid(tmin: usize, tmax: usize) -> Result<Vec<usize>> {
    if tmin < 2 || tmax < tmin {
        return Err(CliError::Config(format!(
            "need 2 <= tmin <= tmax, got tmin = {tmin}, tmax = {tmax}"
        )));
    }
    let mut grid = Vec::new();
    let mut t = tmin;
    while t <= tmax {
        grid.push(t);
        match t.checked_mul(2) {
            Some(next) => t = next,
            None => break,
        }
    }
    Ok(grid)
}

/// `muonkit sweep`: write the table to `<output_dir>/sweep_<R>.csv` and print
/// the fitted slopes.
pub fn sweep_cmd(
    config: &Path,
    coupling: Coupling,
    tmin: usize,
    tmax: usize,
    output_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<u8> {
    let cfg = ExperimentConfig::load(config)?;
    let grid = doubling_grid(tmin, tmax)?;
    let s = &cfg.sweep;
    let template = SweepTemplate {
        constants: a_priori_constants(&cfg)?,
        beta: cfg.optimizer.beta,
        nesterov: cfg.optimizer.nesterov,
        eta_ref: s.eta_ref,
        lr_scale: s.lr_scale,
        bs_scale: s.bs_scale,
        b0: s.b0,
        delta: s.delta,
    };
    template
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let result = sweep(&template, coupling, &grid)?;
    let dir: PathBuf = output_dir.map_or_else(|| cfg.run.output_dir.clone(), Path::to_path_buf);
    let path = dir.join(sweep_file(coupling));
    write_sweep(&path, &result)?;
    writeln!(
        out,
        "{coupling} (case {}): slope {:.4}, normalized slope {:.4}, recomputed-D slope {:.4}",
        result.case, result.slope, result.normalized_slope, result.slope_recomputed
    )
    .map_err(io_out)?;
    writeln!(out, "table: {}", path.display()).map_err(io_out)?;
    Ok(EXIT_OK)
}

/// `muonkit verify`: one line per check; exit 1 on any failure. Known
/// closed-form discrepancies are listed but do not fail the run.
pub fn verify(level: Level, json: bool, out: &mut dyn Write) -> Result<u8> {
    let report = verify_suite(level);
    if json {
        writeln!(out, "{}", to_json(&report)?).map_err(io_out)?;
    } else {
        for c in &report.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Discrepancy => "NOTE",
            };
            writeln!(out, "{tag} {:<40} {}", c.name, c.detail).map_err(io_out)?;
        }
        let failed = report.failures().count();
        writeln!(out, "{} checks, {failed} failed", report.checks.len()).map_err(io_out)?;
    }
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
