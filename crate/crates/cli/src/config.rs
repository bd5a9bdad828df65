//! Experiment configuration files.
//!
//! A config is a TOML document with the sections below. Unknown keys are
//! rejected everywhere.
//!
//! ```toml
//! [problem]
//! kind = "matrix_quadratic"      # matrix_least_squares | smooth_nonconvex
//! components = 256               # N
//! rows = 8
//! cols = 4
//! seed = 7
//! spread = 1.0                   # optional
//! offset = 1.0                   # optional
//!
//! [optimizer]
//! beta = 0.9
//! nesterov = false               # optional
//! ortho = "exact_polar"          # optional; or "newton_schulz"
//! ns_iterations = 5              # optional
//!
//! [lr]
//! kind = "constant"              # cosine | polynomial | diminishing
//! eta = 0.01
//!
//! [bs]
//! kind = "constant"              # or "exponential" with `delta`
//! b = 16
//!
//! [run]
//! steps = 500
//! replicas = 32
//! base_seed = 0
//! output_dir = "out/quadratic"
//!
//! [sweep]                        # optional, read by `muonkit sweep`
//! lr_scale = 1.0
//! ```

use std::path::{Path, PathBuf};

use muonkit::muon::MuonConfig;
use muonkit::orthogonalize::{OrthoKind, OrthoMethod};
use muonkit::problems::{ProblemKind, ProblemSpec};
use muonkit::schedules::{BsKind, BsSchedule, Granularity, LrKind, LrSchedule};
use muonkit::verify::REFERENCE_DELTA;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    pub optimizer: OptimizerSection,
    pub lr: LrSection,
    pub bs: BsSection,
    pub run: RunSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    pub components: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub spread: f64,
    #[serde(default = "one")]
    pub offset: f64,
    /// Rows of each design matrix (least squares only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub beta: f64,
    #[serde(default)]
    pub nesterov: bool,
    #[serde(default = "exact_polar")]
    pub ortho: OrthoKind,
    #[serde(default = "default_ns_iterations")]
    pub ns_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSection {
    pub kind: LrKind,
    pub eta: f64,
    #[serde(default = "one")]
    pub power: f64,
    #[serde(default = "half")]
    pub decay_exponent: f64,
    /// Defaults to `run.steps` (or the number of epochs it spans).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default = "one_usize")]
    pub steps_per_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsSection {
    pub kind: BsKind,
    pub b: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Defaults to `problem.components`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default)]
    pub granularity: Granularity,
    #[serde(default = "one_usize")]
    pub steps_per_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub steps: usize,
    pub replicas: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

/// Coupling constants for `muonkit sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "one")]
    pub eta_ref: f64,
    #[serde(default = "one")]
    pub lr_scale: f64,
    #[serde(default = "one_sixteenth")]
    pub bs_scale: f64,
    #[serde(default = "sixteen")]
    pub b0: f64,
    #[serde(default = "reference_delta")]
    pub delta: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            eta_ref: 1.0,
            lr_scale: 1.0,
            bs_scale: one_sixteenth(),
            b0: sixteen(),
            delta: REFERENCE_DELTA,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn one_usize() -> usize {
    1
}
fn one_sixteenth() -> f64 {
    1.0 / 16.0
}
fn sixteen() -> f64 {
    16.0
}
fn reference_delta() -> f64 {
    REFERENCE_DELTA
}
fn exact_polar() -> OrthoKind {
    OrthoKind::ExactPolar
}
fn default_ns_iterations() -> usize {
    5
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.steps == 0 {
            return Err(CliError::Config("run.steps must be at least 1".into()));
        }
        if self.run.replicas == 0 {
            return Err(CliError::Config("run.replicas must be at least 1".into()));
        }
        self.problem_spec().validate().map_err(config_err)?;
        self.muon_config()?.validate().map_err(config_err)?;
        self.lr_schedule().validate().map_err(config_err)?;
        self.bs_schedule()?.validate().map_err(config_err)?;
        Ok(())
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        let p = &self.problem;
        ProblemSpec {
            spread: p.spread,
            offset: p.offset,
            samples: p.samples,
            ..ProblemSpec::new(p.kind, p.components, p.rows, p.cols, p.seed)
        }
    }

    pub fn muon_config(&self) -> Result<MuonConfig> {
        let o = &self.optimizer;
        let ortho = match o.ortho {
            OrthoKind::ExactPolar => OrthoMethod::exact(),
            OrthoKind::NewtonSchulz => {
                OrthoMethod::newton_schulz(o.ns_iterations).map_err(config_err)?
            }
        };
        Ok(MuonConfig {
            beta: o.beta,
            nesterov: o.nesterov,
            ortho,
        })
    }

    pub fn lr_schedule(&self) -> LrSchedule {
        let l = &self.lr;
        let horizon = l.horizon.unwrap_or(match l.granularity {
            Granularity::Step => self.run.steps,
            Granularity::Epoch => self.run.steps.div_ceil(l.steps_per_epoch.max(1)),
        });
        LrSchedule {
            kind: l.kind,
            eta: l.eta,
            power: l.power,
            decay_exponent: l.decay_exponent,
            horizon,
            granularity: l.granularity,
            steps_per_epoch: l.steps_per_epoch,
        }
    }

    pub fn bs_schedule(&self) -> Result<BsSchedule> {
        let s = &self.bs;
        let delta = match (s.kind, s.delta) {
            (BsKind::Exponential, Some(d)) => d,
            (BsKind::Exponential, None) => {
                return Err(CliError::Config(
                    "bs.delta is required for an exponential batch".into(),
                ))
            }
            (BsKind::Constant, _) => 1.0,
        };
        Ok(BsSchedule {
            kind: s.kind,
            b: s.b,
            delta,
            granularity: s.granularity,
            steps_per_epoch: s.steps_per_epoch,
            cap: Some(s.cap.unwrap_or(self.problem.components)),
        })
    }
}

fn config_err(e: muonkit::Error) -> CliError {
    CliError::Config(e.to_string())
}
