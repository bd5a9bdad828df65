//! Monte Carlo runs and the bound reports built around them.

use muonkit::bounds::{
    a_priori_m0_gap, constants_from, corollary_bound, general_diminishing_bound, theorem1_bound,
    theorem_terms, BoundConstants, CorollaryCase, CorollaryParams, TheoremTerms,
};
use muonkit::muon::{run, Trace};
use muonkit::orthogonalize::OrthoKind;
use muonkit::problems::{ProblemConstants, ProblemInstance};
use muonkit::schedules::{BsKind, BsSchedule, Granularity, LrKind, LrSchedule};
use muonkit::Matrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Largest `‖OᵀO − I‖_F` accepted from the exact polar factor.
pub const ORTHO_TOLERANCE: f64 = 1e-8;
/// Relative slack of the closed-form dominance comparison.
pub const DOMINANCE_SLACK: f64 = 1e-9;
/// Environment variable that overrides the replica worker count.
pub const WORKERS_ENV: &str = "MUON_WORKERS";

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub l: f64,
    pub sigma2: f64,
    pub sigma2_exact: bool,
    pub f_star: f64,
    /// `f(W_0)`.
    pub f_w0: f64,
    /// `‖∇f(W_0)‖_F`.
    pub grad_norm_w0: f64,
}

/// The theorem bound for one choice of `‖M_0 − ∇f(W_0)‖_F`.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub m0_gap: f64,
    pub constants: BoundConstants,
    pub terms: TheoremTerms,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremPair {
    /// `C3` from the replica-mean of the realized `‖M_0 − ∇f(W_0)‖_F`.
    pub realized: TheoremReport,
    /// `C3` from `β‖∇f(W_0)‖_F + (1−β)σ/√b_0`.
    pub a_priori: TheoremReport,
}

/// A closed form next to the exact bound for the same nominal schedule,
/// both with the a-priori constants.
#[derive(Debug, Clone, Serialize)]
pub struct CorollaryReport {
    pub case: CorollaryCase,
    pub value: f64,
    pub theorem: f64,
    pub dominates: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicaSummary {
    pub replica: usize,
    pub seed: u64,
    pub min_grad_norm: f64,
    pub argmin: usize,
    pub final_loss: f64,
    pub m0_gap: f64,
    pub skipped_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunChecks {
    /// `min_t mean_r ‖∇f(W_t)‖_F` against the realized-`C3` theorem bound.
    pub empirical_le_theorem_bound: bool,
    pub empirical_le_a_priori_bound: bool,
    /// Largest orthogonality defect over all replicas and steps.
    pub max_ortho_defect: f64,
    /// Only judged for the exact polar factor.
    pub orthogonality_within_tolerance: Option<bool>,
    pub losses_finite: bool,
    /// Every reported closed form dominates its exact bound.
    pub corollary_dominates: bool,
}

impl RunChecks {
    pub fn all_passed(&self) -> bool {
        self.empirical_le_theorem_bound
            && self.empirical_le_a_priori_bound
            && self.orthogonality_within_tolerance != Some(false)
            && self.losses_finite
            && self.corollary_dominates
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub constants: ConstantsReport,
    pub replicas: Vec<ReplicaSummary>,
    /// `mean_r ‖∇f(W_t)‖_F` for `t = 0 … T−1`.
    pub mean_curve: Vec<f64>,
    /// `min_t` of the mean curve; estimates `min_t E‖∇f(W_t)‖_F`.
    pub min_of_mean: f64,
    pub argmin_of_mean: usize,
    /// `mean_r min_t ‖∇f(W_t)‖_F`, a diagnostic.
    pub mean_of_min: f64,
    pub theorem: TheoremPair,
    pub corollary: Vec<CorollaryReport>,
    /// Term-by-term bound for a diminishing rate with any exponent.
    pub general_diminishing_bound: Option<f64>,
    pub checks: RunChecks,
}

/// Bounds without simulation.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub config: ExperimentConfig,
    pub constants: ConstantsReport,
    /// On the nominal (unrounded, uncapped) batch sizes.
    pub theorem_a_priori: TheoremReport,
    pub corollary: Vec<CorollaryReport>,
    pub general_diminishing_bound: Option<f64>,
}

/// A finished run: the report plus every replica trace, in replica order.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub traces: Vec<Trace>,
}

/// Problem, certified constants and the starting point `W_0 = 0`.
struct Setup {
    problem: ProblemInstance,
    pc: ProblemConstants,
    w0: Matrix,
    constants: ConstantsReport,
    lr: LrSchedule,
    bs: BsSchedule,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let problem = ProblemInstance::generate(&cfg.problem_spec())?;
    let pc = problem.constants()?;
    let (m, n) = problem.shape();
    let w0 = Matrix::zeros(m, n);
    let constants = ConstantsReport {
        l: pc.l,
        sigma2: pc.sigma2,
        sigma2_exact: pc.sigma2_exact,
        f_star: pc.f_star,
        f_w0: problem.loss(&w0)?,
        grad_norm_w0: problem.full_gradient(&w0)?.frobenius_norm(),
    };
    Ok(Setup {
        problem,
        pc,
        w0,
        constants,
        lr: cfg.lr_schedule(),
        bs: cfg.bs_schedule()?,
    })
}

impl Setup {
    fn bound_constants(&self, cfg: &ExperimentConfig, m0_gap: f64) -> Result<BoundConstants> {
        Ok(constants_from(
            &self.pc,
            self.constants.f_w0,
            m0_gap,
            cfg.optimizer.beta,
            self.problem.shape().1,
        )?)
    }

    fn a_priori_gap(&self, cfg: &ExperimentConfig) -> f64 {
        a_priori_m0_gap(
            self.constants.grad_norm_w0,
            cfg.optimizer.beta,
            self.pc.sigma(),
            self.bs.bs_at(0) as f64,
        )
    }
}

/// The closed-form case whose schedules match the configured ones, with its
/// parameters. Epoch granularity and non-default horizons have no match.
pub fn matching_case(
    cfg: &ExperimentConfig,
    lr: &LrSchedule,
    bs: &BsSchedule,
) -> Option<(CorollaryCase, CorollaryParams)> {
    let steps = cfg.run.steps;
    if lr.granularity != Granularity::Step || bs.granularity != Granularity::Step {
        return None;
    }
    let exponential = bs.kind == BsKind::Exponential;
    let pick = |constant, growing| if exponential { growing } else { constant };
    let case = match lr.kind {
        LrKind::Constant => pick(CorollaryCase::I, CorollaryCase::II),
        LrKind::Cosine if lr.horizon == steps => pick(CorollaryCase::III, CorollaryCase::IV),
        LrKind::Polynomial if lr.horizon == steps => pick(CorollaryCase::V, CorollaryCase::VI),
        LrKind::Diminishing if lr.decay_exponent == 0.5 => {
            pick(CorollaryCase::VII, CorollaryCase::VIII)
        }
        _ => return None,
    };
    let mut params = CorollaryParams::new(lr.eta, bs.b as f64, cfg.optimizer.beta);
    if exponential {
        params = params.with_delta(bs.delta);
    }
    if lr.kind == LrKind::Polynomial {
        params = params.with_p(lr.power);
    }
    Some((case, params))
}

fn corollary_reports(
    cfg: &ExperimentConfig,
    s: &Setup,
    c: &BoundConstants,
) -> Result<Vec<CorollaryReport>> {
    let Some((case, params)) = matching_case(cfg, &s.lr, &s.bs) else {
        return Ok(Vec::new());
    };
    let steps = cfg.run.steps;
    let nesterov = cfg.optimizer.nesterov;
    let (etas, batches) = case.sequences(&params, steps)?;
    let theorem = theorem_terms(c, &etas, &batches, params.beta, nesterov)?.total;
    let value = corollary_bound(case, c, &params, steps, nesterov)?.value;
    Ok(vec![CorollaryReport {
        case,
        value,
        theorem,
        dominates: theorem <= value * (1.0 + DOMINANCE_SLACK),
    }])
}

fn general_diminishing_for(
    cfg: &ExperimentConfig,
    s: &Setup,
    c: &BoundConstants,
) -> Result<Option<f64>> {
    let lr = &s.lr;
    if lr.kind != LrKind::Diminishing
        || lr.granularity != Granularity::Step
        || s.bs.granularity != Granularity::Step
    {
        return Ok(None);
    }
    if cfg.run.steps < 2 {
        return Ok(None);
    }
    let mut params = CorollaryParams::new(lr.eta, s.bs.b as f64, cfg.optimizer.beta);
    if s.bs.kind == BsKind::Exponential {
        params = params.with_delta(s.bs.delta);
    }
    Ok(Some(general_diminishing_bound(
        c,
        &params,
        lr.decay_exponent,
        cfg.run.steps,
        cfg.optimizer.nesterov,
    )?))
}

/// Reads [`WORKERS_ENV`]; unset or empty means one worker per core.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs every replica (replica `r` uses seed `base_seed + r`) on up to
/// `workers` threads and reduces the traces into a report.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<Experiment> {
    cfg.validate()?;
    let s = setup(cfg)?;
    let muon = cfg.muon_config()?;
    let steps = cfg.run.steps;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let seeds: Vec<u64> = (0..cfg.run.replicas)
        .map(|r| cfg.run.base_seed.wrapping_add(r as u64))
        .collect();
    let traces: Vec<Trace> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| run(&s.problem, &muon, &s.lr, &s.bs, steps, &s.w0, seed))
            .collect::<muonkit::Result<Vec<_>>>()
    })?;

    let k = traces.len() as f64;
    let mut mean_curve = vec![0.0; steps];
    for trace in &traces {
        for (acc, rec) in mean_curve.iter_mut().zip(&trace.records) {
            *acc += rec.grad_norm;
        }
    }
    mean_curve.iter_mut().for_each(|v| *v /= k);
    let (min_of_mean, argmin_of_mean) =
        mean_curve
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(best, at), (t, &v)| {
                if v < best {
                    (v, t)
                } else {
                    (best, at)
                }
            });

    let replicas: Vec<ReplicaSummary> = traces
        .iter()
        .zip(&seeds)
        .enumerate()
        .map(|(replica, (trace, &seed))| {
            let (min_grad_norm, argmin) = trace.min_grad_norm();
            ReplicaSummary {
                replica,
                seed,
                min_grad_norm,
                argmin,
                final_loss: trace.final_loss,
                m0_gap: trace.m0_gap(),
                skipped_steps: trace.records.iter().filter(|r| r.skipped).count(),
            }
        })
        .collect();
    let mean_of_min = replicas.iter().map(|r| r.min_grad_norm).sum::<f64>() / k;

    let etas = s.lr.rates(steps)?;
    let used_sizes: Vec<f64> = s.bs.sizes(steps).into_iter().map(|b| b as f64).collect();
    let beta = muon.beta;
    let nesterov = muon.nesterov;
    let report_for = |gap: f64| -> Result<TheoremReport> {
        let constants = s.bound_constants(cfg, gap)?;
        let terms = theorem_terms(&constants, &etas, &used_sizes, beta, nesterov)?;
        Ok(TheoremReport {
            m0_gap: gap,
            constants,
            terms,
        })
    };
    let realized_gap = replicas.iter().map(|r| r.m0_gap).sum::<f64>() / k;
    let theorem = TheoremPair {
        realized: report_for(realized_gap)?,
        a_priori: report_for(s.a_priori_gap(cfg))?,
    };
    let corollary = corollary_reports(cfg, &s, &theorem.a_priori.constants)?;
    let general_diminishing_bound = general_diminishing_for(cfg, &s, &theorem.a_priori.constants)?;

    let max_ortho_defect = traces
        .iter()
        .flat_map(|t| t.records.iter().map(|r| r.ortho_defect))
        .fold(0.0, f64::max);
    let checks = RunChecks {
        empirical_le_theorem_bound: min_of_mean <= theorem.realized.terms.total,
        empirical_le_a_priori_bound: min_of_mean <= theorem.a_priori.terms.total,
        max_ortho_defect,
        orthogonality_within_tolerance: (muon.ortho.kind == OrthoKind::ExactPolar)
            .then_some(max_ortho_defect <= ORTHO_TOLERANCE),
        losses_finite: traces
            .iter()
            .all(|t| t.final_loss.is_finite() && t.records.iter().all(|r| r.loss.is_finite())),
        corollary_dominates: corollary.iter().all(|c| c.dominates),
    };

    Ok(Experiment {
        report: ExperimentReport {
            config: cfg.clone(),
            constants: s.constants,
            replicas,
            mean_curve,
            min_of_mean,
            argmin_of_mean,
            mean_of_min,
            theorem,
            corollary,
            general_diminishing_bound,
            checks,
        },
        traces,
    })
}

pub fn bounds_report(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    cfg.validate()?;
    let s = setup(cfg)?;
    let gap = s.a_priori_gap(cfg);
    let constants = s.bound_constants(cfg, gap)?;
    let terms = theorem1_bound(
        &constants,
        &s.lr,
        &s.bs,
        cfg.optimizer.beta,
        cfg.run.steps,
        cfg.optimizer.nesterov,
    )?;
    let corollary = corollary_reports(cfg, &s, &constants)?;
    let general_diminishing_bound = general_diminishing_for(cfg, &s, &constants)?;
    Ok(BoundsReport {
        config: cfg.clone(),
        constants: s.constants,
        theorem_a_priori: TheoremReport {
            m0_gap: gap,
            constants,
            terms,
        },
        corollary,
        general_diminishing_bound,
    })
}

/// The a-priori bound constants of the configured problem; used by sweeps.
pub fn a_priori_constants(cfg: &ExperimentConfig) -> Result<BoundConstants> {
    let s = setup(cfg)?;
    s.bound_constants(cfg, s.a_priori_gap(cfg))
}
