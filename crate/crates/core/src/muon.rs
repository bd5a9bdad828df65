//! The Muon optimizer.
//!
//! One step, from momentum buffer `M_{t−1}` (zero before the first step) and
//! stochastic gradient `G_t`:
//!
//! ```text
//! M_t     = β M_{t−1} + (1 − β) G_t
//! C_t     = β M_t + (1 − β) G_t      (Nesterov)   or   C_t = M_t
//! O_t     = polar(C_t)
//! W_{t+1} = W_t − η_t O_t
//! ```
//!
//! When `C_t` is exactly zero the direction is undefined; the step then leaves
//! `W` unchanged and sets [`StepDiagnostics::skipped`].

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::orthogonalize::{orthogonality_defect, orthogonalize, OrthoMethod};
use crate::problems::ProblemInstance;
use crate::schedules::{BsSchedule, LrSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MuonConfig {
    pub beta: f64,
    pub nesterov: bool,
    pub ortho: OrthoMethod,
}

impl MuonConfig {
    pub fn new(beta: f64, nesterov: bool) -> Self {
        Self {
            beta,
            nesterov,
            ortho: OrthoMethod::exact(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::param("beta", "must lie in [0, 1)"));
        }
        self.ortho.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuonState {
    pub t: usize,
    pub w: Matrix,
    /// `M_{t−1}`.
    pub m_prev: Matrix,
}

impl MuonState {
    pub fn new(w0: Matrix) -> Self {
        let m_prev = Matrix::zeros(w0.rows(), w0.cols());
        Self {
            t: 0,
            w: w0,
            m_prev,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub m: Matrix,
    pub c: Matrix,
    /// Zero matrix when the step was skipped.
    pub o: Matrix,
    pub skipped: bool,
}

pub fn muon_step(
    state: &MuonState,
    cfg: &MuonConfig,
    g: &Matrix,
    eta: f64,
) -> Result<(MuonState, StepDiagnostics)> {
    cfg.validate()?;
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::param("eta", "must be finite and non-negative"));
    }
    if g.shape() != state.w.shape() || state.m_prev.shape() != state.w.shape() {
        return Err(Error::Dimension {
            op: "muon_step",
            left: state.w.shape(),
            right: g.shape(),
        });
    }
    let beta = cfg.beta;
    let m = Matrix::lincomb(beta, &state.m_prev, 1.0 - beta, g)?;
    let c = if cfg.nesterov {
        Matrix::lincomb(beta, &m, 1.0 - beta, g)?
    } else {
        m.clone()
    };
    let (w, o, skipped) = if c.is_zero() {
        (state.w.clone(), Matrix::zeros(c.rows(), c.cols()), true)
    } else {
        let o = orthogonalize(&c, &cfg.ortho)?;
        (Matrix::lincomb(1.0, &state.w, -eta, &o)?, o, false)
    };
    let next = MuonState {
        t: state.t + 1,
        w,
        m_prev: m.clone(),
    };
    Ok((next, StepDiagnostics { m, c, o, skipped }))
}

/// Quantities observed at step `t`, all evaluated at the pre-update `W_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub t: usize,
    pub eta: f64,
    pub b: usize,
    pub loss: f64,
    pub grad_norm: f64,
    /// `‖M_t − ∇f(W_t)‖_F`.
    pub momentum_gap: f64,
    /// `‖C_t − ∇f(W_t)‖_F`.
    pub nesterov_gap: f64,
    /// `‖O_tᵀO_t − I‖_F`, 0 on skipped steps.
    pub ortho_defect: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<StepRecord>,
    pub final_w: Matrix,
    /// `f(W_T)`.
    pub final_loss: f64,
}

impl Trace {
    /// Realized `‖M_0 − ∇f(W_0)‖_F`.
    pub fn m0_gap(&self) -> f64 {
        self.records[0].momentum_gap
    }

    /// `f(W_0), …, f(W_T)`.
    pub fn losses(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.records.iter().map(|r| r.loss).collect();
        out.push(self.final_loss);
        out
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_norm).collect()
    }

    /// `(min_t ‖∇f(W_t)‖_F, argmin)`, first occurrence on ties.
    pub fn min_grad_norm(&self) -> (f64, usize) {
        self.records
            .iter()
            .fold((f64::INFINITY, 0), |(best, at), r| {
                if r.grad_norm < best {
                    (r.grad_norm, r.t)
                } else {
                    (best, at)
                }
            })
    }
}

/// Runs `steps` iterations from `w0`, drawing batches from a ChaCha8 stream
/// seeded with `seed`.
pub fn run(
    problem: &ProblemInstance,
    cfg: &MuonConfig,
    lr: &LrSchedule,
    bs: &BsSchedule,
    steps: usize,
    w0: &Matrix,
    seed: u64,
) -> Result<Trace> {
    cfg.validate()?;
    lr.validate()?;
    bs.validate()?;
    if steps == 0 {
        return Err(Error::param("T", "must be at least 1"));
    }
    if w0.shape() != problem.shape() {
        return Err(Error::Dimension {
            op: "run",
            left: problem.shape(),
            right: w0.shape(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = MuonState::new(w0.clone());
    let mut records = Vec::with_capacity(steps);
    for t in 0..steps {
        let eta = lr.lr_at(t)?;
        let b = bs.bs_at(t);
        let batch = problem.sample_batch(&mut rng, b)?;
        let g = problem.minibatch_gradient(&state.w, &batch)?;
        let full = problem.full_gradient(&state.w)?;
        let loss = problem.loss(&state.w)?;
        let (next, diag) = muon_step(&state, cfg, &g, eta)?;
        records.push(StepRecord {
            t,
            eta,
            b,
            loss,
            grad_norm: full.frobenius_norm(),
            momentum_gap: diag.m.distance(&full)?,
            nesterov_gap: diag.c.distance(&full)?,
            ortho_defect: if diag.skipped {
                0.0
            } else {
                orthogonality_defect(&diag.o)
            },
            skipped: diag.skipped,
        });
        state = next;
    }
    let final_loss = problem.loss(&state.w)?;
    Ok(Trace {
        records,
        final_w: state.w,
        final_loss,
    })
}
