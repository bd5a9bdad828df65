//! Learning-rate and batch-size schedules.
//!
//! Both schedule types are indexed by the global step `t`. With
//! [`Granularity::Epoch`] the schedule index is `τ = ⌊t / K⌋` for a
//! caller-supplied `K = steps_per_epoch`, and for the horizon-bound rate
//! schedules the horizon is then counted in epochs.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Granularity {
    #[default]
    Step,
    Epoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LrKind {
    Constant,
    Cosine,
    Polynomial,
    Diminishing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LrSchedule {
    pub kind: LrKind,
    /// Peak rate `η`.
    pub eta: f64,
    /// Polynomial decay power `p`.
    pub power: f64,
    /// Diminishing-rate exponent `a` in `η / (τ+1)^a`.
    pub decay_exponent: f64,
    /// `T` for cosine and polynomial decay (in epochs under epoch granularity).
    pub horizon: usize,
    pub granularity: Granularity,
    pub steps_per_epoch: usize,
}

impl LrSchedule {
    fn base(kind: LrKind, eta: f64) -> Self {
        Self {
            kind,
            eta,
            power: 1.0,
            decay_exponent: 0.5,
            horizon: 1,
            granularity: Granularity::Step,
            steps_per_epoch: 1,
        }
    }

    pub fn constant(eta: f64) -> Self {
        Self::base(LrKind::Constant, eta)
    }

    pub fn cosine(eta: f64, horizon: usize) -> Self {
        Self {
            horizon,
            ..Self::base(LrKind::Cosine, eta)
        }
    }

    pub fn polynomial(eta: f64, power: f64, horizon: usize) -> Self {
        Self {
            horizon,
            power,
            ..Self::base(LrKind::Polynomial, eta)
        }
    }

    /// `η / √(τ+1)`.
    pub fn diminishing(eta: f64) -> Self {
        Self::base(LrKind::Diminishing, eta)
    }

    /// `η / (τ+1)^a` for `a ∈ (0, 1]`.
    pub fn diminishing_with(eta: f64, a: f64) -> Self {
        Self {
            decay_exponent: a,
            ..Self::base(LrKind::Diminishing, eta)
        }
    }

    pub fn per_epoch(mut self, steps_per_epoch: usize) -> Self {
        self.granularity = Granularity::Epoch;
        self.steps_per_epoch = steps_per_epoch;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::param("eta", "must be positive and finite"));
        }
        match self.kind {
            LrKind::Polynomial if !(self.power.is_finite() && self.power > 0.0) => {
                return Err(Error::param("p", "must be positive"));
            }
            LrKind::Diminishing if !(self.decay_exponent > 0.0 && self.decay_exponent <= 1.0) => {
                return Err(Error::param("a", "must lie in (0, 1]"));
            }
            _ => {}
        }
        if self.is_horizon_bound() && self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if self.granularity == Granularity::Epoch && self.steps_per_epoch == 0 {
            return Err(Error::param("steps_per_epoch", "must be at least 1"));
        }
        Ok(())
    }

    pub fn is_horizon_bound(&self) -> bool {
        matches!(self.kind, LrKind::Cosine | LrKind::Polynomial)
    }

    fn index(&self, t: usize) -> usize {
        schedule_index(self.granularity, self.steps_per_epoch, t)
    }

    /// Rate at global step `t`. Horizon-bound kinds accept `τ ≤ T` (the rate
    /// at `τ = T` is the terminal value 0) and fail beyond it.
    pub fn lr_at(&self, t: usize) -> Result<f64> {
        let tau = self.index(t);
        let eta = self.eta;
        let rate = match self.kind {
            LrKind::Constant => eta,
            LrKind::Cosine | LrKind::Polynomial => {
                if tau > self.horizon {
                    return Err(Error::Index {
                        t,
                        horizon: self.horizon,
                    });
                }
                let frac = tau as f64 / self.horizon as f64;
                if self.kind == LrKind::Cosine {
                    0.5 * eta * (1.0 + math::cos(frac * PI))
                } else {
                    eta * math::powf(1.0 - frac, self.power)
                }
            }
            LrKind::Diminishing => eta / math::powf(tau as f64 + 1.0, self.decay_exponent),
        };
        Ok(rate.clamp(0.0, eta))
    }

    /// `[lr_at(0), …, lr_at(steps − 1)]`.
    pub fn rates(&self, steps: usize) -> Result<Vec<f64>> {
        (0..steps).map(|t| self.lr_at(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BsKind {
    Constant,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BsSchedule {
    pub kind: BsKind,
    pub b: usize,
    /// Growth factor `δ > 1` for [`BsKind::Exponential`].
    pub delta: f64,
    pub granularity: Granularity,
    pub steps_per_epoch: usize,
    /// Largest batch ever emitted; `None` means unbounded.
    pub cap: Option<usize>,
}

impl BsSchedule {
    pub fn constant(b: usize) -> Self {
        Self {
            kind: BsKind::Constant,
            b,
            delta: 1.0,
            granularity: Granularity::Step,
            steps_per_epoch: 1,
            cap: None,
        }
    }

    pub fn exponential(b: usize, delta: f64) -> Self {
        Self {
            kind: BsKind::Exponential,
            delta,
            ..Self::constant(b)
        }
    }

    pub fn per_epoch(mut self, steps_per_epoch: usize) -> Self {
        self.granularity = Granularity::Epoch;
        self.steps_per_epoch = steps_per_epoch;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::param("b", "must be at least 1"));
        }
        if self.kind == BsKind::Exponential && !(self.delta.is_finite() && self.delta > 1.0) {
            return Err(Error::param("delta", "must be greater than 1"));
        }
        if self.granularity == Granularity::Epoch && self.steps_per_epoch == 0 {
            return Err(Error::param("steps_per_epoch", "must be at least 1"));
        }
        if self.cap == Some(0) {
            return Err(Error::param("cap", "must be at least 1"));
        }
        Ok(())
    }

    /// Real-valued `b · δ^τ`, with no rounding and no cap.
    pub fn nominal_at(&self, t: usize) -> f64 {
        match self.kind {
            BsKind::Constant => self.b as f64,
            BsKind::Exponential => {
                let tau = schedule_index(self.granularity, self.steps_per_epoch, t);
                self.b as f64 * math::powf(self.delta, tau as f64)
            }
        }
    }

    /// Integer batch size actually drawn at step `t`:
    /// `min(cap, round(b · δ^τ))`.
    pub fn bs_at(&self, t: usize) -> usize {
        let raw = match self.kind {
            BsKind::Constant => self.b,
            // saturating float→int cast; inf becomes usize::MAX
            BsKind::Exponential => math::round(self.nominal_at(t)) as usize,
        };
        let capped = match self.cap {
            Some(cap) => raw.min(cap),
            None => raw,
        };
        capped.max(1)
    }

    pub fn sizes(&self, steps: usize) -> Vec<usize> {
        (0..steps).map(|t| self.bs_at(t)).collect()
    }

    pub fn nominal_sizes(&self, steps: usize) -> Vec<f64> {
        (0..steps).map(|t| self.nominal_at(t)).collect()
    }
}

fn schedule_index(granularity: Granularity, steps_per_epoch: usize, t: usize) -> usize {
    match granularity {
        Granularity::Step => t,
        Granularity::Epoch => t / steps_per_epoch.max(1),
    }
}
