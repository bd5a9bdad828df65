//! Convergence-rate sweeps: couple the rate and batch size to the step budget
//! `T` and follow the corollary bound across a grid of budgets.
//!
//! | coupling | rate                  | batch           | closed form |
//! |----------|-----------------------|-----------------|-------------|
//! | R1       | `c_η / T`             | `c_b · T`       | case i      |
//! | R2       | `c_η / T`             | `c_b · T²`      | case i      |
//! | R3       | `c_η / T`             | `b_0 · δ^t`     | case ii     |
//! | R4       | `c_η / √(t+1)`        | `c_b · T`       | case vii    |
//! | R5       | `c_η / √(t+1)`        | `b_0 · δ^t`     | case viii   |
//!
//! The D-constants contain `C1/η`. Under `η = c_η/T` that part grows like
//! `T` and cancels the `1/T` in front of it, so the bound recomputed at the
//! coupled rate flattens at `C1/c_η` and shows no rate at all. The `bound`
//! column therefore holds the D-constants fixed at the template's reference
//! rate and lets the coupled `η` and `b` enter only through the explicit
//! `η`, `1/√b` and `1/T` terms; this is the reading under which the
//! asymptotic rates are stated. The recomputed value is kept alongside as
//! `bound_recomputed`.

use alloc::vec::Vec;

use crate::bounds::{
    corollary_bound, corollary_value, d_constants, slope_estimate, BoundConstants, CorollaryCase,
    CorollaryParams,
};
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Coupling {
    R1,
    R2,
    R3,
    R4,
    R5,
}

impl Coupling {
    pub const ALL: [Coupling; 5] = [
        Coupling::R1,
        Coupling::R2,
        Coupling::R3,
        Coupling::R4,
        Coupling::R5,
    ];

    pub fn case(self) -> CorollaryCase {
        match self {
            Coupling::R1 | Coupling::R2 => CorollaryCase::I,
            Coupling::R3 => CorollaryCase::II,
            Coupling::R4 => CorollaryCase::VII,
            Coupling::R5 => CorollaryCase::VIII,
        }
    }

    /// R4 and R5 are judged on `bound · √T / ln T` rather than on the bound.
    pub fn uses_log_normalization(self) -> bool {
        matches!(self, Coupling::R4 | Coupling::R5)
    }

    pub fn label(self) -> &'static str {
        match self {
            Coupling::R1 => "R1",
            Coupling::R2 => "R2",
            Coupling::R3 => "R3",
            Coupling::R4 => "R4",
            Coupling::R5 => "R5",
        }
    }
}

impl core::fmt::Display for Coupling {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

impl core::str::FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Coupling::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param("coupling", alloc::format!("unknown coupling `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepTemplate {
    pub constants: BoundConstants,
    pub beta: f64,
    pub nesterov: bool,
    /// Rate at which the D-constants are frozen.
    pub eta_ref: f64,
    /// `c_η`.
    pub lr_scale: f64,
    /// `c_b`.
    pub bs_scale: f64,
    /// Initial batch of the exponential couplings.
    pub b0: f64,
    pub delta: f64,
}

impl SweepTemplate {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta_ref", self.eta_ref),
            ("lr_scale", self.lr_scale),
            ("bs_scale", self.bs_scale),
            ("b0", self.b0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be positive and finite"));
            }
        }
        if !(self.delta.is_finite() && self.delta > 1.0) {
            return Err(Error::param("delta", "must be greater than 1"));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::param("beta", "must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Corollary parameters for `coupling` at budget `steps`.
    pub fn params(&self, coupling: Coupling, steps: usize) -> CorollaryParams {
        let t = steps as f64;
        let (eta, b, delta) = match coupling {
            Coupling::R1 => (self.lr_scale / t, self.bs_scale * t, None),
            Coupling::R2 => (self.lr_scale / t, self.bs_scale * t * t, None),
            Coupling::R3 => (self.lr_scale / t, self.b0, Some(self.delta)),
            Coupling::R4 => (self.lr_scale, self.bs_scale * t, None),
            Coupling::R5 => (self.lr_scale, self.b0, Some(self.delta)),
        };
        CorollaryParams {
            eta,
            b,
            beta: self.beta,
            delta,
            p: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub t: usize,
    pub eta: f64,
    pub b: f64,
    pub bound: f64,
    pub bound_recomputed: f64,
    /// `bound · √T / ln T`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    pub coupling: Coupling,
    pub case: CorollaryCase,
    pub rows: Vec<SweepRow>,
    pub slope: f64,
    pub slope_recomputed: f64,
    pub normalized_slope: f64,
}

pub fn sweep(template: &SweepTemplate, coupling: Coupling, grid: &[usize]) -> Result<SweepResult> {
    template.validate()?;
    if grid.is_empty() {
        return Err(Error::param("grid", "must not be empty"));
    }
    if grid[0] < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "grid",
            "must be strictly increasing with T >= 2",
        ));
    }
    let case = coupling.case();
    let frozen = d_constants(&template.constants, template.eta_ref, template.beta, None);
    let mut rows = Vec::with_capacity(grid.len());
    for &steps in grid {
        let params = template.params(coupling, steps);
        let bound = corollary_value(case, &frozen, &params, steps, template.nesterov)?;
        let bound_recomputed =
            corollary_bound(case, &template.constants, &params, steps, template.nesterov)?.value;
        let t = steps as f64;
        rows.push(SweepRow {
            t: steps,
            eta: params.eta,
            b: params.b,
            bound,
            bound_recomputed,
            normalized: bound * math::sqrt(t) / math::ln(t),
        });
    }
    let fit = |f: fn(&SweepRow) -> f64| -> Result<f64> {
        if rows.len() < 3 {
            return Ok(f64::NAN);
        }
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t as f64, f(r))).collect();
        slope_estimate(&pts)
    };
    let slope = fit(|r| r.bound)?;
    let slope_recomputed = fit(|r| r.bound_recomputed)?;
    let normalized_slope = fit(|r| r.normalized)?;
    Ok(SweepResult {
        coupling,
        case,
        rows,
        slope,
        slope_recomputed,
        normalized_slope,
    })
}

/// `2^lo, 2^(lo+1), …, 2^hi`.
pub fn power_of_two_grid(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}
