//! Upper bounds on `min_t E‖∇f(W_t)‖_F` for Muon.
//!
//! [`theorem_terms`] evaluates the finite-sum bound exactly. Each term is a
//! weighted sum divided by `S = Σ η_t`:
//!
//! | term | numerator                                 | constant |
//! |------|-------------------------------------------|----------|
//! | 1    | 1                                         | `C1`     |
//! | 2    | `Σ η_t²`                                  | `C2`     |
//! | 3    | `Σ η_t β^t`                               | `C3`     |
//! | 4    | `Σ η_t Σ_{i=1}^{t} β^i η_{t−i}`           | `C4`     |
//! | 5    | `Σ η_t Σ_{i=0}^{t} β^i / √b_{t−i}`        | `C5`     |
//! | 6    | `Σ η_t / √b_t` (Nesterov only)            | `C6`     |
//!
//! With Nesterov, terms 3 to 5 carry one extra factor `β`. The inner sums of
//! terms 4 and 5 are carried by the recursions `u_0 = 0`,
//! `u_t = β (η_{t−1} + u_{t−1})` and `v_t = 1/√b_t + β v_{t−1}`, so the whole
//! evaluation is `O(T)`.
//!
//! [`corollary_bound`] gives the eight closed forms for the standard
//! schedule pairs, and [`general_diminishing_bound`] the general-exponent
//! bound for the diminishing rate `η/(t+1)^a`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::problems::ProblemConstants;
use crate::schedules::{BsSchedule, LrSchedule};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundConstants {
    /// `f(W_0) − f*`.
    pub c1: f64,
    /// `nL/2`.
    pub c2: f64,
    /// `2‖M_0 − ∇f(W_0)‖_F √n`.
    pub c3: f64,
    /// `2nL`.
    pub c4: f64,
    /// `2(1−β)σ√n`.
    pub c5: f64,
    /// `2(1−β)σ√n`.
    pub c6: f64,
}

/// Builds the constants from certified problem data. `m0_gap` is
/// `‖M_0 − ∇f(W_0)‖_F`, either realized or from [`a_priori_m0_gap`].
pub fn constants_from(
    pc: &ProblemConstants,
    f_w0: f64,
    m0_gap: f64,
    beta: f64,
    n: usize,
) -> Result<BoundConstants> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::param("beta", "must lie in [0, 1)"));
    }
    if !(m0_gap.is_finite() && m0_gap >= 0.0) {
        return Err(Error::param("m0_gap", "must be finite and non-negative"));
    }
    let gap = f_w0 - pc.f_star;
    let slack = 1e-12 * pc.f_star.abs().max(1.0);
    if !gap.is_finite() || gap < -slack {
        return Err(Error::Inconsistent(alloc::format!(
            "f(W0) = {f_w0} is below f* = {}",
            pc.f_star
        )));
    }
    let nf = n as f64;
    let sqrt_n = math::sqrt(nf);
    let noise = 2.0 * (1.0 - beta) * pc.sigma() * sqrt_n;
    Ok(BoundConstants {
        c1: gap.max(0.0),
        c2: nf * pc.l / 2.0,
        c3: 2.0 * m0_gap * sqrt_n,
        c4: 2.0 * nf * pc.l,
        c5: noise,
        c6: noise,
    })
}

/// `β‖∇f(W_0)‖_F + (1−β)σ/√b_0`, a bound on `E‖M_0 − ∇f(W_0)‖_F` when
/// `M_{−1} = 0`.
pub fn a_priori_m0_gap(grad_norm_w0: f64, beta: f64, sigma: f64, b0: f64) -> f64 {
    beta * grad_norm_w0 + (1.0 - beta) * sigma / math::sqrt(b0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremTerms {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub term4: f64,
    pub term5: f64,
    pub term6: Option<f64>,
    pub total: f64,
}

/// Exact bound for explicit rate and batch sequences of equal length `T`.
pub fn theorem_terms(
    c: &BoundConstants,
    etas: &[f64],
    batches: &[f64],
    beta: f64,
    nesterov: bool,
) -> Result<TheoremTerms> {
    if etas.is_empty() {
        return Err(Error::param("T", "must be at least 1"));
    }
    if etas.len() != batches.len() {
        return Err(Error::param(
            "batches",
            "length must match the rate sequence",
        ));
    }
    if etas.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::param("eta", "rates must be finite and non-negative"));
    }
    if batches.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::param("b", "batch sizes must be positive"));
    }

    let (mut s, mut s2, mut s3, mut s4, mut s5, mut s6) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut beta_t = 1.0;
    let mut u = 0.0;
    let mut v = 0.0;
    for (t, (&eta, &b)) in etas.iter().zip(batches).enumerate() {
        if t > 0 {
            u = beta * (etas[t - 1] + u);
        }
        let inv_sqrt_b = 1.0 / math::sqrt(b);
        v = inv_sqrt_b + beta * v;
        s += eta;
        s2 += eta * eta;
        s3 += eta * beta_t;
        s4 += eta * u;
        s5 += eta * v;
        s6 += eta * inv_sqrt_b;
        beta_t *= beta;
    }
    if s <= 0.0 {
        return Err(Error::Degenerate("sum of learning rates is zero"));
    }
    let shift = if nesterov { beta } else { 1.0 };
    let term1 = c.c1 / s;
    let term2 = c.c2 * s2 / s;
    let term3 = shift * c.c3 * s3 / s;
    let term4 = shift * c.c4 * s4 / s;
    let term5 = shift * c.c5 * s5 / s;
    let term6 = nesterov.then(|| c.c6 * s6 / s);
    let total = term1 + term2 + term3 + term4 + term5 + term6.unwrap_or(0.0);
    Ok(TheoremTerms {
        term1,
        term2,
        term3,
        term4,
        term5,
        term6,
        total,
    })
}

/// [`theorem_terms`] over the first `steps` rates of `lr` and the nominal
/// (real-valued, uncapped) sizes of `bs`.
pub fn theorem1_bound(
    c: &BoundConstants,
    lr: &LrSchedule,
    bs: &BsSchedule,
    beta: f64,
    steps: usize,
    nesterov: bool,
) -> Result<TheoremTerms> {
    lr.validate()?;
    bs.validate()?;
    let etas = lr.rates(steps)?;
    theorem_terms(c, &etas, &bs.nominal_sizes(steps), beta, nesterov)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CorollaryCase {
    /// Constant rate, constant batch.
    I,
    /// Constant rate, exponential batch.
    II,
    /// Cosine rate, constant batch.
    III,
    /// Cosine rate, exponential batch.
    IV,
    /// Polynomial rate, constant batch.
    V,
    /// Polynomial rate, exponential batch.
    VI,
    /// `η/√(t+1)`, constant batch.
    VII,
    /// `η/√(t+1)`, exponential batch.
    VIII,
}

impl CorollaryCase {
    pub const ALL: [CorollaryCase; 8] = [
        CorollaryCase::I,
        CorollaryCase::II,
        CorollaryCase::III,
        CorollaryCase::IV,
        CorollaryCase::V,
        CorollaryCase::VI,
        CorollaryCase::VII,
        CorollaryCase::VIII,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CorollaryCase::I => "i",
            CorollaryCase::II => "ii",
            CorollaryCase::III => "iii",
            CorollaryCase::IV => "iv",
            CorollaryCase::V => "v",
            CorollaryCase::VI => "vi",
            CorollaryCase::VII => "vii",
            CorollaryCase::VIII => "viii",
        }
    }

    pub fn exponential_batch(self) -> bool {
        matches!(
            self,
            CorollaryCase::II | CorollaryCase::IV | CorollaryCase::VI | CorollaryCase::VIII
        )
    }

    pub fn polynomial_rate(self) -> bool {
        matches!(self, CorollaryCase::V | CorollaryCase::VI)
    }

    /// The rate schedule the closed form is stated for.
    pub fn lr_schedule(self, params: &CorollaryParams, steps: usize) -> LrSchedule {
        match self {
            CorollaryCase::I | CorollaryCase::II => LrSchedule::constant(params.eta),
            CorollaryCase::III | CorollaryCase::IV => LrSchedule::cosine(params.eta, steps),
            CorollaryCase::V | CorollaryCase::VI => {
                LrSchedule::polynomial(params.eta, params.p.unwrap_or(1.0), steps)
            }
            CorollaryCase::VII | CorollaryCase::VIII => LrSchedule::diminishing(params.eta),
        }
    }

    /// Rate and real batch sequences of length `steps` for this case.
    pub fn sequences(self, params: &CorollaryParams, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        params.check(self)?;
        let etas = self.lr_schedule(params, steps).rates(steps)?;
        let batches = (0..steps)
            .map(|t| match (self.exponential_batch(), params.delta) {
                (true, Some(delta)) => params.b * math::powi(delta, t as i32),
                _ => params.b,
            })
            .collect();
        Ok((etas, batches))
    }
}

impl core::fmt::Display for CorollaryCase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

impl core::str::FromStr for CorollaryCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorollaryCase::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param("case", alloc::format!("unknown corollary case `{s}`")))
    }
}

/// Schedule parameters shared by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorollaryParams {
    pub eta: f64,
    pub b: f64,
    pub beta: f64,
    /// Growth factor, required by the exponential-batch cases.
    pub delta: Option<f64>,
    /// Decay power, required by the polynomial cases.
    pub p: Option<f64>,
}

impl CorollaryParams {
    pub fn new(eta: f64, b: f64, beta: f64) -> Self {
        Self {
            eta,
            b,
            beta,
            delta: None,
            p: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    fn check(&self, case: CorollaryCase) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::param("eta", "must be positive and finite"));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::param("b", "must be positive and finite"));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::param("beta", "must lie in [0, 1)"));
        }
        if case.exponential_batch() && !matches!(self.delta, Some(d) if d.is_finite() && d > 1.0) {
            return Err(Error::param(
                "delta",
                alloc::format!("case {case} needs delta > 1"),
            ));
        }
        if case.polynomial_rate() && !matches!(self.p, Some(p) if p.is_finite() && p > 0.0) {
            return Err(Error::param("p", alloc::format!("case {case} needs p > 0")));
        }
        Ok(())
    }
}

/// Every derived constant of the closed forms; `d2pp` needs a decay power.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DConstants {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d1p: f64,
    pub d2p: f64,
    pub d1pp: f64,
    pub d2pp: Option<f64>,
}

pub fn d_constants(c: &BoundConstants, eta: f64, beta: f64, p: Option<f64>) -> DConstants {
    let k = 1.0 / (1.0 - beta);
    DConstants {
        d1: c.c1 / eta + k * c.c3,
        d2: c.c2 + k * c.c4,
        d3: k * c.c5,
        d4: k * (c.c5 + c.c6),
        d1p: 2.0 * c.c1 / eta + eta * c.c2 + 2.0 * k * c.c3,
        d2p: 0.75 * c.c2 + 2.0 * k * c.c4,
        d1pp: c.c1 / eta + eta * c.c2 + k * c.c3,
        d2pp: p.map(|p| c.c2 / (2.0 * p + 1.0) + k * c.c4),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorollaryBound {
    pub case: CorollaryCase,
    pub nesterov: bool,
    pub value: f64,
    pub d: DConstants,
}

/// Closed form of `case` at horizon `steps`, with the D-constants taken from
/// `c` at `params.eta`.
pub fn corollary_bound(
    case: CorollaryCase,
    c: &BoundConstants,
    params: &CorollaryParams,
    steps: usize,
    nesterov: bool,
) -> Result<CorollaryBound> {
    params.check(case)?;
    let d = d_constants(c, params.eta, params.beta, params.p);
    let value = corollary_value(case, &d, params, steps, nesterov)?;
    Ok(CorollaryBound {
        case,
        nesterov,
        value,
        d,
    })
}

/// Evaluates the closed form of `case` for already computed D-constants.
/// The rate `params.eta` enters only through the explicit `η` terms, which
/// lets a caller freeze `d` at a reference rate.
pub fn corollary_value(
    case: CorollaryCase,
    d: &DConstants,
    params: &CorollaryParams,
    steps: usize,
    nesterov: bool,
) -> Result<f64> {
    params.check(case)?;
    if steps == 0 {
        return Err(Error::param("T", "must be at least 1"));
    }
    let t = steps as f64;
    let eta = params.eta;
    let x = if nesterov { d.d4 } else { d.d3 };
    let sqrt_b = math::sqrt(params.b);
    // tail of the exponential batch: √δ X / ((√δ − 1) √b)
    let geometric = params.delta.map(|delta| {
        let sd = math::sqrt(delta);
        sd * x / ((sd - 1.0) * sqrt_b)
    });
    let value = match case {
        CorollaryCase::I => d.d1 / t + d.d2 * eta + x / sqrt_b,
        CorollaryCase::II => d.d1 / t + d.d2 * eta + geometric.unwrap() / t,
        CorollaryCase::III => d.d1p / t + d.d2p * eta + 2.0 * x / sqrt_b,
        CorollaryCase::IV => d.d1p / t + d.d2p * eta + 2.0 * geometric.unwrap() / t,
        CorollaryCase::V | CorollaryCase::VI => {
            let p = params.p.unwrap();
            let d2pp = d
                .d2pp
                .ok_or_else(|| Error::param("p", "D-constants were built without a decay power"))?;
            let tail = if case == CorollaryCase::V {
                x / sqrt_b
            } else {
                geometric.unwrap() / t
            };
            (p + 1.0) * (d.d1pp / t + d2pp * eta + tail)
        }
        CorollaryCase::VII | CorollaryCase::VIII => {
            let root = math::sqrt(t);
            let head = d.d1 / (2.0 * root) + eta * d.d2 * math::ln(t) / (2.0 * root);
            let tail = if case == CorollaryCase::VII {
                x / sqrt_b
            } else {
                geometric.unwrap() / root
            };
            head + tail
        }
    };
    Ok(value)
}

/// Term-by-term bound for the diminishing rate `η/(t+1)^a`, `a ∈ (0, 1]`,
/// with a constant (`delta = None`) or exponential batch. Needs `T ≥ 2`.
///
/// Each ratio of the exact bound is bounded separately using
/// `Σ η_t ≥ η (T^{1−a} − 1)/(1−a)` (`η ln T` at `a = 1`) and integral bounds
/// on `Σ η_t²`; the result dominates [`theorem_terms`] for every `T ≥ 2`.
pub fn general_diminishing_bound(
    c: &BoundConstants,
    params: &CorollaryParams,
    a: f64,
    steps: usize,
    nesterov: bool,
) -> Result<f64> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::param("a", "must lie in (0, 1]"));
    }
    if steps < 2 {
        return Err(Error::param(
            "T",
            "the general diminishing form needs T >= 2",
        ));
    }
    let case = if params.delta.is_some() {
        CorollaryCase::VIII
    } else {
        CorollaryCase::VII
    };
    params.check(case)?;
    let t = steps as f64;
    let eta = params.eta;
    let k = 1.0 / (1.0 - params.beta);
    // 1/Σ_{j=1}^{T} j^{−a} ≤ growth
    let growth = if a == 1.0 {
        1.0 / math::ln(t)
    } else {
        (1.0 - a) / (math::powf(t, 1.0 - a) - 1.0)
    };
    let r1 = growth / eta;
    let r2 = if a < 0.5 {
        eta * math::powf(t, 1.0 - 2.0 * a) / (1.0 - 2.0 * a) * growth
    } else if a == 0.5 {
        eta * (1.0 + math::ln(t)) / (2.0 * (math::sqrt(t) - 1.0))
    } else {
        eta * 2.0 * a / (2.0 * a - 1.0) * growth
    };
    let r3 = k * growth;
    let r4 = k * r2;
    let sqrt_b = math::sqrt(params.b);
    let (r5, r6) = match params.delta {
        None => (k / sqrt_b, 1.0 / sqrt_b),
        Some(delta) => {
            let sd = math::sqrt(delta);
            let geo = sd / ((sd - 1.0) * sqrt_b) * growth;
            (k * geo, geo)
        }
    };
    let mut total = c.c1 * r1 + c.c2 * r2 + c.c3 * r3 + c.c4 * r4 + c.c5 * r5;
    if nesterov {
        total += c.c6 * r6;
    }
    Ok(total)
}

/// Least-squares slope of `ln(value)` against `ln(T)`.
pub fn slope_estimate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::param("points", "need at least 3 (T, value) pairs"));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || points[0].0 <= 0.0 {
        return Err(Error::param(
            "points",
            "T must be positive and strictly increasing",
        ));
    }
    if points.iter().any(|&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::param("points", "values must be positive and finite"));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(t, _)| math::ln(t)).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, v)| math::ln(v)).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
