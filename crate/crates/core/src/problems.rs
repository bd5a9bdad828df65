//! Finite-sum synthetic objectives `f(W) = (1/N) Σ_i f_i(W)` with certified
//! smoothness and variance constants, and the minibatch gradient oracle.
//!
//! | kind                | `f_i(W)`                              | `L_i`              |
//! |---------------------|---------------------------------------|--------------------|
//! | `MatrixQuadratic`   | `½‖W − T_i‖_F²`                       | 1                  |
//! | `MatrixLeastSquares`| `½‖X_i W − Y_i‖_F²`                   | `λ_max(X_iᵀX_i)`   |
//! | `SmoothNonconvex`   | `Σ_jk s(W_jk − T_i,jk)`, `s(x)=x²/(1+x²)` | 2              |
//!
//! The constant `L` is the mean of the `L_i`. The variance constant `σ²`
//! bounds `(1/N) Σ ‖∇f_i(W) − ∇f(W)‖_F²`, the single-sample variance of the
//! uniform oracle. It is exact for the quadratic; for the other kinds it is
//! [`SIGMA2_SAFETY`] times the largest value seen over [`PROBE_COUNT`] probe
//! points drawn uniformly from a ball of radius [`PROBE_RADIUS`] around the
//! data centre, capped for the nonconvex kind by the analytic bound
//! `4 · 0.65² · m · n` (`|s'| ≤ 0.65`).

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::svd::{spectral_norm, svd};

pub const PROBE_COUNT: usize = 64;
pub const PROBE_RADIUS: f64 = 10.0;
pub const SIGMA2_SAFETY: f64 = 1.5;
/// Upper bound on `|s'(x)| = |2x / (1+x²)²|` (attained near `x = 1/√3`).
pub const NONCONVEX_SLOPE_BOUND: f64 = 0.65;

const PROBE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const GRID_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProblemKind {
    MatrixQuadratic,
    MatrixLeastSquares,
    SmoothNonconvex,
}

/// Generation parameters. Targets are `offset · G_0 + spread · G_i` with `G`
/// standard Gaussian; least squares uses `X_i` with `N(0, 1/k)` entries and
/// `Y_i = X_i W_true + spread · E_i` where `W_true = offset · G_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub components: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
    pub spread: f64,
    pub offset: f64,
    /// Rows `k` of each `X_i` (least squares only); defaults to `rows`.
    pub samples: Option<usize>,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, components: usize, rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            kind,
            components,
            rows,
            cols,
            seed,
            spread: 1.0,
            offset: 1.0,
            samples: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::param("components", "must be at least 1"));
        }
        if self.cols == 0 || self.rows < self.cols {
            return Err(Error::param("rows/cols", "need rows >= cols >= 1"));
        }
        if !(self.spread.is_finite() && self.spread >= 0.0) {
            return Err(Error::param("spread", "must be finite and non-negative"));
        }
        if !self.offset.is_finite() {
            return Err(Error::param("offset", "must be finite"));
        }
        if self.samples == Some(0) {
            return Err(Error::param("samples", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Payload {
    Targets { targets: Vec<Matrix>, mean: Matrix },
    Regression { xs: Vec<Matrix>, ys: Vec<Matrix> },
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    kind: ProblemKind,
    rows: usize,
    cols: usize,
    seed: u64,
    payload: Payload,
}

/// Certified Assumption-style constants of an instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProblemConstants {
    /// Mean component smoothness `(1/N) Σ L_i`.
    pub l: f64,
    /// Variance bound `σ²` of the single-sample oracle.
    pub sigma2: f64,
    /// Whether `sigma2` is exact rather than probe-certified.
    pub sigma2_exact: bool,
    pub f_star: f64,
    pub minimizer: Option<Matrix>,
}

impl ProblemConstants {
    pub fn sigma(&self) -> f64 {
        math::sqrt(self.sigma2)
    }
}

/// Component indices drawn i.i.d. uniformly with replacement (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    pub indices: Vec<usize>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[inline]
fn s(x: f64) -> f64 {
    let x2 = x * x;
    x2 / (1.0 + x2)
}

#[inline]
fn ds(x: f64) -> f64 {
    let d = 1.0 + x * x;
    2.0 * x / (d * d)
}

fn mean_of(ms: &[Matrix]) -> Matrix {
    let mut acc = Matrix::zeros(ms[0].rows(), ms[0].cols());
    for m in ms {
        acc.axpy(1.0, m).expect("uniform shapes");
    }
    acc.scaled(1.0 / ms.len() as f64)
}

impl ProblemInstance {
    pub fn generate(spec: &ProblemSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let (m, n) = (spec.rows, spec.cols);
        let center = Matrix::gaussian(m, n, &mut rng).scaled(spec.offset);
        let mut inst = match spec.kind {
            ProblemKind::MatrixQuadratic | ProblemKind::SmoothNonconvex => {
                let targets: Vec<Matrix> = (0..spec.components)
                    .map(|_| {
                        let g = Matrix::gaussian(m, n, &mut rng);
                        Matrix::lincomb(1.0, &center, spec.spread, &g).expect("same shape")
                    })
                    .collect();
                Self::from_targets(spec.kind, targets)?
            }
            ProblemKind::MatrixLeastSquares => {
                let k = spec.samples.unwrap_or(m);
                let scale = 1.0 / math::sqrt(k as f64);
                let mut xs = Vec::with_capacity(spec.components);
                let mut ys = Vec::with_capacity(spec.components);
                for _ in 0..spec.components {
                    let x = Matrix::gaussian(k, m, &mut rng).scaled(scale);
                    let noise = Matrix::gaussian(k, n, &mut rng);
                    let y = x.matmul(&center)?;
                    ys.push(Matrix::lincomb(1.0, &y, spec.spread, &noise)?);
                    xs.push(x);
                }
                Self::least_squares(xs, ys)?
            }
        };
        inst.seed = spec.seed;
        Ok(inst)
    }

    /// Quadratic or nonconvex instance from explicit targets.
    pub fn from_targets(kind: ProblemKind, targets: Vec<Matrix>) -> Result<Self> {
        if kind == ProblemKind::MatrixLeastSquares {
            return Err(Error::param("kind", "least squares needs (X, Y) pairs"));
        }
        let first = targets
            .first()
            .ok_or_else(|| Error::param("targets", "need at least one"))?;
        let (rows, cols) = first.shape();
        if rows < cols {
            return Err(Error::param("rows/cols", "need rows >= cols"));
        }
        for t in &targets {
            if t.shape() != (rows, cols) {
                return Err(Error::Dimension {
                    op: "from_targets",
                    left: (rows, cols),
                    right: t.shape(),
                });
            }
            if !t.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        let mean = mean_of(&targets);
        Ok(Self {
            kind,
            rows,
            cols,
            seed: 0,
            payload: Payload::Targets { targets, mean },
        })
    }

    pub fn least_squares(xs: Vec<Matrix>, ys: Vec<Matrix>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::param("xs/ys", "need equally many, at least one"));
        }
        let (k, rows) = xs[0].shape();
        let cols = ys[0].cols();
        if rows < cols {
            return Err(Error::param("rows/cols", "need rows >= cols"));
        }
        for (x, y) in xs.iter().zip(&ys) {
            if x.shape() != (k, rows) || y.shape() != (k, cols) {
                return Err(Error::Dimension {
                    op: "least_squares",
                    left: x.shape(),
                    right: y.shape(),
                });
            }
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            kind: ProblemKind::MatrixLeastSquares,
            rows,
            cols,
            seed: 0,
            payload: Payload::Regression { xs, ys },
        })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn components(&self) -> usize {
        match &self.payload {
            Payload::Targets { targets, .. } => targets.len(),
            Payload::Regression { xs, .. } => xs.len(),
        }
    }

    /// Mean target `T̄` for the target-based kinds.
    pub fn mean_target(&self) -> Option<&Matrix> {
        match &self.payload {
            Payload::Targets { mean, .. } => Some(mean),
            Payload::Regression { .. } => None,
        }
    }

    fn check(&self, w: &Matrix) -> Result<()> {
        if w.shape() != (self.rows, self.cols) {
            return Err(Error::Dimension {
                op: "objective",
                left: (self.rows, self.cols),
                right: w.shape(),
            });
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.components() {
            return Err(Error::param("index", "component index out of range"));
        }
        Ok(())
    }

    pub fn component_loss(&self, i: usize, w: &Matrix) -> Result<f64> {
        self.check(w)?;
        self.check_index(i)?;
        Ok(self.component_loss_unchecked(i, w))
    }

    fn component_loss_unchecked(&self, i: usize, w: &Matrix) -> f64 {
        match (&self.payload, self.kind) {
            (Payload::Targets { targets, .. }, ProblemKind::MatrixQuadratic) => {
                let d = w.distance(&targets[i]).expect("checked");
                0.5 * d * d
            }
            (Payload::Targets { targets, .. }, _) => w
                .as_slice()
                .iter()
                .zip(targets[i].as_slice())
                .map(|(a, b)| s(a - b))
                .sum(),
            (Payload::Regression { xs, ys }, _) => {
                let r = xs[i]
                    .matmul(w)
                    .expect("checked")
                    .sub(&ys[i])
                    .expect("checked");
                let nr = r.frobenius_norm();
                0.5 * nr * nr
            }
        }
    }

    pub fn component_gradient(&self, i: usize, w: &Matrix) -> Result<Matrix> {
        self.check(w)?;
        self.check_index(i)?;
        Ok(self.component_gradient_unchecked(i, w))
    }

    fn component_gradient_unchecked(&self, i: usize, w: &Matrix) -> Matrix {
        match (&self.payload, self.kind) {
            (Payload::Targets { targets, .. }, ProblemKind::MatrixQuadratic) => {
                w.sub(&targets[i]).expect("checked")
            }
            (Payload::Targets { targets, .. }, _) => {
                let t = targets[i].as_slice();
                let data = w.as_slice().iter().zip(t).map(|(a, b)| ds(a - b)).collect();
                Matrix::from_vec(self.rows, self.cols, data).expect("finite")
            }
            (Payload::Regression { xs, ys }, _) => {
                let r = xs[i]
                    .matmul(w)
                    .expect("checked")
                    .sub(&ys[i])
                    .expect("checked");
                xs[i].tr_matmul(&r).expect("checked")
            }
        }
    }

    /// `f(W) = (1/N) Σ f_i(W)`.
    pub fn loss(&self, w: &Matrix) -> Result<f64> {
        self.check(w)?;
        let n = self.components();
        Ok((0..n)
            .map(|i| self.component_loss_unchecked(i, w))
            .sum::<f64>()
            / n as f64)
    }

    pub fn full_gradient(&self, w: &Matrix) -> Result<Matrix> {
        self.check(w)?;
        if let (Payload::Targets { mean, .. }, ProblemKind::MatrixQuadratic) =
            (&self.payload, self.kind)
        {
            return w.sub(mean);
        }
        let n = self.components();
        let mut acc = Matrix::zeros(self.rows, self.cols);
        for i in 0..n {
            acc.axpy(1.0, &self.component_gradient_unchecked(i, w))?;
        }
        Ok(acc.scaled(1.0 / n as f64))
    }

    /// `(1/b) Σ_{i ∈ batch} ∇f_i(W)`, repeated indices counted with
    /// multiplicity.
    pub fn minibatch_gradient(&self, w: &Matrix, batch: &SampleBatch) -> Result<Matrix> {
        self.check(w)?;
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        for &i in &batch.indices {
            self.check_index(i)?;
        }
        let mut acc = Matrix::zeros(self.rows, self.cols);
        for &i in &batch.indices {
            acc.axpy(1.0, &self.component_gradient_unchecked(i, w))?;
        }
        Ok(acc.scaled(1.0 / batch.len() as f64))
    }

    /// `b` uniform draws with replacement from `rng`.
    pub fn sample_batch<R: Rng + ?Sized>(&self, rng: &mut R, b: usize) -> Result<SampleBatch> {
        if b == 0 {
            return Err(Error::EmptyBatch);
        }
        let n = self.components();
        Ok(SampleBatch {
            indices: (0..b).map(|_| rng.random_range(0..n)).collect(),
        })
    }

    /// `(1/N) Σ ‖∇f_i(W) − ∇f(W)‖_F²`: the variance of a single uniform draw.
    pub fn single_sample_variance(&self, w: &Matrix) -> Result<f64> {
        let g = self.full_gradient(w)?;
        let n = self.components();
        let total: f64 = (0..n)
            .map(|i| {
                let d = self
                    .component_gradient_unchecked(i, w)
                    .distance(&g)
                    .expect("checked");
                d * d
            })
            .sum();
        Ok(total / n as f64)
    }

    pub fn constants(&self) -> Result<ProblemConstants> {
        match (&self.payload, self.kind) {
            (Payload::Targets { targets, mean }, ProblemKind::MatrixQuadratic) => {
                let sigma2 = targets
                    .iter()
                    .map(|t| {
                        let d = t.distance(mean).expect("same shape");
                        d * d
                    })
                    .sum::<f64>()
                    / targets.len() as f64;
                Ok(ProblemConstants {
                    l: 1.0,
                    sigma2,
                    sigma2_exact: true,
                    f_star: self.loss(mean)?,
                    minimizer: Some(mean.clone()),
                })
            }
            (Payload::Targets { mean, .. }, _) => {
                let minimizer = self.nonconvex_minimizer();
                let cap = 4.0
                    * NONCONVEX_SLOPE_BOUND
                    * NONCONVEX_SLOPE_BOUND
                    * (self.rows * self.cols) as f64;
                let probed = SIGMA2_SAFETY * self.probe_variance(mean)?;
                Ok(ProblemConstants {
                    l: 2.0,
                    sigma2: probed.min(cap),
                    sigma2_exact: false,
                    f_star: self.loss(&minimizer)?,
                    minimizer: Some(minimizer),
                })
            }
            (Payload::Regression { xs, .. }, _) => {
                let mut l = 0.0;
                for x in xs {
                    let s = spectral_norm(x)?;
                    l += s * s;
                }
                l /= xs.len() as f64;
                let minimizer = self.least_squares_minimizer()?;
                let sigma2 = SIGMA2_SAFETY * self.probe_variance(&minimizer)?;
                Ok(ProblemConstants {
                    l,
                    sigma2,
                    sigma2_exact: false,
                    f_star: self.loss(&minimizer)?,
                    minimizer: Some(minimizer),
                })
            }
        }
    }

    /// Deterministic probe points: `center` itself plus [`PROBE_COUNT`]
    /// uniform draws from the ball of radius [`PROBE_RADIUS`] around it.
    pub fn probe_points(&self, center: &Matrix) -> Vec<Matrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ PROBE_SEED_SALT);
        let dim = (self.rows * self.cols) as f64;
        let mut out = Vec::with_capacity(PROBE_COUNT + 1);
        out.push(center.clone());
        for _ in 0..PROBE_COUNT {
            let dir = Matrix::gaussian(self.rows, self.cols, &mut rng);
            let u: f64 = rng.random();
            let r = PROBE_RADIUS * math::powf(u, 1.0 / dim);
            let scale = r / dir.frobenius_norm();
            out.push(Matrix::lincomb(1.0, center, scale, &dir).expect("same shape"));
        }
        out
    }

    fn probe_variance(&self, center: &Matrix) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for w in self.probe_points(center) {
            worst = worst.max(self.single_sample_variance(&w)?);
        }
        Ok(worst)
    }

    fn least_squares_minimizer(&self) -> Result<Matrix> {
        let Payload::Regression { xs, ys } = &self.payload else {
            unreachable!()
        };
        // normal equations (Σ XᵀX) W = Σ XᵀY, solved by pseudo-inverse
        let mut gram = Matrix::zeros(self.rows, self.rows);
        let mut rhs = Matrix::zeros(self.rows, self.cols);
        for (x, y) in xs.iter().zip(ys) {
            gram.axpy(1.0, &x.tr_matmul(x)?)?;
            rhs.axpy(1.0, &x.tr_matmul(y)?)?;
        }
        let f = svd(&gram)?;
        let smax = f.singular_values[0];
        let utb = f.u.tr_matmul(&rhs)?;
        let scaled = Matrix::from_fn(utb.rows(), utb.cols(), |i, j| {
            let s = f.singular_values[i];
            if s > smax * 1e-13 {
                utb[(i, j)] / s
            } else {
                0.0
            }
        });
        f.v.matmul(&scaled)
    }

    /// The objective separates over coordinates, so each coordinate is the
    /// 1-D global minimum of `(1/N) Σ s(w − t_i)`: dense grid over
    /// `[min t_i, max t_i]` (the objective is monotone outside it), then
    /// golden-section refinement around the best grid point.
    fn nonconvex_minimizer(&self) -> Matrix {
        let Payload::Targets { targets, .. } = &self.payload else {
            unreachable!()
        };
        Matrix::from_fn(self.rows, self.cols, |j, k| {
            let ts: Vec<f64> = targets.iter().map(|t| t[(j, k)]).collect();
            minimize_separable(&ts)
        })
    }
}

fn separable_objective(ts: &[f64], w: f64) -> f64 {
    ts.iter().map(|t| s(w - t)).sum::<f64>() / ts.len() as f64
}

fn minimize_separable(ts: &[f64]) -> f64 {
    let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 {
        return lo;
    }
    let h = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut best = (lo, separable_objective(ts, lo));
    for g in 1..GRID_POINTS {
        let x = lo + g as f64 * h;
        let v = separable_objective(ts, x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let inv_phi = (math::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (separable_objective(ts, c), separable_objective(ts, d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = separable_objective(ts, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = separable_objective(ts, d);
        }
    }
    let x = 0.5 * (a + b);
    if separable_objective(ts, x) <= best.1 {
        x
    } else {
        best.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quad(n: usize, seed: u64) -> ProblemInstance {
        ProblemInstance::generate(&ProblemSpec::new(
            ProblemKind::MatrixQuadratic,
            n,
            4,
            3,
            seed,
        ))
        .unwrap()
    }

    #[test]
    fn quadratic_minimum_at_mean() {
        let p = quad(10, 1);
        let c = p.constants().unwrap();
        let mean = p.mean_target().unwrap().clone();
        assert_eq!(c.minimizer.as_ref(), Some(&mean));
        // f(T̄) = ½ (1/N) Σ ‖T̄ − T_i‖² = σ²/2 for the quadratic
        assert!((p.loss(&mean).unwrap() - 0.5 * c.sigma2).abs() < 1e-12);
        assert_eq!(p.loss(&mean).unwrap(), c.f_star);
        assert!(p.full_gradient(&mean).unwrap().frobenius_norm() < 1e-14);
        assert_eq!(c.l, 1.0);
    }

    #[test]
    fn equal_targets_have_zero_variance() {
        let t = Matrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let p = ProblemInstance::from_targets(
            ProblemKind::MatrixQuadratic,
            vec![t.clone(), t.clone(), t],
        )
        .unwrap();
        assert_eq!(p.constants().unwrap().sigma2, 0.0);
    }

    #[test]
    fn nonconvex_single_target_is_stationary() {
        let t = Matrix::from_fn(3, 2, |i, j| i as f64 - j as f64 * 0.5);
        let p =
            ProblemInstance::from_targets(ProblemKind::SmoothNonconvex, vec![t.clone()]).unwrap();
        assert_eq!(p.loss(&t).unwrap(), 0.0);
        assert_eq!(p.full_gradient(&t).unwrap().frobenius_norm(), 0.0);
        let c = p.constants().unwrap();
        assert_eq!(c.l, 2.0);
        assert!(c.f_star.abs() < 1e-15);
    }

    #[test]
    fn loss_matches_naive_summation() {
        for kind in [
            ProblemKind::MatrixQuadratic,
            ProblemKind::SmoothNonconvex,
            ProblemKind::MatrixLeastSquares,
        ] {
            let p = ProblemInstance::generate(&ProblemSpec::new(kind, 7, 5, 3, 2)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let w = Matrix::gaussian(5, 3, &mut rng);
            let naive: f64 = (0..7)
                .map(|i| p.component_loss(i, &w).unwrap())
                .sum::<f64>()
                / 7.0;
            assert!((p.loss(&w).unwrap() - naive).abs() < 1e-12 * naive.max(1.0));
        }
    }

    #[test]
    fn minibatch_special_cases() {
        let p = quad(6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = Matrix::gaussian(4, 3, &mut rng);
        let all = SampleBatch {
            indices: (0..6).collect(),
        };
        let full = p.full_gradient(&w).unwrap();
        assert!(
            p.minibatch_gradient(&w, &all)
                .unwrap()
                .distance(&full)
                .unwrap()
                < 1e-14
        );
        let single = SampleBatch { indices: vec![2] };
        let expect = p.component_gradient(2, &w).unwrap();
        assert_eq!(p.minibatch_gradient(&w, &single).unwrap(), expect);
        let empty = SampleBatch { indices: vec![] };
        assert_eq!(p.minibatch_gradient(&w, &empty), Err(Error::EmptyBatch));
        let bad = SampleBatch { indices: vec![6] };
        assert!(p.minibatch_gradient(&w, &bad).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = quad(16, 3);
        let a = p
            .sample_batch(&mut ChaCha8Rng::seed_from_u64(77), 50)
            .unwrap();
        let b = p
            .sample_batch(&mut ChaCha8Rng::seed_from_u64(77), 50)
            .unwrap();
        assert_eq!(a, b);
        assert!(a.indices.iter().all(|&i| i < 16));
        assert_eq!(
            p.sample_batch(&mut ChaCha8Rng::seed_from_u64(1), 0),
            Err(Error::EmptyBatch)
        );
        let one = quad(1, 3);
        let c = one
            .sample_batch(&mut ChaCha8Rng::seed_from_u64(0), 20)
            .unwrap();
        assert!(c.indices.iter().all(|&i| i == 0));
    }

    #[test]
    fn shape_errors() {
        let p = quad(3, 1);
        assert!(p.loss(&Matrix::zeros(3, 4)).is_err());
        assert!(p.full_gradient(&Matrix::zeros(4, 4)).is_err());
        assert!(ProblemSpec::new(ProblemKind::MatrixQuadratic, 3, 2, 3, 0)
            .validate()
            .is_err());
        assert!(ProblemSpec::new(ProblemKind::MatrixQuadratic, 0, 3, 3, 0)
            .validate()
            .is_err());
    }

    #[test]
    fn least_squares_minimizer_is_stationary() {
        let p = ProblemInstance::generate(&ProblemSpec::new(
            ProblemKind::MatrixLeastSquares,
            12,
            5,
            2,
            9,
        ))
        .unwrap();
        let c = p.constants().unwrap();
        let w = c.minimizer.clone().unwrap();
        assert!(p.full_gradient(&w).unwrap().frobenius_norm() < 1e-10);
        assert!(c.l > 0.0 && c.sigma2 > 0.0);
    }

    #[test]
    fn nonconvex_minimizer_beats_grid() {
        let ts = [-1.0, 0.3, 0.5, 2.5, 2.6];
        let x = minimize_separable(&ts);
        let fx = separable_objective(&ts, x);
        for g in 0..10_000 {
            let y = -3.0 + 8.0 * g as f64 / 10_000.0;
            assert!(fx <= separable_objective(&ts, y) + 1e-12);
        }
    }
}
