//! Nearest column-orthogonal matrix.
//!
//! For `C = U Σ Vᵀ` (thin SVD, `m ≥ n`) the minimizer of `‖O − C‖_F` subject
//! to `OᵀO = I_n` is the polar factor `U Vᵀ`, and `C • UVᵀ = ‖C‖_*`.
//! [`polar_factor_exact`] computes it through the SVD; [`newton_schulz`]
//! approximates it with the cubic iteration
//!
//! ```text
//! X_0     = C / ‖C‖_F
//! X_{k+1} = (3 X_k − X_k X_kᵀ X_k) / 2
//! ```
//!
//! The Frobenius pre-scaling puts every singular value in `(0, 1]`, where the
//! scalar map `s ↦ (3s − s³)/2` converges monotonically to 1.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::svd::svd;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OrthoKind {
    ExactPolar,
    NewtonSchulz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrthoMethod {
    pub kind: OrthoKind,
    /// Only read for [`OrthoKind::NewtonSchulz`].
    pub ns_iterations: usize,
}

impl OrthoMethod {
    pub const fn exact() -> Self {
        Self {
            kind: OrthoKind::ExactPolar,
            ns_iterations: 0,
        }
    }

    pub fn newton_schulz(iters: usize) -> Result<Self> {
        let m = Self {
            kind: OrthoKind::NewtonSchulz,
            ns_iterations: iters,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == OrthoKind::NewtonSchulz && self.ns_iterations == 0 {
            return Err(Error::param("ns_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

impl Default for OrthoMethod {
    fn default() -> Self {
        Self::exact()
    }
}

/// `U Vᵀ` from the deterministic SVD. Requires `m ≥ n`; rank-deficient inputs
/// get the completion fixed by the SVD sign convention.
pub fn polar_factor_exact(c: &Matrix) -> Result<Matrix> {
    require_tall("polar_factor_exact", c)?;
    let f = svd(c)?;
    f.u.matmul(&f.v.transpose())
}

/// Cubic Newton–Schulz with Frobenius pre-scaling. Requires `m ≥ n` and a
/// nonzero input.
pub fn newton_schulz(c: &Matrix, iters: usize) -> Result<Matrix> {
    newton_schulz_with(c, iters, true)
}

/// [`newton_schulz`] with the pre-scaling step optional. Without it the
/// iteration only converges when every singular value lies in `(0, √3)`.
pub fn newton_schulz_with(c: &Matrix, iters: usize, prescale: bool) -> Result<Matrix> {
    require_tall("newton_schulz", c)?;
    let norm = c.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::Degenerate("newton-schulz of the zero matrix"));
    }
    let mut x = if prescale {
        c.scaled(1.0 / norm)
    } else {
        c.clone()
    };
    for _ in 0..iters {
        let gram = x.tr_matmul(&x)?;
        let cubic = x.matmul(&gram)?;
        x = Matrix::lincomb(1.5, &x, -0.5, &cubic)?;
    }
    Ok(x)
}

/// `‖OᵀO − I‖_F`, taken over the smaller dimension (`‖OOᵀ − I‖_F` for wide
/// `O`).
pub fn orthogonality_defect(o: &Matrix) -> f64 {
    let gram = if o.rows() >= o.cols() {
        o.tr_matmul(o)
    } else {
        o.matmul(&o.transpose())
    }
    .expect("gram of a single matrix is always conformable");
    let n = gram.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = gram[(i, j)] - if i == j { 1.0 } else { 0.0 };
            acc += d * d;
        }
    }
    crate::math::sqrt(acc)
}

/// Orthogonalize any shape: wide inputs are transposed, orthogonalized and
/// transposed back so the constraint holds over the smaller dimension.
pub fn orthogonalize(c: &Matrix, method: &OrthoMethod) -> Result<Matrix> {
    if c.rows() < c.cols() {
        return Ok(orthogonalize(&c.transpose(), method)?.transpose());
    }
    match method.kind {
        OrthoKind::ExactPolar => polar_factor_exact(c),
        OrthoKind::NewtonSchulz => newton_schulz(c, method.ns_iterations),
    }
}

fn require_tall(op: &'static str, c: &Matrix) -> Result<()> {
    if c.rows() < c.cols() {
        return Err(Error::Dimension {
            op,
            left: c.shape(),
            right: (c.cols(), c.rows()),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd::nuclear_norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_orthonormal(m: usize, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        svd(&Matrix::gaussian(m, n, rng)).unwrap().u
    }

    #[test]
    fn orthonormal_input_is_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = random_orthonormal(6, 3, &mut rng);
        assert!(polar_factor_exact(&q).unwrap().distance(&q).unwrap() < 1e-12);
        for iters in [1, 5, 30] {
            assert!(
                newton_schulz_with(&q, iters, false)
                    .unwrap()
                    .distance(&q)
                    .unwrap()
                    < 1e-12
            );
        }
    }

    #[test]
    fn positive_diagonal_maps_to_identity() {
        let o = polar_factor_exact(&Matrix::diag(&[5.0, 2.0])).unwrap();
        assert!(o.distance(&Matrix::identity(2)).unwrap() < 1e-15);
    }

    #[test]
    fn polar_postconditions_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = Matrix::gaussian(6, 3, &mut rng);
        let o = polar_factor_exact(&c).unwrap();
        assert!(orthogonality_defect(&o) <= 1e-10);
        let nuc = nuclear_norm(&c).unwrap();
        assert!((c.frobenius_inner(&o).unwrap() - nuc).abs() <= 1e-8 * nuc);
        assert!((o.frobenius_norm() - libm::sqrt(3.0)).abs() <= 1e-10);
    }

    #[test]
    fn polar_dominates_random_search() {
        // C • O over 10^4 random orthonormal O never exceeds C • polar(C)
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = Matrix::gaussian(6, 3, &mut rng);
        let best = c.frobenius_inner(&polar_factor_exact(&c).unwrap()).unwrap();
        let mut searched = f64::NEG_INFINITY;
        for _ in 0..10_000 {
            let o = random_orthonormal(6, 3, &mut rng);
            searched = searched.max(c.frobenius_inner(&o).unwrap());
        }
        assert!(searched <= best + 1e-12, "{searched} > {best}");
    }

    #[test]
    fn ns_scalar_arithmetic() {
        let c = Matrix::from_rows(&[&[0.5]]);
        let scaled = newton_schulz_with(&c, 1, true).unwrap();
        assert!((scaled[(0, 0)] - 1.0).abs() < 1e-15);
        let raw = newton_schulz_with(&c, 1, false).unwrap();
        assert!((raw[(0, 0)] - 0.6875).abs() < 1e-15);
    }

    #[test]
    fn ns_rejects_zero_and_wide() {
        assert!(matches!(
            newton_schulz(&Matrix::zeros(3, 2), 5),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            newton_schulz(&Matrix::zeros(2, 3), 5),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            polar_factor_exact(&Matrix::zeros(2, 3)),
            Err(Error::Dimension { .. })
        ));
        assert!(OrthoMethod::newton_schulz(0).is_err());
    }

    #[test]
    fn ns_matches_exact_on_well_conditioned() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let c = Matrix::gaussian(8, 4, &mut rng);
        let exact = polar_factor_exact(&c).unwrap();
        let ns = newton_schulz(&c, 30).unwrap();
        assert!(ns.distance(&exact).unwrap() <= 1e-6);
    }

    #[test]
    fn defect_trivial_cases() {
        assert_eq!(orthogonality_defect(&Matrix::identity(4)), 0.0);
        let two = Matrix::identity(3).scaled(2.0);
        assert!((orthogonality_defect(&two) - 3.0 * libm::sqrt(3.0)).abs() < 1e-14);
    }

    #[test]
    fn wide_inputs_are_transposed() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let c = Matrix::gaussian(3, 7, &mut rng);
        let o = orthogonalize(&c, &OrthoMethod::exact()).unwrap();
        assert_eq!(o.shape(), (3, 7));
        assert!(orthogonality_defect(&o) < 1e-10);
        let expected = polar_factor_exact(&c.transpose()).unwrap().transpose();
        assert!(o.distance(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let c = Matrix::gaussian(5, 3, &mut rng);
        let o = polar_factor_exact(&c).unwrap();
        for alpha in [1e-3, 0.7, 42.0] {
            let oa = polar_factor_exact(&c.scaled(alpha)).unwrap();
            assert!(oa.distance(&o).unwrap() < 1e-12);
        }
    }
}
