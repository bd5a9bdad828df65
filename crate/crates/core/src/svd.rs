//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! For the small dense matrices this crate works with, one-sided Jacobi is
//! accurate to working precision in every singular value, which is what the
//! nuclear-norm and polar-factor identities downstream are checked against.
//!
//! Output is deterministic for a given input: singular values are sorted
//! non-increasing (stable on ties) and each column of `U` is signed so that
//! its first entry with magnitude above `1e-12` is positive, with the matching
//! column of `V` flipped along with it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::Matrix;

/// Sweep cap before [`svd`] reports [`Error::NoConvergence`].
pub const MAX_SWEEPS: usize = 80;

/// Relative threshold used by [`rank`].
pub const RANK_TOL: f64 = 1e-10;

const SIGN_TOL: f64 = 1e-12;

/// `a = U · diag(singular_values) · Vᵀ` with `r = min(m, n)`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `m x r`, orthonormal columns.
    pub u: Matrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// `n x r`, orthonormal columns.
    pub v: Matrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Matrix {
        let (m, r) = self.u.shape();
        let n = self.v.rows();
        Matrix::from_fn(m, n, |i, j| {
            (0..r)
                .map(|k| self.u[(i, k)] * self.singular_values[k] * self.v[(j, k)])
                .sum()
        })
    }
}

pub fn svd(a: &Matrix) -> Result<SvdFactors> {
    if !a.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut f = if a.rows() >= a.cols() {
        jacobi_tall(a)?
    } else {
        let t = jacobi_tall(&a.transpose())?;
        SvdFactors {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        }
    };
    fix_signs(&mut f);
    Ok(f)
}

/// Sum of singular values.
pub fn nuclear_norm(a: &Matrix) -> Result<f64> {
    Ok(svd(a)?.singular_values.iter().sum())
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(svd(a)?.singular_values[0])
}

/// Number of singular values above `RANK_TOL · s_max`.
pub fn rank(a: &Matrix) -> Result<usize> {
    Ok(rank_of(&svd(a)?.singular_values))
}

pub fn rank_of(singular_values: &[f64]) -> usize {
    let smax = singular_values.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn jacobi_tall(a: &Matrix) -> Result<SvdFactors> {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    // column-major working copies
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * m as f64;

    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= tol * math::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + math::hypot(1.0, zeta))
                };
                let c = 1.0 / math::hypot(1.0, t);
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = cols.iter().map(|c| math::sqrt(dot(c, c))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(core::cmp::Ordering::Equal)
    });

    let smax = norms[order[0]];
    let null_tol = smax * f64::EPSILON * m as f64;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    let mut v = Matrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        let mut u = if s > null_tol && s > 0.0 {
            let mut u: Vec<f64> = cols[j].iter().map(|x| x / s).collect();
            orthonormalize_against(&mut u, &basis);
            u
        } else {
            Vec::new()
        };
        if u.is_empty() || !u.iter().all(|x| x.is_finite()) {
            u = complete(&basis, m);
        }
        basis.push(u);
        singular_values.push(s);
        for i in 0..n {
            v[(i, k)] = vcols[j][i];
        }
    }
    let u = Matrix::from_fn(m, n, |i, k| basis[k][i]);
    Ok(SvdFactors {
        u,
        singular_values,
        v,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Two passes of modified Gram-Schmidt, then normalize.
fn orthonormalize_against(u: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let d = dot(u, b);
            for (x, y) in u.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
    }
    let nrm = math::sqrt(dot(u, u));
    for x in u.iter_mut() {
        *x /= nrm;
    }
}

/// First standard basis vector that survives projection onto the complement
/// of `basis`.
fn complete(basis: &[Vec<f64>], m: usize) -> Vec<f64> {
    for e in 0..m {
        let mut u = vec![0.0; m];
        u[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let d = dot(&u, b);
                for (x, y) in u.iter_mut().zip(b) {
                    *x -= d * y;
                }
            }
        }
        let nrm = math::sqrt(dot(&u, &u));
        if nrm > 0.5 {
            u.iter_mut().for_each(|x| *x /= nrm);
            return u;
        }
    }
    unreachable!("basis of {} vectors already spans R^{}", basis.len(), m)
}

fn fix_signs(f: &mut SvdFactors) {
    let (m, r) = f.u.shape();
    let n = f.v.rows();
    for k in 0..r {
        let lead = (0..m).map(|i| f.u[(i, k)]).find(|x| x.abs() > SIGN_TOL);
        if matches!(lead, Some(x) if x < 0.0) {
            for i in 0..m {
                f.u[(i, k)] = -f.u[(i, k)];
            }
            for i in 0..n {
                f.v[(i, k)] = -f.v[(i, k)];
            }
        }
    }
}
