//! Dense real matrices.
//!
//! Entries are stored row-major: entry `(i, j)` of an `m x n` matrix lives at
//! `data[i * n + j]`. Shapes are always at least `1 x 1`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut, Mul};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;

#[derive(Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Validating constructor: `data.len() == rows * cols`, both dimensions
    /// positive and every entry finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices. Panics on ragged or empty input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty(), "empty matrix");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// Rectangular identity: ones on the main diagonal.
    pub fn eye(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Matrix with i.i.d. standard normal entries drawn from `rng`.
    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        Self::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(self.mismatch("matmul", rhs));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let src = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(self.mismatch("tr_matmul", rhs));
        }
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let a_row = &self.data[k * self.cols..(k + 1) * self.cols];
            let b_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(b_row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with("add", rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        self.zip_with("sub", rhs, |a, b| a - b)
    }

    pub fn scaled(&self, alpha: f64) -> Matrix {
        self.map(|x| alpha * x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &Matrix) -> Result<()> {
        if self.shape() != x.shape() {
            return Err(self.mismatch("axpy", x));
        }
        for (d, &s) in self.data.iter_mut().zip(&x.data) {
            *d += alpha * s;
        }
        Ok(())
    }

    /// `alpha * a + beta * b`
    pub fn lincomb(alpha: f64, a: &Matrix, beta: f64, b: &Matrix) -> Result<Matrix> {
        a.zip_with("lincomb", b, |x, y| alpha * x + beta * y)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius inner product `Σ a_jk b_jk`.
    pub fn frobenius_inner(&self, rhs: &Matrix) -> Result<f64> {
        if self.shape() != rhs.shape() {
            return Err(self.mismatch("frobenius_inner", rhs));
        }
        Ok(self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    /// `‖self - rhs‖_F` without allocating the difference.
    pub fn distance(&self, rhs: &Matrix) -> Result<f64> {
        if self.shape() != rhs.shape() {
            return Err(self.mismatch("distance", rhs));
        }
        let s: f64 = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(math::sqrt(s))
    }

    fn zip_with(
        &self,
        op: &'static str,
        rhs: &Matrix,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(self.mismatch(op, rhs));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    fn mismatch(&self, op: &'static str, rhs: &Matrix) -> Error {
        Error::Dimension {
            op,
            left: self.shape(),
            right: rhs.shape(),
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;

    fn mul(self, alpha: f64) -> Matrix {
        self.scaled(alpha)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.6} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inner_of_identities() {
        let i2 = Matrix::identity(2);
        assert_eq!(i2.frobenius_inner(&i2).unwrap(), 2.0);
    }

    #[test]
    fn inner_direct_arithmetic() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(a.frobenius_inner(&a).unwrap(), 30.0);
    }

    #[test]
    fn inner_matches_naive_trace_of_at_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Matrix::gaussian(5, 3, &mut rng);
        let b = Matrix::gaussian(5, 3, &mut rng);
        // trace(AᵀB) by an explicit triple loop
        let mut tr = 0.0;
        for j in 0..3 {
            for k in 0..5 {
                tr += a.as_slice()[k * 3 + j] * b.as_slice()[k * 3 + j];
            }
        }
        let got = a.frobenius_inner(&b).unwrap();
        assert!((got - tr).abs() <= 1e-12 * tr.abs().max(1.0));
        assert_eq!(got, b.frobenius_inner(&a).unwrap());
        let via_product = a.tr_matmul(&b).unwrap().trace();
        assert!((got - via_product).abs() <= 1e-12 * tr.abs().max(1.0));
    }

    #[test]
    fn inner_shape_mismatch() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(3, 2);
        assert!(matches!(
            a.frobenius_inner(&b),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn norms_trivial_cases() {
        assert_eq!(Matrix::zeros(3, 3).frobenius_norm(), 0.0);
        for n in 1..6 {
            let want = libm::sqrt(n as f64);
            assert!((Matrix::identity(n).frobenius_norm() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn norm_matches_elementwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Matrix::gaussian(6, 4, &mut rng);
        let mut acc = 0.0;
        for i in 0..6 {
            for j in 0..4 {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
        assert!((a.frobenius_norm() - libm::sqrt(acc)).abs() < 1e-13);
    }

    #[test]
    fn constructor_rejects_bad_input() {
        assert!(matches!(
            Matrix::from_vec(2, 2, alloc::vec![1.0; 3]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            Matrix::from_vec(0, 2, alloc::vec![]),
            Err(Error::Shape { .. })
        ));
        assert_eq!(
            Matrix::from_vec(1, 2, alloc::vec![1.0, f64::NAN]),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn matmul_and_transpose_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Matrix::gaussian(4, 3, &mut rng);
        let b = Matrix::gaussian(4, 2, &mut rng);
        let x = a.tr_matmul(&b).unwrap();
        let y = a.transpose().matmul(&b).unwrap();
        assert!(x.distance(&y).unwrap() < 1e-14);
        assert!(a.matmul(&a).is_err());
    }
}
