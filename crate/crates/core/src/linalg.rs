//! Small dense linear algebra over [`Field`] elements.
//!
//! Matrices are column-major so that dictionary columns `h_l` are contiguous
//! slices. Only what the estimators need is provided: products, Gram
//! matrices, and a Cholesky factorization for Hermitian positive-definite
//! systems.

use std::ops::{Index, IndexMut};

use crate::error::{Result, SblError};
use num_traits::{Float, Zero};

use crate::scalar::{dotc, Field, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Field> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(SblError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[S]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(SblError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j| data[i * cols + j]))
    }

    /// Square diagonal matrix.
    pub fn from_diag(diag: &[S]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_col_major(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[S] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [S] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn diag(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> S {
        self.diag().into_iter().sum()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension");
        let mut out = vec![S::zero(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == S::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * xj;
            }
        }
        out
    }

    /// `A^H y`
    pub fn adjoint_mul_vec(&self, y: &[S]) -> Vec<S> {
        assert_eq!(y.len(), self.rows, "adjoint_mul_vec dimension");
        (0..self.cols).map(|j| dotc(self.col(j), y)).collect()
    }

    /// `A B`
    pub fn mul(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, other.rows, "mul dimension");
        let mut out = Mat::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(other.col(j));
            out.col_mut(j).copy_from_slice(&col);
        }
        out
    }

    /// `A^H A`
    pub fn gram(&self) -> Mat<S> {
        let n = self.cols;
        let mut g = Mat::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = dotc(self.col(i), self.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    /// Matrix formed by the listed columns.
    pub fn select_cols(&self, idx: &[usize]) -> Mat<S> {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Mat {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// Principal submatrix on the listed indices.
    pub fn select_square(&self, idx: &[usize]) -> Mat<S> {
        Mat::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn max_abs(&self) -> S::Real {
        self.data
            .iter()
            .map(|x| x.modulus())
            .fold(S::Real::zero(), |a, b| a.max(b))
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Cholesky factor `A = L L^H` of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<S> {
    l: Mat<S>,
}

impl<S: Field> Cholesky<S> {
    /// Factorizes `a`; only the lower triangle is read.
    pub fn new(a: &Mat<S>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(SblError::Dimension(format!(
                "cholesky of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let mut l: Mat<S> = Mat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re();
            for k in 0..j {
                d -= l[(j, k)].abs_sq();
            }
            if !(d > S::Real::zero()) || !d.is_finite() {
                return Err(SblError::NotPositiveDefinite {
                    pivot: j,
                    context: format!("pivot value {}", d.to_f64_lossy()),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = S::from_real(djj);
            let inv = djj.recip();
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s.scale(inv);
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor(&self) -> &Mat<S> {
        &self.l
    }

    /// `log det A`
    pub fn log_det(&self) -> S::Real {
        let two = S::Real::lit(2.0);
        (0..self.dim()).map(|i| self.l[(i, i)].re().ln()).sum::<S::Real>() * two
    }

    /// Solves `L x = b` in place.
    fn forward(&self, x: &mut [S]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s.scale(self.l[(i, i)].re().recip());
        }
    }

    /// Solves `L^H x = b` in place.
    fn backward(&self, x: &mut [S]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)].conj() * x[k];
            }
            x[i] = s.scale(self.l[(i, i)].re().recip());
        }
    }

    /// `A^{-1} b`
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        assert_eq!(b.len(), self.dim(), "cholesky solve dimension");
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    /// `A^{-1}`, explicitly Hermitian.
    pub fn inverse(&self) -> Mat<S> {
        let n = self.dim();
        let mut inv = Mat::zeros(n, n);
        let mut e = vec![S::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = S::zero());
            e[j] = S::one();
            let x = self.solve(&e);
            inv.col_mut(j).copy_from_slice(&x);
        }
        for j in 0..n {
            inv[(j, j)] = S::from_real(inv[(j, j)].re());
            for i in j + 1..n {
                let avg = (inv[(i, j)] + inv[(j, i)].conj()).scale(S::Real::lit(0.5));
                inv[(i, j)] = avg;
                inv[(j, i)] = avg.conj();
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn hpd() -> Mat<Complex64> {
        // B^H B + I for a fixed B
        let b = Mat::from_fn(4, 3, |i, j| {
            Complex64::new((i * 3 + j) as f64 * 0.3 - 1.0, (i as f64 - j as f64) * 0.2)
        });
        let mut a = b.gram();
        for i in 0..3 {
            a[(i, i)] += Complex64::new(1.0, 0.0);
        }
        a
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = hpd();
        let ch = Cholesky::new(&a).unwrap();
        let l = ch.factor();
        let rec = l.mul(&l.adjoint());
        for i in 0..3 {
            for j in 0..3 {
                assert!((rec[(i, j)] - a[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = hpd();
        let inv = Cholesky::new(&a).unwrap().inverse();
        let p = a.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - Complex64::new(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn log_det_of_diagonal() {
        let a = Mat::<f64>::from_diag(&[2.0, 3.0, 0.5]);
        let ch = Cholesky::new(&a).unwrap();
        assert!((ch.log_det() - 3.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn indefinite_is_rejected() {
        let a = Mat::<f64>::from_row_major(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            Cholesky::new(&a),
            Err(SblError::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn row_major_roundtrip() {
        let m = Mat::<f64>::from_row_major(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m[(0, 2)], 3.0);
        assert_eq!(m[(1, 0)], 4.0);
        assert_eq!(m.col(1), &[2.0, 5.0]);
        assert_eq!(m.adjoint_mul_vec(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }
}
