//! Dense row-major matrices and the one-sided Jacobi SVD.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_err(format!("{} entries", rows * cols), data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(diag: &[T]) -> Self {
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

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "matvec dimension");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`
    pub fn tr_matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows, "tr_matvec dimension");
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != T::zero() {
                axpy(vi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(dim_err(format!("inner dimension {}", self.cols), other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != T::zero() {
                    let src = other.row(k);
                    axpy(a, src, out.row_mut(i));
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute asymmetry `|a_ij − a_ji|`; `None` for non-square.
    pub fn asymmetry(&self) -> Option<T> {
        if self.rows != self.cols {
            return None;
        }
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        Some(worst)
    }

    /// Thin singular value decomposition.
    pub fn svd(&self) -> Svd<T> {
        jacobi_svd(self)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `y += a·x`
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `U · diag(s) · Vᵀ` with `U: m×k`, `V: n×k`, singular values decreasing.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Mat<T>,
    pub s: Vec<T>,
    pub v: Mat<T>,
}

impl<T: Scalar> Svd<T> {
    /// Rebuild `U · diag(f(s)) · Vᵀ`.
    pub fn recompose_with(&self, mut f: impl FnMut(T) -> T) -> Mat<T> {
        let m = self.u.rows();
        let n = self.v.rows();
        let mut out = Mat::zeros(m, n);
        for (k, &sk) in self.s.iter().enumerate() {
            let w = f(sk);
            if w == T::zero() {
                continue;
            }
            for i in 0..m {
                let a = w * self.u[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * self.v[(j, k)];
                }
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Rotates column pairs of a working copy until all pairs are orthogonal to
/// working precision; column norms are then the singular values.
fn jacobi_svd<T: Scalar>(a: &Mat<T>) -> Svd<T> {
    if a.rows() < a.cols() {
        let t = jacobi_svd(&a.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let m = a.rows();
    let n = a.cols();
    // columns stored contiguously
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            e
        })
        .collect();
    let eps = T::epsilon() * T::lit(4.0);

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut vcols, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(T, usize)> = cols.iter().enumerate().map(|(j, c)| (dot(c, c).sqrt(), j)).collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut u = Mat::zeros(m, n);
    let mut v = Mat::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        if sigma > T::zero() {
            for i in 0..m {
                u[(i, k)] = cols[j][i] / sigma;
            }
        }
        for i in 0..n {
            v[(i, k)] = vcols[j][i];
        }
    }
    Svd { u, s, v }
}

fn rotate<T: Scalar>(cols: &mut [Vec<T>], i: usize, j: usize, c: T, s: T) {
    let (lo, hi) = cols.split_at_mut(j);
    let ci = &mut lo[i];
    let cj = &mut hi[0];
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let xi = *x;
        let yj = *y;
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Modified Gram–Schmidt on the columns of `a`. Columns that are numerically
/// dependent on earlier ones are returned as zero.
pub fn orthonormalize_columns<T: Scalar>(a: &Mat<T>) -> Mat<T> {
    let mut cols: Vec<Vec<T>> = (0..a.cols()).map(|j| a.column(j)).collect();
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let cj = &mut rest[0];
        for q in done.iter() {
            let proj = dot(q, cj);
            axpy(-proj, q, cj);
        }
        let nrm = dot(cj, cj).sqrt();
        if nrm > T::epsilon() * T::lit(16.0) {
            cj.iter_mut().for_each(|x| *x /= nrm);
        } else {
            cj.iter_mut().for_each(|x| *x = T::zero());
        }
    }
    Mat::from_fn(a.rows(), a.cols(), |i, j| cols[j][i])
}
