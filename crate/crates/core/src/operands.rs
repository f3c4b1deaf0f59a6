//! The quadratic structure of Q_n(·|β): `Q_n(β′) = −½⟨β′, Aβ′⟩ + ⟨b, β′⟩ + c`.

use crate::error::{dim_err, Result};
use crate::linalg::{axpy, dot, Mat};
use crate::param::Param;
use crate::scalar::Scalar;

/// Symmetric PSD operator `A`.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadForm<T> {
    Identity(usize),
    Dense(Mat<T>),
    Gram(Gram<T>),
}

/// `A = scale · (Σₖ wₖ rₖ rₖᵀ + diag(d))`, never formed explicitly.
///
/// Rows `rₖ` are stored densely; `weights` defaults to all ones and `diag` to
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram<T> {
    pub rows: Mat<T>,
    pub weights: Option<Vec<T>>,
    pub diag: Option<Vec<T>>,
    pub scale: T,
}

impl<T: Scalar> Gram<T> {
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows.cols()];
        for k in 0..self.rows.rows() {
            let r = self.rows.row(k);
            let mut coef = dot(r, v);
            if let Some(w) = &self.weights {
                coef *= w[k];
            }
            if coef != T::zero() {
                axpy(coef, r, &mut out);
            }
        }
        if let Some(d) = &self.diag {
            for ((o, &di), &vi) in out.iter_mut().zip(d).zip(v) {
                *o += di * vi;
            }
        }
        out.iter_mut().for_each(|o| *o *= self.scale);
        out
    }
}

impl<T: Scalar> QuadForm<T> {
    pub fn dim(&self) -> usize {
        match self {
            QuadForm::Identity(d) => *d,
            QuadForm::Dense(m) => m.cols(),
            QuadForm::Gram(g) => g.rows.cols(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, QuadForm::Identity(_))
    }

    /// `A·v` on raw coordinates.
    pub fn apply_slice(&self, v: &[T]) -> Vec<T> {
        match self {
            QuadForm::Identity(_) => v.to_vec(),
            QuadForm::Dense(m) => m.matvec(v),
            QuadForm::Gram(g) => g.apply(v),
        }
    }

    pub fn apply(&self, v: &Param<T>) -> Result<Param<T>> {
        if v.len() != self.dim() {
            return Err(dim_err(self.dim(), v.len()));
        }
        Ok(v.with_data(self.apply_slice(v.as_slice())))
    }

    /// ⟨v, A v⟩
    pub fn quad(&self, v: &Param<T>) -> Result<T> {
        let av = self.apply(v)?;
        Ok(dot(v.as_slice(), av.as_slice()))
    }

    /// Explicit `A`; intended for tests and small problems.
    pub fn to_dense(&self) -> Mat<T> {
        let d = self.dim();
        match self {
            QuadForm::Identity(_) => Mat::identity(d),
            QuadForm::Dense(m) => m.clone(),
            QuadForm::Gram(_) => {
                let mut out = Mat::zeros(d, d);
                let mut e = vec![T::zero(); d];
                for j in 0..d {
                    e[j] = T::one();
                    let col = self.apply_slice(&e);
                    e[j] = T::zero();
                    for i in 0..d {
                        out[(i, j)] = col[i];
                    }
                }
                out
            }
        }
    }
}

/// Operands of the regularized M-step at the current iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct MStepOperands<T> {
    pub a: QuadForm<T>,
    pub b: Param<T>,
    /// Constant term of Q_n; informational.
    pub c: T,
}

impl<T: Scalar> MStepOperands<T> {
    /// `−½⟨v, Av⟩ + ⟨b, v⟩ + c`
    pub fn q_value(&self, v: &Param<T>) -> Result<T> {
        let quad = self.a.quad(v)?;
        Ok(-T::lit(0.5) * quad + v.inner(&self.b)? + self.c)
    }

    /// ∇Q_n at `v`: `−Av + b`.
    pub fn q_gradient(&self, v: &Param<T>) -> Result<Param<T>> {
        let av = self.a.apply(v)?;
        self.b.sub(&av)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_matches_dense() {
        let rows = Mat::from_fn(4, 3, |i, j| (i as f64 - 1.5) * (j as f64 + 0.5));
        let g = Gram {
            rows: rows.clone(),
            weights: Some(vec![1.0, -0.5, 2.0, 1.0]),
            diag: Some(vec![0.1, 0.2, 0.3]),
            scale: 0.25,
        };
        let q = QuadForm::Gram(g);
        let dense = q.to_dense();
        let v = [0.3, -1.0, 2.0];
        let want = dense.matvec(&v);
        let got = q.apply_slice(&v);
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(dense.asymmetry().unwrap() < 1e-15);
    }

    #[test]
    fn identity_quadratic() {
        let q = QuadForm::<f64>::Identity(3);
        let v = Param::vector(vec![1.0, 2.0, 2.0]).unwrap();
        assert_eq!(q.quad(&v).unwrap(), 9.0);
        assert!(q.apply(&Param::vector(vec![1.0]).unwrap()).is_err());
    }
}
