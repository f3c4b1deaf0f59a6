//! Model parameters: a dense vector in ℝᵖ or a dense matrix in ℝ^{p1×p2}.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{dot, Mat};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    /// Number of stored entries.
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(p) => p,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, Shape::Matrix(..))
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Vector(p) => write!(f, "vector({p})"),
            Shape::Matrix(r, c) => write!(f, "matrix({r}x{c})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    /// Frobenius on matrices.
    L2,
    Linf,
    Nuclear,
    Spectral,
    Frobenius,
}

/// Unified carrier for β (vector) and Γ (matrix), row-major.
///
/// Every constructor rejects non-finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Scalar> Param<T> {
    pub fn new(shape: Shape, data: Vec<T>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Shape(format!("{shape} has no entries")));
        }
        if data.len() != shape.len() {
            return Err(dim_err(format!("{} entries for {shape}", shape.len()), data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("Param::new"));
        }
        Ok(Self { shape, data })
    }

    pub fn vector(data: Vec<T>) -> Result<Self> {
        Self::new(Shape::Vector(data.len()), data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        Self::new(Shape::Matrix(rows, cols), data)
    }

    pub fn from_mat(m: &Mat<T>) -> Result<Self> {
        Self::matrix(m.rows(), m.cols(), m.as_slice().to_vec())
    }

    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            data: vec![T::zero(); shape.len()],
        }
    }

    /// Same shape as `self`, new data. Finiteness is the caller's concern and is
    /// checked at module boundaries via [`Param::ensure_finite`].
    pub(crate) fn with_data(&self, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            shape: self.shape,
            data,
        }
    }

    pub(crate) fn from_parts_unchecked(shape: Shape, data: Vec<T>) -> Self {
        debug_assert_eq!(shape.len(), data.len());
        Self { shape, data }
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Matrix view; vectors are returned as a single column.
    pub fn to_mat(&self) -> Mat<T> {
        let (r, c) = match self.shape {
            Shape::Vector(p) => (p, 1),
            Shape::Matrix(r, c) => (r, c),
        };
        Mat::from_vec(r, c, self.data.clone()).expect("shape/data agree")
    }

    pub fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if self.data.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(dim_err(self.shape, other.shape))
        }
    }

    pub fn inner(&self, other: &Self) -> Result<T> {
        inner(self, other)
    }

    pub fn norm(&self, kind: NormKind) -> Result<T> {
        norm(self, kind)
    }

    /// ℓ₂ (Frobenius) norm; never fails.
    pub fn l2(&self) -> T {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn l1(&self) -> T {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn linf(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.with_data(self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(self.with_data(self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect()))
    }

    pub fn scale(&self, a: T) -> Self {
        self.with_data(self.data.iter().map(|&x| a * x).collect())
    }

    /// ‖self − other‖₂
    pub fn dist(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt())
    }

    /// Indices of nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, x)| **x != T::zero())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn map(&self, f: impl FnMut(&T) -> T) -> Self {
        self.with_data(self.data.iter().map(f).collect())
    }
}

/// Σᵢ aᵢbᵢ (trace inner product for matrices).
pub fn inner<T: Scalar>(a: &Param<T>, b: &Param<T>) -> Result<T> {
    a.check_same_shape(b)?;
    Ok(dot(&a.data, &b.data))
}

pub fn norm<T: Scalar>(a: &Param<T>, kind: NormKind) -> Result<T> {
    match kind {
        NormKind::L1 => Ok(a.l1()),
        NormKind::L2 | NormKind::Frobenius => Ok(a.l2()),
        NormKind::Linf => Ok(a.linf()),
        NormKind::Nuclear | NormKind::Spectral => {
            if !a.shape.is_matrix() {
                return Err(Error::Shape(format!("{kind:?} norm needs a matrix, got {}", a.shape)));
            }
            let s = a.to_mat().svd().s;
            Ok(match kind {
                NormKind::Nuclear => s.iter().copied().sum(),
                _ => s.first().copied().unwrap_or_else(T::zero),
            })
        }
    }
}
