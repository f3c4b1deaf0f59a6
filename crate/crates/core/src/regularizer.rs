//! Decomposable regularizers: ℓ₁ and the nuclear norm.
//!
//! Besides value, dual norm and proximal map, each regularizer pairs with a
//! [`SubspacePair`] (S ⊆ S̄) giving the projections, the subspace
//! compatibility constant Ψ and membership in the restricted cone
//! `‖Π_{S̄⊥}u‖_R ≤ 2‖Π_{S̄}u‖_R + 2Ψ‖u‖₂`.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::Mat;
use crate::param::{Param, Shape};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regularizer {
    /// ℓ₁ norm; matrices are treated as flattened vectors.
    L1,
    /// Sum of singular values; matrices only.
    Nuclear,
}

/// Slack added to the right-hand side of the cone inequality.
pub const CONE_SLACK: f64 = 1e-10;

/// Orthonormality tolerance for low-rank subspace bases.
const BASIS_TOL: f64 = 1e-10;

impl Regularizer {
    fn check<T: Scalar>(&self, u: &Param<T>) -> Result<()> {
        match (self, u.shape()) {
            (Regularizer::Nuclear, Shape::Vector(p)) => {
                Err(Error::Shape(format!("nuclear norm needs a matrix, got vector({p})")))
            }
            _ => Ok(()),
        }
    }

    /// R(u)
    pub fn value<T: Scalar>(&self, u: &Param<T>) -> Result<T> {
        self.check(u)?;
        Ok(match self {
            Regularizer::L1 => u.l1(),
            Regularizer::Nuclear => u.to_mat().svd().s.into_iter().sum(),
        })
    }

    /// R*(u): ℓ∞ for ℓ₁, spectral norm for the nuclear norm.
    pub fn dual_norm<T: Scalar>(&self, u: &Param<T>) -> Result<T> {
        self.check(u)?;
        Ok(match self {
            Regularizer::L1 => u.linf(),
            Regularizer::Nuclear => u.to_mat().svd().s.first().copied().unwrap_or_else(T::zero),
        })
    }

    /// argmin_v ½‖v − u‖₂² + t·R(v).
    pub fn prox<T: Scalar>(&self, u: &Param<T>, t: T) -> Result<Param<T>> {
        self.check(u)?;
        if t.is_sign_negative() || !t.is_finite() {
            return Err(Error::Config(format!("prox step must be >= 0, got {t}")));
        }
        if t == T::zero() {
            return Ok(u.clone());
        }
        Ok(match self {
            Regularizer::L1 => u.map(|&x| soft_threshold(x, t)),
            Regularizer::Nuclear => {
                let svd = u.to_mat().svd();
                let m = svd.recompose_with(|s| (s - t).max(T::zero()));
                Param::from_parts_unchecked(u.shape(), m.into_vec())
            }
        })
    }
}

#[inline]
pub fn soft_threshold<T: Scalar>(x: T, t: T) -> T {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        T::zero()
    }
}

/// Which member of the subspace pair to project onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    S,
    Sbar,
    SbarPerp,
}

/// The pair (S, S̄) a regularizer decomposes over.
#[derive(Debug, Clone, PartialEq)]
pub enum SubspacePair<T> {
    /// Coordinate support with S = S̄.
    Support { shape: Shape, indices: Vec<usize> },
    /// S = {M : col(M) ⊆ span U, row(M) ⊆ span V};
    /// S̄⊥ = {M : col(M) ⊥ span U, row(M) ⊥ span V}.
    LowRank { u: Mat<T>, v: Mat<T> },
}

impl<T: Scalar> SubspacePair<T> {
    pub fn support(shape: Shape, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut idx: Vec<usize> = indices.into_iter().collect();
        idx.sort_unstable();
        let len = shape.len();
        if let Some(&bad) = idx.iter().find(|&&i| i >= len) {
            return Err(Error::Range {
                index: bad,
                max: len.saturating_sub(1),
            });
        }
        if idx.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate support index".into()));
        }
        Ok(SubspacePair::Support { shape, indices: idx })
    }

    /// Support of the nonzero entries of `beta`.
    pub fn support_of(beta: &Param<T>) -> Self {
        SubspacePair::Support {
            shape: beta.shape(),
            indices: beta.support(),
        }
    }

    pub fn low_rank(u: Mat<T>, v: Mat<T>) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(dim_err(format!("{} basis columns", u.cols()), v.cols()));
        }
        for (name, b) in [("U", &u), ("V", &v)] {
            let g = b.transpose().matmul(b)?;
            for i in 0..g.rows() {
                for j in 0..g.cols() {
                    let want = if i == j { T::one() } else { T::zero() };
                    if (g[(i, j)] - want).abs() > T::lit(BASIS_TOL) {
                        return Err(Error::Config(format!("{name} is not orthonormal")));
                    }
                }
            }
        }
        Ok(SubspacePair::LowRank { u, v })
    }

    /// Leading `rank` singular subspaces of the matrix `gamma`.
    pub fn low_rank_of(gamma: &Param<T>, rank: usize) -> Result<Self> {
        let Shape::Matrix(r, c) = gamma.shape() else {
            return Err(Error::Shape("low-rank subspace needs a matrix".into()));
        };
        if rank > r.min(c) {
            return Err(Error::Config(format!("rank {rank} exceeds {r}x{c}")));
        }
        let svd = gamma.to_mat().svd();
        let u = Mat::from_fn(r, rank, |i, k| svd.u[(i, k)]);
        let v = Mat::from_fn(c, rank, |i, k| svd.v[(i, k)]);
        Self::low_rank(u, v)
    }

    fn check_shape(&self, x: &Param<T>) -> Result<()> {
        let expected = match self {
            SubspacePair::Support { shape, .. } => *shape,
            SubspacePair::LowRank { u, v } => Shape::Matrix(u.rows(), v.rows()),
        };
        if x.shape() == expected {
            Ok(())
        } else {
            Err(dim_err(expected, x.shape()))
        }
    }

    /// Π onto `target`.
    pub fn project(&self, x: &Param<T>, target: Subspace) -> Result<Param<T>> {
        self.check_shape(x)?;
        match self {
            SubspacePair::Support { indices, .. } => {
                let mut mask = vec![false; x.len()];
                indices.iter().for_each(|&i| mask[i] = true);
                let keep_inside = !matches!(target, Subspace::SbarPerp);
                let data = x
                    .as_slice()
                    .iter()
                    .zip(&mask)
                    .map(|(&xi, &inside)| if inside == keep_inside { xi } else { T::zero() })
                    .collect();
                Ok(x.with_data(data))
            }
            SubspacePair::LowRank { u, v } => {
                let m = x.to_mat();
                let out = match target {
                    Subspace::S => {
                        let left = project_cols(u, &m)?;
                        project_cols(v, &left.transpose())?.transpose()
                    }
                    Subspace::SbarPerp => perp_part(u, v, &m)?,
                    Subspace::Sbar => {
                        let perp = perp_part(u, v, &m)?;
                        Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] - perp[(i, j)])
                    }
                };
                Ok(x.with_data(out.into_vec()))
            }
        }
    }

    /// Basis width: |S| for supports, θ for low-rank pairs.
    pub fn width(&self) -> usize {
        match self {
            SubspacePair::Support { indices, .. } => indices.len(),
            SubspacePair::LowRank { u, .. } => u.cols(),
        }
    }

    /// Ψ(S̄) = sup_{u∈S̄∖0} R(u)/‖u‖₂: √s for ℓ₁, √(2θ) for the nuclear norm.
    pub fn psi(&self, r: Regularizer) -> Result<T> {
        match (self, r) {
            (SubspacePair::Support { indices, .. }, Regularizer::L1) => Ok(T::lit(indices.len() as f64).sqrt()),
            (SubspacePair::LowRank { u, .. }, Regularizer::Nuclear) => Ok(T::lit(2.0 * u.cols() as f64).sqrt()),
            _ => Err(Error::Config(format!(
                "{r:?} does not decompose over this subspace pair"
            ))),
        }
    }

    /// Membership in the restricted cone C(S, S̄; R).
    pub fn in_cone(&self, r: Regularizer, x: &Param<T>) -> Result<bool> {
        let psi = self.psi(r)?;
        let outside = r.value(&self.project(x, Subspace::SbarPerp)?)?;
        let inside = r.value(&self.project(x, Subspace::Sbar)?)?;
        let two = T::lit(2.0);
        Ok(outside <= two * inside + two * psi * x.l2() + T::lit(CONE_SLACK))
    }
}

/// `B Bᵀ M` for orthonormal `B`.
fn project_cols<T: Scalar>(b: &Mat<T>, m: &Mat<T>) -> Result<Mat<T>> {
    let coeff = b.transpose().matmul(m)?;
    b.matmul(&coeff)
}

/// `(I − UUᵀ) M (I − VVᵀ)`
fn perp_part<T: Scalar>(u: &Mat<T>, v: &Mat<T>, m: &Mat<T>) -> Result<Mat<T>> {
    let pu = project_cols(u, m)?;
    let left = Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] - pu[(i, j)]);
    let pv = project_cols(v, &left.transpose())?.transpose();
    Ok(Mat::from_fn(m.rows(), m.cols(), |i, j| left[(i, j)] - pv[(i, j)]))
}
