//! Latent-variable models behind one interface.
//!
//! * [`ModelKind::Gmm`]: balanced two-component isotropic Gaussian mixture
//!   with means ±β*.
//! * [`ModelKind::MlrSparse`] / [`ModelKind::MlrLowRank`]: mixed linear
//!   regression `y = z⟨x, β*⟩ + w` with hidden sign `z`, vector or matrix
//!   parameter.
//! * [`ModelKind::Mcr`]: linear regression whose covariates go missing
//!   independently with probability ε.
//!
//! For each model the E-step at β reduces Q_n(·|β) to [`MStepOperands`].

mod gmm;
mod mcr;
mod mlr;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::operands::MStepOperands;
use crate::param::{Param, Shape};
use crate::rng::Rng;
use crate::scalar::Scalar;

pub use gmm::weight_gmm;
pub use mcr::{mcr_conditional_moments, McrMoments};
pub use mlr::weight_mlr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gmm,
    MlrSparse,
    MlrLowRank,
    Mcr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Gmm,
        ModelKind::MlrSparse,
        ModelKind::MlrLowRank,
        ModelKind::Mcr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Gmm => "gmm",
            ModelKind::MlrSparse => "mlr-sparse",
            ModelKind::MlrLowRank => "mlr-lowrank",
            ModelKind::Mcr => "mcr",
        }
    }

    pub fn uses_matrix(&self) -> bool {
        matches!(self, ModelKind::MlrLowRank)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model '{s}'")))
    }
}

/// Ground truth and known noise level of one model instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec<T> {
    kind: ModelKind,
    beta_star: Param<T>,
    sigma: T,
    epsilon: T,
}

impl<T: Scalar> ModelSpec<T> {
    pub fn new(kind: ModelKind, beta_star: Param<T>, sigma: T, epsilon: T) -> Result<Self> {
        if sigma.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) || !sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be > 0, got {sigma}")));
        }
        match kind {
            ModelKind::Mcr => {
                if !(epsilon >= T::zero() && epsilon < T::one()) {
                    return Err(Error::Config(format!("epsilon must be in [0,1), got {epsilon}")));
                }
            }
            _ if epsilon != T::zero() => {
                return Err(Error::Config(format!(
                    "epsilon is only meaningful for mcr, got {epsilon}"
                )));
            }
            _ => {}
        }
        if kind.uses_matrix() != beta_star.shape().is_matrix() {
            return Err(Error::Shape(format!(
                "{kind} needs a {} parameter, got {}",
                if kind.uses_matrix() { "matrix" } else { "vector" },
                beta_star.shape()
            )));
        }
        Ok(Self {
            kind,
            beta_star,
            sigma,
            epsilon,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn beta_star(&self) -> &Param<T> {
        &self.beta_star
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn shape(&self) -> Shape {
        self.beta_star.shape()
    }

    /// ‖β*‖₂ / σ (Frobenius for matrices).
    pub fn snr(&self) -> T {
        self.beta_star.l2() / self.sigma
    }

    /// Same model, different noise level.
    pub fn with_sigma(&self, sigma: T) -> Result<Self> {
        Self::new(self.kind, self.beta_star.clone(), sigma, self.epsilon)
    }

    pub fn check_param(&self, beta: &Param<T>) -> Result<()> {
        self.beta_star.check_same_shape(beta)
    }
}

/// Observations only; latent labels never appear here.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset<T> {
    /// Row i is yᵢ.
    Gmm { ys: Mat<T> },
    /// Row i of `xs` is xᵢ (flattened row-major for matrix covariates).
    Mlr { ys: Vec<T>, xs: Mat<T>, shape: Shape },
    /// `xs` is zero wherever `missing` is set; `missing` is n·p row-major.
    Mcr { ys: Vec<T>, xs: Mat<T>, missing: Vec<bool> },
}

impl<T: Scalar> Dataset<T> {
    pub fn kind(&self) -> ModelKind {
        match self {
            Dataset::Gmm { .. } => ModelKind::Gmm,
            Dataset::Mlr { shape, .. } if shape.is_matrix() => ModelKind::MlrLowRank,
            Dataset::Mlr { .. } => ModelKind::MlrSparse,
            Dataset::Mcr { .. } => ModelKind::Mcr,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Gmm { ys } => ys.rows(),
            Dataset::Mlr { ys, .. } | Dataset::Mcr { ys, .. } => ys.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let n = self.len();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::Range {
                index: bad,
                max: n.saturating_sub(1),
            });
        }
        let pick_rows = |m: &Mat<T>| {
            let mut data = Vec::with_capacity(indices.len() * m.cols());
            for &i in indices {
                data.extend_from_slice(m.row(i));
            }
            Mat::from_vec(indices.len(), m.cols(), data).expect("row sizes agree")
        };
        Ok(match self {
            Dataset::Gmm { ys } => Dataset::Gmm { ys: pick_rows(ys) },
            Dataset::Mlr { ys, xs, shape } => Dataset::Mlr {
                ys: indices.iter().map(|&i| ys[i]).collect(),
                xs: pick_rows(xs),
                shape: *shape,
            },
            Dataset::Mcr { ys, xs, missing } => {
                let p = xs.cols();
                Dataset::Mcr {
                    ys: indices.iter().map(|&i| ys[i]).collect(),
                    xs: pick_rows(xs),
                    missing: indices
                        .iter()
                        .flat_map(|&i| missing[i * p..(i + 1) * p].iter().copied())
                        .collect(),
                }
            }
        })
    }

    /// Contiguous block of samples.
    pub fn subset(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start > range.end {
            return Err(Error::Range {
                index: range.end,
                max: self.len(),
            });
        }
        self.select(&range.collect::<Vec<_>>())
    }

    /// Add N(0, extra_sigma²) noise to every response (MLR/MCR). Used to lower
    /// the effective SNR before running EM.
    pub fn inflate_response_noise(&mut self, rng: &mut Rng, extra_sigma: T) -> Result<()> {
        match self {
            Dataset::Gmm { .. } => Err(Error::Unsupported("response noise on gmm data".into())),
            Dataset::Mlr { ys, .. } | Dataset::Mcr { ys, .. } => {
                for y in ys.iter_mut() {
                    *y += extra_sigma * rng.standard_normal::<T>();
                }
                Ok(())
            }
        }
    }
}

fn check_kind<T: Scalar>(spec: &ModelSpec<T>, data: &Dataset<T>) -> Result<()> {
    if spec.kind() != data.kind() {
        return Err(Error::Config(format!(
            "dataset is {} but model is {}",
            data.kind(),
            spec.kind()
        )));
    }
    if data.is_empty() {
        return Err(Error::Config("empty dataset".into()));
    }
    let cols = match data {
        Dataset::Gmm { ys } => ys.cols(),
        Dataset::Mlr { xs, .. } | Dataset::Mcr { xs, .. } => xs.cols(),
    };
    if cols != spec.shape().len() {
        return Err(Error::Dimension {
            expected: spec.shape().to_string(),
            got: format!("{cols} columns"),
        });
    }
    Ok(())
}

/// Latent variables, for diagnostics only. Estimators never see these.
#[derive(Debug, Clone, PartialEq)]
pub enum Latents<T> {
    Signs(Vec<i8>),
    /// Full covariates before masking.
    Unmasked(Mat<T>),
}

/// i.i.d. observations from `spec`.
pub fn generate<T: Scalar>(spec: &ModelSpec<T>, n: usize, rng: &mut Rng) -> Result<Dataset<T>> {
    generate_with_latents(spec, n, rng).map(|(d, _)| d)
}

/// [`generate`], also returning the hidden variables. Intended for tests and
/// diagnostics.
#[doc(hidden)]
pub fn generate_with_latents<T: Scalar>(
    spec: &ModelSpec<T>,
    n: usize,
    rng: &mut Rng,
) -> Result<(Dataset<T>, Latents<T>)> {
    if n == 0 {
        return Err(Error::Config("n must be >= 1".into()));
    }
    match spec.kind() {
        ModelKind::Gmm => gmm::generate(spec, n, rng),
        ModelKind::MlrSparse | ModelKind::MlrLowRank => mlr::generate(spec, n, rng),
        ModelKind::Mcr => mcr::generate(spec, n, rng),
    }
}

/// Reduce Q_n(·|β) to `(A, b, c)`.
pub fn e_step_operands<T: Scalar>(spec: &ModelSpec<T>, data: &Dataset<T>, beta: &Param<T>) -> Result<MStepOperands<T>> {
    check_kind(spec, data)?;
    spec.check_param(beta)?;
    let ops = match data {
        Dataset::Gmm { ys } => gmm::operands(ys, beta, spec.sigma()),
        Dataset::Mlr { ys, xs, .. } => mlr::operands(ys, xs, beta, spec.sigma()),
        Dataset::Mcr { ys, xs, missing } => mcr::operands(ys, xs, missing, beta, spec.sigma()),
    }?;
    ops.b.ensure_finite("e-step")?;
    Ok(ops)
}

/// Q_n(β′|β) evaluated directly from the per-sample sum.
pub fn eval_q<T: Scalar>(spec: &ModelSpec<T>, data: &Dataset<T>, beta_prime: &Param<T>, beta: &Param<T>) -> Result<T> {
    check_kind(spec, data)?;
    spec.check_param(beta)?;
    spec.check_param(beta_prime)?;
    Ok(match data {
        Dataset::Gmm { ys } => gmm::eval_q(ys, beta_prime, beta, spec.sigma()),
        Dataset::Mlr { ys, xs, .. } => mlr::eval_q(ys, xs, beta_prime, beta, spec.sigma()),
        Dataset::Mcr { ys, xs, missing } => mcr::eval_q(ys, xs, missing, beta_prime, beta, spec.sigma())?,
    })
}

/// ∇_{β′} Q_n(β′|β) = −Aβ′ + b.
pub fn grad_q<T: Scalar>(
    spec: &ModelSpec<T>,
    data: &Dataset<T>,
    beta_prime: &Param<T>,
    beta: &Param<T>,
) -> Result<Param<T>> {
    spec.check_param(beta_prime)?;
    e_step_operands(spec, data, beta)?.q_gradient(beta_prime)
}

/// Unregularized EM update M_n(β) = (2/n)Σ w(yᵢ;β) yᵢ − ȳ.
///
/// Only the mixture model has a closed form that is well defined when n < p;
/// the regression models would need to invert a rank-deficient sample
/// covariance.
pub fn m_n_closed_form<T: Scalar>(spec: &ModelSpec<T>, data: &Dataset<T>, beta: &Param<T>) -> Result<Param<T>> {
    if spec.kind() != ModelKind::Gmm {
        return Err(Error::Unsupported(format!(
            "closed-form M-step for {}; its sample covariance is singular when n < p",
            spec.kind()
        )));
    }
    Ok(e_step_operands(spec, data, beta)?.b)
}

/// `1 / (1 + exp(−x))` without overflow for any finite `x`.
#[inline]
pub(crate) fn logistic<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
