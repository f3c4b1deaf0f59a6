use crate::error::{dim_err, Result};
use crate::linalg::{dot, Mat};
use crate::operands::{Gram, MStepOperands, QuadForm};
use crate::param::Param;
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::{Dataset, Latents, ModelSpec};

/// Conditional first and second moments of the full covariate given the
/// observed entries, the response and the current β.
#[derive(Debug, Clone, PartialEq)]
pub struct McrMoments<T> {
    /// E[x | y, observed part]
    pub mu: Param<T>,
    /// E[x xᵀ | y, observed part]
    pub second: Mat<T>,
}

/// Per-sample pieces shared by the operands and the dense moments:
/// μ, the masked parameter c = z⊙β and the denominator σ² + ‖c‖².
struct Pieces<T> {
    mu: Vec<T>,
    masked_beta: Vec<T>,
    denom: T,
}

fn pieces<T: Scalar>(y: T, missing: &[bool], x: &[T], beta: &[T], sigma: T) -> Pieces<T> {
    let masked_beta: Vec<T> = beta
        .iter()
        .zip(missing)
        .map(|(&b, &m)| if m { b } else { T::zero() })
        .collect();
    let denom = sigma * sigma + dot(&masked_beta, &masked_beta);
    // observed part of x; masked entries are stored as zero but mask anyway
    let observed: Vec<T> = x
        .iter()
        .zip(missing)
        .map(|(&xi, &m)| if m { T::zero() } else { xi })
        .collect();
    let resid = (y - dot(beta, &observed)) / denom;
    let mu = observed
        .iter()
        .zip(&masked_beta)
        .map(|(&o, &c)| o + resid * c)
        .collect();
    Pieces { mu, masked_beta, denom }
}

/// μ = (1−z)⊙x + [(y − ⟨β,(1−z)⊙x⟩)/(σ² + ‖z⊙β‖²)]·(z⊙β)
/// Σ = μμᵀ + diag(z) − (z⊙β)(z⊙β)ᵀ/(σ² + ‖z⊙β‖²)
pub fn mcr_conditional_moments<T: Scalar>(
    y: T,
    missing: &[bool],
    x: &Param<T>,
    beta: &Param<T>,
    sigma: T,
) -> Result<McrMoments<T>> {
    x.check_same_shape(beta)?;
    if missing.len() != x.len() {
        return Err(dim_err(x.len(), missing.len()));
    }
    let p = x.len();
    let pc = pieces(y, missing, x.as_slice(), beta.as_slice(), sigma);
    let second = Mat::from_fn(p, p, |i, j| {
        let diag = if i == j && missing[i] { T::one() } else { T::zero() };
        pc.mu[i] * pc.mu[j] + diag - pc.masked_beta[i] * pc.masked_beta[j] / pc.denom
    });
    Ok(McrMoments {
        mu: x.with_data(pc.mu),
        second,
    })
}

pub(super) fn generate<T: Scalar>(spec: &ModelSpec<T>, n: usize, rng: &mut Rng) -> Result<(Dataset<T>, Latents<T>)> {
    let beta = spec.beta_star().as_slice();
    let p = beta.len();
    let sigma = spec.sigma();
    let eps = spec.epsilon().to_f64_lossy();
    let mut full = Mat::zeros(n, p);
    let mut xs = Mat::zeros(n, p);
    let mut ys = Vec::with_capacity(n);
    let mut missing = Vec::with_capacity(n * p);
    for i in 0..n {
        full.row_mut(i).iter_mut().for_each(|x| *x = rng.standard_normal());
        let noise: T = rng.standard_normal();
        // response uses the complete covariate
        ys.push(dot(full.row(i), beta) + sigma * noise);
        for j in 0..p {
            let gone = eps > 0.0 && rng.bernoulli(eps);
            missing.push(gone);
            xs[(i, j)] = if gone { T::zero() } else { full[(i, j)] };
        }
    }
    Ok((Dataset::Mcr { ys, xs, missing }, Latents::Unmasked(full)))
}

/// A = (1/n)ΣΣ_β(yᵢ,zᵢ,xᵢ) kept in low-rank-plus-diagonal form,
/// b = (1/n)Σyᵢμᵢ, c = 0.
pub(super) fn operands<T: Scalar>(
    ys: &[T],
    xs: &Mat<T>,
    missing: &[bool],
    beta: &Param<T>,
    sigma: T,
) -> Result<MStepOperands<T>> {
    let n = ys.len();
    let p = xs.cols();
    let inv_n = T::one() / T::lit(n as f64);
    let mut rows: Vec<T> = Vec::with_capacity(2 * n * p);
    let mut weights = Vec::with_capacity(2 * n);
    let mut diag = vec![T::zero(); p];
    let mut b = vec![T::zero(); p];
    for (i, &y) in ys.iter().enumerate() {
        let mask = &missing[i * p..(i + 1) * p];
        let pc = pieces(y, mask, xs.row(i), beta.as_slice(), sigma);
        for (bj, &mj) in b.iter_mut().zip(&pc.mu) {
            *bj += y * mj;
        }
        rows.extend_from_slice(&pc.mu);
        weights.push(T::one());
        if mask.iter().any(|&m| m) {
            for (dj, &m) in diag.iter_mut().zip(mask) {
                if m {
                    *dj += T::one();
                }
            }
            rows.extend_from_slice(&pc.masked_beta);
            weights.push(-T::one() / pc.denom);
        }
    }
    b.iter_mut().for_each(|v| *v *= inv_n);
    let rows = Mat::from_vec(weights.len(), p, rows)?;
    Ok(MStepOperands {
        a: QuadForm::Gram(Gram {
            rows,
            weights: Some(weights),
            diag: Some(diag),
            scale: inv_n,
        }),
        b: beta.with_data(b),
        c: T::zero(),
    })
}

/// (1/n)Σ[yᵢ⟨μᵢ, β′⟩ − ½β′ᵀΣᵢβ′] with the dense conditional moments.
pub(super) fn eval_q<T: Scalar>(
    ys: &[T],
    xs: &Mat<T>,
    missing: &[bool],
    beta_prime: &Param<T>,
    beta: &Param<T>,
    sigma: T,
) -> Result<T> {
    let p = xs.cols();
    let mut acc = T::zero();
    for (i, &y) in ys.iter().enumerate() {
        let x = beta.with_data(xs.row(i).to_vec());
        let m = mcr_conditional_moments(y, &missing[i * p..(i + 1) * p], &x, beta, sigma)?;
        let quad = dot(beta_prime.as_slice(), &m.second.matvec(beta_prime.as_slice()));
        acc += y * m.mu.inner(beta_prime)? - T::lit(0.5) * quad;
    }
    Ok(acc / T::lit(ys.len() as f64))
}
