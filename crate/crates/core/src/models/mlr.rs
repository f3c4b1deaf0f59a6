use crate::error::Result;
use crate::linalg::{axpy, dot, Mat};
use crate::operands::{Gram, MStepOperands, QuadForm};
use crate::param::Param;
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::{logistic, Dataset, Latents, ModelSpec};

/// Posterior probability of the +β branch for the pair `(y, x)`:
/// logistic(2y⟨x,β⟩/σ²). `x` and `beta` are flattened; for matrices ⟨·,·⟩ is
/// the trace inner product.
pub fn weight_mlr<T: Scalar>(y: T, x: &[T], beta: &[T], sigma: T) -> T {
    logistic(T::lit(2.0) * y * dot(x, beta) / (sigma * sigma))
}

pub(super) fn generate<T: Scalar>(spec: &ModelSpec<T>, n: usize, rng: &mut Rng) -> Result<(Dataset<T>, Latents<T>)> {
    let beta = spec.beta_star().as_slice();
    let d = beta.len();
    let sigma = spec.sigma();
    let mut xs = Mat::zeros(n, d);
    let mut ys = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for i in 0..n {
        let row = xs.row_mut(i);
        row.iter_mut().for_each(|x| *x = rng.standard_normal());
        let z: T = rng.sign();
        signs.push(if z > T::zero() { 1 } else { -1 });
        let noise: T = rng.standard_normal();
        ys.push(z * dot(row, beta) + sigma * noise);
    }
    Ok((
        Dataset::Mlr {
            ys,
            xs,
            shape: spec.shape(),
        },
        Latents::Signs(signs),
    ))
}

/// A = (1/n)Σxᵢxᵢᵀ (implicit), b = (1/n)Σ(2wᵢ−1)yᵢxᵢ, c = −(1/2n)Σyᵢ².
pub(super) fn operands<T: Scalar>(ys: &[T], xs: &Mat<T>, beta: &Param<T>, sigma: T) -> Result<MStepOperands<T>> {
    let n = ys.len();
    let inv_n = T::one() / T::lit(n as f64);
    let mut b = vec![T::zero(); xs.cols()];
    let mut sq = T::zero();
    for (i, &y) in ys.iter().enumerate() {
        let x = xs.row(i);
        let w = weight_mlr(y, x, beta.as_slice(), sigma);
        axpy((T::lit(2.0) * w - T::one()) * y, x, &mut b);
        sq += y * y;
    }
    b.iter_mut().for_each(|v| *v *= inv_n);
    Ok(MStepOperands {
        a: QuadForm::Gram(Gram {
            rows: xs.clone(),
            weights: None,
            diag: None,
            scale: inv_n,
        }),
        b: beta.with_data(b),
        c: -T::lit(0.5) * inv_n * sq,
    })
}

pub(super) fn eval_q<T: Scalar>(ys: &[T], xs: &Mat<T>, beta_prime: &Param<T>, beta: &Param<T>, sigma: T) -> T {
    let mut acc = T::zero();
    for (i, &y) in ys.iter().enumerate() {
        let x = xs.row(i);
        let w = weight_mlr(y, x, beta.as_slice(), sigma);
        let fit = dot(x, beta_prime.as_slice());
        acc += w * (y - fit) * (y - fit) + (T::one() - w) * (y + fit) * (y + fit);
    }
    -acc / (T::lit(2.0) * T::lit(ys.len() as f64))
}
