use crate::error::Result;
use crate::linalg::{axpy, dot, Mat};
use crate::operands::{MStepOperands, QuadForm};
use crate::param::Param;
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::{logistic, Dataset, Latents, ModelSpec};

/// Posterior probability that `y` came from the +β component.
///
/// The two-exponential ratio exp(−‖y−β‖²/2σ²) / (exp(−‖y−β‖²/2σ²) + exp(−‖y+β‖²/2σ²))
/// simplifies to the logistic of 2⟨y,β⟩/σ², which cannot overflow.
pub fn weight_gmm<T: Scalar>(y: &[T], beta: &[T], sigma: T) -> T {
    logistic(T::lit(2.0) * dot(y, beta) / (sigma * sigma))
}

pub(super) fn generate<T: Scalar>(spec: &ModelSpec<T>, n: usize, rng: &mut Rng) -> Result<(Dataset<T>, Latents<T>)> {
    let beta = spec.beta_star().as_slice();
    let p = beta.len();
    let sigma = spec.sigma();
    let mut ys = Mat::zeros(n, p);
    let mut signs = Vec::with_capacity(n);
    for i in 0..n {
        let z: T = rng.sign();
        signs.push(if z > T::zero() { 1 } else { -1 });
        for (yj, &bj) in ys.row_mut(i).iter_mut().zip(beta) {
            *yj = z * bj + sigma * rng.standard_normal::<T>();
        }
    }
    Ok((Dataset::Gmm { ys }, Latents::Signs(signs)))
}

/// A = I, b = (1/n)Σ(2wᵢ − 1)yᵢ, c = −(1/2n)Σ‖yᵢ‖².
pub(super) fn operands<T: Scalar>(ys: &Mat<T>, beta: &Param<T>, sigma: T) -> Result<MStepOperands<T>> {
    let n = ys.rows();
    let p = ys.cols();
    let mut b = vec![T::zero(); p];
    let mut sq = T::zero();
    for i in 0..n {
        let y = ys.row(i);
        let w = weight_gmm(y, beta.as_slice(), sigma);
        axpy(T::lit(2.0) * w - T::one(), y, &mut b);
        sq += dot(y, y);
    }
    let inv_n = T::one() / T::lit(n as f64);
    b.iter_mut().for_each(|x| *x *= inv_n);
    Ok(MStepOperands {
        a: QuadForm::Identity(p),
        b: beta.with_data(b),
        c: -T::lit(0.5) * inv_n * sq,
    })
}

pub(super) fn eval_q<T: Scalar>(ys: &Mat<T>, beta_prime: &Param<T>, beta: &Param<T>, sigma: T) -> T {
    let n = ys.rows();
    let bp = beta_prime.as_slice();
    let mut acc = T::zero();
    for i in 0..n {
        let y = ys.row(i);
        let w = weight_gmm(y, beta.as_slice(), sigma);
        let minus: T = y.iter().zip(bp).map(|(&a, &b)| (a - b) * (a - b)).sum();
        let plus: T = y.iter().zip(bp).map(|(&a, &b)| (a + b) * (a + b)).sum();
        acc += w * minus + (T::one() - w) * plus;
    }
    -acc / (T::lit(2.0) * T::lit(n as f64))
}
