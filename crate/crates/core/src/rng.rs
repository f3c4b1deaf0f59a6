//! Seeded randomness.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`), a counter-based
//! stream cipher PRNG. Identical seeds and call sequences give bit-identical
//! streams on every platform. Independent trials use
//! [`Rng::for_trial`], which keeps the master seed and selects a distinct
//! ChaCha stream per trial index.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::param::Param;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream `trial` under `master_seed`; streams never overlap.
    pub fn for_trial(master_seed: u64, trial: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(trial);
        Self {
            seed: master_seed,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal<T: Scalar>(&mut self) -> T {
        let z: f64 = StandardNormal.sample(&mut self.inner);
        T::lit(z)
    }

    /// Uniform on [0, 1).
    pub fn uniform<T: Scalar>(&mut self) -> T {
        T::lit(self.inner.random::<f64>())
    }

    pub fn bernoulli(&mut self, prob: f64) -> bool {
        self.inner.random::<f64>() < prob
    }

    /// Rademacher ±1.
    pub fn sign<T: Scalar>(&mut self) -> T {
        if self.inner.random::<bool>() {
            T::one()
        } else {
            -T::one()
        }
    }

    /// `amount` distinct indices from `0..len`, sorted ascending.
    pub fn choose_indices(&mut self, len: usize, amount: usize) -> Vec<usize> {
        let mut idx = rand::seq::index::sample(&mut self.inner, len, amount).into_vec();
        idx.sort_unstable();
        idx
    }

    /// Uniformly random permutation of `items` (Fisher–Yates).
    pub fn shuffle<X>(&mut self, items: &mut [X]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }

    pub fn normal_vec<T: Scalar>(&mut self, len: usize) -> Vec<T> {
        (0..len).map(|_| self.standard_normal()).collect()
    }
}

/// Coordinates i.i.d. N(meanᵢ, σ²). `sigma = 0` returns `mean` exactly.
pub fn sample_gaussian_vector<T: Scalar>(rng: &mut Rng, mean: &Param<T>, sigma: T) -> Result<Param<T>> {
    if sigma.is_sign_negative() || !sigma.is_finite() {
        return Err(Error::Config(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == T::zero() {
        return Ok(mean.clone());
    }
    let data = mean
        .as_slice()
        .iter()
        .map(|&m| m + sigma * rng.standard_normal::<T>())
        .collect();
    Param::new(mean.shape(), data)
}

/// `center + radius·u` with `u` uniform on the unit (Frobenius) sphere.
pub fn sample_sphere_perturbation<T: Scalar>(rng: &mut Rng, center: &Param<T>, radius: T) -> Result<Param<T>> {
    if radius.is_sign_negative() || !radius.is_finite() {
        return Err(Error::Config(format!("radius must be >= 0, got {radius}")));
    }
    if radius == T::zero() {
        return Ok(center.clone());
    }
    let dir = loop {
        let g: Vec<T> = rng.normal_vec(center.len());
        let n = g.iter().map(|&x| x * x).sum::<T>().sqrt();
        if n > T::zero() {
            break g.into_iter().map(|x| x / n).collect::<Vec<_>>();
        }
    };
    let data = center
        .as_slice()
        .iter()
        .zip(dir)
        .map(|(&c, d)| c + radius * d)
        .collect();
    Param::new(center.shape(), data)
}
