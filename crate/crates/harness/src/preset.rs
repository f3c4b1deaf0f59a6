//! Built-in experiment presets, the Δ and λ⁽⁰⁾ prescriptions, and ground-truth
//! generation.

use anyhow::{bail, ensure, Result};
use regem_core::linalg::orthonormalize_columns;
use regem_core::{Mat, ModelKind, ModelSpec, Param, Regularizer, Rng, Schedule, Shape};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub kind: ModelKind,
    pub shape: Shape,
    /// Sparsity s, or rank θ for the low-rank model.
    pub sparsity: usize,
    pub n: usize,
    pub snr: f64,
    pub sigma: f64,
    /// Missing probability (MCR only).
    pub epsilon: f64,
    /// Initial radius relative to ‖β*‖.
    pub omega: f64,
    pub kappa: f64,
    pub t_max: usize,
    pub delta_coefficient: f64,
    pub trials: usize,
    pub master_seed: u64,
}

pub const PRESET_NAMES: [&str; 4] = ["gmm", "mlr-sparse", "mlr-lowrank", "mcr"];

impl Preset {
    pub fn builtin(name: &str) -> Option<Self> {
        let sparse = |kind: ModelKind, snr: f64, epsilon: f64| Preset {
            name: kind.name().to_string(),
            kind,
            shape: Shape::Vector(800),
            sparsity: 5,
            n: 500,
            snr,
            sigma: 1.0,
            epsilon,
            omega: 0.5,
            kappa: 0.7,
            t_max: 7,
            delta_coefficient: default_delta_coefficient(kind),
            trials: 10,
            master_seed: 2017,
        };
        Some(match name {
            "gmm" => sparse(ModelKind::Gmm, 5.0, 0.0),
            "mlr-sparse" => sparse(ModelKind::MlrSparse, 5.0, 0.0),
            "mcr" => sparse(ModelKind::Mcr, 0.5, 0.2),
            "mlr-lowrank" => Preset {
                shape: Shape::Matrix(30, 30),
                sparsity: 3,
                n: 600,
                ..sparse(ModelKind::MlrLowRank, 5.0, 0.0)
            },
            _ => return None,
        })
    }

    pub fn all() -> Vec<Self> {
        PRESET_NAMES
            .iter()
            .map(|n| Self::builtin(n).expect("known preset"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            !self.shape.is_empty() && self.n > 0,
            "dimensions and n must be positive"
        );
        ensure!(self.sparsity > 0, "sparsity/rank must be positive");
        match self.shape {
            Shape::Vector(p) => ensure!(self.sparsity <= p, "s = {} exceeds p = {p}", self.sparsity),
            Shape::Matrix(r, c) => ensure!(self.sparsity <= r.min(c), "rank {} exceeds {r}x{c}", self.sparsity),
        }
        ensure!(
            self.shape.is_matrix() == self.kind.uses_matrix(),
            "shape {} does not fit {}",
            self.shape,
            self.kind
        );
        ensure!(
            self.omega >= 0.0 && self.snr > 0.0 && self.sigma > 0.0,
            "omega, snr and sigma out of range"
        );
        ensure!(self.kappa > 0.0 && self.kappa < 1.0, "kappa must lie in (0, 1)");
        ensure!(self.trials > 0, "trials must be positive");
        Ok(())
    }

    pub fn regularizer(&self) -> Regularizer {
        if self.kind.uses_matrix() {
            Regularizer::Nuclear
        } else {
            Regularizer::L1
        }
    }

    /// Subspace compatibility constant: √s, or √(2θ) for low rank.
    pub fn psi(&self) -> f64 {
        if self.kind.uses_matrix() {
            (2.0 * self.sparsity as f64).sqrt()
        } else {
            (self.sparsity as f64).sqrt()
        }
    }

    /// Normalized sample complexity n/(s·ln p), or n/(θ·p) for low rank.
    pub fn normalized_complexity(&self) -> f64 {
        match self.shape {
            Shape::Vector(p) => self.n as f64 / (self.sparsity as f64 * (p as f64).ln()),
            Shape::Matrix(p, _) => self.n as f64 / (self.sparsity as f64 * p as f64),
        }
    }

    /// ‖β*‖ implied by the signal-to-noise ratio.
    pub fn signal_norm(&self) -> f64 {
        self.snr * self.sigma
    }

    /// Random ground truth with exactly `sparsity` nonzeros (or exact rank),
    /// scaled to [`Preset::signal_norm`].
    pub fn draw_beta_star(&self, rng: &mut Rng) -> Result<Param<f64>> {
        let target = self.signal_norm();
        let raw = match self.shape {
            Shape::Vector(p) => {
                let mut v = vec![0.0; p];
                for i in rng.choose_indices(p, self.sparsity) {
                    // a draw of exactly zero would drop the support size
                    v[i] = loop {
                        let x: f64 = rng.standard_normal();
                        if x.abs() > 1e-3 {
                            break x;
                        }
                    };
                }
                Param::vector(v)?
            }
            Shape::Matrix(p1, p2) => {
                let theta = self.sparsity;
                let u = orthonormalize_columns(&Mat::from_vec(p1, theta, rng.normal_vec::<f64>(p1 * theta))?);
                let v = orthonormalize_columns(&Mat::from_vec(p2, theta, rng.normal_vec::<f64>(p2 * theta))?);
                let sv: Vec<f64> = (0..theta).map(|_| 1.0 + rng.uniform::<f64>()).collect();
                let g = Mat::from_fn(p1, p2, |i, j| (0..theta).map(|k| u[(i, k)] * sv[k] * v[(j, k)]).sum());
                Param::from_mat(&g)?
            }
        };
        Ok(raw.scale(target / raw.l2()))
    }

    pub fn model_spec(&self, beta_star: Param<f64>) -> Result<ModelSpec<f64>> {
        Ok(ModelSpec::new(self.kind, beta_star, self.sigma, self.epsilon)?)
    }

    /// Restricted strong concavity constant γ_n used in the λ⁽⁰⁾ prescription.
    pub fn gamma_n(&self) -> f64 {
        gamma_n(self.kind)
    }

    /// Regularization schedule for one trial.
    pub fn schedule(&self, beta_star: &Param<f64>, init_error: f64) -> Result<Schedule<f64>> {
        let lambda0 = self.gamma_n() / (5.0 * self.psi()) * init_error;
        let delta = delta_for(self, beta_star)?;
        Ok(Schedule::new(lambda0, self.kappa, delta, self.t_max)?)
    }
}

pub fn gamma_n(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Gmm => 1.0,
        ModelKind::MlrSparse => 1.0 / 3.0,
        ModelKind::MlrLowRank => 1.0 / 20.0,
        ModelKind::Mcr => 1.0 / 9.0,
    }
}

pub fn default_delta_coefficient(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Gmm | ModelKind::MlrSparse => 0.1,
        ModelKind::MlrLowRank => 0.01,
        ModelKind::Mcr => 0.2,
    }
}

/// Δ from the model's statistical rate, natural log:
///
/// * gmm: `c(‖β*‖∞ + σ)√(ln p / n)`
/// * mlr-sparse: `c(‖β*‖₂ + σ)√(ln p / n)`
/// * mlr-lowrank: `c(‖Γ*‖_F + σ)√((p1 + p2) / n)`
/// * mcr: `cσ√(ln p / n)`
pub fn delta_for(preset: &Preset, beta_star: &Param<f64>) -> Result<f64> {
    let c = preset.delta_coefficient;
    let sigma = preset.sigma;
    let n = preset.n as f64;
    let log_rate = |p: usize| ((p as f64).ln() / n).sqrt();
    Ok(match (preset.kind, preset.shape) {
        (ModelKind::Gmm, Shape::Vector(p)) => c * (beta_star.linf() + sigma) * log_rate(p),
        (ModelKind::MlrSparse, Shape::Vector(p)) => c * (beta_star.l2() + sigma) * log_rate(p),
        (ModelKind::MlrLowRank, Shape::Matrix(p1, p2)) => {
            c * (beta_star.l2() + sigma) * (((p1 + p2) as f64) / n).sqrt()
        }
        (ModelKind::Mcr, Shape::Vector(p)) => c * sigma * log_rate(p),
        (kind, shape) => bail!("{kind} cannot use shape {shape}"),
    })
}
