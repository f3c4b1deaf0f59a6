//! The regularized EM loop, its resampling variant, and the regularization
//! schedule `λ⁽ᵗ⁾ = κλ⁽ᵗ⁻¹⁾ + Δ`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{e_step_operands, Dataset, ModelSpec};
use crate::param::Param;
use crate::regularizer::Regularizer;
use crate::scalar::Scalar;
use crate::solver::{solve_regularized_mstep, SolveReport, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule<T> {
    pub lambda0: T,
    pub kappa: T,
    pub delta: T,
    /// Number of EM iterations T.
    pub t_max: usize,
}

impl<T: Scalar> Schedule<T> {
    pub fn new(lambda0: T, kappa: T, delta: T, t_max: usize) -> Result<Self> {
        let s = Self {
            lambda0,
            kappa,
            delta,
            t_max,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |x: T| x.is_finite() && !x.is_sign_negative();
        if !nonneg(self.lambda0) || !nonneg(self.delta) {
            return Err(Error::Config(format!(
                "lambda0 and delta must be >= 0, got {} and {}",
                self.lambda0, self.delta
            )));
        }
        if !(self.kappa > T::zero() && self.kappa < T::one()) {
            return Err(Error::Config(format!("kappa must lie in (0, 1), got {}", self.kappa)));
        }
        Ok(())
    }

    /// Closed form `κᵗλ⁰ + (1 − κᵗ)/(1 − κ)·Δ`.
    pub fn lambda_at(&self, t: usize) -> Result<T> {
        if t > self.t_max {
            return Err(Error::Range {
                index: t,
                max: self.t_max,
            });
        }
        let kt = self.kappa.powi(t as i32);
        Ok(kt * self.lambda0 + (T::one() - kt) / (T::one() - self.kappa) * self.delta)
    }

    /// `λ⁽⁰⁾, …, λ⁽ᵀ⁾` by the recursion.
    pub fn recursive(&self) -> Vec<T> {
        std::iter::successors(Some(self.lambda0), |&l| Some(self.kappa * l + self.delta))
            .take(self.t_max + 1)
            .collect()
    }
}

pub fn lambda_at<T: Scalar>(s: &Schedule<T>, t: usize) -> Result<T> {
    s.lambda_at(t)
}

/// Summary of one inner solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSummary {
    pub iters: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl<T: Scalar> From<&SolveReport<T>> for InnerSummary {
    fn from(r: &SolveReport<T>) -> Self {
        Self {
            iters: r.iters,
            kkt_residual: r.kkt_residual.to_f64_lossy(),
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord<T> {
    pub t: usize,
    pub lambda_t: T,
    pub beta_t: Param<T>,
    /// ‖β⁽ᵗ⁾ − β*‖₂
    pub est_error: T,
    /// `None` at t = 0.
    pub inner: Option<InnerSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace<T> {
    pub records: Vec<IterRecord<T>>,
}

impl<T: Scalar> RunTrace<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_beta(&self) -> &Param<T> {
        &self.records.last().expect("trace holds beta0").beta_t
    }

    pub fn est_errors(&self) -> Vec<T> {
        self.records.iter().map(|r| r.est_error).collect()
    }

    /// ‖β⁽ᵗ⁾ − β⁽ᵀ⁾‖₂ for every t.
    pub fn opt_errors(&self) -> Vec<T> {
        let last = self.final_beta();
        self.records
            .iter()
            .map(|r| r.beta_t.dist(last).expect("iterates share a shape"))
            .collect()
    }

    /// True when every inner solve met its tolerance.
    pub fn all_converged(&self) -> bool {
        self.records.iter().filter_map(|r| r.inner).all(|i| i.converged)
    }
}

fn start<T: Scalar>(spec: &ModelSpec<T>, s: &Schedule<T>, beta0: &Param<T>) -> Result<RunTrace<T>> {
    s.validate()?;
    spec.check_param(beta0)?;
    beta0.ensure_finite("beta0")?;
    let mut records = Vec::with_capacity(s.t_max + 1);
    records.push(IterRecord {
        t: 0,
        lambda_t: s.lambda0,
        beta_t: beta0.clone(),
        est_error: beta0.dist(spec.beta_star())?,
        inner: None,
    });
    Ok(RunTrace { records })
}

/// One E-step plus regularized M-step on `data`, warm-started at `beta_prev`.
pub fn em_step<T: Scalar>(
    spec: &ModelSpec<T>,
    data: &Dataset<T>,
    r: Regularizer,
    lambda: T,
    beta_prev: &Param<T>,
    cfg: &SolverConfig,
) -> Result<SolveReport<T>> {
    let ops = e_step_operands(spec, data, beta_prev)?;
    solve_regularized_mstep(&ops, r, lambda, beta_prev, cfg)
}

fn push<T: Scalar>(
    trace: &mut RunTrace<T>,
    spec: &ModelSpec<T>,
    t: usize,
    lambda_t: T,
    rep: SolveReport<T>,
) -> Result<()> {
    let inner = InnerSummary::from(&rep);
    trace.records.push(IterRecord {
        t,
        lambda_t,
        est_error: rep.solution.dist(spec.beta_star())?,
        beta_t: rep.solution,
        inner: Some(inner),
    });
    Ok(())
}

fn at_iteration(t: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Iteration {
        iteration: t,
        source: Box::new(e),
    }
}

/// Regularized EM on the full sample at every iteration.
pub fn run_regularized_em<T: Scalar>(
    spec: &ModelSpec<T>,
    data: &Dataset<T>,
    r: Regularizer,
    s: &Schedule<T>,
    beta0: &Param<T>,
    cfg: &SolverConfig,
) -> Result<RunTrace<T>> {
    let mut trace = start(spec, s, beta0)?;
    let mut lambda = s.lambda0;
    for t in 1..=s.t_max {
        lambda = s.kappa * lambda + s.delta;
        let prev = trace.final_beta().clone();
        let rep = em_step(spec, data, r, lambda, &prev, cfg).map_err(at_iteration(t))?;
        push(&mut trace, spec, t, lambda, rep)?;
    }
    Ok(trace)
}

/// `T` disjoint consecutive blocks of `floor(n/T)` samples; the remainder is
/// left out.
pub fn partition(n: usize, t_max: usize) -> Result<Vec<Range<usize>>> {
    if t_max == 0 {
        return Ok(Vec::new());
    }
    if n < t_max {
        return Err(Error::Config(format!(
            "resampling needs n >= T, got n = {n}, T = {t_max}"
        )));
    }
    let m = n / t_max;
    Ok((0..t_max).map(|k| k * m..(k + 1) * m).collect())
}

/// Resampled EM: iteration `t` sees only block `t` of [`partition`].
pub fn run_resampled_em<T: Scalar>(
    spec: &ModelSpec<T>,
    data: &Dataset<T>,
    r: Regularizer,
    s: &Schedule<T>,
    beta0: &Param<T>,
    cfg: &SolverConfig,
) -> Result<RunTrace<T>> {
    let blocks = partition(data.len(), s.t_max)?;
    let mut trace = start(spec, s, beta0)?;
    let mut lambda = s.lambda0;
    for (t, block) in (1..=s.t_max).zip(blocks) {
        lambda = s.kappa * lambda + s.delta;
        let prev = trace.final_beta().clone();
        let rep = data
            .subset(block)
            .and_then(|d| em_step(spec, &d, r, lambda, &prev, cfg))
            .map_err(at_iteration(t))?;
        push(&mut trace, spec, t, lambda, rep)?;
    }
    Ok(trace)
}

/// Analysis constants: strong concavity γ, smoothness μ, gradient stability τ,
/// restricted strong concavity γ_n, norm ratio α and basin radius r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams<T> {
    pub gamma: T,
    pub mu: T,
    pub tau: T,
    pub gamma_n: T,
    pub alpha: T,
    pub r: T,
}

impl<T: Scalar> TheoryParams<T> {
    pub fn new(gamma: T, mu: T, tau: T, gamma_n: T, alpha: T, r: T) -> Result<Self> {
        let all = [gamma, mu, tau, gamma_n, alpha, r];
        if all.iter().any(|&x| !(x > T::zero() && x.is_finite())) {
            return Err(Error::Config("theory constants must be positive".into()));
        }
        Ok(Self {
            gamma,
            mu,
            tau,
            gamma_n,
            alpha,
            r,
        })
    }

    /// Smallest admissible contraction `5αμτ/(γγ_n)`. Reported, never enforced.
    pub fn kappa_star(&self) -> T {
        T::lit(5.0) * self.alpha * self.mu * self.tau / (self.gamma * self.gamma_n)
    }

    /// Largest admissible Δ, `rγ_n/(60Ψ)`.
    pub fn delta_bar(&self, psi: T) -> T {
        self.r * self.gamma_n / (T::lit(60.0) * psi)
    }
}

/// `κᵗ·init_error + (5/γ_n)·(1 − κᵗ)/(1 − κ)·Ψ·Δ`
pub fn error_bound<T: Scalar>(tp: &TheoryParams<T>, psi: T, s: &Schedule<T>, init_error: T, t: usize) -> T {
    let kt = s.kappa.powi(t as i32);
    kt * init_error + T::lit(5.0) / tp.gamma_n * (T::one() - kt) / (T::one() - s.kappa) * psi * s.delta
}
