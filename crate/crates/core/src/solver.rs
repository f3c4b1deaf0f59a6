//! Accelerated proximal gradient for the regularized M-step
//!
//! ```text
//! minimize  F(v) = ½⟨v, Av⟩ − ⟨b, v⟩ + λ·R(v)
//! ```
//!
//! which is `argmax Q_n(·|β) − λR` up to sign and the constant `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::operands::{MStepOperands, QuadForm};
use crate::param::Param;
use crate::regularizer::Regularizer;
use crate::scalar::Scalar;

const POWER_ITERS: usize = 50;
const POWER_SAFETY: f64 = 1.01;
const OBJ_SLACK: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// Step `1/L` with `L` from [`lipschitz_estimate`], never adjusted.
    FixedLipschitz,
    /// Start from the estimate and divide the step by `shrink` whenever the
    /// quadratic upper bound fails.
    Backtracking { shrink: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub kkt_tol: f64,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            kkt_tol: 1e-8,
            step_rule: StepRule::Backtracking { shrink: 0.5 },
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if !(self.kkt_tol > 0.0 && self.kkt_tol.is_finite()) {
            return Err(Error::Config(format!("kkt_tol must be positive, got {}", self.kkt_tol)));
        }
        if let StepRule::Backtracking { shrink } = self.step_rule {
            if !(shrink > 0.0 && shrink < 1.0) {
                return Err(Error::Config(format!("shrink must lie in (0, 1), got {shrink}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub solution: Param<T>,
    pub iters: usize,
    /// `‖u − prox(u − ∇f(u), λ)‖₂` at the returned point.
    pub kkt_residual: T,
    /// F at the returned point.
    pub objective: T,
    pub converged: bool,
    /// F after every accepted iterate. Nonincreasing up to rounding.
    pub objectives: Vec<T>,
}

/// Upper estimate of λ_max(A).
///
/// The identity operator returns exactly 1. Everything else runs 50 power
/// iterations from a fixed start vector and inflates the result by 1%.
pub fn lipschitz_estimate<T: Scalar>(ops: &MStepOperands<T>) -> T {
    quad_lipschitz(&ops.a)
}

fn quad_lipschitz<T: Scalar>(a: &QuadForm<T>) -> T {
    if a.is_identity() {
        return T::one();
    }
    let d = a.dim();
    // deterministic start with no special alignment to coordinate axes
    let mut v: Vec<T> = (0..d)
        .map(|i| T::lit(1.0 + 0.5 * ((i as f64) * 0.7548).sin()))
        .collect();
    let mut est = T::zero();
    for _ in 0..POWER_ITERS {
        let nv = dot(&v, &v).sqrt();
        if nv == T::zero() {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let av = a.apply_slice(&v);
        est = dot(&av, &av).sqrt();
        v = av;
    }
    let est = est * T::lit(POWER_SAFETY);
    if est > T::zero() && est.is_finite() {
        est
    } else {
        T::one()
    }
}

struct Problem<'a, T> {
    ops: &'a MStepOperands<T>,
    r: Regularizer,
    lambda: T,
}

impl<T: Scalar> Problem<'_, T> {
    fn objective(&self, v: &[T], av: &[T], shaped: &Param<T>) -> Result<T> {
        let smooth = T::lit(0.5) * dot(v, av) - dot(v, self.ops.b.as_slice());
        let pen = if self.lambda == T::zero() {
            T::zero()
        } else {
            self.lambda * self.r.value(&shaped.with_data(v.to_vec()))?
        };
        Ok(smooth + pen)
    }

    /// `z − t·(Az − b)` then prox with threshold `t·λ`.
    fn prox_step(&self, z: &[T], az: &[T], t: T, shaped: &Param<T>) -> Result<Vec<T>> {
        let b = self.ops.b.as_slice();
        let u: Vec<T> = z
            .iter()
            .zip(az)
            .zip(b)
            .map(|((&zi, &ai), &bi)| zi - t * (ai - bi))
            .collect();
        Ok(self.r.prox(&shaped.with_data(u), t * self.lambda)?.into_vec())
    }

    fn kkt_residual(&self, v: &[T], av: &[T], shaped: &Param<T>) -> Result<T> {
        let p = self.prox_step(v, av, T::one(), shaped)?;
        Ok(v.iter().zip(&p).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt())
    }
}

fn all_finite<T: Scalar>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Solve the regularized M-step by FISTA with objective-based restart.
///
/// Returns a report with `converged == false` when `max_iters` is exhausted;
/// non-finite iterates are an error.
pub fn solve_regularized_mstep<T: Scalar>(
    ops: &MStepOperands<T>,
    r: Regularizer,
    lambda: T,
    init: &Param<T>,
    cfg: &SolverConfig,
) -> Result<SolveReport<T>> {
    cfg.validate()?;
    if lambda.is_sign_negative() || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    init.check_same_shape(&ops.b)?;
    if ops.a.dim() != init.len() {
        return Err(crate::error::dim_err(init.len(), ops.a.dim()));
    }
    init.ensure_finite("solver init")?;
    let prob = Problem { ops, r, lambda };
    let tol = T::lit(cfg.kkt_tol);

    if ops.a.is_identity() {
        // unit Hessian: one prox step from anywhere lands on the minimizer
        let x = r.prox(&ops.b, lambda)?;
        let ax = x.as_slice().to_vec();
        let obj = prob.objective(x.as_slice(), &ax, init)?;
        let res = prob.kkt_residual(x.as_slice(), &ax, init)?;
        return Ok(SolveReport {
            solution: x,
            iters: 1,
            kkt_residual: res,
            objective: obj,
            converged: res <= tol,
            objectives: vec![obj],
        });
    }

    let mut lip = quad_lipschitz(&ops.a);
    let mut x = init.as_slice().to_vec();
    let mut ax = ops.a.apply_slice(&x);
    let mut x_prev = x.clone();
    let mut ax_prev = ax.clone();
    let mut obj = prob.objective(&x, &ax, init)?;
    let mut res = prob.kkt_residual(&x, &ax, init)?;
    let mut objectives = vec![obj];
    let mut momentum = T::one();
    let mut iters = 0;

    while res > tol && iters < cfg.max_iters {
        iters += 1;
        let next_m = (T::one() + (T::one() + T::lit(4.0) * momentum * momentum).sqrt()) / T::lit(2.0);
        let beta = (momentum - T::one()) / next_m;
        let y: Vec<T> = x.iter().zip(&x_prev).map(|(&a, &b)| a + beta * (a - b)).collect();
        let ay: Vec<T> = ax.iter().zip(&ax_prev).map(|(&a, &b)| a + beta * (a - b)).collect();

        let (mut cand, mut acand) = step(&prob, &y, &ay, &mut lip, cfg.step_rule, init)?;
        let mut cand_obj = prob.objective(&cand, &acand, init)?;
        momentum = next_m;
        // differences below rounding level are not evidence of ascent
        let slack = T::lit(OBJ_SLACK) * obj.abs().max(T::one());
        if cand_obj > obj + slack {
            // restart: a plain proximal gradient step from x does not increase F
            momentum = T::one();
            (cand, acand) = step(&prob, &x, &ax, &mut lip, cfg.step_rule, init)?;
            cand_obj = prob.objective(&cand, &acand, init)?;
        }
        if !all_finite(&cand) || !cand_obj.is_finite() {
            return Err(Error::NonFinite("M-step solver"));
        }
        x_prev = std::mem::replace(&mut x, cand);
        ax_prev = std::mem::replace(&mut ax, acand);
        obj = cand_obj;
        objectives.push(obj);
        res = prob.kkt_residual(&x, &ax, init)?;
    }

    Ok(SolveReport {
        solution: init.with_data(x),
        iters,
        kkt_residual: res,
        objective: obj,
        converged: res <= tol,
        objectives,
    })
}

/// One proximal gradient step from `z`, returning the new point and its image
/// under `A`.
fn step<T: Scalar>(
    prob: &Problem<'_, T>,
    z: &[T],
    az: &[T],
    lip: &mut T,
    rule: StepRule,
    shaped: &Param<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    loop {
        let next = prob.prox_step(z, az, T::one() / *lip, shaped)?;
        let anext = prob.ops.a.apply_slice(&next);
        let StepRule::Backtracking { shrink } = rule else {
            return Ok((next, anext));
        };
        // f(x) − f(z) − ⟨∇f(z), x − z⟩ = ½⟨d, Ad⟩ for quadratic f
        let d: Vec<T> = next.iter().zip(z).map(|(&a, &b)| a - b).collect();
        let ad: Vec<T> = anext.iter().zip(az).map(|(&a, &b)| a - b).collect();
        let curv = dot(&d, &ad);
        let dd = dot(&d, &d);
        if curv <= *lip * dd * T::lit(1.0 + 1e-12) || dd == T::zero() {
            return Ok((next, anext));
        }
        *lip /= T::lit(shrink);
        if !lip.is_finite() {
            return Err(Error::NonFinite("step size"));
        }
    }
}
