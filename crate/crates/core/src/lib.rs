//! Regularized EM for high-dimensional latent-variable models.
//!
//! The library is generic over the floating-point type through [`Scalar`];
//! `f64` aliases are provided at the crate root for the common case.
//!
//! The pieces, bottom-up:
//!
//! * [`param`]: vector/matrix parameters and their norms,
//! * [`regularizer`]: ℓ₁ and nuclear-norm penalties with proximal maps and
//!   subspace machinery,
//! * [`models`]: data generation and E-steps for the mixture, mixed regression
//!   and missing-covariate models,
//! * [`solver`]: accelerated proximal gradient for the regularized M-step,
//! * [`em`]: the outer loop, its regularization schedule and resampling
//!   variant.
//!
//! ```
//! use regem_core::{run_regularized_em, ModelKind, ModelSpec, Param, Regularizer, Rng, Schedule, SolverConfig};
//!
//! let mut rng = Rng::new(1);
//! let beta_star = Param::vector(vec![1.0, -1.0, 0.0, 0.0, 0.0]).unwrap();
//! let spec = ModelSpec::new(ModelKind::Gmm, beta_star, 1.0, 0.0).unwrap();
//! let data = regem_core::models::generate(&spec, 500, &mut rng).unwrap();
//! let schedule = Schedule::new(0.2, 0.7, 0.01, 7).unwrap();
//! let init = Param::vector(vec![0.5, -0.5, 0.3, 0.0, 0.0]).unwrap();
//! let trace = run_regularized_em(&spec, &data, Regularizer::L1, &schedule, &init, &SolverConfig::default()).unwrap();
//! assert!(trace.est_errors().last().unwrap() < &trace.est_errors()[0]);
//! ```

pub mod em;
pub mod error;
pub mod linalg;
pub mod models;
pub mod operands;
pub mod param;
pub mod regularizer;
pub mod rng;
pub mod scalar;
pub mod solver;

pub use em::{
    error_bound, lambda_at, run_regularized_em, run_resampled_em, IterRecord, RunTrace, Schedule, TheoryParams,
};
pub use error::{Error, Result};
pub use linalg::Mat;
pub use models::{Dataset, ModelKind, ModelSpec};
pub use operands::{MStepOperands, QuadForm};
pub use param::{inner, norm, NormKind, Param, Shape};
pub use regularizer::{Regularizer, Subspace, SubspacePair};
pub use rng::Rng;
pub use scalar::Scalar;
pub use solver::{lipschitz_estimate, solve_regularized_mstep, SolveReport, SolverConfig, StepRule};

pub type ParamF64 = Param<f64>;
pub type ParamF32 = Param<f32>;
pub type MatF64 = Mat<f64>;
pub type ModelSpecF64 = ModelSpec<f64>;
pub type DatasetF64 = Dataset<f64>;
pub type RunTraceF64 = RunTrace<f64>;
pub type ScheduleF64 = Schedule<f64>;
