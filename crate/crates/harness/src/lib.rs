//! Simulation harness for regularized EM: presets, trial orchestration and
//! CSV/JSON output. The `regem` binary is a thin CLI over this crate.

pub mod experiment;
pub mod output;
pub mod preset;
pub mod selftest;

pub use experiment::{run_convergence_experiment, run_rate_experiment, RunOptions, SweepGrid};
pub use preset::{delta_for, Preset};
