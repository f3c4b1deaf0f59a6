//! Trial orchestration for the convergence and statistical-rate experiments.

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use regem_core::models::generate;
use regem_core::rng::sample_sphere_perturbation;
use regem_core::{run_regularized_em, ModelKind, Param, Rng, RunTrace, Schedule, Shape, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::preset::Preset;

/// Trials of one grid point use streams `point · STREAMS_PER_POINT + trial`.
const STREAMS_PER_POINT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub trials: usize,
    pub seed: u64,
    /// Raise σ on MCR data until (1 + ω)·‖β*‖/σ equals this value.
    pub mcr_noise_inflate: Option<f64>,
    /// Multiply the oracle initial error by this factor (≥ 1) when setting λ⁽⁰⁾.
    pub init_error_overestimate: Option<f64>,
    pub solver: SolverConfig,
}

impl RunOptions {
    pub fn from_preset(p: &Preset) -> Self {
        Self {
            trials: p.trials,
            seed: p.master_seed,
            mcr_noise_inflate: None,
            init_error_overestimate: None,
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.trials > 0, "trials must be positive");
        if let Some(f) = self.init_error_overestimate {
            ensure!(
                f >= 1.0 && f.is_finite(),
                "init-error overestimate factor must be >= 1, got {f}"
            );
        }
        if let Some(z) = self.mcr_noise_inflate {
            ensure!(z > 0.0 && z.is_finite(), "target zeta must be positive, got {z}");
        }
        self.solver.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub beta_star: Param<f64>,
    pub schedule: Schedule<f64>,
    /// Oracle ‖β⁰ − β*‖₂.
    pub init_error: f64,
    /// σ actually used by the E-step (differs from the preset after inflation).
    pub sigma: f64,
    pub trace: RunTrace<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub error: String,
}

/// One seeded trial: draw β*, data and β⁰, then run regularized EM.
pub fn run_trial(preset: &Preset, opts: &RunOptions, trial: usize, stream: u64) -> Result<TrialResult> {
    let mut rng = Rng::for_trial(opts.seed, stream);
    let beta_star = preset.draw_beta_star(&mut rng)?;
    let mut spec = preset.model_spec(beta_star.clone())?;
    let mut data = generate(&spec, preset.n, &mut rng)?;
    let mut effective = preset.clone();
    if let Some(zeta) = opts.mcr_noise_inflate {
        if preset.kind != ModelKind::Mcr {
            bail!("--mcr-noise-inflate applies to the mcr model only");
        }
        let target_sigma = (1.0 + preset.omega) * beta_star.l2() / zeta;
        if target_sigma > preset.sigma {
            let extra = (target_sigma * target_sigma - preset.sigma * preset.sigma).sqrt();
            data.inflate_response_noise(&mut rng, extra)?;
            spec = spec.with_sigma(target_sigma)?;
            effective.sigma = target_sigma;
        }
    }
    let radius = preset.omega * beta_star.l2();
    let beta0 = sample_sphere_perturbation(&mut rng, &beta_star, radius)?;
    let init_error = beta0.dist(&beta_star)?;
    let assumed = init_error * opts.init_error_overestimate.unwrap_or(1.0);
    let schedule = effective.schedule(&beta_star, assumed)?;
    let trace = run_regularized_em(&spec, &data, preset.regularizer(), &schedule, &beta0, &opts.solver)
        .with_context(|| format!("trial {trial}"))?;
    Ok(TrialResult {
        trial,
        beta_star,
        schedule,
        init_error,
        sigma: effective.sigma,
        trace,
    })
}

/// Worker pool sized by `REGEM_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("REGEM_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("REGEM_THREADS={v:?} is not a number"))?;
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

/// Run `trials` trials with streams `base_stream + i`; results ordered by trial.
pub fn run_trials(preset: &Preset, opts: &RunOptions, base_stream: u64) -> Result<Vec<Result<TrialResult>>> {
    preset.validate()?;
    opts.validate()?;
    let pool = thread_pool()?;
    Ok(pool.install(|| {
        (0..opts.trials)
            .into_par_iter()
            .map(|i| run_trial(preset, opts, i, base_stream + i as u64))
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub trial: usize,
    pub t: usize,
    pub lambda_t: f64,
    pub est_error: f64,
    pub opt_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub lambda0: f64,
    pub delta: f64,
    pub init_error: f64,
    pub sigma: f64,
    pub final_est_error: f64,
    pub inner_converged: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub summaries: Vec<TrialSummary>,
    pub failures: Vec<TrialFailure>,
    pub results: Vec<TrialResult>,
}

impl ConvergenceReport {
    /// Per-iteration median of the given series over successful trials.
    pub fn median_by_t(&self, pick: impl Fn(&ConvergenceRow) -> f64) -> Vec<f64> {
        let t_max = self.rows.iter().map(|r| r.t).max().unwrap_or(0);
        (0..=t_max)
            .map(|t| median(self.rows.iter().filter(|r| r.t == t).map(&pick).collect()))
            .collect()
    }
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

pub fn run_convergence_experiment(preset: &Preset, opts: &RunOptions) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::default();
    for outcome in run_trials(preset, opts, 0)?.into_iter().enumerate() {
        match outcome {
            (_, Ok(res)) => {
                let opt = res.trace.opt_errors();
                for (rec, opt_error) in res.trace.records.iter().zip(opt) {
                    report.rows.push(ConvergenceRow {
                        trial: res.trial,
                        t: rec.t,
                        lambda_t: rec.lambda_t,
                        est_error: rec.est_error,
                        opt_error,
                    });
                }
                report.summaries.push(TrialSummary {
                    trial: res.trial,
                    lambda0: res.schedule.lambda0,
                    delta: res.schedule.delta,
                    init_error: res.init_error,
                    sigma: res.sigma,
                    final_est_error: *res.trace.est_errors().last().expect("nonempty trace"),
                    inner_converged: res.trace.all_converged(),
                });
                report.results.push(res);
            }
            (trial, Err(e)) => report.failures.push(TrialFailure {
                trial,
                error: format!("{e:#}"),
            }),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub p: usize,
    /// s, or θ for the low-rank model.
    pub s: usize,
}

/// Either explicit points or (p values × normalized complexities) at fixed s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepGrid {
    Points {
        points: Vec<GridPoint>,
    },
    Complexity {
        p: Vec<usize>,
        s: usize,
        complexity: Vec<f64>,
    },
}

impl SweepGrid {
    pub fn points(&self, kind: ModelKind) -> Result<Vec<GridPoint>> {
        let pts = match self {
            SweepGrid::Points { points } => points.clone(),
            SweepGrid::Complexity { p, s, complexity } => {
                let mut out = Vec::new();
                for &pp in p {
                    for &c in complexity {
                        let scale = if kind.uses_matrix() {
                            pp as f64
                        } else {
                            (pp as f64).ln()
                        };
                        out.push(GridPoint {
                            n: (c * *s as f64 * scale).round() as usize,
                            p: pp,
                            s: *s,
                        });
                    }
                }
                out
            }
        };
        ensure!(!pts.is_empty(), "empty sweep grid");
        for g in &pts {
            ensure!(g.n > 0 && g.p > 0 && g.s > 0, "invalid grid point {g:?}");
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub p: usize,
    pub n: usize,
    pub s_or_theta: usize,
    pub normalized_complexity: f64,
    pub mean_final_error: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub failures: Vec<TrialFailure>,
}

/// `base` with its size replaced by a grid point.
pub fn preset_at(base: &Preset, g: GridPoint) -> Preset {
    let shape = if base.kind.uses_matrix() {
        Shape::Matrix(g.p, g.p)
    } else {
        Shape::Vector(g.p)
    };
    Preset {
        shape,
        n: g.n,
        sparsity: g.s,
        ..base.clone()
    }
}

pub fn run_rate_experiment(base: &Preset, grid: &SweepGrid, opts: &RunOptions) -> Result<RateReport> {
    let mut report = RateReport::default();
    for (k, g) in grid.points(base.kind)?.into_iter().enumerate() {
        let preset = preset_at(base, g);
        let mut finals = Vec::new();
        for (i, outcome) in run_trials(&preset, opts, k as u64 * STREAMS_PER_POINT)?
            .into_iter()
            .enumerate()
        {
            match outcome {
                Ok(res) => finals.push(*res.trace.est_errors().last().expect("nonempty trace")),
                Err(e) => report.failures.push(TrialFailure {
                    trial: i,
                    error: format!("grid point {k}: {e:#}"),
                }),
            }
        }
        let (mean, stderr) = mean_stderr(&finals);
        report.rows.push(RateRow {
            p: g.p,
            n: g.n,
            s_or_theta: g.s,
            normalized_complexity: preset.normalized_complexity(),
            mean_final_error: mean,
            stderr,
        });
    }
    Ok(report)
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
