use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use regem_core::ModelKind;
use regem_harness::experiment::{run_convergence_experiment, run_rate_experiment, RunOptions, SweepGrid};
use regem_harness::output::{sidecar_path, write_csv_file, RunConfig, Sidecar, CONVERGENCE_COLUMNS, RATE_COLUMNS};
use regem_harness::preset::{Preset, PRESET_NAMES};
use regem_harness::selftest;

#[derive(Parser)]
#[command(name = "regem", version, about = "Regularized EM simulation harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-iteration estimation and optimization errors for one preset.
    Convergence {
        #[arg(long, required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rerun the configuration stored in a JSON sidecar.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Inflate MCR response noise so that (1 + omega) * SNR equals this value.
        #[arg(long, value_name = "TARGET_ZETA")]
        mcr_noise_inflate: Option<f64>,
        /// Overstate the initial error by this factor when setting lambda0.
        #[arg(long, value_name = "FACTOR")]
        init_error_overestimate: Option<f64>,
    },
    /// Mean final error over a grid of problem sizes.
    Rate {
        #[arg(long, required_unless_present = "config")]
        model: Option<String>,
        #[arg(long, required_unless_present = "config")]
        grid: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["model", "grid"])]
        config: Option<PathBuf>,
    },
    /// Built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Run the quick invariant checks.
    Selftest {
        /// Also write small fixture CSVs into this directory.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

/// Bad arguments: exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

fn lookup(name: &str) -> Result<Preset> {
    Preset::builtin(name).ok_or_else(|| usage(format!("unknown preset {name:?}; known: {}", PRESET_NAMES.join(", "))))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Convergence {
            preset,
            trials,
            seed,
            out,
            config,
            mcr_noise_inflate,
            init_error_overestimate,
        } => {
            let (preset, options) = match config {
                Some(path) => match Sidecar::read(&path)?.config {
                    RunConfig::Convergence { preset, options } => (preset, options),
                    RunConfig::Rate { .. } => return Err(usage(format!("{} holds a rate run", path.display()))),
                },
                None => {
                    let preset = lookup(preset.as_deref().expect("clap enforces --preset"))?;
                    if mcr_noise_inflate.is_some() && preset.kind != ModelKind::Mcr {
                        return Err(usage("--mcr-noise-inflate only applies to the mcr preset"));
                    }
                    let mut options = RunOptions::from_preset(&preset);
                    options.mcr_noise_inflate = mcr_noise_inflate;
                    options.init_error_overestimate = init_error_overestimate;
                    (preset, options)
                }
            };
            let options = RunOptions {
                trials: trials.unwrap_or(options.trials),
                seed: seed.unwrap_or(options.seed),
                ..options
            };
            options.validate().map_err(|e| usage(format!("{e:#}")))?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("convergence_{}.csv", preset.name)));
            let report = run_convergence_experiment(&preset, &options)?;
            write_csv_file(&out, &report.rows, &CONVERGENCE_COLUMNS)?;
            let mut side = Sidecar::new(RunConfig::Convergence { preset, options });
            side.trials = report.summaries;
            side.failures = report.failures;
            side.write(&sidecar_path(&out))?;
            for f in &side.failures {
                eprintln!("trial {} failed: {}", f.trial, f.error);
            }
            eprintln!("wrote {} rows to {}", report.rows.len(), out.display());
            if side.trials.is_empty() {
                bail!("every trial failed");
            }
        }
        Cmd::Rate {
            model,
            grid,
            trials,
            seed,
            out,
            config,
        } => {
            let (preset, grid, options) = match config {
                Some(path) => match Sidecar::read(&path)?.config {
                    RunConfig::Rate { preset, grid, options } => (preset, grid, options),
                    RunConfig::Convergence { .. } => {
                        return Err(usage(format!("{} holds a convergence run", path.display())))
                    }
                },
                None => {
                    let name = model.expect("clap enforces --model");
                    let kind: ModelKind = name.parse().map_err(|_| usage(format!("unknown model {name:?}")))?;
                    let preset = lookup(kind.name())?;
                    let path = grid.expect("clap enforces --grid");
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let grid: SweepGrid =
                        serde_json::from_str(&text).map_err(|e| usage(format!("bad grid {}: {e}", path.display())))?;
                    let options = RunOptions {
                        trials: 20,
                        ..RunOptions::from_preset(&preset)
                    };
                    (preset, grid, options)
                }
            };
            let options = RunOptions {
                trials: trials.unwrap_or(options.trials),
                seed: seed.unwrap_or(options.seed),
                ..options
            };
            options.validate().map_err(|e| usage(format!("{e:#}")))?;
            grid.points(preset.kind).map_err(|e| usage(format!("{e:#}")))?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("rate_{}.csv", preset.name)));
            let report = run_rate_experiment(&preset, &grid, &options)?;
            write_csv_file(&out, &report.rows, &RATE_COLUMNS)?;
            let mut side = Sidecar::new(RunConfig::Rate { preset, grid, options });
            side.failures = report.failures;
            side.write(&sidecar_path(&out))?;
            eprintln!("wrote {} rows to {}", report.rows.len(), out.display());
        }
        Cmd::Presets {
            action: PresetAction::List,
        } => {
            println!("name\tn\tshape\ts_or_theta\tsnr\tepsilon\tomega\tkappa\tT\tdelta_coefficient\tgamma_n");
            for p in Preset::all() {
                println!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.4}",
                    p.name,
                    p.n,
                    p.shape,
                    p.sparsity,
                    p.snr,
                    p.epsilon,
                    p.omega,
                    p.kappa,
                    p.t_max,
                    p.delta_coefficient,
                    p.gamma_n()
                );
            }
        }
        Cmd::Selftest { fixtures } => {
            let checks = selftest::run_checks();
            let mut ok = true;
            for c in &checks {
                println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            if let Some(dir) = fixtures {
                selftest::write_fixtures(&dir)?;
                println!("fixtures written to {}", dir.display());
            }
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
