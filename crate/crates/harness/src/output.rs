//! CSV tables and the JSON sidecar.
//!
//! Convergence CSV columns: `trial,t,lambda_t,est_error,opt_error`.
//! Rate CSV columns: `p,n,s_or_theta,normalized_complexity,mean_final_error,stderr`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::experiment::{RunOptions, SweepGrid, TrialFailure, TrialSummary};
use crate::preset::Preset;

pub const CONVERGENCE_COLUMNS: [&str; 5] = ["trial", "t", "lambda_t", "est_error", "opt_error"];
pub const RATE_COLUMNS: [&str; 6] = [
    "p",
    "n",
    "s_or_theta",
    "normalized_complexity",
    "mean_final_error",
    "stderr",
];

pub fn write_csv<R: Serialize>(out: impl Write, rows: &[R], columns: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(columns)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<R: Serialize>(path: &Path, rows: &[R], columns: &[&str]) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(std::io::BufWriter::new(f), rows, columns)
}

/// What was run; enough to run it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum RunConfig {
    Convergence {
        preset: Preset,
        options: RunOptions,
    },
    Rate {
        preset: Preset,
        grid: SweepGrid,
        options: RunOptions,
    },
}

impl RunConfig {
    pub fn options(&self) -> &RunOptions {
        match self {
            RunConfig::Convergence { options, .. } | RunConfig::Rate { options, .. } => options,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: RunConfig,
    pub seed: u64,
    pub git_describe: String,
    pub tool_version: String,
    #[serde(default)]
    pub trials: Vec<TrialSummary>,
    #[serde(default)]
    pub failures: Vec<TrialFailure>,
}

impl Sidecar {
    pub fn new(config: RunConfig) -> Self {
        Self {
            seed: config.options().seed,
            config,
            git_describe: git_describe(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            trials: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// `<out>.json` next to the CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ConvergenceRow, RateRow};

    #[test]
    fn headers_follow_schema() {
        let mut buf = Vec::new();
        let rows = [ConvergenceRow {
            trial: 0,
            t: 1,
            lambda_t: 0.5,
            est_error: 1e-3,
            opt_error: 0.0,
        }];
        write_csv(&mut buf, &rows, &CONVERGENCE_COLUMNS).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "trial,t,lambda_t,est_error,opt_error\n0,1,0.5,0.001,0.0\n");

        let mut buf = Vec::new();
        write_csv::<RateRow>(&mut buf, &[], &RATE_COLUMNS).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "p,n,s_or_theta,normalized_complexity,mean_final_error,stderr\n"
        );
    }
}
