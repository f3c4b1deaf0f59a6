//! Quick invariant checks runnable from the CLI, plus optional fixture CSVs.

use std::path::Path;

use anyhow::Result;
use regem_core::models::{e_step_operands, eval_q, generate};
use regem_core::{
    solve_regularized_mstep, MStepOperands, Mat, ModelKind, Param, QuadForm, Regularizer, Rng, Schedule, SolverConfig,
};

use crate::experiment::{run_convergence_experiment, run_rate_experiment, GridPoint, RunOptions, SweepGrid};
use crate::output::{write_csv_file, CONVERGENCE_COLUMNS, RATE_COLUMNS};
use crate::preset::Preset;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e:#}"),
        },
    }
}

pub fn run_checks() -> Vec<Check> {
    vec![
        check("prox examples", || {
            let u = Param::vector(vec![3.0, -0.5, 1.0])?;
            let l1 = Regularizer::L1.prox(&u, 1.0)?;
            let d = Param::from_mat(&Mat::from_diag(&[3.0, 1.0]))?;
            let svt = Regularizer::Nuclear.prox(&d, 2.0)?;
            let want = Param::from_mat(&Mat::from_diag(&[1.0, 0.0]))?;
            let ok =
                l1.as_slice() == [2.0, 0.0, 0.0] && svt.dist(&want)? < 1e-12 && Regularizer::L1.prox(&u, 0.0)? == u;
            Ok((ok, String::new()))
        }),
        check("schedule closed form", || {
            let s = Schedule::<f64>::new(1.3, 0.7, 0.05, 40)?;
            let worst = s
                .recursive()
                .iter()
                .enumerate()
                .map(|(t, r)| Ok((r - s.lambda_at(t)?).abs() / r.abs()))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((worst <= 1e-12, format!("max relative gap {worst:.2e}")))
        }),
        check("operand identity", || {
            let mut worst = 0.0f64;
            for kind in [ModelKind::Gmm, ModelKind::MlrSparse, ModelKind::Mcr] {
                let mut pr = Preset::builtin(kind.name()).expect("builtin");
                pr.shape = regem_core::Shape::Vector(12);
                pr.sparsity = 3;
                let mut rng = Rng::new(1);
                let spec = pr.model_spec(pr.draw_beta_star(&mut rng)?)?;
                let data = generate(&spec, 40, &mut rng)?;
                let beta = Param::vector(rng.normal_vec(12))?;
                let bp = Param::vector(rng.normal_vec(12))?;
                let q = eval_q(&spec, &data, &bp, &beta)?;
                let via = e_step_operands(&spec, &data, &beta)?.q_value(&bp)?;
                worst = worst.max((q - via).abs() / q.abs().max(1.0));
            }
            Ok((worst <= 1e-9, format!("max relative gap {worst:.2e}")))
        }),
        check("solver identity operands", || {
            let ops = MStepOperands {
                a: QuadForm::Identity(3),
                b: Param::vector(vec![2.0, -0.2, 0.9])?,
                c: 0.0,
            };
            let rep = solve_regularized_mstep(
                &ops,
                Regularizer::L1,
                0.5,
                &Param::zeros(ops.b.shape()),
                &SolverConfig::default(),
            )?;
            Ok((
                rep.iters == 1 && rep.solution == Regularizer::L1.prox(&ops.b, 0.5)?,
                String::new(),
            ))
        }),
        check("convergence determinism", || {
            let pr = small_gmm();
            let opts = RunOptions {
                trials: 2,
                ..RunOptions::from_preset(&pr)
            };
            let a = run_convergence_experiment(&pr, &opts)?;
            let b = run_convergence_experiment(&pr, &opts)?;
            Ok((
                a.rows == b.rows && a.failures.is_empty(),
                format!("{} rows", a.rows.len()),
            ))
        }),
    ]
}

fn small_gmm() -> Preset {
    Preset {
        shape: regem_core::Shape::Vector(100),
        n: 200,
        ..Preset::builtin("gmm").expect("builtin")
    }
}

/// Small convergence and rate tables in the public CSV schema.
pub fn write_fixtures(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let pr = small_gmm();
    let opts = RunOptions {
        trials: 3,
        ..RunOptions::from_preset(&pr)
    };
    let conv = run_convergence_experiment(&pr, &opts)?;
    write_csv_file(&dir.join("convergence_fixture.csv"), &conv.rows, &CONVERGENCE_COLUMNS)?;
    let grid = SweepGrid::Points {
        points: vec![GridPoint { n: 150, p: 100, s: 5 }, GridPoint { n: 300, p: 100, s: 5 }],
    };
    let rate = run_rate_experiment(&pr, &grid, &opts)?;
    write_csv_file(&dir.join("rate_fixture.csv"), &rate.rows, &RATE_COLUMNS)?;
    Ok(())
}
