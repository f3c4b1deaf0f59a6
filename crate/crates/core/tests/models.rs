use regem_core::linalg::orthonormalize_columns;
use regem_core::models::{
    e_step_operands, eval_q, generate, generate_with_latents, grad_q, m_n_closed_form, mcr_conditional_moments,
    weight_gmm, weight_mlr, Latents,
};
use regem_core::{Dataset, Mat, ModelKind, ModelSpec, Param, Rng, Shape};
use regem_oracles::{central_gradient, mean_and_stderr, sym_eigenvalues};

fn sparse_beta(p: usize, s: usize, mag: f64) -> Param<f64> {
    let mut v = vec![0.0; p];
    for (k, x) in v.iter_mut().take(s).enumerate() {
        *x = if k % 2 == 0 { mag } else { -mag };
    }
    Param::vector(v).unwrap()
}

fn low_rank_beta(p1: usize, p2: usize, seed: u64) -> Param<f64> {
    let mut rng = Rng::new(seed);
    let u = orthonormalize_columns(&Mat::from_vec(p1, 2, rng.normal_vec::<f64>(p1 * 2)).unwrap());
    let v = orthonormalize_columns(&Mat::from_vec(p2, 2, rng.normal_vec::<f64>(p2 * 2)).unwrap());
    let g = Mat::from_fn(p1, p2, |i, j| 1.5 * u[(i, 0)] * v[(j, 0)] + 1.0 * u[(i, 1)] * v[(j, 1)]);
    Param::from_mat(&g).unwrap()
}

fn spec_for(kind: ModelKind) -> ModelSpec<f64> {
    match kind {
        ModelKind::Gmm => ModelSpec::new(kind, sparse_beta(10, 3, 1.2), 1.0, 0.0),
        ModelKind::MlrSparse => ModelSpec::new(kind, sparse_beta(10, 3, 1.0), 0.8, 0.0),
        ModelKind::MlrLowRank => ModelSpec::new(kind, low_rank_beta(5, 2, 4), 0.7, 0.0),
        ModelKind::Mcr => ModelSpec::new(kind, sparse_beta(10, 3, 0.6), 1.0, 0.2),
    }
    .unwrap()
}

fn random_like(rng: &mut Rng, like: &Param<f64>, scale: f64) -> Param<f64> {
    let data = rng
        .normal_vec::<f64>(like.len())
        .into_iter()
        .map(|x| scale * x)
        .collect();
    Param::new(like.shape(), data).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    num / den
}

#[test]
fn gradient_matches_finite_differences() {
    for kind in ModelKind::ALL {
        let spec = spec_for(kind);
        let mut rng = Rng::new(11);
        let data = generate(&spec, 60, &mut rng).unwrap();
        for _ in 0..5 {
            let beta = random_like(&mut rng, spec.beta_star(), 0.7);
            let bp = random_like(&mut rng, spec.beta_star(), 1.0);
            let g = grad_q(&spec, &data, &bp, &beta).unwrap();
            let f = |v: &[f64]| {
                let v = Param::new(bp.shape(), v.to_vec()).unwrap();
                eval_q(&spec, &data, &v, &beta).unwrap()
            };
            let fd = central_gradient(f, bp.as_slice(), 1e-5);
            let err = rel_err(&fd, g.as_slice());
            assert!(err <= 1e-5, "{kind}: relative error {err}");
        }
    }
}

#[test]
fn operands_reproduce_q() {
    for kind in ModelKind::ALL {
        let spec = spec_for(kind);
        let mut rng = Rng::new(12);
        let data = generate(&spec, 40, &mut rng).unwrap();
        for _ in 0..5 {
            let beta = random_like(&mut rng, spec.beta_star(), 1.0);
            let bp = random_like(&mut rng, spec.beta_star(), 2.0);
            let ops = e_step_operands(&spec, &data, &beta).unwrap();
            let via_ops = ops.q_value(&bp).unwrap();
            let direct = eval_q(&spec, &data, &bp, &beta).unwrap();
            assert!(
                (via_ops - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                "{kind}: {via_ops} vs {direct}"
            );
        }
    }
}

#[test]
fn q_at_zero_is_minus_half_energy() {
    let mut rng = Rng::new(2);
    let spec = spec_for(ModelKind::Gmm);
    let data = generate(&spec, 30, &mut rng).unwrap();
    let Dataset::Gmm { ys } = &data else { unreachable!() };
    let energy: f64 = ys.as_slice().iter().map(|x| x * x).sum::<f64>() / 30.0;
    let zero = Param::zeros(spec.shape());
    let beta = random_like(&mut rng, spec.beta_star(), 1.0);
    assert!((eval_q(&spec, &data, &zero, &beta).unwrap() + 0.5 * energy).abs() < 1e-12);

    let spec = spec_for(ModelKind::MlrSparse);
    let data = generate(&spec, 30, &mut rng).unwrap();
    let Dataset::Mlr { ys, .. } = &data else { unreachable!() };
    let energy: f64 = ys.iter().map(|x| x * x).sum::<f64>() / 30.0;
    assert!((eval_q(&spec, &data, &zero, &beta).unwrap() + 0.5 * energy).abs() < 1e-12);
}

#[test]
fn gmm_operand_examples() {
    let spec = spec_for(ModelKind::Gmm);
    let mut rng = Rng::new(3);
    let data = generate(&spec, 50, &mut rng).unwrap();
    let zero = Param::zeros(spec.shape());
    let ops = e_step_operands(&spec, &data, &zero).unwrap();
    assert!(ops.b.l2() < 1e-14);
    assert!(ops.a.is_identity());
    assert_eq!(m_n_closed_form(&spec, &data, &zero).unwrap().l2(), ops.b.l2());

    // every weight saturates at 1: b becomes the sample mean
    let Dataset::Gmm { ys } = &data else { unreachable!() };
    let shifted = Mat::from_fn(50, 10, |i, j| ys[(i, j)].abs() + 1.0);
    let d2 = Dataset::Gmm { ys: shifted.clone() };
    let big = Param::vector(vec![1e6; 10]).unwrap();
    let b = e_step_operands(&spec, &d2, &big).unwrap().b;
    for j in 0..10 {
        let mean = shifted.column(j).iter().sum::<f64>() / 50.0;
        assert!((b.as_slice()[j] - mean).abs() < 1e-12);
    }

    let at_bp = grad_q(&spec, &data, &ops.b, &zero).unwrap();
    assert!(at_bp.l2() < 1e-15);
}

#[test]
fn mlr_hand_example() {
    let p = 4;
    let spec = ModelSpec::new(ModelKind::MlrSparse, sparse_beta(p, 1, 1.0), 1.0, 0.0).unwrap();
    let xs = Mat::from_fn(2, p, |i, j| if i == j { 1.0 } else { 0.0 });
    let data = Dataset::Mlr {
        ys: vec![1.0, 1.0],
        xs,
        shape: Shape::Vector(p),
    };
    let beta = Param::vector(vec![1e4, 1e4, 0.0, 0.0]).unwrap();
    let ops = e_step_operands(&spec, &data, &beta).unwrap();
    let a = ops.a.to_dense();
    let want_a = Mat::from_diag(&[0.5, 0.5, 0.0, 0.0]);
    assert_eq!(a, want_a);
    assert_eq!(ops.b.as_slice(), &[0.5, 0.5, 0.0, 0.0]);
}

#[test]
fn weights_are_symmetric_and_stable() {
    let mut rng = Rng::new(8);
    for _ in 0..100 {
        let y: Vec<f64> = rng.normal_vec(5);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let b: Vec<f64> = rng.normal_vec(5);
        assert!((weight_gmm(&y, &b, 0.7) + weight_gmm(&neg, &b, 0.7) - 1.0).abs() < 1e-15);
        let x: Vec<f64> = rng.normal_vec(5);
        let t: f64 = rng.standard_normal();
        assert!((weight_mlr(t, &x, &b, 0.7) + weight_mlr(-t, &x, &b, 0.7) - 1.0).abs() < 1e-15);
    }
    assert_eq!(weight_gmm(&[1e6], &[1.0], 1.0), 1.0);
    assert_eq!(weight_gmm(&[3.0, 1.0], &[0.0, 0.0], 1.0), 0.5);
    assert_eq!(weight_mlr(0.0, &[1.0], &[2.0], 1.0), 0.5);
    assert_eq!(weight_mlr(-1e6, &[1.0], &[2.0], 1.0), 0.0);
}

#[test]
fn mcr_moment_examples() {
    let x = Param::vector(vec![1.0, -2.0, 0.5]).unwrap();
    let beta = Param::vector(vec![0.3, 0.1, -0.7]).unwrap();
    let m = mcr_conditional_moments(0.4, &[false; 3], &x, &beta, 1.0).unwrap();
    assert_eq!(m.mu, x);
    assert_eq!(m.second, Mat::from_fn(3, 3, |i, j| x.as_slice()[i] * x.as_slice()[j]));

    let zero = Param::zeros(Shape::Vector(3));
    let m = mcr_conditional_moments(1.3, &[true; 3], &zero, &zero, 1.0).unwrap();
    assert_eq!(m.mu, zero);
    assert_eq!(m.second, Mat::identity(3));

    let z = [true, false, true];
    let xm = Param::vector(vec![0.0, -2.0, 0.0]).unwrap();
    let m = mcr_conditional_moments(0.9, &z, &xm, &beta, 0.8).unwrap();
    assert_eq!(m.second.asymmetry(), Some(0.0));
    let zb = [0.3, 0.0, -0.7];
    let d = 0.64 + 0.09 + 0.49;
    for i in 0..3 {
        for j in 0..3 {
            let mu = m.mu.as_slice();
            let rebuilt: f64 = m.second[(i, j)] - mu[i] * mu[j] + zb[i] * zb[j] / d;
            let want: f64 = if i == j && z[i] { 1.0 } else { 0.0 };
            assert!((rebuilt - want).abs() < 1e-15);
        }
    }
}

#[test]
fn mcr_operand_is_psd() {
    let spec = spec_for(ModelKind::Mcr);
    let mut rng = Rng::new(21);
    for _ in 0..10 {
        let data = generate(&spec, 30, &mut rng).unwrap();
        let beta = random_like(&mut rng, spec.beta_star(), 1.5);
        let a = e_step_operands(&spec, &data, &beta).unwrap().a.to_dense();
        assert!(a.asymmetry().unwrap() < 1e-12);
        let rows: Vec<Vec<f64>> = (0..a.rows()).map(|i| a.row(i).to_vec()).collect();
        let ev = sym_eigenvalues(&rows);
        assert!(*ev.last().unwrap() >= -1e-8, "min eigenvalue {}", ev.last().unwrap());
    }
}

#[test]
fn key_expectation_at_zero_gamma() {
    // E[(X + aZ)·logistic(2a(X + aZ)/σ²)] = a/2 for X ~ N(0, σ²), Z = ±1
    let mut rng = Rng::new(77);
    for &(a, sigma) in &[(1.0, 1.0), (0.4, 0.8), (-2.0, 1.5)] {
        let draws: Vec<f64> = (0..200_000)
            .map(|_| {
                let u = sigma * rng.standard_normal::<f64>() + a * rng.sign::<f64>();
                u * weight_gmm(&[u], &[a], sigma)
            })
            .collect();
        let (mean, se) = mean_and_stderr(&draws);
        assert!((mean - a / 2.0).abs() <= 3.0 * se, "a={a}: {mean} ± {se}");
    }
}

#[test]
fn gmm_self_consistency() {
    let mut beta = vec![0.0; 10];
    let mag = 10.0 / 3f64.sqrt();
    beta[1] = mag;
    beta[4] = -mag;
    beta[7] = mag;
    let spec = ModelSpec::new(ModelKind::Gmm, Param::vector(beta).unwrap(), 1.0, 0.0).unwrap();
    let data = generate(&spec, 100_000, &mut Rng::new(5)).unwrap();
    let m = m_n_closed_form(&spec, &data, spec.beta_star()).unwrap();
    assert!(m.dist(spec.beta_star()).unwrap() <= 0.05);
}

#[test]
fn closed_form_is_gmm_only() {
    let spec = spec_for(ModelKind::MlrSparse);
    let data = generate(&spec, 5, &mut Rng::new(1)).unwrap();
    assert!(m_n_closed_form(&spec, &data, spec.beta_star()).is_err());
}

#[test]
fn generation_examples() {
    let beta = sparse_beta(6, 2, 1.0);
    let spec = ModelSpec::new(ModelKind::Gmm, beta.clone(), 1e-9, 0.0).unwrap();
    let data = generate(&spec, 100, &mut Rng::new(4)).unwrap();
    let Dataset::Gmm { ys } = data else { unreachable!() };
    for i in 0..100 {
        let r = ys.row(i);
        let plus = r.iter().zip(beta.as_slice()).all(|(a, b)| (a - b).abs() < 1e-6);
        let minus = r.iter().zip(beta.as_slice()).all(|(a, b)| (a + b).abs() < 1e-6);
        assert!(plus || minus);
    }

    let spec = ModelSpec::new(ModelKind::MlrSparse, Param::zeros(Shape::Vector(3)), 1.7, 0.0).unwrap();
    let Dataset::Mlr { ys, .. } = generate(&spec, 100_000, &mut Rng::new(6)).unwrap() else {
        unreachable!()
    };
    let var = ys.iter().map(|y| y * y).sum::<f64>() / ys.len() as f64;
    assert!((var / (1.7 * 1.7) - 1.0).abs() < 0.02, "{var}");

    let spec = ModelSpec::new(ModelKind::Mcr, sparse_beta(5, 2, 1.0), 1.0, 0.0).unwrap();
    let Dataset::Mcr { xs, missing, .. } = generate(&spec, 50, &mut Rng::new(7)).unwrap() else {
        unreachable!()
    };
    assert!(missing.iter().all(|&m| !m));
    assert!(xs.as_slice().iter().all(|&x| x != 0.0));
}

#[test]
fn mcr_masks_after_response() {
    let spec = ModelSpec::new(ModelKind::Mcr, sparse_beta(8, 3, 1.0), 0.5, 0.3).unwrap();
    let (data, latents) = generate_with_latents(&spec, 400, &mut Rng::new(9)).unwrap();
    let Dataset::Mcr { ys, xs, missing } = data else {
        unreachable!()
    };
    let Latents::Unmasked(full) = latents else {
        unreachable!()
    };
    let frac = missing.iter().filter(|&&m| m).count() as f64 / missing.len() as f64;
    assert!((frac - 0.3).abs() < 0.03);
    let mut resid = Vec::new();
    for i in 0..400 {
        for j in 0..8 {
            let want = if missing[i * 8 + j] { 0.0 } else { full[(i, j)] };
            assert_eq!(xs[(i, j)], want);
        }
        let fit: f64 = full
            .row(i)
            .iter()
            .zip(spec.beta_star().as_slice())
            .map(|(a, b)| a * b)
            .sum();
        resid.push(ys[i] - fit);
    }
    let (m, _) = mean_and_stderr(&resid);
    let var = resid.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / 399.0;
    assert!((var / 0.25 - 1.0).abs() < 0.2);
}

#[test]
fn gaussian_sampler_moments() {
    let mut rng = Rng::new(10);
    let mean = Param::<f64>::zeros(Shape::Vector(4));
    let n = 1_000_000;
    let mut sum = [0.0; 4];
    let mut sq = [0.0; 4];
    for _ in 0..n {
        let x = regem_core::rng::sample_gaussian_vector(&mut rng, &mean, 1.0).unwrap();
        for j in 0..4 {
            sum[j] += x.as_slice()[j];
            sq[j] += x.as_slice()[j].powi(2);
        }
    }
    for j in 0..4 {
        assert!((sum[j] / n as f64).abs() < 4e-3);
        assert!((sq[j] / n as f64 - 1.0).abs() < 0.01);
    }
}

#[test]
fn sphere_sampler_is_centered() {
    let mut rng = Rng::new(13);
    let c = Param::vector(vec![1.0; 8]).unwrap();
    let mut acc = [0.0; 8];
    let n = 100_000;
    for _ in 0..n {
        let x = regem_core::rng::sample_sphere_perturbation(&mut rng, &c, 2.0).unwrap();
        for (a, (xi, ci)) in acc.iter_mut().zip(x.as_slice().iter().zip(c.as_slice())) {
            *a += xi - ci;
        }
    }
    assert!(acc.iter().all(|a| (a / n as f64).abs() < 0.02 * 2.0));
}

#[test]
fn kind_mismatch_is_rejected() {
    let gmm = spec_for(ModelKind::Gmm);
    let mlr = spec_for(ModelKind::MlrSparse);
    let data = generate(&mlr, 5, &mut Rng::new(1)).unwrap();
    assert!(e_step_operands(&gmm, &data, gmm.beta_star()).is_err());
    assert!(eval_q(&gmm, &data, gmm.beta_star(), gmm.beta_star()).is_err());
}
