use proptest::prelude::*;
use regem_core::linalg::orthonormalize_columns;
use regem_core::{Mat, Param, Regularizer, Shape, Subspace, SubspacePair};

fn vec_param(len: usize) -> impl Strategy<Value = Param<f64>> {
    prop::collection::vec(-5.0f64..5.0, len).prop_map(|v| Param::vector(v).unwrap())
}

fn mat_param(r: usize, c: usize) -> impl Strategy<Value = Param<f64>> {
    prop::collection::vec(-3.0f64..3.0, r * c).prop_map(move |v| Param::matrix(r, c, v).unwrap())
}

fn dist(a: &Param<f64>, b: &Param<f64>) -> f64 {
    a.dist(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn l1_prox_nonexpansive(u in vec_param(12), v in vec_param(12), t in 0.0f64..3.0) {
        let pu = Regularizer::L1.prox(&u, t).unwrap();
        let pv = Regularizer::L1.prox(&v, t).unwrap();
        prop_assert!(dist(&pu, &pv) <= dist(&u, &v) + 1e-12);
    }

    #[test]
    fn l1_prox_subgradient(u in vec_param(12), t in 0.0f64..3.0) {
        let p = Regularizer::L1.prox(&u, t).unwrap();
        for (&ui, &pi) in u.as_slice().iter().zip(p.as_slice()) {
            let g = ui - pi;
            prop_assert!(g.abs() <= t + 1e-12);
            if pi != 0.0 {
                prop_assert!((g - t * pi.signum()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn holder_inequality(u in vec_param(9), v in vec_param(9), a in mat_param(3, 4), b in mat_param(3, 4)) {
        let l1 = Regularizer::L1;
        prop_assert!(u.inner(&v).unwrap() <= l1.value(&u).unwrap() * l1.dual_norm(&v).unwrap() + 1e-10);
        let nuc = Regularizer::Nuclear;
        prop_assert!(a.inner(&b).unwrap() <= nuc.value(&a).unwrap() * nuc.dual_norm(&b).unwrap() + 1e-9);
    }

    #[test]
    fn triangle_inequality(u in vec_param(6), v in vec_param(6), a in mat_param(4, 3), b in mat_param(4, 3)) {
        let l1 = Regularizer::L1;
        prop_assert!(l1.value(&u.add(&v).unwrap()).unwrap() <= l1.value(&u).unwrap() + l1.value(&v).unwrap() + 1e-10);
        let nuc = Regularizer::Nuclear;
        prop_assert!(nuc.value(&a.add(&b).unwrap()).unwrap() <= nuc.value(&a).unwrap() + nuc.value(&b).unwrap() + 1e-9);
    }

    #[test]
    fn l1_decomposable(u in vec_param(10), v in vec_param(10)) {
        let sp = SubspacePair::<f64>::support(Shape::Vector(10), [1, 4, 7]).unwrap();
        let a = sp.project(&u, Subspace::S).unwrap();
        let b = sp.project(&v, Subspace::SbarPerp).unwrap();
        let l1 = Regularizer::L1;
        let lhs = l1.value(&a.add(&b).unwrap()).unwrap();
        prop_assert!((lhs - l1.value(&a).unwrap() - l1.value(&b).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn l1_psi_is_supremum(u in vec_param(10)) {
        let sp = SubspacePair::<f64>::support(Shape::Vector(10), [0, 2, 3, 8]).unwrap();
        let w = sp.project(&u, Subspace::Sbar).unwrap();
        if w.l2() > 0.0 {
            prop_assert!(Regularizer::L1.value(&w).unwrap() / w.l2() <= sp.psi(Regularizer::L1).unwrap() + 1e-9);
        }
    }
}

fn random_basis(seed: u64, rows: usize, cols: usize) -> Mat<f64> {
    let mut rng = regem_core::Rng::new(seed);
    let m = Mat::from_vec(rows, cols, rng.normal_vec(rows * cols)).unwrap();
    orthonormalize_columns(&m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nuclear_prox_nonexpansive(a in mat_param(5, 4), b in mat_param(5, 4), t in 0.0f64..3.0) {
        let pa = Regularizer::Nuclear.prox(&a, t).unwrap();
        let pb = Regularizer::Nuclear.prox(&b, t).unwrap();
        prop_assert!(dist(&pa, &pb) <= dist(&a, &b) + 1e-9);
    }

    #[test]
    fn nuclear_prox_beats_perturbations(a in mat_param(4, 4), d in mat_param(4, 4), t in 0.1f64..2.0) {
        let nuc = Regularizer::Nuclear;
        let f = |v: &Param<f64>| 0.5 * dist(v, &a).powi(2) + t * nuc.value(v).unwrap();
        let p = nuc.prox(&a, t).unwrap();
        let q = p.add(&d.scale(0.01)).unwrap();
        prop_assert!(f(&p) <= f(&q) + 1e-9);
    }

    #[test]
    fn nuclear_decomposable(a in mat_param(6, 5), b in mat_param(6, 5), seed in 0u64..1000) {
        let sp = SubspacePair::low_rank(random_basis(seed, 6, 2), random_basis(seed + 1, 5, 2)).unwrap();
        let u = sp.project(&a, Subspace::S).unwrap();
        let v = sp.project(&b, Subspace::SbarPerp).unwrap();
        let nuc = Regularizer::Nuclear;
        let lhs = nuc.value(&u.add(&v).unwrap()).unwrap();
        prop_assert!((lhs - nuc.value(&u).unwrap() - nuc.value(&v).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn nuclear_psi_is_supremum(a in mat_param(6, 5), seed in 0u64..1000) {
        let sp = SubspacePair::low_rank(random_basis(seed, 6, 2), random_basis(seed + 7, 5, 2)).unwrap();
        let w = sp.project(&a, Subspace::Sbar).unwrap();
        if w.l2() > 1e-12 {
            let ratio = Regularizer::Nuclear.value(&w).unwrap() / w.l2();
            prop_assert!(ratio <= sp.psi(Regularizer::Nuclear).unwrap() + 1e-9);
        }
    }

    #[test]
    fn projections_split_orthogonally(a in mat_param(6, 5), seed in 0u64..1000) {
        let sp = SubspacePair::low_rank(random_basis(seed, 6, 3), random_basis(seed + 3, 5, 3)).unwrap();
        let bar = sp.project(&a, Subspace::Sbar).unwrap();
        let perp = sp.project(&a, Subspace::SbarPerp).unwrap();
        prop_assert!(dist(&bar.add(&perp).unwrap(), &a) <= 1e-12);
        prop_assert!(bar.inner(&perp).unwrap().abs() <= 1e-10);
    }
}

#[test]
fn l1_psi_attained_by_flat_vector() {
    let sp = SubspacePair::<f64>::support(Shape::Vector(20), [2, 5, 9, 11, 17]).unwrap();
    let mut v = vec![0.0; 20];
    for (k, i) in [2, 5, 9, 11, 17].into_iter().enumerate() {
        v[i] = if k % 2 == 0 { 1.3 } else { -1.3 };
    }
    let v = Param::vector(v).unwrap();
    let psi = sp.psi(Regularizer::L1).unwrap();
    let ratio = Regularizer::L1.value(&v).unwrap() / v.l2();
    assert!(ratio >= 0.99 * psi && ratio <= psi + 1e-12);
}

#[test]
fn spectral_nuclear_sandwich() {
    let mut rng = regem_core::Rng::new(5);
    for _ in 0..50 {
        let m = Param::matrix(4, 6, rng.normal_vec(24)).unwrap();
        let spec = m.norm(regem_core::NormKind::Spectral).unwrap();
        let nuc = m.norm(regem_core::NormKind::Nuclear).unwrap();
        assert!(spec <= nuc + 1e-12 && nuc <= 4.0 * spec + 1e-12);
        let sv = regem_oracles::singular_values(4, 6, m.as_slice());
        assert!((nuc - sv.iter().sum::<f64>()).abs() < 1e-8);
    }
}
