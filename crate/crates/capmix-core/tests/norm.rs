use capmix_core::linalg::{self, Matrix, Vector};
use capmix_core::norm::{NormModel, TermKind, ZonalTerm};
use proptest::prelude::*;

fn v(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

fn ellipsoid() -> NormModel {
    NormModel::ellipsoid(Matrix::from_diagonal(&v(&[1.0, 1.0, 4.0]))).unwrap()
}

fn tilted_ellipsoid() -> NormModel {
    let m = Matrix::from_row_slice(3, 3, &[1.5, 0.2, 0.1, 0.2, 1.0, -0.15, 0.1, -0.15, 2.0]);
    NormModel::ellipsoid(m).unwrap()
}

fn perturbed() -> NormModel {
    let terms = vec![
        ZonalTerm::new(TermKind::Bump, v(&[0.3, 0.2, 1.0]), 0.6, 0.03).unwrap(),
        ZonalTerm::new(TermKind::Zonal, v(&[1.0, 0.0, 0.4]), 0.0, 0.05).unwrap(),
    ];
    tilted_ellipsoid().with_terms(terms).unwrap()
}

fn models() -> Vec<NormModel> {
    vec![NormModel::isotropic(2), ellipsoid(), tilted_ellipsoid(), perturbed()]
}

fn unit_from(a: f64, b: f64) -> Vector {
    // polar angle a in [0, pi], azimuth b
    v(&[a.sin() * b.cos(), a.sin() * b.sin(), a.cos()])
}

#[test]
fn ellipsoid_anisotropy_at_pole() {
    let a = ellipsoid().anisotropy_matrix(&v(&[0.0, 0.0, 1.0]));
    assert!((a - Matrix::from_diagonal(&v(&[0.5, 0.5]))).amax() < 1e-14);
}

#[test]
fn isotropic_objects_are_trivial() {
    let f = NormModel::isotropic(2);
    let x = linalg::normalize(&v(&[0.2, -0.4, 0.9]));
    assert!((f.psi(&x) - &x).amax() < 1e-15);
    assert!((f.anisotropy_matrix(&x) - Matrix::identity(2, 2)).amax() < 1e-14);
    assert!((f.metric_g(&x).unwrap() - Matrix::identity(3, 3)).amax() < 1e-15);
    assert!((f.metric_at_normal(&x) - Matrix::identity(3, 3)).amax() < 1e-13);
}

#[test]
fn ellipsoid_metric_is_inverse_matrix_and_q_vanishes() {
    let f = tilted_ellipsoid();
    let m_inv = match f.base() {
        capmix_core::norm::BaseNorm::Ellipsoid { m_inv, .. } => m_inv.clone(),
        _ => unreachable!(),
    };
    for x in [v(&[0.1, 0.2, 0.97]), v(&[-0.7, 0.1, -0.2]), v(&[0.0, 1.0, 0.0])] {
        assert!((f.metric_at_normal(&x) - &m_inv).amax() < 1e-13);
        for slice in f.q_at_normal_by_duality(&x) {
            assert!(slice.amax() < 1e-12, "{slice}");
        }
    }
}

#[test]
fn analytic_derivatives_match_differences() {
    let f = perturbed();
    for x in [v(&[0.3, 0.2, 0.9]), v(&[0.5, -0.6, 0.3]), v(&[-0.2, 0.1, 1.1])] {
        let h = 1e-5;
        for k in 0..3 {
            let e = linalg::unit(3, k) * h;
            let fd = (f.value(&(&x + &e)) - f.value(&(&x - &e))) / (2.0 * h);
            assert!((fd - f.gradient(&x)[k]).abs() < 1e-8);
            let fd3 = (f.hessian(&(&x + &e)) - f.hessian(&(&x - &e))) / (2.0 * h);
            assert!((fd3 - &f.third(&x)[k]).amax() < 1e-6);
        }
        assert!(f.hessian_crosscheck(&x) < 1e-9, "{}", f.hessian_crosscheck(&x));
    }
}

#[test]
fn generic_dual_solver_matches_closed_forms() {
    // a zero-amplitude term forces the Newton route
    let dummy = |m: NormModel| {
        let t = ZonalTerm::new(TermKind::Zonal, v(&[0.0, 0.0, 1.0]), 0.0, 0.0).unwrap();
        m.with_terms(vec![t]).unwrap()
    };
    for base in [NormModel::isotropic(2), tilted_ellipsoid()] {
        let generic = dummy(base.clone());
        for xi in [v(&[0.3, -1.2, 0.5]), v(&[2.0, 0.1, -0.3]), v(&[0.0, 0.0, -1.0])] {
            let a = base.dual_norm(&xi).unwrap();
            let b = generic.dual_norm(&xi).unwrap();
            assert!((a - b).abs() < 1e-12 * a, "{a} {b}");
            let ga = base.metric_g(&xi).unwrap();
            let gb = generic.metric_g(&xi).unwrap();
            assert!((ga - gb).amax() < 1e-9);
        }
    }
}

#[test]
fn metric_matches_hessian_of_squared_dual_norm() {
    let f = perturbed();
    let xi = v(&[0.4, -0.3, 0.8]);
    let half_sq = |p: &Vector| 0.5 * f.dual_norm(p).unwrap().powi(2);
    let h = 1e-4;
    let g = f.metric_g(&xi).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            let ea = linalg::unit(3, a) * h;
            let eb = linalg::unit(3, b) * h;
            let fd = (half_sq(&(&xi + &ea + &eb)) - half_sq(&(&xi + &ea - &eb)) - half_sq(&(&xi - &ea + &eb))
                + half_sq(&(&xi - &ea - &eb)))
                / (4.0 * h * h);
            assert!((fd - g[(a, b)]).abs() < 1e-5, "{a}{b}: {fd} vs {}", g[(a, b)]);
        }
    }
}

#[test]
fn q_matches_derivative_of_metric() {
    let f = perturbed();
    let xi = v(&[0.2, 0.5, 0.7]);
    let q = f.q_tensor(&xi).unwrap();
    let h = 1e-5;
    for c in 0..3 {
        let e = linalg::unit(3, c) * h;
        let fd = (f.metric_g(&(&xi + &e)).unwrap() - f.metric_g(&(&xi - &e)).unwrap()) / (2.0 * h);
        assert!((fd - &q[c]).amax() < 1e-6, "{c}");
    }
}

#[test]
fn oversized_perturbation_is_rejected() {
    let t = ZonalTerm::new(TermKind::Bump, v(&[0.0, 0.0, 1.0]), 0.3, -2.0).unwrap();
    assert!(NormModel::isotropic(2).with_terms(vec![t]).is_err());
}

#[test]
fn non_spd_ellipsoid_is_rejected() {
    assert!(NormModel::ellipsoid(Matrix::from_diagonal(&v(&[1.0, -1.0, 2.0]))).is_err());
    assert!(NormModel::ellipsoid(Matrix::from_row_slice(2, 3, &[1.0; 6])).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wulff_shape_identities(a in 0.0f64..std::f64::consts::PI, b in 0.0f64..6.28, which in 0usize..4) {
        let f = &models()[which];
        let x = unit_from(a, b);
        let psi = f.psi(&x);
        prop_assert!((f.dual_norm(&psi).unwrap() - 1.0).abs() < 1e-10);
        prop_assert!((psi.dot(&x) - f.value(&x)).abs() < 1e-12);
        let g = f.metric_at_normal(&x);
        prop_assert!((psi.dot(&(&g * &psi)) - 1.0).abs() < 1e-10);
        let basis = linalg::tangent_basis(&x);
        for k in 0..2 {
            let t: Vector = basis.column(k).into_owned();
            prop_assert!(psi.dot(&(&g * &t)).abs() < 1e-10);
        }
        let q = f.q_at_normal(&x);
        for c in 0..3 {
            let row = q[c].transpose() * &psi;
            prop_assert!(row.amax() < 1e-8);
        }
        let a_f = f.anisotropy_matrix(&x);
        prop_assert!(linalg::min_eigenvalue(&a_f) > 0.0);
    }

    #[test]
    fn norm_is_one_homogeneous(a in 0.0f64..3.14, b in 0.0f64..6.28, t in 0.1f64..10.0, which in 0usize..4) {
        let f = &models()[which];
        let x = unit_from(a, b);
        prop_assert!((f.value(&(&x * t)) - t * f.value(&x)).abs() < 1e-12 * t);
        prop_assert!((f.gradient(&(&x * t)) - f.gradient(&x)).amax() < 1e-12);
    }
}
