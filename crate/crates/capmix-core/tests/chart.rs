use std::sync::Arc;

use capmix_core::body::{random_capillary_body, RandomBodySpec};
use capmix_core::chart::{divergence_identity, kernel_function, tau_intrinsic};
use capmix_core::*;

fn perturbed() -> NormModel {
    let m = Matrix::from_row_slice(3, 3, &[1.0, 0.1, 0.3, 0.1, 1.3, 0.0, 0.3, 0.0, 1.0]);
    let c = linalg::normalize(&Vector::from_column_slice(&[0.3, 0.2, 1.0]));
    NormModel::ellipsoid(m).unwrap().with_terms(vec![ZonalTerm::new(TermKind::Bump, c, 0.6, 0.05).unwrap()]).unwrap()
}

fn mesh(norm: NormModel, omega0: f64, level: u32) -> Arc<CapMesh> {
    Arc::new(CapMesh::build(&CapConfig::new(norm, omega0).unwrap(), level, MeshKind::Polar).unwrap())
}

struct Errors {
    kernel: f64,
    tau: f64,
    divergence: f64,
}

fn errors(norm: NormModel, omega0: f64, level: u32) -> Errors {
    let m = mesh(norm, omega0, level);
    let b1 = random_capillary_body(m.clone(), 7, RandomBodySpec::default()).unwrap();
    let b2 = random_capillary_body(m.clone(), 8, RandomBodySpec::default()).unwrap();
    let step = 0.1 * m.spacing();
    let norm = m.config().norm().clone();
    let s = b1.support().clone();
    let s_hat = move |x: &Vector| s.value(&norm, x) / norm.value(x);
    let mut e = Errors { kernel: 0.0, tau: 0.0, divergence: 0.0 };
    for i in m.interior_indices() {
        for alpha in 0..2 {
            let f = kernel_function(&m, alpha);
            e.kernel = e.kernel.max(linalg::max_abs(&tau_intrinsic(&m, i, &f, step)));
        }
        let t = tau_intrinsic(&m, i, &s_hat, step);
        e.tau = e.tau.max(linalg::max_abs(&(t - b1.tau(i))) / linalg::max_abs(b1.tau(i)));
        let r = divergence_identity(&m, i, b1.support(), &[b2.support()], step).unwrap();
        e.divergence = e.divergence.max(r.residual.abs() / r.scale);
    }
    e
}

#[test]
fn intrinsic_routes_converge() {
    for (norm, omega0) in [(NormModel::isotropic(2), 0.3), (perturbed(), -0.2)] {
        let e: Vec<Errors> = (2..=4).map(|l| errors(norm.clone(), omega0, l)).collect();
        for (a, b) in e.iter().zip(&e[1..]) {
            assert!(b.kernel <= a.kernel / 2.0 || b.kernel < 1e-12);
            assert!(b.divergence <= a.divergence / 2.0);
        }
        assert!(e[2].kernel <= 1e-4);
        assert!(e[2].tau <= 1e-4, "{}", e[2].tau);
    }
}
