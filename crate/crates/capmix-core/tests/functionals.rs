use std::f64::consts::PI;
use std::sync::Arc;

use capmix_core::body::{kernel_fields, random_capillary_body, RandomBodySpec};
use capmix_core::functionals::*;
use capmix_core::*;

fn tilted() -> NormModel {
    NormModel::ellipsoid(Matrix::from_row_slice(3, 3, &[1.0, 0.1, 0.3, 0.1, 1.3, 0.0, 0.3, 0.0, 1.0])).unwrap()
}

fn perturbed() -> NormModel {
    let c = linalg::normalize(&Vector::from_column_slice(&[0.3, 0.2, 1.0]));
    let z = linalg::normalize(&Vector::from_column_slice(&[1.0, 0.0, 0.5]));
    tilted()
        .with_terms(vec![ZonalTerm::new(TermKind::Bump, c, 0.6, 0.05).unwrap(), ZonalTerm::new(TermKind::Zonal, z, 0.0, 0.04).unwrap()])
        .unwrap()
}

fn mesh(norm: NormModel, omega0: f64, level: u32) -> Arc<CapMesh> {
    Arc::new(CapMesh::build(&CapConfig::new(norm, omega0).unwrap(), level, MeshKind::Polar).unwrap())
}

fn bodies(m: &Arc<CapMesh>, seeds: &[u64]) -> Vec<CapillaryBody> {
    seeds.iter().map(|&s| random_capillary_body(m.clone(), s, RandomBodySpec::default()).unwrap()).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

const ROUTES: [MixedRoute; 3] = [MixedRoute::Anisotropic, MixedRoute::Euclidean, MixedRoute::Polyfit];

#[test]
fn half_ball_volumes() {
    let m = mesh(NormModel::isotropic(2), 0.0, 4);
    let cap = CapillaryBody::wulff_cap(m.clone(), 1.0, None).unwrap();
    assert!(rel(volume(&cap), 2.0 * PI / 3.0) < 1e-6);
    let m = mesh(NormModel::isotropic(1), 0.0, 4);
    let cap = CapillaryBody::wulff_cap(m.clone(), 1.0, None).unwrap();
    assert!(rel(volume(&cap), PI / 2.0) < 1e-8);
}

#[test]
fn spherical_cap_body_volume() {
    // ball of radius 1 cut at height cos(theta) below the centre, lifted onto the plane
    let theta: f64 = 2.0 * PI / 3.0;
    let h = 1.0 - theta.cos();
    let exact = PI * h * h * (3.0 - h) / 3.0;
    let m = mesh(NormModel::isotropic(2), -theta.cos(), 4);
    let cap = CapillaryBody::wulff_cap(m.clone(), 1.0, None).unwrap();
    assert!(rel(volume(&cap), exact) < 1e-6, "{} vs {exact}", volume(&cap));
}

#[test]
fn half_disk_mixed_volume() {
    let m = mesh(NormModel::isotropic(1), 0.0, 4);
    let (r1, r2) = (0.7, 1.9);
    let k1 = CapillaryBody::wulff_cap(m.clone(), r1, None).unwrap();
    let k2 = CapillaryBody::wulff_cap(m.clone(), r2, None).unwrap();
    for route in ROUTES {
        let v = mixed_volume_value(&[&k1, &k2], route).unwrap();
        assert!(rel(v, PI / 2.0 * r1 * r2) < 1e-8, "{route:?}: {v}");
    }
}

#[test]
fn diagonal_is_volume_for_every_route() {
    for m in [mesh(perturbed(), 0.2, 3), mesh(NormModel::isotropic(1), -0.4, 3)] {
        let k = &bodies(&m, &[5])[0];
        let args = vec![k.function(); m.n() + 1];
        for route in ROUTES {
            assert!(rel(mixed_volume_value(&args, route).unwrap(), volume(k)) < 1e-5, "{route:?}");
        }
        assert!(rel(mixed_volume_value(&args, MixedRoute::Euclidean).unwrap(), volume(k)) < 1e-13);
    }
}

#[test]
fn volume_scales_with_radius() {
    let m = mesh(perturbed(), -0.3, 3);
    let v1 = volume(&CapillaryBody::wulff_cap(m.clone(), 1.0, None).unwrap());
    let v2 = volume(&CapillaryBody::wulff_cap(m.clone(), 2.0, None).unwrap());
    assert!(rel(v2, 8.0 * v1) < 1e-13);
}

#[test]
fn routes_agree_on_random_bodies() {
    for (norm, tol) in [(tilted(), 1e-8), (perturbed(), 1e-5)] {
        let m = mesh(norm, 0.2, 3);
        let b = bodies(&m, &[1, 2, 3]);
        let fs = [b[0].function(), b[1].function(), b[2].function()];
        let a = mixed_volume_value(&fs, MixedRoute::Anisotropic).unwrap();
        let e = mixed_volume_value(&fs, MixedRoute::Euclidean).unwrap();
        assert!(rel(a, e) <= tol, "{a} {e}");
        assert!(integrand_identity_gap(&fs[1..]).unwrap() <= tol);
    }
}

#[test]
fn polyfit_converges_to_the_integral() {
    let seeds = [1, 2, 3];
    let gaps: Vec<f64> = (2..=4)
        .map(|l| {
            let m = mesh(tilted(), -0.25, l);
            let b = bodies(&m, &seeds);
            let fs = [b[0].function(), b[1].function(), b[2].function()];
            let (p, cond) = polyfit_mixed_volume(&fs).unwrap();
            assert!(cond < 1e6);
            rel(p, mixed_volume_value(&fs, MixedRoute::Euclidean).unwrap())
        })
        .collect();
    assert!(gaps[2] < 1e-4 && gaps[2] < gaps[0] / 4.0, "{gaps:?}");
}

#[test]
fn mixed_volume_error_estimate() {
    let m = mesh(tilted(), 0.1, 3);
    let b = bodies(&m, &[1, 2]);
    let cap = CapillaryBody::wulff_cap(m.clone(), 1.0, None).unwrap();
    let r = mixed_volume(&[&b[0], &b[1], &cap], MixedRoute::Anisotropic).unwrap();
    assert_eq!(r.mesh_level, 3);
    assert!(r.error_estimate >= 0.0 && r.error_estimate < 1e-3 * r.value);
    let fine = mesh(tilted(), 0.1, 5);
    let bf = bodies(&fine, &[1, 2]);
    let capf = CapillaryBody::wulff_cap(fine.clone(), 1.0, None).unwrap();
    let reference = mixed_volume_value(&[&bf[0], &bf[1], &capf], MixedRoute::Anisotropic).unwrap();
    assert!((r.value - reference).abs() < 10.0 * r.error_estimate + 1e-12);
    let coarse = mesh(tilted(), 0.1, 0);
    let c0 = CapillaryBody::wulff_cap(coarse, 1.0, None).unwrap();
    assert!(mixed_volume(&[&c0, &c0, &c0], MixedRoute::Euclidean).unwrap().error_estimate.is_infinite());
}

#[test]
fn mesh_mismatch_is_rejected() {
    let a = CapillaryBody::wulff_cap(mesh(tilted(), 0.1, 1), 1.0, None).unwrap();
    let b = CapillaryBody::wulff_cap(mesh(tilted(), 0.1, 2), 1.0, None).unwrap();
    assert!(matches!(mixed_volume_value(&[&a, &b, &a], MixedRoute::Euclidean), Err(CoreError::MeshMismatch)));
    assert!(mixed_volume_value(&[&a, &a], MixedRoute::Euclidean).is_err());
}

#[test]
fn scaling_and_translation() {
    let m = mesh(perturbed(), 0.15, 4);
    let b = bodies(&m, &[4, 8, 9]);
    let t = 1.7;
    let scaled = CapillaryBody::new(m.clone(), b[0].support().scaled(t)).unwrap();
    let fs = [b[0].function(), b[1].function(), b[2].function()];
    let v = mixed_volume_value(&fs, MixedRoute::Anisotropic).unwrap();
    let vs = mixed_volume_value(&[&scaled, &b[1], &b[2]], MixedRoute::Anisotropic).unwrap();
    assert!(rel(vs, t * v) < 1e-12);
    for j in 0..=3 {
        let q = quermassintegral(&b[0], j).unwrap();
        let qs = quermassintegral(&scaled, j).unwrap();
        assert!(rel(qs, t.powi(3 - j as i32) * q) < 1e-9, "j = {j}");
    }
    // horizontal translation: exact in the trailing slots, quadrature-limited in the first
    let shift = Vector::from_column_slice(&[0.12, -0.05, 0.0]);
    let moved = b[1].translated(&shift).unwrap();
    let vt = mixed_volume_value(&[&b[0], &moved, &b[2]], MixedRoute::Anisotropic).unwrap();
    assert!(rel(vt, v) < 1e-10);
    let moved0 = b[0].translated(&shift).unwrap();
    assert!(rel(volume(&moved0), volume(&b[0])) < 1e-6);
    for j in 1..=3 {
        assert!(rel(quermassintegral(&moved0, j).unwrap(), quermassintegral(&b[0], j).unwrap()) < 1e-6);
    }
}

#[test]
fn wulff_cap_quermassintegrals() {
    for m in [mesh(perturbed(), -0.2, 3), mesh(NormModel::isotropic(1), 0.4, 3)] {
        let n = m.n();
        let unit = cap_volume(&m).unwrap();
        let r0: f64 = 1.6;
        let cap = CapillaryBody::wulff_cap(m.clone(), r0, None).unwrap();
        for j in 0..=n + 1 {
            let q = quermassintegral(&cap, j).unwrap();
            assert!(rel(q, r0.powi((n + 1 - j) as i32) * unit) < 1e-8, "j = {j}");
        }
        for k in 1..=n {
            for l in 0..k {
                let r = quermass_chain(&cap, k, l, 1e-6).unwrap().expect_equality();
                assert!(r.pass, "{r:?}");
                assert!((r.lhs - r0).abs() < 1e-6);
            }
        }
        assert!(quermassintegral(&cap, n + 2).is_err());
    }
}

#[test]
fn quermassintegral_routes_agree() {
    let m = mesh(perturbed(), 0.2, 5);
    let b = &bodies(&m, &[7])[0];
    for j in 0..=3 {
        let a = quermassintegral(b, j).unwrap();
        let c = quermassintegral_by_mixed_volume(b, j, MixedRoute::Euclidean).unwrap();
        assert!(rel(a, c) < 1e-5, "j = {j}: {a} {c}");
    }
}

#[test]
fn boundary_form_of_first_quermassintegral() {
    let errs: Vec<f64> = (2..=5)
        .map(|l| {
            let m = mesh(perturbed(), -0.3, l);
            let b = &bodies(&m, &[3])[0];
            rel(quermass_boundary_form(b), quermassintegral(b, 1).unwrap())
        })
        .collect();
    assert!(errs[3] < 1e-5 && errs[3] < errs[1] / 4.0, "{errs:?}");
    // n = 1: the flat face is the segment between the two contact points
    let m = mesh(NormModel::isotropic(1), -0.5, 4);
    let cap = CapillaryBody::wulff_cap(m.clone(), 1.0, None).unwrap();
    let theta = (0.5f64).acos();
    assert!(rel(flat_face_measure(&cap), 2.0 * theta.sin()) < 1e-12);
    // n = 2 hemisphere: flat face is the unit disk
    let m = mesh(NormModel::isotropic(2), 0.0, 3);
    let cap = CapillaryBody::wulff_cap(m.clone(), 1.0, None).unwrap();
    assert!(rel(flat_face_measure(&cap), PI) < 1e-12);
}

#[test]
fn minkowski_formula() {
    let cap_mesh = mesh(perturbed(), 0.1, 3);
    let cap = CapillaryBody::wulff_cap(cap_mesh.clone(), 1.0, None).unwrap();
    for k in 0..2 {
        assert!(minkowski_residual(&cap, k).unwrap().relative() < 1e-8);
    }
    let hemi = CapillaryBody::wulff_cap(mesh(NormModel::isotropic(2), 0.0, 3), 1.0, None).unwrap();
    assert!(minkowski_residual(&hemi, 0).unwrap().relative() < 1e-12);
    let res: Vec<[f64; 2]> = (3..=5)
        .map(|l| {
            let b = &bodies(&mesh(perturbed(), 0.1, l), &[2])[0];
            [minkowski_residual(b, 0).unwrap().relative(), minkowski_residual(b, 1).unwrap().relative()]
        })
        .collect();
    for k in 0..2 {
        assert!(res[0][k] / res[1][k] >= 2.0 && res[1][k] / res[2][k] >= 2.0, "{res:?}");
    }
    assert!(minkowski_residual(&cap, 2).is_err());
}

#[test]
fn steiner_polynomial() {
    let grid = [0.5, 1.0, 1.5, 2.0, 2.5];
    let m = mesh(tilted(), -0.2, 4);
    let cap = CapillaryBody::wulff_cap(m.clone(), 1.0, None).unwrap();
    let r = steiner(&cap, &grid).unwrap();
    let unit = cap_volume(&m).unwrap();
    for (k, c) in r.fitted.iter().enumerate() {
        assert!(rel(*c, linalg::binomial(3, k) * unit) < 1e-8);
    }
    let b = &bodies(&m, &[6])[0];
    let r = steiner(b, &grid).unwrap();
    assert!(r.max_relative_error < 1e-4, "{r:?}");
    assert!(steiner(b, &[1.0, 2.0, 3.0]).is_err());
}

#[test]
fn swap_symmetry() {
    let devs: Vec<f64> = (2..=4)
        .map(|l| {
            let m = mesh(perturbed(), 0.2, l);
            let b = bodies(&m, &[1, 2, 3]);
            let fs = [b[0].function(), b[1].function(), b[2].function()];
            let trailing = trailing_permutation_deviation(&fs, &[1, 0], MixedRoute::Anisotropic).unwrap();
            assert!(trailing <= 1e-12);
            let same = [b[0].function(), b[0].function(), b[2].function()];
            assert_eq!(swap_deviation(&same, MixedRoute::Anisotropic).unwrap(), 0.0);
            swap_deviation(&fs, MixedRoute::Anisotropic).unwrap()
        })
        .collect();
    assert!(devs[0] / devs[1] >= 2.0 && devs[1] / devs[2] >= 2.0, "{devs:?}");
}

#[test]
fn alexandrov_fenchel() {
    let m = mesh(perturbed(), -0.25, 4);
    let b = bodies(&m, &[1, 2, 3, 4]);
    let same = af_check(&b[0], &b[0], &[&b[2]], MixedRoute::Anisotropic, 0.0).unwrap();
    assert_eq!(same.gap, 0.0);
    for pair in [(0, 1), (1, 3), (2, 3)] {
        let r = af_check(&b[pair.0], &b[pair.1], &[&b[2]], MixedRoute::Anisotropic, 1e-8).unwrap();
        assert!(r.pass, "{r:?}");
    }
    let shift = Vector::from_column_slice(&[0.1, 0.0, 0.0]);
    let k1 = CapillaryBody::new(m.clone(), b[1].support().scaled(2.0).translated(&shift)).unwrap();
    let r = af_check(&k1, &b[1], &[&b[3]], MixedRoute::Anisotropic, 1e-5).unwrap().expect_equality();
    assert!(r.pass, "{r:?}");
}

#[test]
fn quermass_chain_on_random_bodies() {
    for (norm, omega0) in [(NormModel::isotropic(2), 0.5), (perturbed(), 0.1)] {
        let m = mesh(norm, omega0, 4);
        for b in bodies(&m, &[1, 2]) {
            for k in 1..=2 {
                for l in 0..k {
                    let r = quermass_chain(&b, k, l, 1e-7).unwrap();
                    assert!(r.pass && r.gap > 0.0, "{r:?}");
                }
            }
            assert!(quermass_chain(&b, 1, 1, 1e-7).is_err());
        }
    }
}

#[test]
fn generalized_chain_cases() {
    let m = mesh(tilted(), 0.3, 4);
    let b = bodies(&m, &[1, 2, 3]);
    for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
        let r = generalized_chain(&b[0], &b[1], &[], (i, j, k), MixedRoute::Anisotropic, 1e-7).unwrap();
        assert!(r.pass, "{r:?}");
        let same = generalized_chain(&b[0], &b[0], &[], (i, j, k), MixedRoute::Anisotropic, 1e-12).unwrap().expect_equality();
        assert!(same.pass);
    }
    let r = generalized_chain(&b[0], &b[1], &[&b[2]], (0, 1, 2), MixedRoute::Anisotropic, 1e-7).unwrap();
    assert!(r.pass);
    let shift = Vector::from_column_slice(&[-0.1, 0.05, 0.0]);
    let k0 = CapillaryBody::new(m.clone(), b[1].support().scaled(1.5).translated(&shift)).unwrap();
    let r = generalized_chain(&k0, &b[1], &[], (0, 1, 3), MixedRoute::Anisotropic, 1e-5).unwrap().expect_equality();
    assert!(r.pass, "{r:?}");
    assert!(generalized_chain(&b[0], &b[1], &[], (1, 1, 2), MixedRoute::Anisotropic, 1e-7).is_err());
}

#[test]
fn operator_a() {
    let levels: Vec<f64> = (3..=5)
        .map(|l| {
            let m = mesh(perturbed(), -0.1, l);
            let b = bodies(&m, &[1, 2, 3]);
            let op = OperatorA::new(&b[1], &[]).unwrap();
            assert!(op.fixed_point_deviation(&b[1]).unwrap() <= 1e-8);
            let kernel = CapFunction::new(m.clone(), kernel_fields(m.config())[0].clone()).unwrap();
            assert!(op.apply(&kernel).unwrap().iter().all(|v| v.abs() <= 1e-10));
            let e = op.energy(&b[1], 1e-6).unwrap();
            assert!(e.gap.abs() <= 1e-12 * e.lhs);
            op.self_adjointness(&b[0], &b[2]).unwrap()
        })
        .collect();
    assert!(levels[1] < levels[0] && levels[2] < levels[1], "{levels:?}");
    let m = mesh(tilted(), 0.2, 3);
    let b = bodies(&m, &[1, 2, 3, 4]);
    let op = OperatorA::new(&b[0], &[]).unwrap();
    for (p, q) in [(1, 2), (2, 3), (3, 1)] {
        let g = CapFunction::new(m.clone(), SupportField::combine(&[(1.0, b[p].support()), (-0.8, b[q].support())]).unwrap()).unwrap();
        let r = op.energy(&g, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
