//! Suite orchestration: builds the mesh and the seeded bodies, dispatches the
//! selected checks and assembles a [`RunReport`].
//!
//! Work is spread over a rayon pool (node caches, seeds, kernel nodes). The
//! records are sorted by (suite, seed, check) afterwards, so the number of
//! threads never changes the output.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use capmix_core::body::{random_support_field, CapFunction, CapillaryBody, RandomBodySpec, SupportField};
use capmix_core::chart::{kernel_function, tau_intrinsic};
use capmix_core::functionals::*;
use capmix_core::{linalg, mixdisc, CapMesh, Matrix, Vector};

use crate::config::{SuiteConfig, SUITES};
use crate::hull::hull_oracle_volume;
use crate::report::{digest, CheckRecord, Diagnostics, RunReport};

/// Positive time grid of the Steiner fit.
pub const STEINER_GRID: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];

/// Polar sample of the hull oracle: 100 rings of 200 directions (20001 points).
pub const HULL_RINGS: usize = 100;
pub const HULL_AZIMUTHS: usize = 200;

/// Random SPD tuples per seed in the `mixdisc` suite.
pub const MIXDISC_TUPLES: usize = 500;

pub fn thread_pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
}

pub fn build_mesh(config: &SuiteConfig, level: u32) -> capmix_core::Result<Arc<CapMesh>> {
    Ok(Arc::new(CapMesh::build(&config.cap_config(), level, config.mesh_kind())?))
}

/// `CapFunction::new` with the node caches filled in parallel.
pub fn build_function(mesh: &Arc<CapMesh>, support: SupportField) -> capmix_core::Result<CapFunction> {
    if support.dim() != mesh.dim() {
        return Err(capmix_core::CoreError::DimensionMismatch { expected: mesh.dim(), found: support.dim() });
    }
    let nodes = (0..mesh.len()).into_par_iter().map(|i| CapFunction::node_cache(mesh, &support, i)).collect();
    CapFunction::from_caches(mesh.clone(), support, nodes)
}

pub fn build_body(mesh: &Arc<CapMesh>, support: SupportField) -> capmix_core::Result<CapillaryBody> {
    CapillaryBody::from_function(build_function(mesh, support)?)
}

pub fn seed_body(mesh: &Arc<CapMesh>, seed: u64, spec: RandomBodySpec) -> capmix_core::Result<CapillaryBody> {
    build_body(mesh, random_support_field(mesh.config(), seed, spec)?)
}

struct Ctx<'a> {
    config: &'a SuiteConfig,
    config_json: String,
}

impl Ctx<'_> {
    fn tol(&self, check: &str) -> f64 {
        self.config.tolerance(check)
    }

    /// Times `f`, stamps the digest and turns errors into failed records.
    fn run(&self, suite: &str, seed: Option<u64>, check: &str, f: impl FnOnce() -> capmix_core::Result<CheckRecord>) -> CheckRecord {
        let start = Instant::now();
        let mut rec = f().unwrap_or_else(|e| CheckRecord::failed(suite, seed, check, e.to_string()));
        rec.suite = suite.into();
        rec.seed = seed;
        rec.check = check.into();
        let seed_str = seed.map(|s| s.to_string()).unwrap_or_default();
        rec.inputs_digest = digest(&[&self.config_json, suite, check, &seed_str]);
        rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        rec
    }
}

/// Runs every selected suite on a pool of `jobs` threads.
pub fn run_suite(config: &SuiteConfig, jobs: usize) -> RunReport {
    let config_json = serde_json::to_string(config).expect("config serializes");
    let ctx = Ctx { config, config_json };
    let (mut records, diagnostics) = thread_pool(jobs).install(|| collect(&ctx));
    records.sort_by(|a, b| {
        let sa = SUITES.iter().position(|s| *s == a.suite);
        let sb = SUITES.iter().position(|s| *s == b.suite);
        sa.cmp(&sb).then(a.seed.cmp(&b.seed)).then(a.check.cmp(&b.check))
    });
    let mut report = RunReport::new(serde_json::to_value(config).expect("config serializes"), records, Vec::new());
    report.diagnostics = diagnostics;
    report
}

fn collect(ctx: &Ctx) -> (Vec<CheckRecord>, Diagnostics) {
    let config = ctx.config;
    let mut records = Vec::new();
    let mut diagnostics = Diagnostics::default();
    if config.runs("mixdisc") {
        records.extend(mixdisc_suite(ctx));
    }
    let mesh_suites = SUITES.iter().filter(|s| **s != "mixdisc").any(|s| config.runs(s));
    if !mesh_suites {
        return (records, diagnostics);
    }
    let mesh = match build_mesh(config, config.mesh_level) {
        Ok(m) => m,
        Err(e) => {
            records.push(CheckRecord::failed("mesh", None, "build", e.to_string()));
            return (records, diagnostics);
        }
    };
    diagnostics.max_condition_a_f = Some(
        mesh.nodes()
            .iter()
            .map(|nd| {
                let ev = linalg::sym_eigenvalues(&nd.a_f);
                ev[ev.len() - 1] / ev[0]
            })
            .fold(0.0, f64::max),
    );
    if config.runs("kernel") {
        records.push(ctx.run("kernel", None, "kernel", || kernel_check(ctx, &mesh)));
    }

    let spec = config.body_spec();
    let built: Vec<(u64, capmix_core::Result<CapillaryBody>)> = config.seeds.par_iter().map(|&s| (s, seed_body(&mesh, s, spec))).collect();
    let mut bodies: Vec<(u64, CapillaryBody)> = Vec::new();
    for (seed, b) in built {
        match b {
            Ok(b) => bodies.push((seed, b)),
            Err(e) => records.push(CheckRecord::failed("bodies", Some(seed), "generate", e.to_string())),
        }
    }
    if !bodies.is_empty() {
        diagnostics.max_tau_asymmetry = Some(bodies.iter().map(|(_, b)| b.function().tau_asymmetry()).fold(0.0, f64::max));
        diagnostics.robin_skipped = Some(bodies[0].1.function().robin_residuals().iter().filter(|r| r.is_none()).count());
    }
    if bodies.is_empty() {
        return (records, diagnostics);
    }
    let per_seed: Vec<Vec<CheckRecord>> = (0..bodies.len()).into_par_iter().map(|i| seed_checks(ctx, &mesh, &bodies, i)).collect();
    records.extend(per_seed.into_iter().flatten());
    (records, diagnostics)
}

/// The `n + 1` bodies starting at position `i`, cyclically.
fn tuple(bodies: &[(u64, CapillaryBody)], i: usize, len: usize) -> Vec<&CapFunction> {
    (0..len).map(|k| bodies[(i + k) % bodies.len()].1.function()).collect()
}

fn seed_checks(ctx: &Ctx, mesh: &Arc<CapMesh>, bodies: &[(u64, CapillaryBody)], i: usize) -> Vec<CheckRecord> {
    let config = ctx.config;
    let n = config.n;
    let (seed, ref body) = bodies[i];
    let s = Some(seed);
    let fs = tuple(bodies, i, n + 1);
    let b = body.function();
    let mut out = Vec::new();

    if config.runs("routes") {
        out.push(ctx.run("routes", s, "routes.euclidean", || {
            let a = mixed_volume_value(&fs, MixedRoute::Anisotropic)?;
            let e = mixed_volume_value(&fs, MixedRoute::Euclidean)?;
            Ok(CheckRecord::identity("", s, "", a, e, ctx.tol("routes.euclidean")))
        }));
        out.push(ctx.run("routes", s, "routes.polyfit", || {
            let e = mixed_volume_value(&fs, MixedRoute::Euclidean)?;
            let p = mixed_volume_value(&fs, MixedRoute::Polyfit)?;
            Ok(CheckRecord::identity("", s, "", e, p, ctx.tol("routes.polyfit")))
        }));
        out.push(ctx.run("routes", s, "volume.hull", || {
            let h = hull_oracle_volume(b, HULL_RINGS, HULL_AZIMUTHS)?;
            Ok(CheckRecord::identity("", s, "", volume(b), h, ctx.tol("volume.hull")))
        }));
    }
    if config.runs("symmetry") {
        out.push(ctx.run("symmetry", s, "symmetry.swap", || {
            Ok(CheckRecord::bound("", s, "", swap_deviation(&fs, MixedRoute::Anisotropic)?, ctx.tol("symmetry.swap")))
        }));
        if n >= 2 {
            out.push(ctx.run("symmetry", s, "symmetry.trailing", || {
                let perm: Vec<usize> = (0..n).rev().collect();
                let d = trailing_permutation_deviation(&fs, &perm, MixedRoute::Anisotropic)?;
                Ok(CheckRecord::bound("", s, "", d, ctx.tol("symmetry.trailing")))
            }));
        }
    }
    if config.runs("minkowski") {
        for k in 0..n {
            out.push(ctx.run("minkowski", s, &format!("minkowski.k{k}"), || {
                Ok(CheckRecord::bound("", s, "", minkowski_residual(b, k)?.relative(), ctx.tol("minkowski")))
            }));
        }
    }
    if config.runs("steiner") {
        out.push(ctx.run("steiner", s, "steiner", || {
            Ok(CheckRecord::bound("", s, "", steiner(b, &STEINER_GRID)?.max_relative_error, ctx.tol("steiner")))
        }));
    }
    if config.runs("af") {
        out.push(ctx.run("af", s, "af", || {
            let r = af_check(fs[0], fs[1], &fs[2..], MixedRoute::Anisotropic, ctx.tol("af"))?;
            Ok(CheckRecord::from_inequality("", s, "", &r))
        }));
        out.push(ctx.run("af", s, "af.equality", || {
            let k1 = build_function(mesh, equality_partner(fs[1].support(), seed, n))?;
            let r = af_check(&k1, fs[1], &fs[2..], MixedRoute::Anisotropic, ctx.tol("af.equality"))?.expect_equality();
            Ok(CheckRecord::from_inequality("", s, "", &r))
        }));
    }
    if config.runs("chain") {
        for k in 1..=n {
            for l in 0..k {
                out.push(ctx.run("chain", s, &format!("chain.k{k}.l{l}"), || {
                    Ok(CheckRecord::from_inequality("", s, "", &quermass_chain(b, k, l, ctx.tol("chain"))?))
                }));
            }
        }
        let k1 = fs[1];
        for t in triples(n + 1) {
            out.push(ctx.run("chain", s, &format!("chain.generalized.{}{}{}", t.0, t.1, t.2), || {
                let r = generalized_chain(b, k1, &[], t, MixedRoute::Anisotropic, ctx.tol("chain.generalized"))?;
                Ok(CheckRecord::from_inequality("", s, "", &r))
            }));
        }
    }
    if config.runs("operator") && n >= 2 {
        let f2 = fs[1];
        let rest = &fs[3.min(fs.len())..];
        let g_partner = fs[2 % fs.len()];
        out.push(ctx.run("operator", s, "operator.fixed_point", || {
            let op = OperatorA::new(f2, rest)?;
            Ok(CheckRecord::bound("", s, "", op.fixed_point_deviation(f2)?, ctx.tol("operator.fixed_point")))
        }));
        out.push(ctx.run("operator", s, "operator.self_adjoint", || {
            let op = OperatorA::new(f2, rest)?;
            Ok(CheckRecord::bound("", s, "", op.self_adjointness(b, g_partner)?, ctx.tol("operator.self_adjoint")))
        }));
        out.push(ctx.run("operator", s, "operator.energy", || {
            let op = OperatorA::new(f2, rest)?;
            let g = build_function(mesh, SupportField::combine(&[(1.0, b.support()), (-0.8, g_partner.support())])?)?;
            Ok(CheckRecord::from_inequality("", s, "", &op.energy(&g, ctx.tol("operator.energy"))?))
        }));
    }
    out
}

/// `a K + v` with `a` in `[0.5, 2]` and a horizontal `v`, drawn from `seed`.
pub fn equality_partner(support: &SupportField, seed: u64, n: usize) -> SupportField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a11e);
    let a = rng.gen_range(0.5..2.0);
    let mut v = Vector::zeros(n + 1);
    for k in 0..n {
        v[k] = rng.gen_range(-0.15..0.15);
    }
    support.scaled(a).translated(&v)
}

fn triples(m: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..=m {
        for j in i + 1..=m {
            for k in j + 1..=m {
                out.push((i, j, k));
            }
        }
    }
    out
}

/// Largest entry of the intrinsic `tau` of the horizontal kernel functions.
pub fn kernel_residual(mesh: &CapMesh, stencil_fraction: f64) -> f64 {
    let step = stencil_fraction * mesh.spacing();
    mesh.interior_indices()
        .par_iter()
        .map(|&i| {
            (0..mesh.n())
                .map(|a| {
                    let f = kernel_function(mesh, a);
                    linalg::max_abs(&tau_intrinsic(mesh, i, &f, step))
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn kernel_check(ctx: &Ctx, mesh: &CapMesh) -> capmix_core::Result<CheckRecord> {
    Ok(CheckRecord::bound("", None, "", kernel_residual(mesh, ctx.config.stencil_fraction), ctx.tol("kernel")))
}

/// Random symmetric positive definite `n x n` matrix with eigenvalues in `[0.1, 3]`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let d = Matrix::from_diagonal(&Vector::from_fn(n, |_, _| rng.gen_range(0.1..3.0)));
    linalg::symmetrize(&(&q * d * q.transpose()))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    linalg::symmetrize(&Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)))
}

/// Worst relative deviation of each mixed-discriminant law over random tuples.
pub struct MixdiscSweep {
    pub diagonal: f64,
    pub symmetry: f64,
    pub multilinear: f64,
    pub transform: f64,
    pub gradient: f64,
    /// Sides of Alexandrov's inequality for the tuple with the smallest relative gap.
    pub alexandrov: (f64, f64),
    pub alexandrov_gap: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(SCALE_FLOOR)
}

pub fn mixdisc_sweep(seed: u64, tuples: usize) -> capmix_core::Result<MixdiscSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = MixdiscSweep {
        diagonal: 0.0,
        symmetry: 0.0,
        multilinear: 0.0,
        transform: 0.0,
        gradient: 0.0,
        alexandrov: (0.0, 0.0),
        alexandrov_gap: f64::INFINITY,
    };
    for t in 0..tuples {
        let n = 2 + t % 2;
        let mats: Vec<Matrix> = (0..n).map(|_| random_spd(&mut rng, n)).collect();
        let q = mixdisc::mixed_discriminant(&mats)?;

        let a = &mats[0];
        s.diagonal = s.diagonal.max(rel(mixdisc::mixed_discriminant(&vec![a.clone(); n])?, a.determinant()));

        for (perm, _) in mixdisc::permutations(n) {
            let permuted: Vec<Matrix> = perm.iter().map(|&k| mats[k].clone()).collect();
            s.symmetry = s.symmetry.max(rel(mixdisc::mixed_discriminant(&permuted)?, q));
        }

        let (x, y) = (random_sym(&mut rng, n), random_sym(&mut rng, n));
        let (alpha, beta) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let with_first = |m: Matrix| {
            let mut v = mats.clone();
            v[0] = m;
            mixdisc::mixed_discriminant(&v)
        };
        let lin = with_first(&x * alpha + &y * beta)?;
        let (qx, qy) = (alpha * with_first(x.clone())?, beta * with_first(y.clone())?);
        // scaled by the terms, since the sum may cancel
        s.multilinear = s.multilinear.max((lin - qx - qy).abs() / (qx.abs() + qy.abs()).max(SCALE_FLOOR));

        let b = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)) + Matrix::identity(n, n) * 1.5;
        let (lhs, rhs) = mixdisc::transform_sides(&mats, &b)?;
        s.transform = s.transform.max(rel(lhs, rhs));

        let g = mixdisc::mixed_discriminant_gradient(&mats)?;
        s.gradient = s.gradient.max(rel(g.component_mul(&mats[0]).sum(), q));

        let (lhs, rhs) = mixdisc::alexandrov_sides(&random_sym(&mut rng, n), &mats[0], &mats[1..n - 1])?;
        let gap = (lhs - rhs) / lhs.abs().max(rhs.abs()).max(SCALE_FLOOR);
        if gap < s.alexandrov_gap {
            s.alexandrov_gap = gap;
            s.alexandrov = (lhs, rhs);
        }
    }
    Ok(s)
}

fn mixdisc_suite(ctx: &Ctx) -> Vec<CheckRecord> {
    let tol = ctx.tol("mixdisc");
    let seeds: Vec<u64> = if ctx.config.seeds.is_empty() { vec![0] } else { ctx.config.seeds.clone() };
    seeds
        .par_iter()
        .map(|&seed| {
            let s = Some(seed);
            match mixdisc_sweep(seed, MIXDISC_TUPLES) {
                Ok(w) => {
                    let mut v = Vec::new();
                    for (name, dev) in [
                        ("mixdisc.diagonal", w.diagonal),
                        ("mixdisc.gradient", w.gradient),
                        ("mixdisc.multilinear", w.multilinear),
                        ("mixdisc.symmetry", w.symmetry),
                        ("mixdisc.transform", w.transform),
                    ] {
                        v.push(ctx.run("mixdisc", s, name, || Ok(CheckRecord::bound("", s, "", dev, tol))));
                    }
                    v.push(ctx.run("mixdisc", s, "mixdisc.alexandrov", || {
                        let r = InequalityReport::inequality("alexandrov", w.alexandrov.0, w.alexandrov.1, tol);
                        Ok(CheckRecord::from_inequality("", s, "", &r))
                    }));
                    v
                }
                Err(e) => vec![CheckRecord::failed("mixdisc", s, "mixdisc.sweep", e.to_string())],
            }
        })
        .flatten()
        .collect()
}
