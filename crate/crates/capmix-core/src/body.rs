//! Support fields, capillary functions and capillary convex bodies.
//!
//! A body `K` is stored through its Euclidean support function `s`, extended
//! 1-homogeneously to `R^{n+1}`. Its capillary support function on `C` is
//! `s_hat(xi(x)) = s(x) / F(x)`, the boundary point with normal `x` is
//! `X = Ds(x)`, and `tau[s_hat]` is read off the derivative of `X` along `C`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capgeom::{CapConfig, CapMesh};
use crate::error::{CoreError, Result};
use crate::fmath;
use crate::linalg::{self, Matrix, Vector};
use crate::norm::{NormModel, TermKind, ZonalTerm};

/// Skip threshold on `|<mu, E_{n+1}>|` for the Robin residual.
pub const ROBIN_SKIP: f64 = 1e-8;

/// `s(x) = c F(x) + <v, x> + sum of zonal terms`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportField {
    norm_coef: f64,
    linear: Vector,
    terms: Vec<ZonalTerm>,
}

impl SupportField {
    pub fn zero(dim: usize) -> Self {
        Self { norm_coef: 0.0, linear: Vector::zeros(dim), terms: Vec::new() }
    }

    pub fn from_parts(norm_coef: f64, linear: Vector, terms: Vec<ZonalTerm>) -> Result<Self> {
        for t in &terms {
            if t.dim() != linear.len() {
                return Err(CoreError::DimensionMismatch { expected: linear.len(), found: t.dim() });
            }
        }
        Ok(Self { norm_coef, linear, terms })
    }

    /// Wulff cap `r0 (F(x) + omega0 <E, x>)`; `E` defaults to `E^F_{n+1}` and
    /// must satisfy `<E, E_{n+1}> = 1`.
    pub fn wulff_cap(config: &CapConfig, r0: f64, e: Option<&Vector>) -> Result<Self> {
        let e = e.cloned().unwrap_or_else(|| config.ef().clone());
        if e.len() != config.dim() {
            return Err(CoreError::DimensionMismatch { expected: config.dim(), found: e.len() });
        }
        if (e[config.dim() - 1] - 1.0).abs() > 1e-12 {
            return Err(CoreError::InvalidArgument("Wulff cap direction must have unit last component".into()));
        }
        if !(r0 > 0.0) {
            return Err(CoreError::InvalidArgument("Wulff cap radius must be positive".into()));
        }
        Ok(Self { norm_coef: r0, linear: e * (r0 * config.omega0()), terms: Vec::new() })
    }

    /// `s(x) = <v, x>`, the support function of the point `v`.
    pub fn point(v: Vector) -> Self {
        Self { norm_coef: 0.0, linear: v, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn norm_coefficient(&self) -> f64 {
        self.norm_coef
    }

    pub fn linear_part(&self) -> &Vector {
        &self.linear
    }

    pub fn terms(&self) -> &[ZonalTerm] {
        &self.terms
    }

    pub fn with_term(mut self, term: ZonalTerm) -> Self {
        self.terms.push(term);
        self
    }

    pub fn translated(mut self, v: &Vector) -> Self {
        self.linear += v;
        self
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.norm_coef *= lambda;
        out.linear *= lambda;
        for t in &mut out.terms {
            t.amplitude *= lambda;
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.norm_coef += other.norm_coef;
        out.linear += &other.linear;
        out.terms.extend(other.terms.iter().cloned());
        out
    }

    /// `sum_k lambda_k s_k`.
    pub fn combine(items: &[(f64, &SupportField)]) -> Result<Self> {
        let first = items.first().ok_or(CoreError::InvalidArgument("empty Minkowski combination".into()))?;
        let mut acc = SupportField::zero(first.1.dim());
        for (lambda, s) in items {
            if s.dim() != acc.dim() {
                return Err(CoreError::DimensionMismatch { expected: acc.dim(), found: s.dim() });
            }
            acc = acc.plus(&s.scaled(*lambda));
        }
        Ok(acc)
    }

    pub fn value(&self, norm: &NormModel, x: &Vector) -> f64 {
        let mut v = self.linear.dot(x);
        if self.norm_coef != 0.0 {
            v += self.norm_coef * norm.value(x);
        }
        for t in &self.terms {
            v += t.value(x);
        }
        v
    }

    /// `Ds(x)`: for unit `x`, the boundary point with outer normal `x`.
    pub fn gradient(&self, norm: &NormModel, x: &Vector) -> Vector {
        let mut g = self.linear.clone();
        if self.norm_coef != 0.0 {
            g += norm.gradient(x) * self.norm_coef;
        }
        for t in &self.terms {
            g += t.gradient(x);
        }
        g
    }

    pub fn hessian(&self, norm: &NormModel, x: &Vector) -> Matrix {
        let d = self.dim();
        let mut h = Matrix::zeros(d, d);
        if self.norm_coef != 0.0 {
            h += norm.hessian(x) * self.norm_coef;
        }
        for t in &self.terms {
            h += t.hessian(x);
        }
        h
    }

    /// Central-difference Hessian from [`SupportField::gradient`] at step `h`.
    pub fn fd_hessian(&self, norm: &NormModel, x: &Vector, h: f64) -> Matrix {
        let d = self.dim();
        let mut out = Matrix::zeros(d, d);
        for j in 0..d {
            let e = linalg::unit(d, j) * h;
            let col = (self.gradient(norm, &(x + &e)) - self.gradient(norm, &(x - &e))) / (2.0 * h);
            out.set_column(j, &col);
        }
        linalg::symmetrize(&out)
    }
}

/// Per-node data of a capillary function.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldNode {
    /// `s(x)`.
    pub s: f64,
    /// `X = Ds(x)`.
    pub position: Vector,
    /// `W = D^2 s(x)` in the node's tangent basis.
    pub radii: Matrix,
    /// `tau[s_hat]` in the node's `G`-orthonormal frame, symmetrised.
    pub tau: Matrix,
    /// `|tau - tau^T|_max` before symmetrisation, relative to `|tau|_max`.
    pub tau_asymmetry: f64,
}

/// A function on `C` given by a support field, with per-node caches.
///
/// Differences of support functions are allowed; see [`CapillaryBody`] for the
/// convex case.
#[derive(Debug, Clone, PartialEq)]
pub struct CapFunction {
    mesh: Arc<CapMesh>,
    support: SupportField,
    nodes: Vec<FieldNode>,
}

/// `D_v X` along the great circle through `x` in the unit tangent direction `u`,
/// central differences at `h` and `h/2` combined by Richardson extrapolation.
fn position_derivative(support: &SupportField, norm: &NormModel, x: &Vector, u: &Vector, h: f64) -> Vector {
    let diff = |step: f64| {
        let p = support.gradient(norm, &linalg::great_circle(x, u, step));
        let m = support.gradient(norm, &linalg::great_circle(x, u, -step));
        (p - m) / (2.0 * step)
    };
    (diff(0.5 * h) * 4.0 - diff(h)) / 3.0
}

impl CapFunction {
    pub fn new(mesh: Arc<CapMesh>, support: SupportField) -> Result<Self> {
        if support.dim() != mesh.dim() {
            return Err(CoreError::DimensionMismatch { expected: mesh.dim(), found: support.dim() });
        }
        let nodes = (0..mesh.len()).map(|i| Self::node_cache(&mesh, &support, i)).collect();
        Ok(Self { mesh, support, nodes })
    }

    /// Assembles a function from caches computed elsewhere, e.g. in parallel.
    pub fn from_caches(mesh: Arc<CapMesh>, support: SupportField, nodes: Vec<FieldNode>) -> Result<Self> {
        if nodes.len() != mesh.len() {
            return Err(CoreError::DimensionMismatch { expected: mesh.len(), found: nodes.len() });
        }
        Ok(Self { mesh, support, nodes })
    }

    /// Cache entry for node `i`.
    pub fn node_cache(mesh: &CapMesh, support: &SupportField, i: usize) -> FieldNode {
        let node = mesh.node(i);
        let norm = mesh.config().norm();
        let s = support.value(norm, &node.x);
        let position = support.gradient(norm, &node.x);
        let radii = linalg::symmetrize(&(node.basis.transpose() * support.hessian(norm, &node.x) * &node.basis));
        let raw = Self::tau_by_position(mesh, support, i);
        let tau_asymmetry = linalg::max_abs(&(&raw - raw.transpose())) / linalg::max_abs(&raw).max(1e-30);
        FieldNode { s, position, radii, tau: linalg::symmetrize(&raw), tau_asymmetry }
    }

    /// `tau_kl = G(Psi)(D_{e_k} X, e_l)`, with `D_{e_k} X` obtained by moving `x`
    /// along `A_F^{-1} e_k` (since `dxi = A_F dx`).
    fn tau_by_position(mesh: &CapMesh, support: &SupportField, i: usize) -> Matrix {
        let node = mesh.node(i);
        let norm = mesh.config().norm();
        let n = mesh.n();
        let a_inv = node.a_f.clone().try_inverse().unwrap_or_else(|| Matrix::from_element(n, n, f64::NAN));
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            let e: Vector = node.frame.column(k).into_owned();
            let dx = &node.basis * (&a_inv * (node.basis.transpose() * &e));
            let len = dx.norm();
            cols.push(position_derivative(support, norm, &node.x, &(&dx / len), norm.fd_step()) * len);
        }
        let ge = &node.metric * &node.frame;
        Matrix::from_fn(n, n, |k, l| cols[k].dot(&ge.column(l)))
    }

    pub fn mesh(&self) -> &Arc<CapMesh> {
        &self.mesh
    }

    pub fn support(&self) -> &SupportField {
        &self.support
    }

    pub fn caches(&self) -> &[FieldNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &FieldNode {
        &self.nodes[i]
    }

    pub fn n(&self) -> usize {
        self.mesh.n()
    }

    /// `s_hat(xi_i)` through `G(Psi)(X, Psi)`.
    pub fn capillary_support(&self, i: usize) -> f64 {
        let node = self.mesh.node(i);
        self.nodes[i].position.dot(&(&node.metric * &node.psi))
    }

    /// `s_hat(xi_i) = s(x_i) / F(x_i)`.
    pub fn capillary_support_direct(&self, i: usize) -> f64 {
        self.nodes[i].s / self.mesh.node(i).f
    }

    /// `u_bar = s_hat / (1 + omega0 G(Psi)(E^F, Psi))`. Not used by any check.
    pub fn normalized_support(&self, i: usize) -> f64 {
        let node = self.mesh.node(i);
        let config = self.mesh.config();
        let pairing = config.ef().dot(&(&node.metric * &node.psi));
        self.capillary_support(i) / (1.0 + config.omega0() * pairing)
    }

    pub fn tau(&self, i: usize) -> &Matrix {
        &self.nodes[i].tau
    }

    /// Eigenvalues of `W A_F^{-1}`, which must match those of `tau`.
    pub fn tau_eigenvalues_from_radii(&self, i: usize) -> Vec<f64> {
        let a = &self.mesh.node(i).a_f;
        linalg::relative_eigenvalues(&self.nodes[i].radii, a).unwrap_or_default()
    }

    /// Largest relative gap between the eigenvalues of `tau` and of `W A_F^{-1}`.
    /// Largest relative asymmetry of the unsymmetrised `tau` over all nodes.
    pub fn tau_asymmetry(&self) -> f64 {
        self.nodes.iter().map(|n| n.tau_asymmetry).fold(0.0, f64::max)
    }

    pub fn tau_route_gap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.mesh.len() {
            let a = linalg::sym_eigenvalues(self.tau(i));
            let b = self.tau_eigenvalues_from_radii(i);
            let scale = a.iter().chain(b.iter()).fold(1e-30_f64, |m, v| m.max(v.abs()));
            for (p, q) in a.iter().zip(b.iter()) {
                worst = worst.max((p - q).abs() / scale);
            }
        }
        worst
    }

    /// Euclidean capillary condition `<X, E_{n+1}>` at each boundary node.
    pub fn boundary_heights(&self) -> Vec<f64> {
        let d = self.mesh.dim();
        self.mesh.boundary().iter().map(|&i| self.nodes[i].position[d - 1]).collect()
    }

    /// Robin residual `grad_{mu_F} s_hat - omega0 s_hat / (F(nu) <mu, E_{n+1}>)`
    /// at each boundary node; `None` where `|<mu, E_{n+1}>| < ROBIN_SKIP`.
    ///
    /// Moving `xi` along `mu_F = A_F mu` moves `x` along `mu`, so the directional
    /// derivative is that of `s / F` along `mu` on the sphere.
    pub fn robin_residuals(&self) -> Vec<Option<f64>> {
        let config = self.mesh.config();
        let d = config.dim();
        self.mesh
            .boundary()
            .iter()
            .map(|&i| {
                let node = self.mesh.node(i);
                let mu = config.conormal(&node.x);
                let mu_e = mu[d - 1];
                if mu_e.abs() < ROBIN_SKIP {
                    return None;
                }
                let fd = &self.nodes[i];
                let f = node.f;
                let deriv = (fd.position.dot(&mu) * f - fd.s * node.psi.dot(&mu)) / (f * f);
                Some(deriv - config.omega0() * self.capillary_support(i) / (f * mu_e))
            })
            .collect()
    }

    /// Principal radii `1 / kappa^F`, i.e. eigenvalues of `tau`, ascending.
    pub fn principal_radii(&self, i: usize) -> Vec<f64> {
        linalg::sym_eigenvalues(self.tau(i))
    }

    /// Anisotropic principal curvatures `kappa^F = 1 / eig(tau)`.
    pub fn anisotropic_curvatures(&self, i: usize) -> Vec<f64> {
        self.principal_radii(i).iter().rev().map(|r| 1.0 / r).collect()
    }

    /// Normalised anisotropic mean curvature `H_k = sigma_k(kappa) / C(n, k)`.
    pub fn mean_curvature(&self, i: usize, k: usize) -> f64 {
        let kappa = self.anisotropic_curvatures(i);
        linalg::elementary_symmetric(&kappa, k) / linalg::binomial(kappa.len(), k)
    }

    /// Smallest eigenvalue of `W` over all nodes.
    pub fn min_radii_eigenvalue(&self) -> f64 {
        self.nodes.iter().map(|n| linalg::min_eigenvalue(&n.radii)).fold(f64::INFINITY, f64::min)
    }
}

/// A capillary convex body: a [`CapFunction`] whose `W` and `tau` are positive
/// definite at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct CapillaryBody(CapFunction);

impl Deref for CapillaryBody {
    type Target = CapFunction;
    fn deref(&self) -> &CapFunction {
        &self.0
    }
}

impl CapillaryBody {
    pub fn new(mesh: Arc<CapMesh>, support: SupportField) -> Result<Self> {
        Self::from_function(CapFunction::new(mesh, support)?)
    }

    pub fn from_function(f: CapFunction) -> Result<Self> {
        for (i, node) in f.nodes.iter().enumerate() {
            let m = linalg::min_eigenvalue(&node.radii);
            if !(m > 0.0) {
                return Err(CoreError::NotPositiveDefinite { what: "W", node: Some(i), min_eigenvalue: m });
            }
            let t = linalg::min_eigenvalue(&node.tau);
            if !(t > 0.0) {
                return Err(CoreError::NotPositiveDefinite { what: "tau", node: Some(i), min_eigenvalue: t });
            }
        }
        Ok(Self(f))
    }

    /// Wulff cap `r0 (F + omega0 <E, x>)` on `mesh`.
    pub fn wulff_cap(mesh: Arc<CapMesh>, r0: f64, e: Option<&Vector>) -> Result<Self> {
        let s = SupportField::wulff_cap(mesh.config(), r0, e)?;
        Self::new(mesh, s)
    }

    pub fn function(&self) -> &CapFunction {
        &self.0
    }

    pub fn into_function(self) -> CapFunction {
        self.0
    }

    /// Translate by a horizontal vector (`<v, E_{n+1}> = 0` keeps the body capillary).
    pub fn translated(&self, v: &Vector) -> Result<Self> {
        Self::new(self.mesh.clone(), self.support.clone().translated(v))
    }

    /// Minkowski combination `sum_k lambda_k K_k` with `lambda_k >= 0`, not all zero.
    pub fn minkowski_combine(items: &[(f64, &CapillaryBody)]) -> Result<Self> {
        let first = items.first().ok_or(CoreError::InvalidArgument("empty Minkowski combination".into()))?;
        let mesh = first.1.mesh.clone();
        if items.iter().any(|(_, b)| !Arc::ptr_eq(&b.mesh, &mesh) && *b.mesh != *mesh) {
            return Err(CoreError::MeshMismatch);
        }
        if items.iter().any(|(l, _)| !(*l >= 0.0)) || items.iter().all(|(l, _)| *l == 0.0) {
            return Err(CoreError::InvalidArgument("Minkowski weights must be nonnegative and not all zero".into()));
        }
        let parts: Vec<(f64, &SupportField)> = items.iter().map(|(l, b)| (*l, &b.support)).collect();
        Self::new(mesh, SupportField::combine(&parts)?)
    }
}

/// Support fields of the kernel functions `f_alpha = <x, E_alpha> / F`, `alpha <= n`.
pub fn kernel_fields(config: &CapConfig) -> Vec<SupportField> {
    (0..config.n()).map(|a| SupportField::point(linalg::unit(config.dim(), a))).collect()
}

/// Settings for [`random_support_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomBodySpec {
    /// Scale of the bump amplitudes before any halving.
    pub amplitude: f64,
    /// Largest magnitude of each horizontal translation component.
    pub max_shift: f64,
    pub bumps: usize,
    /// Lower bound for the eigenvalues of `W` on the sample of `S`.
    pub margin: f64,
}

impl Default for RandomBodySpec {
    fn default() -> Self {
        Self { amplitude: 4.0, max_shift: 0.2, bumps: 3, margin: 0.25 }
    }
}

/// Largest number of amplitude halvings tried by [`random_support_field`].
pub const MAX_HALVINGS: usize = 20;

fn bump_inside(config: &CapConfig, center: &Vector, width: f64) -> bool {
    let beta = fmath::acos(1.0 - width) * 1.05;
    let basis = linalg::tangent_basis(center);
    let rays = if config.n() == 1 { 2 } else { 24 };
    for k in 0..rays {
        let dir: Vector = if config.n() == 1 {
            basis.column(0).into_owned() * if k == 0 { 1.0 } else { -1.0 }
        } else {
            let a = 2.0 * core::f64::consts::PI * k as f64 / rays as f64;
            basis.column(0) * fmath::cos(a) + basis.column(1) * fmath::sin(a)
        };
        for frac in [0.5, 1.0] {
            if config.region_residual(&linalg::great_circle(center, &dir, beta * frac)) <= 0.0 {
                return false;
            }
        }
    }
    config.region_residual(center) > 0.0
}

/// Deterministic random capillary support field: unit Wulff cap, a horizontal
/// translation, and bumps supported strictly inside `S`.
///
/// Bump amplitudes are halved until `W` is positive definite on a fixed sample
/// of `S`, so the result does not depend on any mesh.
pub fn random_support_field(config: &CapConfig, seed: u64, spec: RandomBodySpec) -> Result<SupportField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = config.dim();
    let mut v = Vector::zeros(d);
    for k in 0..d - 1 {
        v[k] = rng.gen_range(-spec.max_shift..=spec.max_shift);
    }
    let base = SupportField::wulff_cap(config, 1.0, None)?.translated(&v);
    let mut terms = Vec::new();
    for _ in 0..spec.bumps {
        for _ in 0..200 {
            let phi = rng.gen_range(0.0..(2.0 * core::f64::consts::PI));
            let phi = if config.n() == 1 {
                if phi < core::f64::consts::PI {
                    0.0
                } else {
                    core::f64::consts::PI
                }
            } else {
                phi
            };
            let tb = config.boundary_angle(phi)?;
            // angular radius relative to the region, centre far enough from the boundary
            let beta = tb * rng.gen_range(0.3..0.85_f64);
            let theta = (tb - 1.15 * beta).max(0.0) * rng.gen_range(0.0..1.0_f64);
            let width = 1.0 - fmath::cos(beta);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let mag = rng.gen_range(0.3..1.0_f64);
            let center = config.polar_point(theta, phi);
            if bump_inside(config, &center, width) {
                terms.push(ZonalTerm::new(TermKind::Bump, center, width, spec.amplitude * sign * mag * width / 10.0)?);
                break;
            }
        }
    }
    let samples = config.sample_region(24, 48)?;
    let norm = config.norm();
    for _ in 0..=MAX_HALVINGS {
        let field = SupportField::from_parts(base.norm_coef, base.linear.clone(), terms.clone())?;
        let convex = samples.iter().all(|x| {
            let b = linalg::tangent_basis(x);
            linalg::min_eigenvalue(&(b.transpose() * field.hessian(norm, x) * &b)) > spec.margin
        });
        if convex {
            return Ok(field);
        }
        for t in &mut terms {
            t.amplitude *= 0.5;
        }
    }
    Err(CoreError::NotConvex { attempts: MAX_HALVINGS })
}

/// [`random_support_field`] instantiated on `mesh`.
pub fn random_capillary_body(mesh: Arc<CapMesh>, seed: u64, spec: RandomBodySpec) -> Result<CapillaryBody> {
    let field = random_support_field(mesh.config(), seed, spec)?;
    CapillaryBody::new(mesh, field)
}
