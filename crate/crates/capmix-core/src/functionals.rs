//! Global functionals: volumes, mixed volumes, quermassintegrals, and the
//! identity and inequality checks built on them.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::body::{CapFunction, SupportField};
use crate::capgeom::{CapMesh, NodeTag};
use crate::error::{CoreError, Result};
use crate::fmath;
use crate::linalg::{self, Matrix, Vector};
use crate::mixdisc;

/// Guard for scale-relative tolerances.
pub const SCALE_FLOOR: f64 = 1e-30;

/// How a mixed volume is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MixedRoute {
    /// `1/(n+1) ∫ s_hat_0 Q(tau_1, .., tau_n) F dmu_g`, pulled back to `S`.
    Anisotropic,
    /// `1/(n+1) ∫_S s_0 Q(W_1, .., W_n) dsigma`.
    Euclidean,
    /// Coefficient of the volume polynomial of Minkowski combinations.
    Polyfit,
}

impl MixedRoute {
    pub fn name(self) -> &'static str {
        match self {
            Self::Anisotropic => "anisotropic-integral",
            Self::Euclidean => "euclidean-integral",
            Self::Polyfit => "polyfit-oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedVolumeResult {
    pub value: f64,
    pub route: MixedRoute,
    pub mesh_level: u32,
    /// Richardson estimate from the next coarser mesh; infinite at level 0.
    pub error_estimate: f64,
}

/// Outcome of one checked identity or inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub gap: f64,
    /// `gap / max(|lhs|, |rhs|, SCALE_FLOOR)`.
    pub relative_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub equality_expected: bool,
}

impl InequalityReport {
    fn build(name: &str, lhs: f64, rhs: f64, tolerance: f64, two_sided: bool) -> Self {
        let gap = lhs - rhs;
        let relative_gap = gap / lhs.abs().max(rhs.abs()).max(SCALE_FLOOR);
        let pass = if two_sided { relative_gap.abs() <= tolerance } else { relative_gap >= -tolerance };
        Self { name: name.into(), lhs, rhs, gap, relative_gap, tolerance, pass: pass && gap.is_finite(), equality_expected: two_sided }
    }

    /// `lhs >= rhs` up to `tolerance` relative to the scale.
    pub fn inequality(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(name, lhs, rhs, tolerance, false)
    }

    /// `lhs == rhs` up to `tolerance` relative to the scale.
    pub fn identity(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(name, lhs, rhs, tolerance, true)
    }

    /// Same values re-judged as an equality case.
    pub fn expect_equality(self) -> Self {
        Self::build(&self.name, self.lhs, self.rhs, self.tolerance, true)
    }
}

fn shared_mesh(fs: &[&CapFunction]) -> Result<Arc<CapMesh>> {
    let first = fs.first().ok_or(CoreError::InvalidArgument("no functions given".into()))?;
    let mesh = first.mesh().clone();
    for f in &fs[1..] {
        if !Arc::ptr_eq(f.mesh(), &mesh) && **f.mesh() != *mesh {
            return Err(CoreError::MeshMismatch);
        }
    }
    Ok(mesh)
}

fn check_arity(mesh: &CapMesh, found: usize) -> Result<()> {
    if found != mesh.n() + 1 {
        return Err(CoreError::DimensionMismatch { expected: mesh.n() + 1, found });
    }
    Ok(())
}

/// `W = D^2 s` at node `i`, in the node's tangent basis.
fn radii_at(mesh: &CapMesh, s: &SupportField, i: usize) -> Matrix {
    let node = mesh.node(i);
    let h = s.hessian(mesh.config().norm(), &node.x);
    linalg::symmetrize(&(node.basis.transpose() * h * &node.basis))
}

/// `|K| = 1/(n+1) ∫_S s det W dsigma`, for any support field on `mesh`.
pub fn volume_of(mesh: &CapMesh, s: &SupportField) -> f64 {
    let norm = mesh.config().norm();
    let total = mesh.integrate(|i| s.value(norm, &mesh.node(i).x) * radii_at(mesh, s, i).determinant());
    total / (mesh.n() + 1) as f64
}

/// Volume of the body from its caches.
pub fn volume(body: &CapFunction) -> f64 {
    let total = body.mesh().integrate(|i| body.node(i).s * body.node(i).radii.determinant());
    total / (body.n() + 1) as f64
}

/// `|C_hat|`, the volume of the unit Wulff cap body.
pub fn cap_volume(mesh: &CapMesh) -> Result<f64> {
    Ok(volume_of(mesh, &SupportField::wulff_cap(mesh.config(), 1.0, None)?))
}

fn integral_route(fs: &[&CapFunction], route: MixedRoute) -> Result<f64> {
    let mesh = shared_mesh(fs)?;
    check_arity(&mesh, fs.len())?;
    let n = mesh.n();
    let vals = (0..mesh.len())
        .map(|i| match route {
            MixedRoute::Anisotropic => {
                let mats: Vec<Matrix> = fs[1..].iter().map(|f| f.tau(i).clone()).collect();
                mixdisc::mixed_discriminant(&mats).map(|q| fs[0].capillary_support(i) * q * mesh.node(i).f * mesh.node(i).det_a)
            }
            _ => {
                let mats: Vec<Matrix> = fs[1..].iter().map(|f| f.node(i).radii.clone()).collect();
                mixdisc::mixed_discriminant(&mats).map(|q| fs[0].node(i).s * q)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mesh.integrate(|i| vals[i]) / (n + 1) as f64)
}

fn monomials(vars: usize, degree: usize) -> Vec<Vec<usize>> {
    if vars == 1 {
        return alloc::vec![alloc::vec![degree]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in monomials(vars - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Polynomial-fit mixed volume and the condition number of the fit.
///
/// Distinct support fields are combined with weights from `{0.5, 1, 1.5, 2}^m`;
/// rows are picked greedily until the monomial system has full rank, then two
/// more rows are added and the system is solved by least squares.
pub fn polyfit_mixed_volume(fs: &[&CapFunction]) -> Result<(f64, f64)> {
    let mesh = shared_mesh(fs)?;
    check_arity(&mesh, fs.len())?;
    let degree = mesh.n() + 1;
    let mut distinct: Vec<&SupportField> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for f in fs {
        match distinct.iter().position(|s| **s == *f.support()) {
            Some(k) => counts[k] += 1,
            None => {
                distinct.push(f.support());
                counts.push(1);
            }
        }
    }
    let m = distinct.len();
    let monos = monomials(m, degree);
    let grid = [0.5, 1.0, 1.5, 2.0];
    let row_of = |lam: &[f64]| -> Vector {
        Vector::from_iterator(
            monos.len(),
            monos.iter().map(|e| e.iter().zip(lam).map(|(&p, &l)| fmath::powi(l, p as i32)).product::<f64>()),
        )
    };
    let mut chosen: Vec<Vec<f64>> = Vec::new();
    let mut ortho: Vec<Vector> = Vec::new();
    let mut extra = 0;
    let total = grid.len().pow(m as u32);
    for idx in 0..total {
        let mut lam = Vec::with_capacity(m);
        let mut r = idx;
        for _ in 0..m {
            lam.push(grid[r % grid.len()]);
            r /= grid.len();
        }
        let row = row_of(&lam);
        if ortho.len() < monos.len() {
            let mut v = row.clone();
            for q in &ortho {
                v -= q * q.dot(&v);
            }
            if v.norm() > 1e-8 * row.norm() {
                ortho.push(v.normalize());
                chosen.push(lam);
            }
        } else if extra < 2 {
            chosen.push(lam);
            extra += 1;
        } else {
            break;
        }
    }
    if ortho.len() < monos.len() {
        return Err(CoreError::Degenerate("polyfit grid does not determine the volume polynomial"));
    }
    let a = Matrix::from_fn(chosen.len(), monos.len(), |r, c| row_of(&chosen[r])[c]);
    let mut b = Vector::zeros(chosen.len());
    for (r, lam) in chosen.iter().enumerate() {
        let items: Vec<(f64, &SupportField)> = lam.iter().copied().zip(distinct.iter().copied()).collect();
        b[r] = volume_of(&mesh, &SupportField::combine(&items)?);
    }
    let (coef, cond) = linalg::least_squares(&a, &b).ok_or(CoreError::Degenerate("polyfit least squares failed"))?;
    let target = monos.iter().position(|e| *e == counts).ok_or(CoreError::Degenerate("missing monomial"))?;
    let multinomial = linalg::factorial(degree) / counts.iter().map(|&c| linalg::factorial(c)).product::<f64>();
    Ok((coef[target] / multinomial, cond))
}

/// `V(f_0, .., f_n)` by the chosen route, without an error estimate.
pub fn mixed_volume_value(fs: &[&CapFunction], route: MixedRoute) -> Result<f64> {
    match route {
        MixedRoute::Polyfit => polyfit_mixed_volume(fs).map(|r| r.0),
        _ => integral_route(fs, route),
    }
}

/// `V(f_0, .., f_n)` with a Richardson error estimate from the next coarser mesh.
pub fn mixed_volume(fs: &[&CapFunction], route: MixedRoute) -> Result<MixedVolumeResult> {
    let mesh = shared_mesh(fs)?;
    let value = mixed_volume_value(fs, route)?;
    let level = mesh.level();
    let error_estimate = if level == 0 {
        f64::INFINITY
    } else {
        let coarse = Arc::new(mesh.at_level(level - 1)?);
        let rebuilt = fs.iter().map(|f| CapFunction::new(coarse.clone(), f.support().clone())).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&CapFunction> = rebuilt.iter().collect();
        let coarse_value = mixed_volume_value(&refs, route)?;
        (value - coarse_value).abs() / (fmath::powi(2.0, mesh.order() as i32) - 1.0)
    };
    Ok(MixedVolumeResult { value, route, mesh_level: level, error_estimate })
}

/// `F(x) + omega0 <x, E^F>` at node `i`.
fn cap_weight(mesh: &CapMesh, i: usize) -> f64 {
    let node = mesh.node(i);
    let config = mesh.config();
    node.f + config.omega0() * node.x.dot(config.ef())
}

/// `V_{j, omega0}` for `0 <= j <= n+1` by the interior formula
/// `1/(n+1) ∫_Sigma H_{j-1} (F + omega0 <nu, E^F>) dmu`; `V_0` is the volume.
pub fn quermassintegral(body: &CapFunction, j: usize) -> Result<f64> {
    let n = body.n();
    if j > n + 1 {
        return Err(CoreError::InvalidArgument(alloc::format!("quermassintegral index {j} exceeds {}", n + 1)));
    }
    if j == 0 {
        return Ok(volume(body));
    }
    let mesh = body.mesh();
    let total = mesh.integrate(|i| body.mean_curvature(i, j - 1) * cap_weight(mesh, i) * body.node(i).radii.determinant());
    Ok(total / (n + 1) as f64)
}

/// `V_{j, omega0}` as the mixed volume of `n+1-j` copies of the body and `j`
/// copies of the unit Wulff cap body.
pub fn quermassintegral_by_mixed_volume(body: &CapFunction, j: usize, route: MixedRoute) -> Result<f64> {
    let n = body.n();
    if j > n + 1 {
        return Err(CoreError::InvalidArgument(alloc::format!("quermassintegral index {j} exceeds {}", n + 1)));
    }
    let cap = CapFunction::new(body.mesh().clone(), SupportField::wulff_cap(body.mesh().config(), 1.0, None)?)?;
    let mut args: Vec<&CapFunction> = Vec::with_capacity(n + 1);
    args.extend(core::iter::repeat(body).take(n + 1 - j));
    args.extend(core::iter::repeat(&cap).take(j));
    mixed_volume_value(&args, route)
}

/// Anisotropic area `|Sigma|_F = ∫_S F det W dsigma`.
pub fn anisotropic_area(body: &CapFunction) -> f64 {
    let mesh = body.mesh();
    mesh.integrate(|i| mesh.node(i).f * body.node(i).radii.determinant())
}

/// Measure of the flat face `∂Sigma_hat`: enclosed area of the boundary curve
/// `X(∂S)` for `n = 2`, length of the segment for `n = 1`.
///
/// For `n = 2` the area is `1/2 ∮ (X_1 dX_2 - X_2 dX_1)` with
/// `dX = D^2 s dx`, using the boundary quadrature weights.
pub fn flat_face_measure(body: &CapFunction) -> f64 {
    let mesh = body.mesh();
    let bd = mesh.boundary();
    if body.n() == 1 {
        let xs = bd.iter().map(|&i| body.node(i).position[0]);
        let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        return hi - lo;
    }
    let config = mesh.config();
    let norm = config.norm();
    let e = config.vertical();
    let terms: Vec<f64> = bd
        .iter()
        .zip(mesh.boundary_weights())
        .map(|(&i, &w)| {
            let x = &mesh.node(i).x;
            // tangent of ∂S: orthogonal to x and to the gradient of the region residual
            let grad = norm.hessian(x) * &e;
            let mut t = Vector::from_column_slice(&[
                x[1] * grad[2] - x[2] * grad[1],
                x[2] * grad[0] - x[0] * grad[2],
                x[0] * grad[1] - x[1] * grad[0],
            ]);
            t = t.normalize();
            // orient counterclockwise about E_{n+1}
            if x[0] * t[1] - x[1] * t[0] < 0.0 {
                t = -t;
            }
            let pos = &body.node(i).position;
            let dx = body.support().hessian(norm, x) * t;
            0.5 * (pos[0] * dx[1] - pos[1] * dx[0]) * w
        })
        .collect();
    linalg::pairwise_sum(&terms).abs()
}

/// `V_1` by its boundary form `(|Sigma|_F + omega0 |flat face|) / (n+1)`.
pub fn quermass_boundary_form(body: &CapFunction) -> f64 {
    let omega0 = body.mesh().config().omega0();
    (anisotropic_area(body) + omega0 * flat_face_measure(body)) / (body.n() + 1) as f64
}

/// Quadrature value of a vanishing integral, with the scale it is judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub residual: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        self.residual.abs() / self.scale.max(SCALE_FLOOR)
    }
}

/// `∫_Sigma [H_k (1 + omega0 G(nu_F)(nu_F, E^F)) - H_{k+1} u_hat] dmu_F`,
/// for `0 <= k <= n-1`.
pub fn minkowski_residual(body: &CapFunction, k: usize) -> Result<Residual> {
    let n = body.n();
    if k >= n {
        return Err(CoreError::InvalidArgument(alloc::format!("Minkowski formula needs k < {n}, got {k}")));
    }
    let mesh = body.mesh();
    let first = |i: usize| body.mean_curvature(i, k) * cap_weight(mesh, i) * body.node(i).radii.determinant();
    let second = |i: usize| body.mean_curvature(i, k + 1) * body.node(i).s * body.node(i).radii.determinant();
    let residual = mesh.integrate(|i| first(i) - second(i));
    let scale = mesh.integrate(|i| first(i).abs()).max(mesh.integrate(|i| second(i).abs()));
    Ok(Residual { residual, scale })
}

/// Coefficients of `t -> |Sigma_hat + t C_hat|` against `C(n+1, k) V_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinerResult {
    /// Fitted coefficient of `t^k`, `k = 0..=n+1`.
    pub fitted: Vec<f64>,
    /// `C(n+1, k) V_{k, omega0}` by the interior formula.
    pub predicted: Vec<f64>,
    /// Largest `|fitted - predicted| / |predicted|`.
    pub max_relative_error: f64,
    pub condition: f64,
}

pub fn steiner(body: &CapFunction, t_grid: &[f64]) -> Result<SteinerResult> {
    let n = body.n();
    if t_grid.len() < n + 2 || t_grid.iter().any(|&t| t <= 0.0) {
        return Err(CoreError::InvalidArgument(alloc::format!("Steiner fit needs at least {} positive t values", n + 2)));
    }
    let mesh = body.mesh();
    let cap = SupportField::wulff_cap(mesh.config(), 1.0, None)?;
    let a = Matrix::from_fn(t_grid.len(), n + 2, |r, c| fmath::powi(t_grid[r], c as i32));
    let mut b = Vector::zeros(t_grid.len());
    for (r, &t) in t_grid.iter().enumerate() {
        b[r] = volume_of(mesh, &SupportField::combine(&[(1.0, body.support()), (t, &cap)])?);
    }
    let (coef, condition) = linalg::least_squares(&a, &b).ok_or(CoreError::Degenerate("Steiner fit failed"))?;
    let mut predicted = Vec::with_capacity(n + 2);
    for k in 0..=n + 1 {
        predicted.push(linalg::binomial(n + 1, k) * quermassintegral(body, k)?);
    }
    let fitted: Vec<f64> = coef.iter().copied().collect();
    let max_relative_error = fitted.iter().zip(&predicted).map(|(f, p)| (f - p).abs() / p.abs().max(SCALE_FLOOR)).fold(0.0, f64::max);
    Ok(SteinerResult { fitted, predicted, max_relative_error, condition })
}

/// Largest relative change of `V` when its first two arguments are swapped.
pub fn swap_deviation(fs: &[&CapFunction], route: MixedRoute) -> Result<f64> {
    let a = mixed_volume_value(fs, route)?;
    let mut swapped = fs.to_vec();
    swapped.swap(0, 1);
    let b = mixed_volume_value(&swapped, route)?;
    Ok((a - b).abs() / a.abs().max(b.abs()).max(SCALE_FLOOR))
}

/// Relative change of `V` under a permutation of the trailing arguments `f_1..f_n`.
pub fn trailing_permutation_deviation(fs: &[&CapFunction], perm: &[usize], route: MixedRoute) -> Result<f64> {
    if perm.len() + 1 != fs.len() {
        return Err(CoreError::DimensionMismatch { expected: fs.len() - 1, found: perm.len() });
    }
    let a = mixed_volume_value(fs, route)?;
    let mut permuted = alloc::vec![fs[0]];
    for &p in perm {
        permuted.push(*fs.get(p + 1).ok_or(CoreError::InvalidArgument("permutation index out of range".into()))?);
    }
    let b = mixed_volume_value(&permuted, route)?;
    Ok((a - b).abs() / a.abs().max(b.abs()).max(SCALE_FLOOR))
}

/// `V(K_1, K_2, rest)^2 >= V(K_1, K_1, rest) V(K_2, K_2, rest)`.
pub fn af_check(k1: &CapFunction, k2: &CapFunction, rest: &[&CapFunction], route: MixedRoute, tolerance: f64) -> Result<InequalityReport> {
    let with = |a: &CapFunction, b: &CapFunction| {
        let mut args = alloc::vec![a, b];
        args.extend_from_slice(rest);
        mixed_volume_value(&args, route)
    };
    let mixed = with(k1, k2)?;
    let lhs = mixed * mixed;
    let rhs = with(k1, k1)? * with(k2, k2)?;
    Ok(InequalityReport::inequality("alexandrov-fenchel", lhs, rhs, tolerance))
}

/// `(V_k / |C_hat|)^{1/(n+1-k)} >= (V_l / |C_hat|)^{1/(n+1-l)}` for `l < k <= n`.
pub fn quermass_chain(body: &CapFunction, k: usize, l: usize, tolerance: f64) -> Result<InequalityReport> {
    let n = body.n();
    if !(l < k && k <= n) {
        return Err(CoreError::InvalidArgument(alloc::format!("chain needs l < k <= {n}, got l = {l}, k = {k}")));
    }
    let cap = cap_volume(body.mesh())?;
    let side = |j: usize| -> Result<f64> { Ok(fmath::powf(quermassintegral(body, j)? / cap, 1.0 / (n + 1 - j) as f64)) };
    Ok(InequalityReport::inequality("quermassintegral-chain", side(k)?, side(l)?, tolerance))
}

/// `V_(j)^{k-i} >= V_(i)^{k-j} V_(k)^{j-i}` for `0 <= i < j < k <= m`, where
/// `V_(p) = V(K_1 [p], K_0 [m-p], trailing)` and `m = n + 1 - trailing.len()`.
pub fn generalized_chain(
    k0: &CapFunction,
    k1: &CapFunction,
    trailing: &[&CapFunction],
    (i, j, k): (usize, usize, usize),
    route: MixedRoute,
    tolerance: f64,
) -> Result<InequalityReport> {
    let n = k0.n();
    if trailing.len() > n + 1 {
        return Err(CoreError::InvalidArgument("too many trailing bodies".into()));
    }
    let m = n + 1 - trailing.len();
    if !(i < j && j < k && k <= m) {
        return Err(CoreError::InvalidArgument(alloc::format!("chain needs i < j < k <= {m}")));
    }
    let v = |p: usize| {
        let mut args: Vec<&CapFunction> = Vec::with_capacity(n + 1);
        args.extend(core::iter::repeat(k1).take(p));
        args.extend(core::iter::repeat(k0).take(m - p));
        args.extend_from_slice(trailing);
        mixed_volume_value(&args, route)
    };
    let (vi, vj, vk) = (v(i)?, v(j)?, v(k)?);
    let lhs = fmath::powi(vj, (k - i) as i32);
    let rhs = fmath::powi(vi, (k - j) as i32) * fmath::powi(vk, (j - i) as i32);
    Ok(InequalityReport::inequality("generalized-chain", lhs, rhs, tolerance))
}

/// The operator `A f = f_2 Q(tau[f], tau_2, ..) / Q(tau_2, tau_2, ..)` and the
/// weighted product with `domega = Q(tau_2, tau_2, ..) / ((n+1) f_2) F dmu_g`.
pub struct OperatorA<'a> {
    f2: &'a CapFunction,
    rest: Vec<&'a CapFunction>,
    f2_values: Vec<f64>,
    denominators: Vec<f64>,
    /// Quadrature weight times the density of `domega` against `dsigma`.
    omega: Vec<f64>,
}

impl<'a> OperatorA<'a> {
    pub fn new(f2: &'a CapFunction, rest: &[&'a CapFunction]) -> Result<Self> {
        let mut all = alloc::vec![f2];
        all.extend_from_slice(rest);
        let mesh = shared_mesh(&all)?;
        let n = mesh.n();
        if rest.len() + 2 != n {
            return Err(CoreError::DimensionMismatch { expected: n.saturating_sub(2), found: rest.len() });
        }
        let mut f2_values = Vec::with_capacity(mesh.len());
        let mut denominators = Vec::with_capacity(mesh.len());
        let mut omega = Vec::with_capacity(mesh.len());
        for i in 0..mesh.len() {
            let node = mesh.node(i);
            let v = f2.capillary_support(i);
            let mut mats = alloc::vec![f2.tau(i).clone(), f2.tau(i).clone()];
            mats.extend(rest.iter().map(|r| r.tau(i).clone()));
            let den = mixdisc::mixed_discriminant(&mats)?;
            if node.weight > 0.0 && !(den > 0.0 && v > 0.0) {
                return Err(CoreError::NotPositiveDefinite { what: "operator denominator", node: Some(i), min_eigenvalue: den.min(v) });
            }
            omega.push(node.weight * den / ((n + 1) as f64 * v) * node.f * node.det_a);
            f2_values.push(v);
            denominators.push(den);
        }
        Ok(Self { f2, rest: rest.to_vec(), f2_values, denominators, omega })
    }

    /// Node values `s_hat` of `f`.
    pub fn values(f: &CapFunction) -> Vec<f64> {
        (0..f.mesh().len()).map(|i| f.capillary_support(i)).collect()
    }

    pub fn apply(&self, f: &CapFunction) -> Result<Vec<f64>> {
        shared_mesh(&[self.f2, f])?;
        (0..self.f2_values.len())
            .map(|i| {
                let mut mats = alloc::vec![f.tau(i).clone(), self.f2.tau(i).clone()];
                mats.extend(self.rest.iter().map(|r| r.tau(i).clone()));
                Ok(self.f2_values[i] * mixdisc::mixed_discriminant(&mats)? / self.denominators[i])
            })
            .collect()
    }

    /// `∫ a b domega`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let terms: Vec<f64> = self.omega.iter().zip(a).zip(b).map(|((w, x), y)| if *w == 0.0 { 0.0 } else { w * x * y }).collect();
        linalg::pairwise_sum(&terms)
    }

    /// `|<f, A g> - <A f, g>|` relative to the larger of the two.
    pub fn self_adjointness(&self, f: &CapFunction, g: &CapFunction) -> Result<f64> {
        let (fv, gv) = (Self::values(f), Self::values(g));
        let a = self.inner(&fv, &self.apply(g)?);
        let b = self.inner(&self.apply(f)?, &gv);
        Ok((a - b).abs() / a.abs().max(b.abs()).max(SCALE_FLOOR))
    }

    /// `<A g, A g> >= <g, A g>`.
    pub fn energy(&self, g: &CapFunction, tolerance: f64) -> Result<InequalityReport> {
        let ag = self.apply(g)?;
        let lhs = self.inner(&ag, &ag);
        let rhs = self.inner(&Self::values(g), &ag);
        Ok(InequalityReport::inequality("operator-energy", lhs, rhs, tolerance))
    }

    /// Largest `|A f - f| / max|f|` over nodes.
    pub fn fixed_point_deviation(&self, f: &CapFunction) -> Result<f64> {
        let af = self.apply(f)?;
        let fv = Self::values(f);
        let scale = fv.iter().fold(SCALE_FLOOR, |m, v| m.max(v.abs()));
        Ok(af.iter().zip(&fv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale)
    }
}

/// Pointwise gap between `Q(tau_1..tau_n) det A_F` and `Q(W_1..W_n)`, relative.
pub fn integrand_identity_gap(fs: &[&CapFunction]) -> Result<f64> {
    let mesh = shared_mesh(fs)?;
    let mut worst: f64 = 0.0;
    for i in 0..mesh.len() {
        if mesh.node(i).tag == NodeTag::Boundary && mesh.node(i).weight == 0.0 {
            continue;
        }
        let taus: Vec<Matrix> = fs.iter().map(|f| f.tau(i).clone()).collect();
        let radii: Vec<Matrix> = fs.iter().map(|f| f.node(i).radii.clone()).collect();
        let a = mixdisc::mixed_discriminant(&taus)? * mesh.node(i).det_a;
        let b = mixdisc::mixed_discriminant(&radii)?;
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(SCALE_FLOOR));
    }
    Ok(worst)
}
