//! Intrinsic finite differences on `C` in a gnomonic chart about a node.
//!
//! The chart sends `a in R^n` to the direction `x(a) = (x0 + T a) / |x0 + T a|`
//! and on to `xi(x(a))`. The induced metric is `g_kl = G(Psi(x))(d_k xi, d_l xi)`;
//! Christoffel symbols and covariant derivatives come from central differences
//! with a step tied to the mesh spacing, so truncation errors shrink
//! quadratically under refinement.

use alloc::vec::Vec;

use crate::body::SupportField;
use crate::capgeom::CapMesh;
use crate::error::{CoreError, Result};
use crate::fmath;
use crate::linalg::{self, Matrix, Vector};
use crate::mixdisc;

/// Gnomonic chart about a unit direction.
pub struct Chart<'a> {
    mesh: &'a CapMesh,
    x0: Vector,
    basis: Matrix,
    step: f64,
}

impl<'a> Chart<'a> {
    /// Chart about node `i` of `mesh`, in that node's tangent basis.
    pub fn at_node(mesh: &'a CapMesh, i: usize, step: f64) -> Self {
        let node = mesh.node(i);
        Self { mesh, x0: node.x.clone(), basis: node.basis.clone(), step }
    }

    fn n(&self) -> usize {
        self.basis.ncols()
    }

    fn shifted(&self, a: &[f64], k: usize, h: f64) -> Vec<f64> {
        let mut b = a.to_vec();
        b[k] += h;
        b
    }

    pub fn point(&self, a: &[f64]) -> Vector {
        let mut y = self.x0.clone();
        for (k, ak) in a.iter().enumerate() {
            y += self.basis.column(k) * *ak;
        }
        linalg::normalize(&y)
    }

    /// `d x / d a_k`, as columns.
    pub fn direction_jacobian(&self, a: &[f64]) -> Matrix {
        let mut y = self.x0.clone();
        for (k, ak) in a.iter().enumerate() {
            y += self.basis.column(k) * *ak;
        }
        let r = y.norm();
        let u = &y / r;
        let d = y.len();
        let proj = Matrix::identity(d, d) - &u * u.transpose();
        proj * &self.basis / r
    }

    /// `d xi / d a_k = D^2F(x) d x / d a_k`, as columns.
    pub fn tangent_vectors(&self, a: &[f64]) -> Matrix {
        let x = self.point(a);
        self.mesh.config().norm().hessian(&x) * self.direction_jacobian(a)
    }

    /// Induced metric `g_kl(a)`.
    pub fn metric(&self, a: &[f64]) -> Matrix {
        let x = self.point(a);
        let t = self.tangent_vectors(a);
        let g = self.mesh.config().norm().metric_at_normal(&x);
        linalg::symmetrize(&(t.transpose() * g * &t))
    }

    /// `Gamma^m_{kl}` at `a`, returned as `out[m][(k, l)]`.
    pub fn christoffel(&self, a: &[f64]) -> Vec<Matrix> {
        let n = self.n();
        let h = self.step;
        let dg: Vec<Matrix> =
            (0..n).map(|k| (self.metric(&self.shifted(a, k, h)) - self.metric(&self.shifted(a, k, -h))) / (2.0 * h)).collect();
        let ginv = self.metric(a).try_inverse().unwrap_or_else(|| Matrix::from_element(n, n, f64::NAN));
        let lowered = |p: usize, k: usize, l: usize| 0.5 * (dg[k][(l, p)] + dg[l][(k, p)] - dg[p][(k, l)]);
        (0..n).map(|m| Matrix::from_fn(n, n, |k, l| (0..n).map(|p| ginv[(m, p)] * lowered(p, k, l)).sum())).collect()
    }

    /// Coordinate gradient and Hessian of `f o x` at the origin.
    pub fn coordinate_derivatives(&self, f: &dyn Fn(&Vector) -> f64) -> (Vector, Matrix) {
        let n = self.n();
        let h = self.step;
        let zero = alloc::vec![0.0; n];
        let at = |a: &[f64]| f(&self.point(a));
        let f0 = at(&zero);
        let mut grad = Vector::zeros(n);
        let mut hess = Matrix::zeros(n, n);
        for k in 0..n {
            let p = at(&self.shifted(&zero, k, h));
            let m = at(&self.shifted(&zero, k, -h));
            grad[k] = (p - m) / (2.0 * h);
            hess[(k, k)] = (p - 2.0 * f0 + m) / (h * h);
            for l in 0..k {
                let pp = at(&self.shifted(&self.shifted(&zero, k, h), l, h));
                let pm = at(&self.shifted(&self.shifted(&zero, k, h), l, -h));
                let mp = at(&self.shifted(&self.shifted(&zero, k, -h), l, h));
                let mm = at(&self.shifted(&self.shifted(&zero, k, -h), l, -h));
                let v = (pp - pm - mp + mm) / (4.0 * h * h);
                hess[(k, l)] = v;
                hess[(l, k)] = v;
            }
        }
        (grad, hess)
    }

    /// `Q(Psi(x0))(d_k xi, d_l xi, d_m xi)` at the origin, as `out[m][(k, l)]`.
    pub fn q_coordinates(&self) -> Vec<Matrix> {
        let n = self.n();
        let zero = alloc::vec![0.0; n];
        let t = self.tangent_vectors(&zero);
        let q = self.mesh.config().norm().q_at_normal(&self.x0);
        // contract the third slot first: sum_c Q(., ., E_c) t[c][m]
        (0..n)
            .map(|m| {
                let d = t.nrows();
                let mut slice = Matrix::zeros(d, d);
                for c in 0..d {
                    slice += &q[c] * t[(c, m)];
                }
                t.transpose() * slice * &t
            })
            .collect()
    }

    /// Change of basis from chart coordinates to the node's `G`-orthonormal
    /// frame: `e_i = sum_k B_ki d_k xi`.
    pub fn frame_coordinates(&self, i: usize) -> Matrix {
        let node = self.mesh.node(i);
        let c = node.basis.transpose() * &node.frame;
        node.a_f.clone().try_inverse().map(|ai| ai * c).unwrap_or_else(|| Matrix::from_element(self.n(), self.n(), f64::NAN))
    }
}

/// `tau[f] = Hess f + f g - Q(., ., grad f) / 2` at node `i`, in the node's frame,
/// for `f` given as a function of the direction `x`. Every derivative is taken
/// intrinsically in a chart; stencils at `step` and `step / 2` are combined by
/// Richardson extrapolation.
pub fn tau_intrinsic(mesh: &CapMesh, i: usize, f: &dyn Fn(&Vector) -> f64, step: f64) -> Matrix {
    (tau_at_step(mesh, i, f, 0.5 * step) * 4.0 - tau_at_step(mesh, i, f, step)) / 3.0
}

/// [`tau_intrinsic`] from a single stencil, with error `O(step^2)`.
pub fn tau_at_step(mesh: &CapMesh, i: usize, f: &dyn Fn(&Vector) -> f64, step: f64) -> Matrix {
    let chart = Chart::at_node(mesh, i, step);
    let n = mesh.n();
    let zero = alloc::vec![0.0; n];
    let (grad, hess) = chart.coordinate_derivatives(f);
    let gamma = chart.christoffel(&zero);
    let g = chart.metric(&zero);
    let ginv = g.clone().try_inverse().unwrap_or_else(|| Matrix::from_element(n, n, f64::NAN));
    let up = &ginv * &grad;
    let q = chart.q_coordinates();
    let f0 = f(&mesh.node(i).x);
    let mut tau = Matrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let mut cov = hess[(k, l)];
            let mut qterm = 0.0;
            for m in 0..n {
                cov -= gamma[m][(k, l)] * grad[m];
                qterm += q[m][(k, l)] * up[m];
            }
            tau[(k, l)] = cov + g[(k, l)] * f0 - 0.5 * qterm;
        }
    }
    let b = chart.frame_coordinates(i);
    linalg::symmetrize(&(b.transpose() * tau * b))
}

/// Kernel function `f_alpha(xi) = G(T^{-1} xi)(T^{-1} xi, E_alpha)` as a
/// function of the direction `x`.
pub fn kernel_function(mesh: &CapMesh, alpha: usize) -> impl Fn(&Vector) -> f64 + '_ {
    move |x: &Vector| {
        let norm = mesh.config().norm();
        let psi = norm.psi(x);
        (norm.metric_at_normal(x) * psi)[alpha]
    }
}

/// `tau` of a support field in chart coordinates at `a`:
/// `tau_kl = G(Psi)(D_k X, d_l xi)` with `D_k X = D^2 s d_k x`.
fn tau_support_coordinates(chart: &Chart, s: &SupportField, a: &[f64]) -> Matrix {
    let norm = chart.mesh.config().norm();
    let x = chart.point(a);
    let jac = chart.direction_jacobian(a);
    let dx = s.hessian(norm, &x) * &jac;
    let t = norm.hessian(&x) * &jac;
    let g = norm.metric_at_normal(&x);
    linalg::symmetrize(&(dx.transpose() * g * t))
}

/// Contravariant `Q^{kl} = dQ / d(tau_1)_{kl}` at `a`, with `tau_2..tau_n` from
/// `others`.
fn q_gradient_coordinates(chart: &Chart, others: &[&SupportField], a: &[f64]) -> Result<Matrix> {
    let n = chart.n();
    let g = chart.metric(a);
    let l = linalg::cholesky(&g).ok_or(CoreError::Degenerate("chart metric is not positive definite"))?;
    let b = l.transpose().try_inverse().ok_or(CoreError::Degenerate("chart metric is singular"))?;
    let mut mats = alloc::vec![Matrix::zeros(n, n)];
    for s in others {
        let t = tau_support_coordinates(chart, s, a);
        mats.push(b.transpose() * t * &b);
    }
    let grad = mixdisc::mixed_discriminant_gradient(&mats)?;
    Ok(&b * grad * b.transpose())
}

/// Result of [`divergence_identity`] at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceResidual {
    pub residual: f64,
    pub scale: f64,
}

/// Residual of
/// `div(Q^{ij}) grad_i f1 - Q^{ij} grad_i f1 tr Q_j / 2 + Q^{ij} Q_{ijk} grad^k f1 / 2`
/// at node `i`, where `Q^{ij}` is built from `others` (`n - 1` support fields)
/// and `f1 = s1 / F`. It vanishes identically in the continuum. Stencils at
/// `step` and `step / 2` are combined by Richardson extrapolation.
pub fn divergence_identity(mesh: &CapMesh, i: usize, f1: &SupportField, others: &[&SupportField], step: f64) -> Result<DivergenceResidual> {
    let coarse = divergence_at_step(mesh, i, f1, others, step)?;
    let fine = divergence_at_step(mesh, i, f1, others, 0.5 * step)?;
    Ok(DivergenceResidual { residual: (4.0 * fine.residual - coarse.residual) / 3.0, scale: fine.scale })
}

/// [`divergence_identity`] from a single stencil, with error `O(step^2)`.
pub fn divergence_at_step(mesh: &CapMesh, i: usize, f1: &SupportField, others: &[&SupportField], step: f64) -> Result<DivergenceResidual> {
    let n = mesh.n();
    if others.len() + 1 != n {
        return Err(CoreError::InvalidArgument(alloc::format!(
            "divergence identity needs {} fields after f1, got {}",
            n - 1,
            others.len()
        )));
    }
    let chart = Chart::at_node(mesh, i, step);
    let zero = alloc::vec![0.0; n];
    let qg = q_gradient_coordinates(&chart, others, &zero)?;
    let mut div = Vector::zeros(n);
    for l in 0..n {
        let p = q_gradient_coordinates(&chart, others, &chart.shifted(&zero, l, step))?;
        let m = q_gradient_coordinates(&chart, others, &chart.shifted(&zero, l, -step))?;
        let d = (p - m) / (2.0 * step);
        for k in 0..n {
            div[k] += d[(k, l)];
        }
    }
    let gamma = chart.christoffel(&zero);
    for k in 0..n {
        for l in 0..n {
            for m in 0..n {
                div[k] += gamma[k][(l, m)] * qg[(m, l)] + gamma[l][(l, m)] * qg[(k, m)];
            }
        }
    }
    let g = chart.metric(&zero);
    let ginv = g.try_inverse().ok_or(CoreError::Degenerate("chart metric is singular"))?;
    let q = chart.q_coordinates();
    // trace of Q over its last two slots: tr_j = Q_{jkl} g^{kl}
    let mut tr = Vector::zeros(n);
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                tr[j] += q[l][(j, k)] * ginv[(k, l)];
            }
        }
    }
    // w_m = Q^{jk} Q_{jkm}
    let mut w = Vector::zeros(n);
    for m in 0..n {
        w[m] = qg.component_mul(&q[m]).sum();
    }
    let resid_vec = div - (&qg * tr) * 0.5 + (&ginv * w) * 0.5;
    let norm = mesh.config().norm();
    let f = |x: &Vector| f1.value(norm, x) / norm.value(x);
    let (grad, _) = chart.coordinate_derivatives(&f);
    let grad_norm = fmath::sqrt((grad.transpose() * &ginv * &grad)[(0, 0)].max(0.0));
    let scale = linalg::max_abs(&qg).max(1e-30) * grad_norm.max(1e-30);
    Ok(DivergenceResidual { residual: resid_vec.dot(&grad), scale })
}
