//! Minkowski norms `F` on `R^{n+1}` and the objects derived from them: the
//! Cahn-Hoffman map, the anisotropy matrix `A_F`, the dual norm, the metric
//! `G = Hess(F0^2 / 2)` and its third derivative `Q`.
//!
//! Three families are supported: the Euclidean norm, ellipsoidal norms
//! `sqrt(x^T M x)`, and either of those plus a finite sum of zonal terms
//! `a |x| phi(<x/|x|, c>)`. All derivatives up to third order are analytic.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::linalg::{self, Matrix, Vector};
use crate::sphere;

/// Tolerance on the relative gradient residual of the dual-norm solve.
pub const DUAL_TOLERANCE: f64 = 1e-10;

/// Profile of a zonal term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    /// Compactly supported `(1 - rho^2)^6` with `rho = (1 - t) / width`.
    Bump,
    /// Degree-two Legendre polynomial `(3 t^2 - 1) / 2`; `width` is ignored.
    Zonal,
}

/// A 1-homogeneous zonal term `a |x| phi(<x/|x|, c>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalTerm {
    pub kind: TermKind,
    pub center: Vector,
    pub width: f64,
    pub amplitude: f64,
}

struct Frame {
    r: f64,
    u: Vector,
    t: f64,
    p: Vector,
    proj: Matrix,
}

impl ZonalTerm {
    pub fn new(kind: TermKind, center: Vector, width: f64, amplitude: f64) -> Result<Self> {
        let norm = center.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(CoreError::InvalidArgument("zonal term center must be nonzero".into()));
        }
        if kind == TermKind::Bump && !(width > 0.0 && width <= 2.0) {
            return Err(CoreError::InvalidArgument(alloc::format!("bump width must lie in (0, 2], got {width}")));
        }
        if !amplitude.is_finite() {
            return Err(CoreError::InvalidArgument("zonal term amplitude must be finite".into()));
        }
        Ok(Self { kind, center: center / norm, width, amplitude })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Smallest `<x, c>` (unit `x`) at which a bump is nonzero.
    pub fn support_threshold(&self) -> Option<f64> {
        match self.kind {
            TermKind::Bump => Some(1.0 - self.width),
            TermKind::Zonal => None,
        }
    }

    /// `phi` and its first three derivatives at `t`.
    fn profile(&self, t: f64) -> [f64; 4] {
        match self.kind {
            TermKind::Zonal => [0.5 * (3.0 * t * t - 1.0), 3.0 * t, 3.0, 0.0],
            TermKind::Bump => {
                let w = self.width;
                let rho = (1.0 - t) / w;
                if rho >= 1.0 {
                    return [0.0; 4];
                }
                let q = 1.0 - rho * rho;
                let q1 = 2.0 * rho / w;
                let q2 = -2.0 / (w * w);
                let (q3, q4, q5) = (q * q * q, q * q * q * q, q * q * q * q * q);
                [q5 * q, 6.0 * q5 * q1, 30.0 * q4 * q1 * q1 + 6.0 * q5 * q2, 120.0 * q3 * q1 * q1 * q1 + 90.0 * q4 * q1 * q2]
            }
        }
    }

    fn frame(&self, x: &Vector) -> Frame {
        let r = x.norm();
        let u = x / r;
        let t = u.dot(&self.center);
        let p = &self.center - &u * t;
        let d = x.len();
        let proj = Matrix::identity(d, d) - &u * u.transpose();
        Frame { r, u, t, p, proj }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let r = x.norm();
        let t = x.dot(&self.center) / r;
        self.amplitude * r * self.profile(t)[0]
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        let f = self.frame(x);
        let [ph, ph1, _, _] = self.profile(f.t);
        (&f.u * (ph - f.t * ph1) + &self.center * ph1) * self.amplitude
    }

    pub fn hessian(&self, x: &Vector) -> Matrix {
        let f = self.frame(x);
        let [ph, ph1, ph2, _] = self.profile(f.t);
        (&f.p * f.p.transpose() * ph2 + &f.proj * (ph - f.t * ph1)) * (self.amplitude / f.r)
    }

    /// Third derivatives: entry `k` is the matrix `d/dx_k Hess`.
    pub fn third(&self, x: &Vector) -> Vec<Matrix> {
        let f = self.frame(x);
        let [ph, ph1, ph2, ph3] = self.profile(f.t);
        let d = x.len();
        let ppt = &f.p * f.p.transpose();
        let m0 = &ppt * ph2 + &f.proj * (ph - f.t * ph1);
        (0..d)
            .map(|k| {
                let ph_k = f.p[k];
                let uh = f.u[k];
                let proj_h: Vector = f.proj.column(k).into_owned();
                let dp = -(&f.u * ph_k + &proj_h * f.t) / f.r;
                let dproj = -(&proj_h * f.u.transpose() + &f.u * proj_h.transpose()) / f.r;
                let inner = &ppt * (ph3 * ph_k / f.r) + (&dp * f.p.transpose() + &f.p * dp.transpose()) * ph2
                    - &f.proj * (f.t * ph2 * ph_k / f.r)
                    + dproj * (ph - f.t * ph1);
                (&m0 * (-uh / (f.r * f.r)) + inner / f.r) * self.amplitude
            })
            .collect()
    }
}

/// Quadratic part of a norm model.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseNorm {
    Isotropic,
    Ellipsoid { m: Matrix, m_inv: Matrix },
}

/// Value, gradient and Hessian of `F` at one point.
#[derive(Debug, Clone)]
pub struct NormJet {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
}

/// Summary of a norm validation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormDiagnostics {
    pub min_eigenvalue: f64,
    pub max_condition: f64,
    pub samples: usize,
}

/// A Minkowski norm on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormModel {
    dim: usize,
    base: BaseNorm,
    terms: Vec<ZonalTerm>,
    fd_step: f64,
}

impl NormModel {
    /// Euclidean norm on `R^{n+1}`.
    pub fn isotropic(n: usize) -> Self {
        Self { dim: n + 1, base: BaseNorm::Isotropic, terms: Vec::new(), fd_step: 1e-4 }
    }

    /// `F(x) = sqrt(x^T M x)` for symmetric positive definite `M`.
    pub fn ellipsoid(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(CoreError::InvalidModel(alloc::format!(
                "ellipsoid matrix must be square of size >= 2, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if (&m - m.transpose()).amax() > 1e-12 * m.amax() {
            return Err(CoreError::InvalidModel("ellipsoid matrix is not symmetric".into()));
        }
        let min = linalg::min_eigenvalue(&m);
        if !(min > 0.0) {
            return Err(CoreError::NotPositiveDefinite { what: "ellipsoid matrix", node: None, min_eigenvalue: min });
        }
        let m = linalg::symmetrize(&m);
        let m_inv = m.clone().try_inverse().ok_or(CoreError::Degenerate("ellipsoid matrix is singular"))?;
        Ok(Self { dim: m.nrows(), base: BaseNorm::Ellipsoid { m, m_inv }, terms: Vec::new(), fd_step: 1e-4 })
    }

    /// Adds zonal terms and validates the result on a fine direction set.
    pub fn with_terms(mut self, terms: Vec<ZonalTerm>) -> Result<Self> {
        for t in &terms {
            if t.dim() != self.dim {
                return Err(CoreError::DimensionMismatch { expected: self.dim, found: t.dim() });
            }
        }
        self.terms.extend(terms);
        self.validate()?;
        Ok(self)
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.dim - 1
    }

    pub fn base(&self) -> &BaseNorm {
        &self.base
    }

    pub fn terms(&self) -> &[ZonalTerm] {
        &self.terms
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// True when `F^2` is a quadratic form, so `G` is constant and `Q` vanishes.
    pub fn is_quadratic(&self) -> bool {
        self.terms.is_empty()
    }

    fn quad(&self) -> Option<&Matrix> {
        match &self.base {
            BaseNorm::Isotropic => None,
            BaseNorm::Ellipsoid { m, .. } => Some(m),
        }
    }

    fn base_value(&self, x: &Vector) -> f64 {
        match self.quad() {
            None => x.norm(),
            Some(m) => fmath::sqrt(x.dot(&(m * x))),
        }
    }

    fn base_mx(&self, x: &Vector) -> Vector {
        match self.quad() {
            None => x.clone(),
            Some(m) => m * x,
        }
    }

    fn base_matrix(&self) -> Matrix {
        match self.quad() {
            None => Matrix::identity(self.dim, self.dim),
            Some(m) => m.clone(),
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let mut v = self.base_value(x);
        for t in &self.terms {
            v += t.value(x);
        }
        v
    }

    /// `DF(x)`; on the unit sphere this is the Cahn-Hoffman map.
    pub fn gradient(&self, x: &Vector) -> Vector {
        let mut g = self.base_mx(x) / self.base_value(x);
        for t in &self.terms {
            g += t.gradient(x);
        }
        g
    }

    pub fn hessian(&self, x: &Vector) -> Matrix {
        let f = self.base_value(x);
        let m = self.base_mx(x) / f;
        let mut h = (self.base_matrix() - &m * m.transpose()) / f;
        for t in &self.terms {
            h += t.hessian(x);
        }
        h
    }

    /// Third derivatives of `F`: entry `k` is `d/dx_k D^2F`.
    pub fn third(&self, x: &Vector) -> Vec<Matrix> {
        let f = self.base_value(x);
        let mm = self.base_matrix();
        let m = self.base_mx(x) / f;
        let core = &mm - &m * m.transpose();
        let mut out: Vec<Matrix> = (0..self.dim)
            .map(|k| {
                let mh: Vector = mm.column(k).into_owned();
                let dm = (mh - &m * m[k]) / f;
                &core * (-m[k] / (f * f)) - (&dm * m.transpose() + &m * dm.transpose()) / f
            })
            .collect();
        for t in &self.terms {
            for (o, d) in out.iter_mut().zip(t.third(x)) {
                *o += d;
            }
        }
        out
    }

    pub fn jet(&self, x: &Vector) -> NormJet {
        NormJet { value: self.value(x), gradient: self.gradient(x), hessian: self.hessian(x) }
    }

    /// Cahn-Hoffman map `Psi(x) = DF(x)`, mapping the sphere onto the Wulff shape.
    pub fn psi(&self, x: &Vector) -> Vector {
        self.gradient(x)
    }

    /// `A_F` at the direction of `x`, in the tangent basis `basis` of `x^perp`.
    pub fn anisotropy_in_basis(&self, x: &Vector, basis: &Matrix) -> Matrix {
        let u = linalg::normalize(x);
        linalg::symmetrize(&(basis.transpose() * self.hessian(&u) * basis))
    }

    /// `A_F` at the direction of `x`, in [`linalg::tangent_basis`].
    pub fn anisotropy_matrix(&self, x: &Vector) -> Matrix {
        self.anisotropy_in_basis(x, &linalg::tangent_basis(x))
    }

    /// `A_F` with a positivity check; `node` is attached to the error.
    pub fn checked_anisotropy(&self, x: &Vector, basis: &Matrix, node: Option<usize>) -> Result<Matrix> {
        let a = self.anisotropy_in_basis(x, basis);
        let min = linalg::min_eigenvalue(&a);
        if !(min > 0.0) {
            return Err(CoreError::NotPositiveDefinite { what: "A_F", node, min_eigenvalue: min });
        }
        Ok(a)
    }

    /// Spectral condition number of `A_F` at the direction of `x`.
    pub fn condition_number(&self, x: &Vector) -> f64 {
        let ev = linalg::sym_eigenvalues(&self.anisotropy_matrix(x));
        ev[ev.len() - 1] / ev[0]
    }

    /// `G(Psi(x)) = [D^2(F^2/2)(x)]^{-1}`, using that `F^2/2` and `F0^2/2` are
    /// Legendre conjugates and that `G` is 0-homogeneous.
    pub fn metric_at_normal(&self, x: &Vector) -> Matrix {
        let u = linalg::normalize(x);
        let jet = self.jet(&u);
        let h = &jet.gradient * jet.gradient.transpose() + &jet.hessian * jet.value;
        linalg::symmetrize(&h).try_inverse().unwrap_or_else(|| Matrix::from_element(self.dim, self.dim, f64::NAN))
    }

    /// `G(xi) = Hess(F0^2/2)(xi)` for nonzero `xi`.
    pub fn metric_g(&self, xi: &Vector) -> Result<Matrix> {
        self.check_dim(xi)?;
        if self.is_quadratic() {
            return Ok(match &self.base {
                BaseNorm::Isotropic => Matrix::identity(self.dim, self.dim),
                BaseNorm::Ellipsoid { m_inv, .. } => m_inv.clone(),
            });
        }
        let x = self.dual_maximizer(xi)?;
        Ok(self.metric_at_normal(&x))
    }

    /// `Q(Psi(x))` as `dim` slices: entry `k` is the matrix `Q(., ., E_k)`.
    pub fn q_at_normal(&self, x: &Vector) -> Vec<Matrix> {
        if self.is_quadratic() {
            return (0..self.dim).map(|_| Matrix::zeros(self.dim, self.dim)).collect();
        }
        self.q_at_normal_by_duality(x)
    }

    /// `Q(Psi(x))(u, v, w) = -F(x) T(Gu, Gv, Gw)` with `T = D^3(F^2/2)(x)` at unit `x`.
    ///
    /// This does not special-case quadratic norms; for them it returns rounding noise.
    pub fn q_at_normal_by_duality(&self, x: &Vector) -> Vec<Matrix> {
        let d = self.dim;
        let u = linalg::normalize(x);
        let jet = self.jet(&u);
        let third = self.third(&u);
        let (f, g, h) = (jet.value, &jet.gradient, &jet.hessian);
        let mut t = alloc::vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    t[(i * d + j) * d + k] = g[i] * h[(j, k)] + g[j] * h[(i, k)] + g[k] * h[(i, j)] + f * third[k][(i, j)];
                }
            }
        }
        let gm = self.metric_at_normal(&u);
        // contract one index at a time with G
        let mut a = alloc::vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                for c in 0..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += t[(i * d + j) * d + k] * gm[(k, c)];
                    }
                    a[(i * d + j) * d + c] = s;
                }
            }
        }
        let mut b = alloc::vec![0.0; d * d * d];
        for i in 0..d {
            for bb in 0..d {
                for c in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += a[(i * d + j) * d + c] * gm[(j, bb)];
                    }
                    b[(i * d + bb) * d + c] = s;
                }
            }
        }
        (0..d)
            .map(|c| {
                Matrix::from_fn(d, d, |aa, bb| {
                    let mut s = 0.0;
                    for i in 0..d {
                        s += b[(i * d + bb) * d + c] * gm[(i, aa)];
                    }
                    -f * s
                })
            })
            .collect()
    }

    /// `Q(xi)` for nonzero `xi`, as slices like [`NormModel::q_at_normal`].
    pub fn q_tensor(&self, xi: &Vector) -> Result<Vec<Matrix>> {
        self.check_dim(xi)?;
        if self.is_quadratic() {
            return Ok(self.q_at_normal(xi));
        }
        let x = self.dual_maximizer(xi)?;
        let f0 = x.dot(xi) / self.value(&x);
        // Q is (-1)-homogeneous and Psi(x) = xi / F0(xi)
        Ok(self.q_at_normal(&x).into_iter().map(|m| m / f0).collect())
    }

    /// `F0(xi) = sup <x, xi> / F(x)`.
    pub fn dual_norm(&self, xi: &Vector) -> Result<f64> {
        self.check_dim(xi)?;
        if self.is_quadratic() {
            return Ok(match &self.base {
                BaseNorm::Isotropic => xi.norm(),
                BaseNorm::Ellipsoid { m_inv, .. } => fmath::sqrt(xi.dot(&(m_inv * xi))),
            });
        }
        let x = self.dual_maximizer(xi)?;
        Ok(x.dot(xi) / self.value(&x))
    }

    /// Unit maximiser of `<x, xi> / F(x)`, i.e. the normal of the Wulff shape at
    /// `xi / F0(xi)`.
    pub fn dual_maximizer(&self, xi: &Vector) -> Result<Vector> {
        self.check_dim(xi)?;
        let xn = xi.norm();
        if !(xn > 0.0) {
            return Err(CoreError::Degenerate("dual norm of the zero vector"));
        }
        if self.is_quadratic() {
            return Ok(match &self.base {
                BaseNorm::Isotropic => xi / xn,
                BaseNorm::Ellipsoid { m_inv, .. } => linalg::normalize(&(m_inv * xi)),
            });
        }
        let ratio = |x: &Vector| x.dot(xi) / self.value(x);
        let mut x = sphere::spread_directions(self.dim, 20)
            .into_iter()
            .fold((f64::NEG_INFINITY, Vector::zeros(self.dim)), |best, d| {
                let r = ratio(&d);
                if r > best.0 {
                    (r, d)
                } else {
                    best
                }
            })
            .1;
        let mut g = ratio(&x);
        let mut residual = f64::INFINITY;
        for _ in 0..100 {
            let jet = self.jet(&x);
            g = x.dot(xi) / jet.value;
            let rho = xi - &jet.gradient * g;
            residual = rho.norm() / xn;
            if residual < DUAL_TOLERANCE {
                return Ok(x);
            }
            let basis = linalg::tangent_basis(&x);
            let a = basis.transpose() * &jet.hessian * &basis;
            let rt = basis.transpose() * &rho;
            let Some(delta) = a.lu().solve(&rt) else { break };
            let step = basis * (delta / g);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial = linalg::normalize(&(&x + &step * lambda));
                if ratio(&trial) >= g - 1e-15 * g.abs() {
                    x = trial;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Err(CoreError::DualNormNotConverged { best: g, residual })
    }

    /// Checks `F > 0` and `A_F > 0` on a fine direction set.
    pub fn validate(&self) -> Result<NormDiagnostics> {
        let dirs = sphere::validation_directions(self.dim);
        let mut min_eig = f64::INFINITY;
        let mut max_cond: f64 = 1.0;
        for (i, x) in dirs.iter().enumerate() {
            let f = self.value(x);
            if !(f > 0.0) {
                return Err(CoreError::InvalidModel(alloc::format!("F is not positive at validation direction {i} (F = {f:e})")));
            }
            let ev = linalg::sym_eigenvalues(&self.anisotropy_matrix(x));
            if !(ev[0] > 0.0) {
                return Err(CoreError::NotPositiveDefinite { what: "A_F", node: Some(i), min_eigenvalue: ev[0] });
            }
            min_eig = min_eig.min(ev[0]);
            max_cond = max_cond.max(ev[ev.len() - 1] / ev[0]);
        }
        Ok(NormDiagnostics { min_eigenvalue: min_eig, max_condition: max_cond, samples: dirs.len() })
    }

    /// Central-difference Hessian of `F` from analytic gradients, step `h`.
    pub fn fd_hessian(&self, x: &Vector, h: f64) -> Matrix {
        let d = self.dim;
        let mut out = Matrix::zeros(d, d);
        for j in 0..d {
            let e = linalg::unit(d, j) * h;
            let col = (self.gradient(&(x + &e)) - self.gradient(&(x - &e))) / (2.0 * h);
            out.set_column(j, &col);
        }
        linalg::symmetrize(&out)
    }

    /// Largest entrywise gap between the analytic Hessian and its
    /// Richardson-extrapolated central difference at step `fd_step`.
    pub fn hessian_crosscheck(&self, x: &Vector) -> f64 {
        let h = self.fd_step;
        let coarse = self.fd_hessian(x, h);
        let fine = self.fd_hessian(x, 0.5 * h);
        let rich = (fine * 4.0 - coarse) / 3.0;
        (rich - self.hessian(x)).amax()
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim {
            return Err(CoreError::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        Ok(())
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        let base = match self.base {
            BaseNorm::Isotropic => "isotropic",
            BaseNorm::Ellipsoid { .. } => "ellipsoid",
        };
        if self.terms.is_empty() {
            alloc::format!("{base} (dim {})", self.dim)
        } else {
            alloc::format!("{base} + {} zonal terms (dim {})", self.terms.len(), self.dim)
        }
    }
}
