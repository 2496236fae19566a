//! The capillary cap: the parameter region `S` on the sphere, the translated
//! Wulff cap `C = T(W ∩ {x_{n+1} >= -omega0})`, and quadrature meshes on `S`
//! carrying per-node geometry.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::linalg::{self, Matrix, Vector};
use crate::norm::NormModel;
use crate::sphere;

/// Residual below which a direction counts as lying on `∂S`.
const ON_BOUNDARY: f64 = 1e-13;

/// Norm, dimension and wetting parameter `omega0` of a capillary problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CapConfig {
    norm: NormModel,
    omega0: f64,
    ef: Vector,
}

/// `E^F_{n+1}`, normalised so that `<E^F, E_{n+1}> = 1`.
pub fn ef_vector(norm: &NormModel, omega0: f64) -> Vector {
    let d = norm.dim();
    let e = linalg::unit(d, d - 1);
    if omega0 < 0.0 {
        norm.psi(&e) / norm.value(&e)
    } else if omega0 == 0.0 {
        e
    } else {
        let m = -e;
        -(norm.psi(&m) / norm.value(&m))
    }
}

/// Open interval of admissible `omega0`: `(-F(E_{n+1}), F(-E_{n+1}))`.
pub fn omega_range(norm: &NormModel) -> (f64, f64) {
    let d = norm.dim();
    let e = linalg::unit(d, d - 1);
    (-norm.value(&e), norm.value(&(-e)))
}

impl CapConfig {
    pub fn new(norm: NormModel, omega0: f64) -> Result<Self> {
        let n = norm.n();
        if !(1..=2).contains(&n) {
            return Err(CoreError::UnsupportedDimension(n));
        }
        let (lower, upper) = omega_range(&norm);
        if !(omega0 > lower && omega0 < upper) {
            return Err(CoreError::OmegaOutOfRange { omega0, lower, upper });
        }
        let ef = ef_vector(&norm, omega0);
        Ok(Self { norm, omega0, ef })
    }

    pub fn n(&self) -> usize {
        self.norm.n()
    }

    pub fn dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn norm(&self) -> &NormModel {
        &self.norm
    }

    /// `E^F_{n+1}`.
    pub fn ef(&self) -> &Vector {
        &self.ef
    }

    /// `E_{n+1}`.
    pub fn vertical(&self) -> Vector {
        linalg::unit(self.dim(), self.dim() - 1)
    }

    /// `T(x) = x + omega0 E^F`.
    pub fn translate(&self, x: &Vector) -> Vector {
        x + &self.ef * self.omega0
    }

    pub fn inverse_translate(&self, xi: &Vector) -> Vector {
        xi - &self.ef * self.omega0
    }

    /// `xi(x) = Psi(x) + omega0 E^F`, the point of `C` with normal `x`.
    pub fn xi_of(&self, x: &Vector) -> Vector {
        self.translate(&self.norm.psi(&linalg::normalize(x)))
    }

    /// `<DF(x), E_{n+1}> + omega0`; nonnegative exactly on `S`.
    pub fn region_residual(&self, x: &Vector) -> f64 {
        let u = linalg::normalize(x);
        self.norm.psi(&u)[self.dim() - 1] + self.omega0
    }

    pub fn in_region(&self, x: &Vector) -> bool {
        self.region_residual(x) >= 0.0
    }

    /// Outward unit co-normal of `∂C` in `C` at the point with normal `x`:
    /// the normalised projection of `-E_{n+1}` onto `x^perp`.
    pub fn conormal(&self, x: &Vector) -> Vector {
        let e = self.vertical();
        let u = linalg::normalize(x);
        let t = &e - &u * u.dot(&e);
        -t.normalize()
    }

    /// Point at polar angle `theta` from `E_{n+1}` in the azimuthal direction `phi`.
    pub fn polar_point(&self, theta: f64, phi: f64) -> Vector {
        let d = self.dim();
        let mut v = Vector::zeros(d);
        v[d - 1] = fmath::cos(theta);
        if d == 2 {
            v[0] = fmath::sin(theta) * fmath::cos(phi);
        } else {
            v[0] = fmath::sin(theta) * fmath::cos(phi);
            v[1] = fmath::sin(theta) * fmath::sin(phi);
        }
        v
    }

    /// Unit vector `d/dtheta` of [`CapConfig::polar_point`].
    fn polar_dtheta(&self, theta: f64, phi: f64) -> Vector {
        let d = self.dim();
        let mut v = Vector::zeros(d);
        v[d - 1] = -fmath::sin(theta);
        if d == 2 {
            v[0] = fmath::cos(theta) * fmath::cos(phi);
        } else {
            v[0] = fmath::cos(theta) * fmath::cos(phi);
            v[1] = fmath::cos(theta) * fmath::sin(phi);
        }
        v
    }

    /// Polar angle of `∂S` in azimuth `phi`.
    ///
    /// Along a meridian the residual has derivative `-sin(theta) A_F(t, t)`, so it
    /// is strictly decreasing and the root is unique.
    pub fn boundary_angle(&self, phi: f64) -> Result<f64> {
        let r = |th: f64| self.region_residual(&self.polar_point(th, phi));
        let (mut lo, mut hi) = (0.0, PI);
        if !(r(lo) > 0.0 && r(hi) < 0.0) {
            return Err(CoreError::BoundaryNotFound(0));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if r(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut th = 0.5 * (lo + hi);
        // one Newton polish
        let x = self.polar_point(th, phi);
        let t = self.polar_dtheta(th, phi);
        let slope = (self.norm.hessian(&x) * &t)[self.dim() - 1];
        if slope < 0.0 {
            let next = th - r(th) / slope;
            if next > lo - 1e-12 && next < hi + 1e-12 && r(next).abs() <= r(th).abs() {
                th = next;
            }
        }
        Ok(th)
    }

    /// Directions on a polar grid over `S`: `rings` radial fractions in `(0, 1]`
    /// times `azimuths` angles, plus the pole. Independent of any mesh.
    pub fn sample_region(&self, rings: usize, azimuths: usize) -> Result<Vec<Vector>> {
        let azimuths = if self.n() == 1 { 2 } else { azimuths };
        let mut out = alloc::vec![self.vertical()];
        for k in 0..azimuths {
            let phi = 2.0 * PI * k as f64 / azimuths as f64;
            let tb = self.boundary_angle(phi)?;
            for j in 1..=rings {
                out.push(self.polar_point(tb * j as f64 / rings as f64, phi));
            }
        }
        Ok(out)
    }

    /// `d theta_b / d phi` by implicit differentiation (`n = 2`).
    fn boundary_angle_slope(&self, theta: f64, phi: f64) -> f64 {
        let x = self.polar_point(theta, phi);
        let h = self.norm.hessian(&x);
        let dth = self.polar_dtheta(theta, phi);
        let mut dphi = Vector::zeros(3);
        dphi[0] = -fmath::sin(theta) * fmath::sin(phi);
        dphi[1] = fmath::sin(theta) * fmath::cos(phi);
        let r_theta = (&h * &dth)[2];
        let r_phi = (&h * &dphi)[2];
        -r_phi / r_theta
    }
}

/// Interior or boundary node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    Interior,
    Boundary,
}

/// Quadrature layout on `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    /// Polar grid about `E_{n+1}`: composite Simpson in the radial fraction,
    /// periodic trapezoid in azimuth. Fourth order.
    Polar,
    /// Clipped icosphere with lumped vertex weights (`n = 2`), or the
    /// trapezoid rule on the arc (`n = 1`). Second order.
    Icosphere,
}

/// Geometry cached at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshNode {
    /// Unit direction in `S`.
    pub x: Vector,
    pub tag: NodeTag,
    /// Quadrature weight for `dsigma` on the sphere.
    pub weight: f64,
    /// Orthonormal basis of `x^perp`; columns. Tangent-space matrices below use it.
    pub basis: Matrix,
    /// `F(x)`.
    pub f: f64,
    /// `Psi(x)`.
    pub psi: Vector,
    /// `A_F(x)` in `basis`.
    pub a_f: Matrix,
    /// `det A_F(x)`, the density of `dmu_g` against `dsigma`.
    pub det_a: f64,
    /// `xi = Psi(x) + omega0 E^F`, the matching point of `C`.
    pub xi: Vector,
    /// `G(Psi(x))`.
    pub metric: Matrix,
    /// `G`-orthonormal frame of `T_xi C = x^perp`, as columns.
    pub frame: Matrix,
}

/// Quadrature mesh on `S` with per-node geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CapMesh {
    config: CapConfig,
    kind: MeshKind,
    level: u32,
    nodes: Vec<MeshNode>,
    simplices: Vec<Vec<usize>>,
    boundary: Vec<usize>,
    boundary_weights: Vec<f64>,
    spacing: f64,
}

/// Radial and azimuthal interval counts of the polar grid.
pub fn polar_resolution(level: u32) -> (usize, usize) {
    (1usize << (level + 1), 1usize << (level + 2))
}

/// Interval count of the arc mesh for `n = 1`.
pub fn arc_resolution(level: u32) -> usize {
    4usize << level
}

fn simpson_coefficient(j: usize, intervals: usize) -> f64 {
    if j == 0 || j == intervals {
        1.0 / 3.0
    } else if j % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// Area of the spherical triangle with unit vertices `a, b, c`.
pub fn spherical_triangle_area(a: &Vector, b: &Vector, c: &Vector) -> f64 {
    let triple = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]);
    let denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * fmath::atan2(triple.abs(), denom)
}

/// `G`-orthonormal frame of `x^perp`.
///
/// At boundary nodes the last vector is parallel to `A_F(x) mu`, and the others
/// span `x^perp ∩ mu^perp`, which is `G`-orthogonal to it.
pub fn gbar_frame(config: &CapConfig, x: &Vector, basis: &Matrix, metric: &Matrix, boundary: bool) -> Matrix {
    let n = basis.ncols();
    let mut seeds: Vec<Vector> = Vec::with_capacity(n);
    if boundary {
        let mu = config.conormal(x);
        let mu_f = config.norm().hessian(&linalg::normalize(x)) * &mu;
        seeds.push(mu_f);
        let mut rest: Vec<Vector> = Vec::new();
        for k in 0..n {
            let mut v: Vector = basis.column(k).into_owned();
            v -= &mu * mu.dot(&v);
            for r in &rest {
                let p = r.dot(&v);
                v -= r * p;
            }
            let nv = v.norm();
            if nv > 1e-8 && rest.len() < n - 1 {
                rest.push(v / nv);
            }
        }
        seeds.extend(rest);
    } else {
        for k in 0..n {
            seeds.push(basis.column(k).into_owned());
        }
    }
    let mut frame: Vec<Vector> = Vec::with_capacity(n);
    for mut v in seeds {
        for e in &frame {
            let p = e.dot(&(metric * &v));
            v -= e * p;
        }
        let len = fmath::sqrt(v.dot(&(metric * &v)));
        frame.push(v / len);
    }
    if boundary {
        frame.rotate_left(1);
    }
    Matrix::from_columns(&frame)
}

fn make_node(config: &CapConfig, x: Vector, tag: NodeTag, weight: f64, index: usize) -> Result<MeshNode> {
    let x = linalg::normalize(&x);
    let norm = config.norm();
    let basis = linalg::tangent_basis(&x);
    let a_f = norm.checked_anisotropy(&x, &basis, Some(index))?;
    let det_a = a_f.determinant();
    let psi = norm.psi(&x);
    let f = norm.value(&x);
    let xi = config.translate(&psi);
    let metric = norm.metric_at_normal(&x);
    let frame = gbar_frame(config, &x, &basis, &metric, tag == NodeTag::Boundary);
    Ok(MeshNode { x, tag, weight, basis, f, psi, a_f, det_a, xi, metric, frame })
}

impl CapMesh {
    /// Builds the quadrature mesh on `S` at refinement `level`.
    pub fn build(config: &CapConfig, level: u32, kind: MeshKind) -> Result<Self> {
        match (config.n(), kind) {
            (1, _) => Self::build_arc(config, level, kind),
            (2, MeshKind::Polar) => Self::build_polar(config, level),
            (2, MeshKind::Icosphere) => Self::build_icosphere(config, level),
            (n, _) => Err(CoreError::UnsupportedDimension(n)),
        }
    }

    fn build_arc(config: &CapConfig, level: u32, kind: MeshKind) -> Result<Self> {
        // theta > 0 leans towards +E_1, theta < 0 towards -E_1
        let plus = config.boundary_angle(0.0)?;
        let minus = config.boundary_angle(PI)?;
        let intervals = arc_resolution(level);
        let length = plus + minus;
        let h = length / intervals as f64;
        let mut nodes = Vec::with_capacity(intervals + 1);
        for j in 0..=intervals {
            // ascending polar angle alpha = pi/2 - theta, from +E_1 side to -E_1 side
            let theta = plus - h * j as f64;
            let x = Vector::from_vec(alloc::vec![fmath::sin(theta), fmath::cos(theta)]);
            let c = match kind {
                MeshKind::Polar => simpson_coefficient(j, intervals),
                MeshKind::Icosphere => {
                    if j == 0 || j == intervals {
                        0.5
                    } else {
                        1.0
                    }
                }
            };
            let tag = if j == 0 || j == intervals { NodeTag::Boundary } else { NodeTag::Interior };
            nodes.push(make_node(config, x, tag, c * h, j)?);
        }
        let simplices = (0..intervals).map(|j| alloc::vec![j, j + 1]).collect();
        Ok(Self {
            config: config.clone(),
            kind,
            level,
            nodes,
            simplices,
            boundary: alloc::vec![0, intervals],
            boundary_weights: alloc::vec![1.0, 1.0],
            spacing: h,
        })
    }

    fn build_polar(config: &CapConfig, level: u32) -> Result<Self> {
        let (nr, nphi) = polar_resolution(level);
        let dphi = 2.0 * PI / nphi as f64;
        let drho = 1.0 / nr as f64;
        let mut thetas = Vec::with_capacity(nphi);
        for k in 0..nphi {
            let phi = dphi * k as f64;
            thetas.push(config.boundary_angle(phi).map_err(|_| CoreError::BoundaryNotFound(k))?);
        }
        let mut nodes = Vec::with_capacity(1 + nr * nphi);
        nodes.push(make_node(config, config.vertical(), NodeTag::Interior, 0.0, 0)?);
        for j in 1..=nr {
            let rho = drho * j as f64;
            for (k, &tb) in thetas.iter().enumerate() {
                let phi = dphi * k as f64;
                let theta = rho * tb;
                let w = simpson_coefficient(j, nr) * drho * fmath::sin(theta) * tb * dphi;
                let tag = if j == nr { NodeTag::Boundary } else { NodeTag::Interior };
                let idx = nodes.len();
                nodes.push(make_node(config, config.polar_point(theta, phi), tag, w, idx)?);
            }
        }
        let at = |j: usize, k: usize| 1 + (j - 1) * nphi + (k % nphi);
        let mut simplices = Vec::new();
        for k in 0..nphi {
            simplices.push(alloc::vec![0, at(1, k), at(1, k + 1)]);
        }
        for j in 1..nr {
            for k in 0..nphi {
                let (a, b, c, d) = (at(j, k), at(j, k + 1), at(j + 1, k + 1), at(j + 1, k));
                simplices.push(alloc::vec![a, d, c]);
                simplices.push(alloc::vec![a, c, b]);
            }
        }
        let boundary: Vec<usize> = (0..nphi).map(|k| at(nr, k)).collect();
        let boundary_weights = thetas
            .iter()
            .enumerate()
            .map(|(k, &tb)| {
                let slope = config.boundary_angle_slope(tb, dphi * k as f64);
                fmath::sqrt(slope * slope + fmath::sin(tb) * fmath::sin(tb)) * dphi
            })
            .collect();
        let spacing = thetas.iter().sum::<f64>() / nphi as f64 * drho;
        Ok(Self { config: config.clone(), kind: MeshKind::Polar, level, nodes, simplices, boundary, boundary_weights, spacing })
    }

    fn build_icosphere(config: &CapConfig, level: u32) -> Result<Self> {
        let (raw, faces) = sphere::icosphere(level);
        let mut points: Vec<Vector> = raw.iter().map(|v| Vector::from_vec(v.to_vec())).collect();
        let residual: Vec<f64> = points.iter().map(|p| config.region_residual(p)).collect();
        let inside = |i: usize, res: &[f64]| res[i] >= -ON_BOUNDARY;
        let mut crossings: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut res = residual;
        let mut cross = |a: usize, b: usize, points: &mut Vec<Vector>, res: &mut Vec<f64>| -> usize {
            if res[a] <= ON_BOUNDARY {
                return a;
            }
            if let Some(&k) = crossings.get(&(a, b)) {
                return k;
            }
            let (pa, pb) = (points[a].clone(), points[b].clone());
            let at = |s: f64| linalg::normalize(&(&pa * (1.0 - s) + &pb * s));
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if config.region_residual(&at(mid)) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let p = at(lo);
            res.push(config.region_residual(&p));
            points.push(p);
            let k = points.len() - 1;
            crossings.insert((a, b), k);
            k
        };
        let mut tris: Vec<[usize; 3]> = Vec::new();
        for f in &faces {
            let ins: Vec<bool> = f.iter().map(|&i| inside(i, &res)).collect();
            let count = ins.iter().filter(|&&b| b).count();
            match count {
                3 => tris.push(*f),
                0 => {}
                1 => {
                    let r = ins.iter().position(|&b| b).unwrap_or(0);
                    let (a, b, c) = (f[r], f[(r + 1) % 3], f[(r + 2) % 3]);
                    let p = cross(a, b, &mut points, &mut res);
                    let q = cross(a, c, &mut points, &mut res);
                    tris.push([a, p, q]);
                }
                _ => {
                    let r = ins.iter().position(|&b| !b).unwrap_or(0);
                    let (c, a, b) = (f[r], f[(r + 1) % 3], f[(r + 2) % 3]);
                    let p = cross(b, c, &mut points, &mut res);
                    let q = cross(a, c, &mut points, &mut res);
                    tris.push([a, b, p]);
                    tris.push([a, p, q]);
                }
            }
        }
        tris.retain(|t| {
            t[0] != t[1] && t[1] != t[2] && t[0] != t[2] && spherical_triangle_area(&points[t[0]], &points[t[1]], &points[t[2]]) > 1e-300
        });
        let mut weight = alloc::vec![0.0; points.len()];
        let mut used = alloc::vec![false; points.len()];
        let mut edges: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
        let mut edge_len_sum = 0.0;
        for t in &tris {
            let area = spherical_triangle_area(&points[t[0]], &points[t[1]], &points[t[2]]);
            for k in 0..3 {
                weight[t[k]] += area / 3.0;
                used[t[k]] = true;
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                let e = edges.entry(key).or_insert((0, 0));
                e.0 += 1;
                e.1 = if a < b { 0 } else { 1 };
                edge_len_sum += fmath::acos(points[a].dot(&points[b]));
            }
        }
        let spacing = edge_len_sum / (3 * tris.len()).max(1) as f64;
        let mut remap = alloc::vec![usize::MAX; points.len()];
        let mut order = Vec::new();
        for (i, u) in used.iter().enumerate() {
            if *u {
                remap[i] = order.len();
                order.push(i);
            }
        }
        // directed boundary edges following triangle orientation
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for (&(a, b), &(count, dir)) in &edges {
            if count == 1 {
                let (from, to) = if dir == 0 { (a, b) } else { (b, a) };
                next.insert(remap[from], remap[to]);
            }
        }
        let mut boundary = Vec::new();
        let mut seen = BTreeMap::new();
        let keys: Vec<usize> = next.keys().copied().collect();
        for start in keys {
            if seen.contains_key(&start) {
                continue;
            }
            let mut cur = start;
            while !seen.contains_key(&cur) {
                seen.insert(cur, ());
                boundary.push(cur);
                match next.get(&cur) {
                    Some(&nx) => cur = nx,
                    None => break,
                }
            }
        }
        let is_boundary: BTreeMap<usize, ()> = boundary.iter().map(|&b| (b, ())).collect();
        let mut nodes = Vec::with_capacity(order.len());
        for (ci, &pi) in order.iter().enumerate() {
            let tag = if is_boundary.contains_key(&ci) { NodeTag::Boundary } else { NodeTag::Interior };
            nodes.push(make_node(config, points[pi].clone(), tag, weight[pi], ci)?);
        }
        let mut bw = alloc::vec![0.0; boundary.len()];
        let pos: BTreeMap<usize, usize> = boundary.iter().enumerate().map(|(k, &b)| (b, k)).collect();
        for (&from, &to) in &next {
            let len = fmath::acos(nodes[from].x.dot(&nodes[to].x));
            bw[pos[&from]] += 0.5 * len;
            if let Some(&k) = pos.get(&to) {
                bw[k] += 0.5 * len;
            }
        }
        let simplices = tris.iter().map(|t| t.iter().map(|&i| remap[i]).collect()).collect();
        Ok(Self { config: config.clone(), kind: MeshKind::Icosphere, level, nodes, simplices, boundary, boundary_weights: bw, spacing })
    }

    /// Same configuration and layout at another refinement level.
    pub fn at_level(&self, level: u32) -> Result<Self> {
        Self::build(&self.config, level, self.kind)
    }

    pub fn config(&self) -> &CapConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n()
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn kind(&self) -> MeshKind {
        self.kind
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[MeshNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &MeshNode {
        &self.nodes[i]
    }

    /// Simplices of the parameter mesh (triangles for `n = 2`, segments for `n = 1`).
    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// Boundary node indices in traversal order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Arclength weights of the boundary nodes (counting measure for `n = 1`).
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    /// Typical node spacing in radians.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Nominal convergence order of the quadrature.
    pub fn order(&self) -> u32 {
        match self.kind {
            MeshKind::Polar => 4,
            MeshKind::Icosphere => 2,
        }
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.nodes[i].tag == NodeTag::Interior).collect()
    }

    /// `det A_F(x_i)`: `∫_C h dmu_g = ∫_S (h o xi) det A_F dsigma`.
    pub fn pullback_area_density(&self, i: usize) -> f64 {
        self.nodes[i].det_a
    }

    /// Weighted sum `sum_i w_i f(i)` with fixed-order pairwise summation.
    pub fn integrate<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        let vals: Vec<f64> = (0..self.len())
            .map(|i| {
                let w = self.nodes[i].weight;
                if w == 0.0 {
                    0.0
                } else {
                    w * f(i)
                }
            })
            .collect();
        linalg::pairwise_sum(&vals)
    }

    /// Quadrature estimate of the spherical area of `S`.
    pub fn parameter_area(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// Euclidean area of `C`, i.e. `∫_S det A_F dsigma`.
    pub fn cap_area(&self) -> f64 {
        self.integrate(|i| self.nodes[i].det_a)
    }

    /// Largest `|<xi, E_{n+1}>|` over boundary nodes and smallest `<xi, E_{n+1}>`
    /// over interior nodes with positive weight.
    pub fn height_invariants(&self) -> (f64, f64) {
        let d = self.dim();
        let mut bmax: f64 = 0.0;
        let mut imin = f64::INFINITY;
        for node in &self.nodes {
            let h = node.xi[d - 1];
            match node.tag {
                NodeTag::Boundary => bmax = bmax.max(h.abs()),
                NodeTag::Interior => {
                    if node.weight > 0.0 {
                        imin = imin.min(h)
                    }
                }
            }
        }
        (bmax, imin)
    }
}
