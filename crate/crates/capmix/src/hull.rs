//! Convex hull volumes of point clouds in the plane and in space.
//!
//! Used as an independent oracle for body volumes: the hull of sampled
//! boundary points `X(x)` of a capillary body, whose rim lies on the plane,
//! approaches the enclosed volume from below.

use std::collections::{HashMap, VecDeque};

use capmix_core::body::CapFunction;
use capmix_core::{CapConfig, Result, SupportField, Vector};

type P3 = [f64; 3];

fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &P3, b: &P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Area enclosed by the convex hull of planar points (Andrew's monotone chain).
pub fn hull_area(points: &[[f64; 2]]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let turn = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && turn(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    let m = hull.len();
    (0..m).map(|i| hull[i][0] * hull[(i + 1) % m][1] - hull[(i + 1) % m][0] * hull[i][1]).sum::<f64>() / 2.0
}

struct Face {
    v: [usize; 3],
    normal: P3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn new(pts: &[P3], v: [usize; 3]) -> Self {
        let normal = cross(&sub(&pts[v[1]], &pts[v[0]]), &sub(&pts[v[2]], &pts[v[0]]));
        let offset = dot(&normal, &pts[v[0]]);
        Self { v, normal, offset, outside: Vec::new(), alive: true }
    }

    fn height(&self, p: &P3) -> f64 {
        dot(&self.normal, p) - self.offset
    }

    fn normal_len(&self) -> f64 {
        dot(&self.normal, &self.normal).sqrt()
    }
}

/// Volume of the convex hull of points in space (quickhull with conflict lists).
///
/// Returns 0 for degenerate (coplanar) input.
pub fn hull_volume(points: &[P3]) -> f64 {
    let pts = points;
    if pts.len() < 4 {
        return 0.0;
    }
    let scale = pts.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, c| m.max(c.abs())).max(f64::MIN_POSITIVE);
    let eps = 1e-12 * scale;

    // initial tetrahedron from extreme points
    let i0 = (0..pts.len()).min_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0])).unwrap();
    let i1 = (0..pts.len())
        .max_by(|&a, &b| {
            let da = sub(&pts[a], &pts[i0]);
            let db = sub(&pts[b], &pts[i0]);
            dot(&da, &da).total_cmp(&dot(&db, &db))
        })
        .unwrap();
    let d01 = sub(&pts[i1], &pts[i0]);
    let i2 = (0..pts.len())
        .max_by(|&a, &b| {
            let ca = cross(&d01, &sub(&pts[a], &pts[i0]));
            let cb = cross(&d01, &sub(&pts[b], &pts[i0]));
            dot(&ca, &ca).total_cmp(&dot(&cb, &cb))
        })
        .unwrap();
    let n012 = cross(&d01, &sub(&pts[i2], &pts[i0]));
    let i3 = (0..pts.len())
        .max_by(|&a, &b| dot(&n012, &sub(&pts[a], &pts[i0])).abs().total_cmp(&dot(&n012, &sub(&pts[b], &pts[i0])).abs()))
        .unwrap();
    let vol6 = dot(&n012, &sub(&pts[i3], &pts[i0]));
    if vol6.abs() <= eps * scale * scale {
        return 0.0;
    }

    let mut faces: Vec<Face> = Vec::new();
    let tet = if vol6 > 0.0 {
        [[i0, i2, i1], [i0, i1, i3], [i1, i2, i3], [i2, i0, i3]]
    } else {
        [[i0, i1, i2], [i0, i3, i1], [i1, i3, i2], [i2, i3, i0]]
    };
    for v in tet {
        faces.push(Face::new(pts, v));
    }
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (f, face) in faces.iter().enumerate() {
        for k in 0..3 {
            edges.insert((face.v[k], face.v[(k + 1) % 3]), f);
        }
    }
    let used = [i0, i1, i2, i3];
    for p in 0..pts.len() {
        if used.contains(&p) {
            continue;
        }
        if let Some(f) = (0..4).find(|&f| faces[f].height(&pts[p]) > eps * faces[f].normal_len()) {
            faces[f].outside.push(p);
        }
    }

    let mut pending: VecDeque<usize> = (0..4).collect();
    while let Some(f0) = pending.pop_front() {
        if !faces[f0].alive || faces[f0].outside.is_empty() {
            continue;
        }
        let eye = *faces[f0].outside.iter().max_by(|&&a, &&b| faces[f0].height(&pts[a]).total_cmp(&faces[f0].height(&pts[b]))).unwrap();
        let e = pts[eye];

        // visible region by flood fill, horizon as directed edges
        let mut visible = vec![f0];
        let mut seen: HashMap<usize, bool> = HashMap::from([(f0, true)]);
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        let mut stack = vec![f0];
        while let Some(f) = stack.pop() {
            let v = faces[f].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let g = edges[&(b, a)];
                let vis = *seen.entry(g).or_insert_with(|| faces[g].height(&e) > eps * faces[g].normal_len());
                if vis {
                    if !visible.contains(&g) {
                        visible.push(g);
                        stack.push(g);
                    }
                } else {
                    horizon.push((a, b));
                }
            }
        }

        let mut orphans: Vec<usize> = Vec::new();
        for &f in &visible {
            faces[f].alive = false;
            let v = faces[f].v;
            for k in 0..3 {
                edges.remove(&(v[k], v[(k + 1) % 3]));
            }
            orphans.extend(faces[f].outside.drain(..).filter(|&p| p != eye));
        }
        let first = faces.len();
        for &(a, b) in &horizon {
            let f = faces.len();
            faces.push(Face::new(pts, [a, b, eye]));
            edges.insert((a, b), f);
            edges.insert((b, eye), f);
            edges.insert((eye, a), f);
        }
        for p in orphans {
            if let Some(f) = (first..faces.len()).find(|&f| faces[f].height(&pts[p]) > eps * faces[f].normal_len()) {
                faces[f].outside.push(p);
            }
        }
        pending.extend(first..faces.len());
    }

    faces.iter().filter(|f| f.alive).map(|f| dot(&pts[f.v[0]], &cross(&pts[f.v[1]], &pts[f.v[2]]))).sum::<f64>() / 6.0
}

/// Boundary points `X(x) = grad s(x)` over a polar sample of the region `S`.
///
/// The outer ring lies on `dS`, where `X` meets the plane, so the hull also
/// contains the flat face.
pub fn boundary_samples(config: &CapConfig, support: &SupportField, rings: usize, azimuths: usize) -> Result<Vec<Vector>> {
    Ok(config.sample_region(rings, azimuths)?.iter().map(|x| support.gradient(config.norm(), x)).collect())
}

/// Hull volume of `rings x azimuths` boundary samples of a body.
pub fn hull_oracle_volume(body: &CapFunction, rings: usize, azimuths: usize) -> Result<f64> {
    let config = body.mesh().config();
    let xs = boundary_samples(config, body.support(), rings, azimuths)?;
    Ok(match config.n() {
        1 => hull_area(&xs.iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>()),
        _ => hull_volume(&xs.iter().map(|p| [p[0], p[1], p[2]]).collect::<Vec<_>>()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn unit_square_and_cube() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5], [0.2, 0.9]];
        assert!((hull_area(&sq) - 1.0).abs() < 1e-15);
        let mut cube = Vec::new();
        for i in 0..8 {
            cube.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        cube.push([0.5, 0.5, 0.5]);
        cube.push([0.5, 0.5, 1.0]);
        assert!((hull_volume(&cube) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coplanar_input_has_zero_volume() {
        let pts: Vec<P3> = (0..20).map(|i| [i as f64, (i * i % 7) as f64, 0.0]).collect();
        assert_eq!(hull_volume(&pts), 0.0);
    }

    #[test]
    fn sphere_samples_approach_ball_volume() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<P3> = (0..20000)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = (1.0 - z * z).sqrt();
                [r * t.cos(), r * t.sin(), z]
            })
            .collect();
        let v = hull_volume(&pts);
        let exact = 4.0 * std::f64::consts::PI / 3.0;
        assert!(v < exact && (exact - v) / exact < 2e-3, "{v}");
    }
}
