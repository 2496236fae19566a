//! Sample point sets on spheres.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::fmath;
use crate::linalg::Vector;

/// Subdivided icosahedron: unit vertices and triangle index triples.
pub fn icosphere(level: u32) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let p = (1.0 + fmath::sqrt(5.0)) / 2.0;
    let raw = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let mut verts: Vec<[f64; 3]> = raw.iter().map(|v| unit3(*v)).collect();
    let mut faces: Vec<[usize; 3]> = alloc::vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let a = midpoint(&mut verts, &mut cache, f[0], f[1]);
            let b = midpoint(&mut verts, &mut cache, f[1], f[2]);
            let c = midpoint(&mut verts, &mut cache, f[2], f[0]);
            next.push([f[0], a, c]);
            next.push([f[1], b, a]);
            next.push([f[2], c, b]);
            next.push([a, b, c]);
        }
        faces = next;
    }
    (verts, faces)
}

fn unit3(v: [f64; 3]) -> [f64; 3] {
    let n = fmath::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn midpoint(verts: &mut Vec<[f64; 3]>, cache: &mut BTreeMap<(usize, usize), usize>, i: usize, j: usize) -> usize {
    let key = if i < j { (i, j) } else { (j, i) };
    if let Some(&k) = cache.get(&key) {
        return k;
    }
    let (a, b) = (verts[i], verts[j]);
    verts.push(unit3([a[0] + b[0], a[1] + b[1], a[2] + b[2]]));
    let k = verts.len() - 1;
    cache.insert(key, k);
    k
}

/// Roughly uniform unit directions in `R^dim` (dim 2 or 3): equal angles on the
/// circle, a Fibonacci spiral on the 2-sphere.
pub fn spread_directions(dim: usize, count: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(count);
    let tau = 2.0 * core::f64::consts::PI;
    if dim == 2 {
        for k in 0..count {
            let a = tau * k as f64 / count as f64;
            out.push(Vector::from_vec(alloc::vec![fmath::cos(a), fmath::sin(a)]));
        }
    } else {
        let golden = core::f64::consts::PI * (3.0 - fmath::sqrt(5.0));
        for k in 0..count {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let r = fmath::sqrt((1.0 - z * z).max(0.0));
            let a = golden * k as f64;
            out.push(Vector::from_vec(alloc::vec![r * fmath::cos(a), r * fmath::sin(a), z]));
        }
    }
    out
}

/// Directions used to validate a norm model: a level-5 icosphere in `R^3`,
/// 2048 equally spaced angles in `R^2`.
pub fn validation_directions(dim: usize) -> Vec<Vector> {
    if dim == 2 {
        return spread_directions(2, 2048);
    }
    icosphere(5).0.into_iter().map(|v| Vector::from_vec(v.to_vec())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for level in 0..4 {
            let (v, f) = icosphere(level);
            let nf = 20 * 4usize.pow(level);
            assert_eq!(f.len(), nf);
            assert_eq!(v.len(), nf / 2 + 2);
        }
    }
}
