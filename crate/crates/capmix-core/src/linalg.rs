//! Small dense linear algebra helpers on top of `nalgebra`.

use alloc::vec::Vec;

use crate::fmath;

pub type Vector = nalgebra::DVector<f64>;
pub type Matrix = nalgebra::DMatrix<f64>;

/// The `k`-th coordinate axis of `R^dim`.
pub fn unit(dim: usize, k: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[k] = 1.0;
    v
}

pub fn normalize(v: &Vector) -> Vector {
    v / v.norm()
}

/// Orthonormal basis of `x^perp`, returned as the columns of a `d x (d-1)` matrix.
///
/// Coordinate axes are taken in order of increasing `|x_k|` (ties by index) and
/// Gram-Schmidt orthogonalised, so the result depends only on `x`.
pub fn tangent_basis(x: &Vector) -> Matrix {
    let d = x.len();
    let u = normalize(x);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut cols: Vec<Vector> = Vec::with_capacity(d - 1);
    for &k in &order {
        if cols.len() == d - 1 {
            break;
        }
        let mut v = unit(d, k);
        v -= &u * u[k];
        for c in &cols {
            let p = c.dot(&v);
            v -= c * p;
        }
        let nv = v.norm();
        if nv > 1e-8 {
            cols.push(v / nv);
        }
    }
    Matrix::from_columns(&cols)
}

/// Point on the great circle through unit `x` with unit tangent `u`.
pub fn great_circle(x: &Vector, u: &Vector, theta: f64) -> Vector {
    x * fmath::cos(theta) + u * fmath::sin(theta)
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return alloc::vec![m[(0, 0)]];
    }
    let s = symmetrize(m);
    if n == 2 {
        let (a, b, c) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
        let mean = 0.5 * (a + c);
        let r = fmath::hypot(0.5 * (a - c), b);
        return alloc::vec![mean - r, mean + r];
    }
    let mut ev: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

pub fn min_eigenvalue(m: &Matrix) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: &Matrix) -> Option<Matrix> {
    nalgebra::Cholesky::new(symmetrize(m)).map(|c| c.l())
}

/// Eigenvalues of `W A^{-1}` for symmetric `W` and SPD `A`, ascending.
pub fn relative_eigenvalues(w: &Matrix, a: &Matrix) -> Option<Vec<f64>> {
    let l = cholesky(a)?;
    let linv = l.try_inverse()?;
    Some(sym_eigenvalues(&(&linv * w * linv.transpose())))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Elementary symmetric polynomial `sigma_k` of `vals`.
pub fn elementary_symmetric(vals: &[f64], k: usize) -> f64 {
    let mut e = alloc::vec![0.0; k + 1];
    e[0] = 1.0;
    for &v in vals {
        for j in (1..=k).rev() {
            e[j] += e[j - 1] * v;
        }
    }
    e[k]
}

/// Least-squares solve via SVD, returning the solution and the 2-norm condition number.
pub fn least_squares(a: &Matrix, b: &Vector) -> Option<(Vector, f64)> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let x = svd.solve(b, 1e-14 * smax).ok()?;
    Some((x, if smin > 0.0 { smax / smin } else { f64::INFINITY }))
}
