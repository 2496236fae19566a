//! Mixed discriminants of symmetric `n x n` matrices.
//!
//! `Q(A_1, ..., A_n) = (1/n!) sum delta^{i_1..i_n}_{j_1..j_n} (A_1)_{i_1 j_1} ... (A_n)_{i_n j_n}`,
//! the polarisation of the determinant: `Q(A, ..., A) = det A`.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::fmath;
use crate::linalg::{self, Matrix};

/// All permutations of `0..n` with their signs, in lexicographic order.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        out.push((perm.clone(), permutation_sign(&perm)));
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap_or(i + 1);
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    out
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Largest tolerated `|A - A^T|` relative to `max(1, max|A|)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

fn check_symmetric(mats: &[Matrix]) -> Result<usize> {
    let n = check(mats)?;
    for (k, m) in mats.iter().enumerate() {
        let skew = (m - m.transpose()).amax();
        if skew > SYMMETRY_TOLERANCE * m.amax().max(1.0) {
            return Err(CoreError::InvalidArgument(alloc::format!("matrix {k} is not symmetric (skew {skew:e})")));
        }
    }
    Ok(n)
}

fn check(mats: &[Matrix]) -> Result<usize> {
    let n = mats.len();
    if n == 0 {
        return Err(CoreError::InvalidArgument("mixed discriminant of an empty tuple".into()));
    }
    for m in mats {
        if m.nrows() != n || m.ncols() != n {
            return Err(CoreError::DimensionMismatch { expected: n, found: m.nrows().max(m.ncols()) });
        }
    }
    Ok(n)
}

/// Mixed discriminant via the generalised Kronecker delta. Inputs must be symmetric.
pub fn mixed_discriminant(mats: &[Matrix]) -> Result<f64> {
    check_symmetric(mats)?;
    delta_sum(mats)
}

/// The same multilinear form on arbitrary square matrices.
pub fn mixed_discriminant_unsymmetric(mats: &[Matrix]) -> Result<f64> {
    check(mats)?;
    delta_sum(mats)
}

fn delta_sum(mats: &[Matrix]) -> Result<f64> {
    let n = mats.len();
    let perms = permutations(n);
    let mut total = 0.0;
    for (sigma, ss) in &perms {
        for (pi, sp) in &perms {
            let mut prod = ss * sp;
            for k in 0..n {
                prod *= mats[k][(sigma[k], pi[k])];
                if prod == 0.0 {
                    break;
                }
            }
            total += prod;
        }
    }
    Ok(total / linalg::factorial(n))
}

/// Mixed discriminant by inclusion-exclusion over subsets:
/// `(1/n!) sum_S (-1)^{n-|S|} det(sum_{k in S} A_k)`.
pub fn mixed_discriminant_by_subsets(mats: &[Matrix]) -> Result<f64> {
    let n = check_symmetric(mats)?;
    let mut total = 0.0;
    for mask in 1u32..(1u32 << n) {
        let mut sum = Matrix::zeros(n, n);
        for (k, m) in mats.iter().enumerate() {
            if mask & (1 << k) != 0 {
                sum += m;
            }
        }
        let sign = if (n - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * sum.determinant();
    }
    Ok(total / linalg::factorial(n))
}

/// `Q^{ij} = dQ / d(A_1)_{ij}`; depends only on `A_2, ..., A_n`.
pub fn mixed_discriminant_gradient(mats: &[Matrix]) -> Result<Matrix> {
    let n = check_symmetric(mats)?;
    let perms = permutations(n);
    let mut grad = Matrix::zeros(n, n);
    for (sigma, ss) in &perms {
        for (pi, sp) in &perms {
            let mut prod = ss * sp;
            for k in 1..n {
                prod *= mats[k][(sigma[k], pi[k])];
            }
            grad[(sigma[0], pi[0])] += prod;
        }
    }
    Ok(grad / linalg::factorial(n))
}

/// Both sides of `Q(A_1 B, .., A_n B) = Q(A_1, .., A_n) det B`, as `(lhs, rhs)`.
pub fn transform_sides(mats: &[Matrix], b: &Matrix) -> Result<(f64, f64)> {
    let n = check_symmetric(mats)?;
    if b.nrows() != n || b.ncols() != n {
        return Err(CoreError::DimensionMismatch { expected: n, found: b.nrows() });
    }
    let det = b.determinant();
    if det.abs() <= f64::EPSILON * fmath::powi(b.amax(), n as i32) {
        return Err(CoreError::InvalidArgument("transform matrix is singular".into()));
    }
    let moved: Vec<Matrix> = mats.iter().map(|a| a * b).collect();
    Ok((mixed_discriminant_unsymmetric(&moved)?, mixed_discriminant(mats)? * det))
}

/// Both sides of Alexandrov's inequality
/// `Q(A, B, rest)^2 >= Q(A, A, rest) Q(B, B, rest)`, returned as `(lhs, rhs)`.
///
/// The inequality needs `B` and every matrix in `rest` to be positive definite.
pub fn alexandrov_sides(a: &Matrix, b: &Matrix, rest: &[Matrix]) -> Result<(f64, f64)> {
    let with = |x: &Matrix, y: &Matrix| {
        let mut v = alloc::vec![x.clone(), y.clone()];
        v.extend(rest.iter().cloned());
        mixed_discriminant(&v)
    };
    let ab = with(a, b)?;
    Ok((ab * ab, with(a, a)? * with(b, b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&crate::linalg::Vector::from_row_slice(v))
    }

    #[test]
    fn permutation_count_and_signs() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p.iter().map(|x| x.1).sum::<f64>(), 0.0);
    }

    #[test]
    fn diagonal_reduces_to_determinant() {
        let a = diag(&[2.0, 3.0]);
        assert!((mixed_discriminant(&[a.clone(), a]).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn two_diagonals_pinned_value() {
        // (1/2)(2*7 + 3*5) for diag(2,3), diag(5,7)
        let v = mixed_discriminant(&[diag(&[2.0, 3.0]), diag(&[5.0, 7.0])]).unwrap();
        assert!((v - 14.5).abs() < 1e-14);
    }

    #[test]
    fn gradient_of_identities_is_half_identity() {
        let i = Matrix::identity(2, 2);
        let g = mixed_discriminant_gradient(&[i.clone(), i]).unwrap();
        assert!((g - Matrix::identity(2, 2) * 0.5).amax() < 1e-15);
    }

    #[test]
    fn rejects_wrong_shapes() {
        let a = Matrix::identity(2, 2);
        assert!(mixed_discriminant(&[a.clone()]).is_err());
        assert!(mixed_discriminant(&[a.clone(), Matrix::identity(3, 3)]).is_err());
        let skew = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(mixed_discriminant(&[a.clone(), skew.clone()]).is_err());
        assert!(mixed_discriminant_unsymmetric(&[a, skew]).is_ok());
    }
}
