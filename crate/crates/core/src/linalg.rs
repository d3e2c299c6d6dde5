//! Thin helpers over `nalgebra` dense complex matrices.

use nalgebra::DMatrix;

use crate::context::C64;

pub type CMatrix = DMatrix<C64>;

pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> CMatrix {
    DMatrix::from_fn(rows, cols, f)
}

pub fn det(m: &CMatrix) -> C64 {
    m.clone().lu().determinant()
}

/// Inverse by LU with partial pivoting; `None` when singular.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().try_inverse()
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// 2-norm condition number.
pub fn condition_number(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Number of singular values above `rel_cutoff * sigma_max`.
pub fn numerical_rank(m: &CMatrix, rel_cutoff: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    s.iter().filter(|&&x| x > rel_cutoff * top).count()
}

/// Least-squares solution of `a x = b` via a truncated SVD pseudo-inverse.
pub fn lstsq(a: &CMatrix, b: &CMatrix, rel_cutoff: f64) -> CMatrix {
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = rel_cutoff * top;
    svd.solve(b, eps).expect("both factors were requested")
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max|a - b| / (max|a| + max|b| + 1e-300)`.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a - b)) / (max_abs(a) + max_abs(b) + 1e-300)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMatrix {
    DMatrix::identity(n, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let m = from_fn(3, 3, |i, j| C64::new((i * 3 + j) as f64 + 0.5, (i as f64 - j as f64) * 0.3) + if i == j { C64::new(4.0, 0.0) } else { C64::new(0.0, 0.0) });
        let inv = inverse(&m).unwrap();
        assert!(rel_diff(&(&m * &inv), &identity(3)) < 1e-14);
        let d = det(&m);
        assert!((d * det(&inv) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn rank_of_outer_product() {
        let u = from_fn(4, 1, |i, _| C64::new(i as f64 + 1.0, 0.5));
        let v = from_fn(1, 4, |_, j| C64::new(0.3, j as f64));
        assert_eq!(numerical_rank(&(&u * &v), 1e-10), 1);
        assert!(condition_number(&(&u * &v)) > 1e10);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = from_fn(6, 3, |i, j| C64::new(((i + 1) * (j + 2)) as f64 % 7.0, (i as f64 - j as f64) * 0.1));
        let x = from_fn(3, 1, |i, _| C64::new(i as f64, -1.0));
        let b = &a * &x;
        let got = lstsq(&a, &b, 1e-12);
        assert!(rel_diff(&got, &x) < 1e-12);
    }
}
