//! Small dense linear-algebra helpers shared by the numeric checks:
//! Gram-Schmidt projection, echelon rank, determinants and damped
//! Gauss-Newton least squares. Everything here works on tiny matrices.

use crate::Scalar;

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn scale<T: Scalar>(a: &[T], c: T) -> Vec<T> {
    a.iter().map(|&x| x * c).collect()
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Modified Gram-Schmidt; returns an orthonormal basis of the row span,
/// dropping rows whose residual norm falls below `tol`.
pub fn orthonormal_rows<T: Scalar>(rows: &[Vec<T>], tol: T) -> Vec<Vec<T>> {
    let mut q: Vec<Vec<T>> = Vec::new();
    for row in rows {
        let mut v = row.clone();
        for basis in &q {
            let c = dot(&v, basis);
            v = sub(&v, &scale(basis, c));
        }
        let n = norm(&v);
        if n > tol {
            q.push(scale(&v, T::one() / n));
        }
    }
    q
}

/// Norm of the component of `v` orthogonal to the span of `q` (rows
/// orthonormal).
pub fn residual_norm<T: Scalar>(v: &[T], q: &[Vec<T>]) -> T {
    let mut r = v.to_vec();
    for basis in q {
        let c = dot(&r, basis);
        r = sub(&r, &scale(basis, c));
    }
    norm(&r)
}

/// Numeric rank by row echelon with partial pivoting; pivots below
/// `tol * max_abs_entry` count as zero.
pub fn rank<T: Scalar>(matrix: &[Vec<T>], tol: T) -> usize {
    if matrix.is_empty() || matrix[0].is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<T>> = matrix.to_vec();
    let rows = m.len();
    let cols = m[0].len();
    let mut max_entry = T::zero();
    for row in &m {
        for &v in row {
            max_entry = max_entry.max(v.abs());
        }
    }
    if max_entry.is_zero() {
        return 0;
    }
    let threshold = tol * max_entry;
    let mut rank = 0;
    let mut col = 0;
    while rank < rows && col < cols {
        let mut pivot = rank;
        for r in rank + 1..rows {
            if m[r][col].abs() > m[pivot][col].abs() {
                pivot = r;
            }
        }
        if m[pivot][col].abs() <= threshold {
            col += 1;
            continue;
        }
        m.swap(rank, pivot);
        let p = m[rank][col];
        for r in rank + 1..rows {
            let f = m[r][col] / p;
            for c in col..cols {
                let delta = f * m[rank][c];
                m[r][c] = m[r][c] - delta;
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

/// Determinant by LU with partial pivoting.
pub fn det<T: Scalar>(matrix: &[Vec<T>]) -> T {
    let n = matrix.len();
    let mut m: Vec<Vec<T>> = matrix.to_vec();
    let mut sign = T::one();
    for k in 0..n {
        let mut pivot = k;
        for r in k + 1..n {
            if m[r][k].abs() > m[pivot][k].abs() {
                pivot = r;
            }
        }
        if m[pivot][k].is_zero() {
            return T::zero();
        }
        if pivot != k {
            m.swap(k, pivot);
            sign = -sign;
        }
        for r in k + 1..n {
            let f = m[r][k] / m[k][k];
            for c in k..n {
                let delta = f * m[k][c];
                m[r][c] = m[r][c] - delta;
            }
        }
    }
    let mut d = sign;
    for k in 0..n {
        d = d * m[k][k];
    }
    d
}

/// Solves the square system `a x = b` by Gaussian elimination; `None` when
/// a pivot degenerates below `tol`.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T], tol: T) -> Option<Vec<T>> {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for k in 0..n {
        let mut pivot = k;
        for r in k + 1..n {
            if m[r][k].abs() > m[pivot][k].abs() {
                pivot = r;
            }
        }
        if m[pivot][k].abs() <= tol {
            return None;
        }
        m.swap(k, pivot);
        for r in k + 1..n {
            let f = m[r][k] / m[k][k];
            for c in k..=n {
                let delta = f * m[k][c];
                m[r][c] = m[r][c] - delta;
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut acc = m[k][n];
        for c in k + 1..n {
            acc = acc - m[k][c] * x[c];
        }
        x[k] = acc / m[k][k];
    }
    Some(x)
}

/// Minimum-norm Gauss-Newton step for `J d = -f`: solves
/// `(J J^T + lambda I) y = -f` and returns `d = J^T y`. Works for
/// under-determined and rank-deficient systems.
pub fn gauss_newton_step<T: Scalar>(jac: &[Vec<T>], f: &[T], lambda: T) -> Option<Vec<T>> {
    let rows = jac.len();
    if rows == 0 {
        return Some(Vec::new());
    }
    let cols = jac[0].len();
    let mut jjt = vec![vec![T::zero(); rows]; rows];
    for i in 0..rows {
        for j in 0..rows {
            jjt[i][j] = dot(&jac[i], &jac[j]);
        }
        jjt[i][i] = jjt[i][i] + lambda;
    }
    let neg_f: Vec<T> = f.iter().map(|&v| -v).collect();
    let y = solve(&jjt, &neg_f, T::from_f64(1e-300).unwrap_or_else(T::min_positive_value))?;
    let mut d = vec![T::zero(); cols];
    for (i, yi) in y.iter().enumerate() {
        for c in 0..cols {
            d[c] = d[c] + jac[i][c] * *yi;
        }
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_echelon_pattern() {
        let m = vec![
            vec![1.0, 0.0, 2.0],
            vec![0.0, 1.0, 3.0],
            vec![1.0, 1.0, 5.0],
        ];
        assert_eq!(rank(&m, 1e-12), 2);
    }

    #[test]
    fn det_of_triangular() {
        let m: Vec<Vec<f64>> = vec![
            vec![2.0, 1.0, 0.0],
            vec![0.0, 3.0, 5.0],
            vec![0.0, 0.0, 4.0],
        ];
        assert!((det(&m) - 24.0).abs() < 1e-12);
    }

    #[test]
    fn solve_small_system() {
        let a: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&a, &[5.0, 10.0], 1e-14).unwrap();
        assert!((x[0] - 1.0_f64).abs() < 1e-12);
        assert!((x[1] - 3.0_f64).abs() < 1e-12);
    }

    #[test]
    fn gauss_newton_handles_singular_jacobian() {
        // Rank-one system: step must still reduce the residual.
        let jac = vec![vec![-1.0, 1.0], vec![-1.0, 1.0]];
        let f = vec![0.5, 0.5];
        let d = gauss_newton_step(&jac, &f, 1e-12).unwrap();
        let r1: f64 = f[0] + jac[0][0] * d[0] + jac[0][1] * d[1];
        assert!(r1.abs() < 1e-6);
    }
}
