//! Small dense helpers for points in R^n with n <= 3 and tiny least-squares systems.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a + t * b`
pub fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|x| t * x).collect()
}

/// Row-major `n x n` matrix times vector.
pub fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// Quadratic form `v^T M v` for a row-major `n x n` matrix.
pub fn quad_form(m: &[f64], v: &[f64]) -> f64 {
    dot(v, &mat_vec(m, v))
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when the system is numerically singular.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[piv * n + col].abs() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Lexicographic comparison of points, used as the deterministic tie-break.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// An orthonormal basis of the orthogonal complement of the unit vector `v`.
pub fn tangent_basis(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n {
        if basis.len() + 1 == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let mut w = axpy(&e, -dot(&e, v), v);
        for b in &basis {
            w = axpy(&w, -dot(&w, b), b);
        }
        let nw = norm(&w);
        if nw > 1e-8 {
            basis.push(scale(&w, 1.0 / nw));
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = vec![2.0, 1.0, 1.0, 3.0];
        let x = solve(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn singular_system_is_rejected() {
        assert!(solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let v = [0.6, 0.0, 0.8];
        let b = tangent_basis(&v);
        assert_eq!(b.len(), 2);
        for (i, bi) in b.iter().enumerate() {
            assert!(dot(bi, &v).abs() < 1e-14);
            assert!((norm(bi) - 1.0).abs() < 1e-14);
            for bj in &b[i + 1..] {
                assert!(dot(bi, bj).abs() < 1e-14);
            }
        }
    }
}
