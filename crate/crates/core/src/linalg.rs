//! Small dense helpers for vectors and matrices of dimension at most eight.
//!
//! Matrices are row-major `&[f64]` slices of length `n * n`.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales `a` to unit length in place and returns the original norm.
pub fn normalize(a: &mut [f64]) -> f64 {
    let len = norm(a);
    if len > 0.0 {
        a.iter_mut().for_each(|x| *x /= len);
    }
    len
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Determinant by Gaussian elimination with partial pivoting. Destroys `m`.
pub fn det_in_place(m: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(m.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs()))
            .unwrap();
        let p = m[pivot * n + col];
        if p == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        det *= p;
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    m[row * n + k] -= factor * m[col * n + k];
                }
            }
        }
    }
    det
}

pub fn det(m: &[f64], n: usize) -> f64 {
    match n {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => det_in_place(&mut m.to_vec(), n),
    }
}

/// Solves `m x = b` in place (`b` becomes `x`). Returns `None` for a singular system.
pub fn solve_in_place(m: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &c| m[a * n + col].abs().total_cmp(&m[c * n + col].abs()))
            .unwrap();
        let p = m[pivot * n + col];
        if p == 0.0 || !p.is_finite() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    m[row * n + k] -= factor * m[col * n + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * b[k];
        }
        b[row] = acc / m[row * n + row];
    }
    Some(())
}

/// Normal vector (not normalized) of the hyperplane through `n` points in
/// R^n, via cofactor expansion of the edge matrix.
pub fn hyperplane_normal(points: &[&[f64]]) -> Vec<f64> {
    let n = points.len();
    let base = points[0];
    if n == 2 {
        let (dx, dy) = (points[1][0] - base[0], points[1][1] - base[1]);
        return vec![dy, -dx];
    }
    if n == 3 {
        let a = sub(points[1], base);
        let b = sub(points[2], base);
        return vec![
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
    }
    let m = n - 1;
    let edges: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, base)).collect();
    let mut minor = vec![0.0; m * m];
    (0..n)
        .map(|skip| {
            for (r, e) in edges.iter().enumerate() {
                let mut c = 0;
                for (k, &v) in e.iter().enumerate() {
                    if k != skip {
                        minor[r * m + c] = v;
                        c += 1;
                    }
                }
            }
            let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
            sign * det_in_place(&mut minor.clone(), m)
        })
        .collect()
}

/// Orthonormal basis of the orthogonal complement of the unit vector `u`.
pub fn complement_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut axes: Vec<usize> = (0..n).collect();
    axes.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
    for &axis in &axes {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for _ in 0..2 {
            let p = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        if normalize(&mut v) > 1e-6 {
            basis.push(v);
        }
    }
    basis
}
