//! Small dense helpers on `&[f64]` points. Bodies live in dimension 2..=3 for
//! polytopes and any dimension for quadrics, so points are plain slices.

use nalgebra::DMatrix;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[inline]
pub fn scale(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|x| x * t).collect()
}

/// `a + t b`
#[inline]
pub fn axpy(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    scale(a, 1.0 / n)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn mat_t_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)] * v[i]).sum())
        .collect()
}

/// Orthonormal basis of `u^⊥` for a unit vector `u`: the columns `j != k` of
/// the Householder reflection sending `e_k` to `±u`, with `k = argmax |u_k|`.
pub fn orthonormal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let k = (0..n)
        .max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
        .unwrap_or(0);
    let s = if u[k] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = u.to_vec();
    v[k] += s;
    let vv = dot(&v, &v);
    (0..n)
        .filter(|&j| j != k)
        .map(|j| {
            let c = 2.0 * v[j] / vv;
            (0..n)
                .map(|i| if i == j { 1.0 } else { 0.0 } - c * v[i])
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        for u in [
            vec![1.0, 0.0],
            vec![0.6, -0.8],
            vec![0.0, 0.0, 1.0],
            normalized(&[1.0, -2.0, 0.5]),
        ] {
            let basis = orthonormal_complement(&u);
            assert_eq!(basis.len(), u.len() - 1);
            for (i, b) in basis.iter().enumerate() {
                assert!(dot(b, &u).abs() < 1e-14);
                assert!((norm(b) - 1.0).abs() < 1e-14);
                for c in &basis[i + 1..] {
                    assert!(dot(b, c).abs() < 1e-14);
                }
            }
        }
    }
}
