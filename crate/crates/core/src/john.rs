//! Enclosing (Löwner) ellipsoids of origin-symmetric bodies.

use crate::body::{Body, Ellipsoid};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

const MAX_ITER: usize = 500;
const TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct JohnDecomposition {
    #[serde(skip)]
    pub ellipsoid: Ellipsoid,
    pub semi_axes: Vec<f64>,
    /// `E/√n ⊆ K ⊆ E` for symmetric `K`.
    pub shrink_factor: f64,
    /// `A = diag(r a^{1/n}, …, r a^{1/n}, r a^{(1-n)/n})` when `E` is
    /// rotationally symmetric about the last axis.
    pub r: Option<f64>,
    pub a: Option<f64>,
    pub iterations: usize,
}

/// Minimum-volume centred ellipsoid containing `±points`, by Khachiyan's
/// multiplicative weight updates, then dilated so every point is inside.
fn centred_mvee(points: &[Vec<f64>]) -> Result<(DMatrix<f64>, usize)> {
    let n = points[0].len();
    let m = points.len();
    let x: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_column_slice(p)).collect();
    let mut u = vec![1.0 / m as f64; m];
    let mut iters = 0;
    let mut xinv = DMatrix::zeros(n, n);
    for it in 0..=MAX_ITER {
        let mut s = DMatrix::zeros(n, n);
        for (xi, ui) in x.iter().zip(&u) {
            s += *ui * xi * xi.transpose();
        }
        xinv = s
            .try_inverse()
            .ok_or_else(|| Error::degenerate("vertex set is not full-dimensional"))?;
        let g: Vec<f64> = x.iter().map(|xi| (xi.transpose() * &xinv * xi)[(0, 0)]).collect();
        let (j, &kappa) = g
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        iters = it;
        if kappa <= n as f64 * (1.0 + TOL) || it == MAX_ITER {
            break;
        }
        let step = (kappa - n as f64) / (n as f64 * (kappa - 1.0));
        for v in u.iter_mut() {
            *v *= 1.0 - step;
        }
        u[j] += step;
    }
    // Scale so that max_i x_iᵀ P x_i = 1.
    let gmax = x
        .iter()
        .map(|xi| (xi.transpose() * &xinv * xi)[(0, 0)])
        .fold(0.0, f64::max);
    Ok((xinv / gmax, iters))
}

pub fn john_ellipsoid(body: &Body) -> Result<JohnDecomposition> {
    let n = body.dim();
    let scale = body.circumradius().max(1.0);
    if !body.is_origin_symmetric(1e-9 * scale) {
        return Err(Error::unsupported("john_ellipsoid needs an origin-symmetric body"));
    }
    let (ellipsoid, iterations) = match body {
        Body::Ball(b) => (Ellipsoid::new(vec![b.radius; n], DMatrix::identity(n, n), vec![0.0; n])?, 0),
        Body::Ellipsoid(e) => (e.clone(), 0),
        Body::Polytope(p) => {
            let (pm, it) = centred_mvee(p.vertices())?;
            let eig = pm.symmetric_eigen();
            let axes: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
            (Ellipsoid::new(axes, eig.eigenvectors, vec![0.0; n])?, it)
        }
    };
    let (r, a) = rotational_parameters(&ellipsoid);
    Ok(JohnDecomposition {
        semi_axes: ellipsoid.semi_axes().to_vec(),
        ellipsoid,
        shrink_factor: 1.0 / (n as f64).sqrt(),
        r,
        a,
        iterations,
    })
}

fn rotational_parameters(e: &Ellipsoid) -> (Option<f64>, Option<f64>) {
    let n = e.dim();
    let rot = e.rotation();
    // Axis aligned with e_n.
    let k = (0..n).max_by(|&i, &j| rot[(n - 1, i)].abs().total_cmp(&rot[(n - 1, j)].abs()));
    let Some(k) = k else { return (None, None) };
    if rot[(n - 1, k)].abs() < 1.0 - 1e-8 {
        return (None, None);
    }
    let rn = e.semi_axes()[k];
    let others: Vec<f64> = (0..n).filter(|&i| i != k).map(|i| e.semi_axes()[i]).collect();
    let r1 = others[0];
    if others.iter().any(|x| (x - r1).abs() > 1e-6 * r1) {
        return (None, None);
    }
    let nf = n as f64;
    let a = r1 / rn;
    let r = r1 * a.powf(-1.0 / nf);
    (Some(r), Some(a))
}

impl JohnDecomposition {
    /// `|A x|` for the rotational parametrization.
    pub fn a_norm(&self, x: &[f64]) -> Option<f64> {
        let (r, a) = (self.r?, self.a?);
        let n = x.len();
        let nf = n as f64;
        let d1 = r * a.powf(1.0 / nf);
        let dn = r * a.powf((1.0 - nf) / nf);
        let s: f64 = x[..n - 1].iter().map(|v| (d1 * v).powi(2)).sum::<f64>() + (dn * x[n - 1]).powi(2);
        Some(s.sqrt())
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        self.ellipsoid.support(u)
    }

    /// Worst violation of `(1/n) h_E ≤ h_K ≤ h_E` over the given directions
    /// (nonpositive when the sandwich holds).
    pub fn sandwich_violation(&self, body: &Body, dirs: &[Vec<f64>]) -> f64 {
        let n = body.dim() as f64;
        dirs.iter()
            .map(|u| {
                let he = self.support(u);
                let hk = body.support_unchecked(u);
                (hk - he).max(he / n - hk) / he
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_is_its_own_john_ellipsoid() {
        let j = john_ellipsoid(&Body::unit_ball(2)).unwrap();
        assert_eq!(j.semi_axes, vec![1.0, 1.0]);
        assert!((j.r.unwrap() - 1.0).abs() < 1e-15);
        assert!((j.a.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_gives_circumscribed_circle() {
        let j = john_ellipsoid(&Body::cube(2, 1.0).unwrap()).unwrap();
        for a in &j.semi_axes {
            assert!((a - 2f64.sqrt()).abs() < 1e-6, "{a}");
        }
    }

    #[test]
    fn thin_ellipse_parameters() {
        let eps = 0.2;
        let e = Ellipsoid::axis_aligned(vec![eps, 1.0]).unwrap();
        let j = john_ellipsoid(&Body::Ellipsoid(e)).unwrap();
        let (r, a) = (j.r.unwrap(), j.a.unwrap());
        assert!((r * a.sqrt() - eps).abs() < 1e-14);
        assert!((r / a.sqrt() - 1.0).abs() < 1e-14);
        for t in [0.1f64, 0.7, 2.0] {
            let u = [t.cos(), t.sin()];
            assert!((j.a_norm(&u).unwrap() - j.support(&u)).abs() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let b = Body::cube(2, 1.0).unwrap().translate(&[0.3, 0.0]);
        assert!(matches!(john_ellipsoid(&b), Err(Error::Unsupported(_))));
    }
}
