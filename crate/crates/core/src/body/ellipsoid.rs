use crate::consts::{MEMBERSHIP_TOL, ORTHO_TOL};
use crate::error::{Error, Result};
use crate::linalg::{dot, mat_t_vec, mat_vec, norm};
use crate::special::omega;
use nalgebra::DMatrix;

/// `{ c + R diag(a) y : |y| ≤ 1 }` with `a` ascending and `R` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    semi_axes: Vec<f64>,
    rotation: DMatrix<f64>,
    center: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(semi_axes: Vec<f64>, rotation: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        let n = semi_axes.len();
        if n < 1 || rotation.nrows() != n || rotation.ncols() != n || center.len() != n {
            return Err(Error::representation("ellipsoid shape mismatch"));
        }
        if semi_axes.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::representation("semi-axes must be positive"));
        }
        let dev = (rotation.transpose() * &rotation - DMatrix::identity(n, n)).abs().max();
        if dev > ORTHO_TOL * 10.0 * n as f64 {
            return Err(Error::representation(format!("rotation not orthogonal (deviation {dev:e})")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| semi_axes[i].total_cmp(&semi_axes[j]));
        let a = order.iter().map(|&i| semi_axes[i]).collect();
        let r = DMatrix::from_fn(n, n, |i, j| rotation[(i, order[j])]);
        Ok(Ellipsoid { semi_axes: a, rotation: r, center })
    }

    pub fn axis_aligned(semi_axes: Vec<f64>) -> Result<Self> {
        let n = semi_axes.len();
        Self::new(semi_axes, DMatrix::identity(n, n), vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.semi_axes.len()
    }
    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }
    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Coordinates in which the ellipsoid is the unit ball.
    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        let y = mat_t_vec(&self.rotation, x);
        y.iter().zip(&self.semi_axes).map(|(v, a)| v / a).collect()
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        let y = mat_t_vec(&self.rotation, u);
        let s: f64 = y.iter().zip(&self.semi_axes).map(|(v, a)| (v * a).powi(2)).sum();
        dot(&self.center, u) + s.sqrt()
    }

    /// Roots of `|y0 + t d|² = 1` in unit coordinates.
    fn clip(&self, z: &[f64], u: &[f64]) -> Option<(f64, f64)> {
        let zc: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let y0 = self.to_unit(&zc);
        let d = self.to_unit(u);
        let a = dot(&d, &d);
        let b = dot(&y0, &d);
        let c = dot(&y0, &y0) - 1.0;
        let disc = b * b - a * c;
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // Stable roots.
        let qv = -(b + b.signum() * s);
        let (r1, r2) = if qv != 0.0 { (qv / a, c / qv) } else { (-s / a, s / a) };
        Some((r1.min(r2), r1.max(r2)))
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        let zc: Vec<f64> = z.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let y = self.to_unit(&zc);
        norm(&y) <= 1.0 + MEMBERSHIP_TOL
    }

    pub fn radial(&self, z: &[f64], u: &[f64]) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::domain("base point lies outside the body"));
        }
        Ok(self.clip(z, u).map_or(0.0, |(_, t)| t.max(0.0)))
    }

    pub fn xray(&self, z: &[f64], u: &[f64]) -> f64 {
        self.clip(z, u).map_or(0.0, |(a, b)| b - a)
    }

    pub fn volume(&self) -> f64 {
        omega(self.dim() as f64) * self.semi_axes.iter().product::<f64>()
    }

    pub fn circumradius(&self) -> f64 {
        norm(&self.center) + self.semi_axes.last().copied().unwrap_or(0.0)
    }

    /// Image under an invertible linear map, via the SVD of `A R diag(a)`.
    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Ellipsoid> {
        let n = self.dim();
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.semi_axes.clone()));
        let t = m * &self.rotation * a;
        let svd = t.svd(true, false);
        let u = svd.u.ok_or_else(|| Error::degenerate("svd failed"))?;
        let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        if sv.iter().any(|&s| s <= 0.0) || sv.len() != n {
            return Err(Error::domain("singular matrix"));
        }
        Ellipsoid::new(sv, u, mat_vec(m, &self.center))
    }

    pub fn translate(&self, t: &[f64]) -> Ellipsoid {
        let mut e = self.clone();
        for (c, d) in e.center.iter_mut().zip(t) {
            *c += d;
        }
        e
    }

    pub fn dilate(&self, t: f64) -> Ellipsoid {
        Ellipsoid {
            semi_axes: self.semi_axes.iter().map(|a| a * t).collect(),
            rotation: self.rotation.clone(),
            center: self.center.iter().map(|c| c * t).collect(),
        }
    }
}
