//! Antipodally closed direction sets on the sphere with quadrature weights,
//! support vectors over them, and discrete measures.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::quadrature::gauss_legendre;
use crate::special::sphere_area;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct SphericalGrid {
    dim: usize,
    directions: Vec<Vec<f64>>,
    weights: Vec<f64>,
    zonal: bool,
    /// Ring index of each direction (zonal grids only), rings ordered by
    /// decreasing last coordinate.
    ring_of: Vec<usize>,
    n_rings: usize,
    antipode: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRepr {
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub zonal: bool,
}

impl TryFrom<GridRepr> for SphericalGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        SphericalGrid::from_parts(r.directions, r.weights, r.zonal)
    }
}

impl From<SphericalGrid> for GridRepr {
    fn from(g: SphericalGrid) -> Self {
        GridRepr { directions: g.directions, weights: g.weights, zonal: g.zonal }
    }
}

impl SphericalGrid {
    /// Validate and index an explicit direction set. Weights are taken as
    /// given; they must be positive and equal on antipodal pairs.
    pub fn from_parts(directions: Vec<Vec<f64>>, weights: Vec<f64>, zonal: bool) -> Result<Self> {
        let m = directions.len();
        if m == 0 || weights.len() != m {
            return Err(Error::representation("grid directions and weights differ in length"));
        }
        let dim = directions[0].len();
        if dim < 2 || directions.iter().any(|u| u.len() != dim || (norm(u) - 1.0).abs() > 1e-12) {
            return Err(Error::representation("grid directions must be unit vectors of one dimension"));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::representation("grid weights must be positive"));
        }
        let mut antipode = vec![usize::MAX; m];
        for i in 0..m {
            let j = (0..m)
                .find(|&j| directions[i].iter().zip(&directions[j]).all(|(a, b)| (a + b).abs() <= 1e-12))
                .ok_or_else(|| Error::representation("grid is not closed under u -> -u"))?;
            if (weights[i] - weights[j]).abs() > 1e-12 * weights[i] {
                return Err(Error::representation("antipodal grid weights differ"));
            }
            antipode[i] = j;
        }
        let (ring_of, n_rings) = if zonal { rings_by_height(&directions) } else { (vec![0; m], 0) };
        Ok(SphericalGrid { dim, directions, weights, zonal, ring_of, n_rings, antipode })
    }

    /// Zonal grid with `rings` polar rings. In the plane the rings are the
    /// Chebyshev angles `θ_k = (k+½)π/m`, two points each; in space they are
    /// Gauss–Legendre nodes in `cos θ` with `azimuths` points per ring.
    pub fn zonal(dim: usize, rings: usize, azimuths: usize) -> Result<Self> {
        if rings == 0 {
            return Err(Error::representation("need at least one ring"));
        }
        let mut dirs = Vec::new();
        let mut w = Vec::new();
        match dim {
            2 => {
                let wk = PI / rings as f64;
                for k in 0..rings {
                    let t = (k as f64 + 0.5) * PI / rings as f64;
                    let (s, c) = t.sin_cos();
                    dirs.push(vec![s, c]);
                    dirs.push(vec![-s, c]);
                    w.push(wk);
                    w.push(wk);
                }
            }
            3 => {
                if azimuths < 2 || azimuths % 2 == 1 {
                    return Err(Error::representation("azimuth count must be even"));
                }
                let (x, gw) = gauss_legendre(rings);
                // Descending height so ring 0 is nearest the north pole.
                for k in (0..rings).rev() {
                    let c = x[k];
                    let s = (1.0 - c * c).sqrt();
                    for j in 0..azimuths {
                        let phi = (j as f64 + 0.5) * 2.0 * PI / azimuths as f64;
                        dirs.push(vec![s * phi.cos(), s * phi.sin(), c]);
                        w.push(gw[k] * 2.0 * PI / azimuths as f64);
                    }
                }
            }
            _ => {
                return Err(Error::unsupported(format!(
                    "zonal grids are implemented for n = 2, 3 (got n = {dim})"
                )))
            }
        }
        Self::from_parts(dirs, w, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.directions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn is_zonal(&self) -> bool {
        self.zonal
    }
    pub fn n_rings(&self) -> usize {
        self.n_rings
    }
    pub fn ring_of(&self, i: usize) -> usize {
        self.ring_of[i]
    }
    pub fn antipode(&self, i: usize) -> usize {
        self.antipode[i]
    }

    /// Ring `k` and its mirror ring `n_rings-1-k` are antipodal, so an even
    /// ring-constant function is determined by the first `ceil(n_rings/2)`
    /// ring values.
    pub fn n_profile(&self) -> usize {
        self.n_rings.div_ceil(2)
    }

    pub fn profile_index(&self, i: usize) -> usize {
        let k = self.ring_of[i];
        k.min(self.n_rings - 1 - k)
    }

    /// Expand an even zonal profile to values at every direction.
    pub fn expand_profile(&self, profile: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| profile[self.profile_index(i)]).collect()
    }

    /// Sum of values over each profile class.
    pub fn reduce_to_profile(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_profile()];
        for (i, v) in values.iter().enumerate() {
            out[self.profile_index(i)] += v;
        }
        out
    }

    /// Number of directions in each profile class.
    pub fn profile_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_profile()];
        for i in 0..self.len() {
            c[self.profile_index(i)] += 1;
        }
        c
    }

    /// Relative deviation of the weight total from the sphere area.
    pub fn weight_defect(&self) -> f64 {
        let a = sphere_area(self.dim);
        (self.weights.iter().sum::<f64>() - a).abs() / a
    }

    /// Quadrature of `f` against surface measure.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.directions.iter().zip(&self.weights).map(|(u, w)| w * f(u)).sum()
    }

    /// A grid in which direction `i` is replaced by `map(u_i)` (normalized)
    /// with weight `w'_i`; zonal structure is preserved for maps that act
    /// on `x'` by a scalar.
    pub fn pushed(&self, map: impl Fn(&[f64]) -> Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let dirs = self
            .directions
            .iter()
            .map(|u| {
                let v = map(u);
                let l = norm(&v);
                v.iter().map(|x| x / l).collect()
            })
            .collect();
        SphericalGrid::from_parts(dirs, weights, self.zonal)
    }
}

fn rings_by_height(dirs: &[Vec<f64>]) -> (Vec<usize>, usize) {
    let n = dirs[0].len();
    let mut heights: Vec<f64> = dirs.iter().map(|u| u[n - 1]).collect();
    heights.sort_by(|a, b| b.total_cmp(a));
    heights.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    let ring_of = dirs
        .iter()
        .map(|u| {
            heights
                .iter()
                .position(|h| (h - u[n - 1]).abs() <= 1e-12)
                .expect("height present")
        })
        .collect();
    (ring_of, heights.len())
}

/// Positive values of a support function at the directions of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub grid: Arc<SphericalGrid>,
    pub values: Vec<f64>,
}

impl SupportVector {
    pub fn new(grid: Arc<SphericalGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::representation("support vector length differs from grid"));
        }
        if values.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::domain("support values must be positive"));
        }
        Ok(SupportVector { grid, values })
    }

    pub fn of_body(grid: Arc<SphericalGrid>, body: &crate::body::Body) -> Result<Self> {
        let values = grid.directions().iter().map(|u| body.support_unchecked(u)).collect();
        Self::new(grid, values)
    }

    pub fn scaled(&self, t: f64) -> SupportVector {
        SupportVector { grid: self.grid.clone(), values: self.values.iter().map(|h| h * t).collect() }
    }

    /// Largest deviation from ring-constancy and evenness.
    pub fn symmetry_defect(&self) -> f64 {
        let g = &self.grid;
        let mut d: f64 = 0.0;
        for i in 0..g.len() {
            d = d.max((self.values[i] - self.values[g.antipode(i)]).abs());
        }
        if g.is_zonal() {
            let mut first = vec![f64::NAN; g.n_rings()];
            for i in 0..g.len() {
                let k = g.ring_of(i);
                if first[k].is_nan() {
                    first[k] = self.values[i];
                }
                d = d.max((self.values[i] - first[k]).abs());
            }
        }
        d
    }
}

/// Directions with nonnegative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteMeasure {
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(directions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if directions.len() != weights.len() {
            return Err(Error::representation("measure directions and weights differ in length"));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::domain("measure weights must be finite and nonnegative"));
        }
        Ok(DiscreteMeasure { directions, weights })
    }

    pub fn on_grid(grid: &SphericalGrid, weights: Vec<f64>) -> Result<Self> {
        Self::new(grid.directions().to_vec(), weights)
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w_i u_i`.
    pub fn first_moment(&self) -> Vec<f64> {
        let n = self.directions.first().map_or(0, |u| u.len());
        let mut m = vec![0.0; n];
        for (u, w) in self.directions.iter().zip(&self.weights) {
            for (a, b) in m.iter_mut().zip(u) {
                *a += w * b;
            }
        }
        m
    }

    /// Largest relative difference between antipodal weights.
    pub fn evenness_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, u) in self.directions.iter().enumerate() {
            if let Some(j) = self
                .directions
                .iter()
                .position(|v| u.iter().zip(v).all(|(a, b)| (a + b).abs() <= 1e-12))
            {
                let s = self.weights[i].max(self.weights[j]);
                if s > 0.0 {
                    d = d.max((self.weights[i] - self.weights[j]).abs() / s);
                }
            } else {
                return f64::INFINITY;
            }
        }
        d
    }

    pub fn pair(&self, g: &[f64]) -> f64 {
        dot(&self.weights, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_zonal_grid() {
        let g = SphericalGrid::zonal(2, 64, 0).unwrap();
        assert_eq!(g.len(), 128);
        assert_eq!(g.n_rings(), 64);
        assert_eq!(g.n_profile(), 32);
        assert!(g.weight_defect() < 1e-12);
        // No direction on an axis.
        assert!(g.directions().iter().all(|u| u[0].abs() > 1e-3 && u[1].abs() > 1e-3));
        for i in 0..g.len() {
            let j = g.antipode(i);
            assert_eq!(g.profile_index(i), g.profile_index(j));
        }
    }

    #[test]
    fn spatial_zonal_grid() {
        let g = SphericalGrid::zonal(3, 12, 16).unwrap();
        assert_eq!(g.len(), 192);
        assert!(g.weight_defect() < 1e-12);
        // Second moments of the uniform measure: ∫ x_i² = 4π/3.
        let m = g.integrate(|u| u[2] * u[2]);
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-12);
        let m = g.integrate(|u| u[0] * u[0]);
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn non_closed_grid_rejected() {
        let r = SphericalGrid::from_parts(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0], false);
        assert!(r.is_err());
    }
}
