//! Convex polytopes in the plane and in space, stored with both
//! representations: unit facet normals with offsets, and vertices with
//! per-facet vertex cycles.

use crate::consts::{DEGENERACY_VOL, HULL_TOL, MEMBERSHIP_TOL, UNIT_TOL};
use crate::error::{Error, Result};
use crate::hull::{hull_2d, hull_3d, order_around};
use crate::linalg::{cross3, dot, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    vertices: Vec<Vec<f64>>,
    /// Vertex cycle of each facet, counter-clockwise seen from outside.
    /// In the plane facet `k` is the edge `[k, k+1 mod m]`.
    facets: Vec<Vec<usize>>,
    /// For each facet, the index of the input halfspace it came from.
    labels: Vec<usize>,
}

fn normalize_if_needed(u: &[f64]) -> Result<Vec<f64>> {
    let s = dot(u, u);
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::representation("zero or non-finite normal"));
    }
    // Leave exactly-unit input untouched so serialization round trips are exact.
    if (s - 1.0).abs() <= 1e-14 {
        Ok(u.to_vec())
    } else {
        let l = s.sqrt();
        Ok(u.iter().map(|x| x / l).collect())
    }
}

impl Polytope {
    /// Intersection of the halfspaces `x·u_i ≤ h_i`, with `h_i > 0`.
    /// Redundant halfspaces (and ones touching in lower-dimensional faces)
    /// are dropped; `labels()` maps the surviving facets back to input indices.
    pub fn from_halfspaces(normals: &[Vec<f64>], offsets: &[f64]) -> Result<Self> {
        if normals.len() != offsets.len() || normals.is_empty() {
            return Err(Error::representation("normals and offsets differ in length"));
        }
        let dim = normals[0].len();
        if normals.iter().any(|u| u.len() != dim) {
            return Err(Error::representation("mixed dimensions in normals"));
        }
        if offsets.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::representation(
                "offsets must be positive (origin in the interior)",
            ));
        }
        let units: Vec<Vec<f64>> = normals.iter().map(|u| normalize_if_needed(u)).collect::<Result<_>>()?;
        match dim {
            2 => Self::halfspaces_2d(units, offsets),
            3 => Self::halfspaces_3d(units, offsets),
            _ => Err(Error::unsupported(format!(
                "polytopes are implemented for n = 2, 3 (got n = {dim})"
            ))),
        }
    }

    fn halfspaces_2d(units: Vec<Vec<f64>>, offsets: &[f64]) -> Result<Self> {
        let dual: Vec<[f64; 2]> = units
            .iter()
            .zip(offsets)
            .map(|(u, h)| [u[0] / h, u[1] / h])
            .collect();
        let hull = hull_2d(&dual);
        if hull.len() < 3 {
            return Err(Error::representation("normals lie in a closed half-plane"));
        }
        let m = hull.len();
        let scale = dual.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
        for k in 0..m {
            let a = dual[hull[k]];
            let b = dual[hull[(k + 1) % m]];
            // Signed distance of the origin to the dual edge; nonpositive means
            // the origin is not interior to the dual hull, i.e. unbounded primal.
            let cr = a[0] * b[1] - a[1] * b[0];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            if cr / len <= HULL_TOL * scale {
                return Err(Error::representation(
                    "unbounded intersection: normals lie in a closed half-plane",
                ));
            }
        }
        let normals: Vec<Vec<f64>> = hull.iter().map(|&i| units[i].clone()).collect();
        let offs: Vec<f64> = hull.iter().map(|&i| offsets[i]).collect();
        let mut vertices = Vec::with_capacity(m);
        for k in 0..m {
            let a = (k + m - 1) % m;
            vertices.push(intersect_lines(&normals[a], offs[a], &normals[k], offs[k]));
        }
        let facets = (0..m).map(|k| vec![k, (k + 1) % m]).collect();
        let p = Polytope { dim: 2, normals, offsets: offs, vertices, facets, labels: hull };
        p.check_volume()?;
        Ok(p)
    }

    fn halfspaces_3d(units: Vec<Vec<f64>>, offsets: &[f64]) -> Result<Self> {
        let dual: Vec<[f64; 3]> = units
            .iter()
            .zip(offsets)
            .map(|(u, h)| [u[0] / h, u[1] / h, u[2] / h])
            .collect();
        let hull = hull_3d(&dual).map_err(|_| Error::representation("normals lie in a closed hemisphere"))?;
        let scale = dual.iter().map(|p| norm(p)).fold(0.0, f64::max);
        let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(hull.facets.len());
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); dual.len()];
        for f in &hull.facets {
            if f.offset <= HULL_TOL * scale {
                return Err(Error::representation(
                    "unbounded intersection: normals lie in a closed hemisphere",
                ));
            }
            let vi = vertices.len();
            vertices.push(f.normal.iter().map(|x| x / f.offset).collect());
            for &d in &f.vertices {
                incident[d].push(vi);
            }
        }
        let mut normals = Vec::new();
        let mut offs = Vec::new();
        let mut facets = Vec::new();
        let mut labels = Vec::new();
        let pts: Vec<[f64; 3]> = vertices.iter().map(|v| [v[0], v[1], v[2]]).collect();
        for (i, inc) in incident.iter().enumerate() {
            if inc.len() < 3 {
                continue;
            }
            let u = [units[i][0], units[i][1], units[i][2]];
            let cycle = order_around(&pts, inc, u);
            if polygon_area_3d(&pts, &cycle, u) <= DEGENERACY_VOL {
                continue;
            }
            normals.push(units[i].clone());
            offs.push(offsets[i]);
            facets.push(cycle);
            labels.push(i);
        }
        let p = Polytope { dim: 3, normals, offsets: offs, vertices, facets, labels };
        p.check_volume()?;
        Ok(p)
    }

    /// Convex hull of a finite point set.
    pub fn from_vertices(points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::representation("empty vertex list"));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
            return Err(Error::representation("malformed vertex list"));
        }
        match dim {
            2 => {
                let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
                let h = hull_2d(&pts);
                if h.len() < 3 {
                    return Err(Error::degenerate("vertex set is not full-dimensional"));
                }
                let vertices: Vec<Vec<f64>> = h.iter().map(|&i| points[i].clone()).collect();
                let m = vertices.len();
                let mut normals = Vec::with_capacity(m);
                let mut offsets = Vec::with_capacity(m);
                for k in 0..m {
                    let a = &vertices[k];
                    let b = &vertices[(k + 1) % m];
                    let e = [b[0] - a[0], b[1] - a[1]];
                    let l = e[0].hypot(e[1]);
                    let u = vec![e[1] / l, -e[0] / l];
                    offsets.push(dot(&u, a));
                    normals.push(u);
                }
                let facets = (0..m).map(|k| vec![k, (k + 1) % m]).collect();
                let p = Polytope { dim, normals, offsets, vertices, facets, labels: (0..m).collect() };
                p.check_volume()?;
                Ok(p)
            }
            3 => {
                let pts: Vec<[f64; 3]> = points.iter().map(|p| [p[0], p[1], p[2]]).collect();
                let h = hull_3d(&pts)?;
                // Keep only points that are corners of some facet polygon.
                let mut used: Vec<usize> = h.facets.iter().flat_map(|f| f.vertices.iter().copied()).collect();
                used.sort_unstable();
                used.dedup();
                let mut remap = vec![usize::MAX; points.len()];
                for (new, &old) in used.iter().enumerate() {
                    remap[old] = new;
                }
                let vertices: Vec<Vec<f64>> = used.iter().map(|&i| points[i].clone()).collect();
                let normals = h.facets.iter().map(|f| f.normal.to_vec()).collect();
                let offsets = h.facets.iter().map(|f| f.offset).collect();
                let facets = h
                    .facets
                    .iter()
                    .map(|f| f.vertices.iter().map(|&v| remap[v]).collect())
                    .collect();
                let m = h.facets.len();
                let p = Polytope { dim, normals, offsets, vertices, facets, labels: (0..m).collect() };
                p.check_volume()?;
                Ok(p)
            }
            _ => Err(Error::unsupported(format!(
                "polytopes are implemented for n = 2, 3 (got n = {dim})"
            ))),
        }
    }

    fn check_volume(&self) -> Result<()> {
        let v = self.volume();
        if !(v > DEGENERACY_VOL) {
            return Err(Error::degenerate(format!("polytope volume {v:e}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }
    pub fn facets(&self) -> &[Vec<usize>] {
        &self.facets
    }
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
    pub fn n_facets(&self) -> usize {
        self.normals.len()
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Vertex attaining the support in direction `u`; ties go to the
    /// lexicographically smallest vertex.
    pub fn support_point(&self, u: &[f64]) -> &[f64] {
        let h = self.support(u);
        let tol = UNIT_TOL * (1.0 + h.abs());
        self.vertices
            .iter()
            .filter(|v| dot(v, u) >= h - tol)
            .min_by(|a, b| {
                a.iter()
                    .zip(b.iter())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("polytope has vertices")
    }

    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    fn scale_tol(&self) -> f64 {
        MEMBERSHIP_TOL * self.circumradius().max(1.0)
    }

    /// Largest violation `max_i (u_i·z − h_i)`; nonpositive inside.
    pub fn violation(&self, z: &[f64]) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(u, h)| dot(u, z) - h)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.violation(z) <= self.scale_tol()
    }

    pub fn radial(&self, z: &[f64], u: &[f64]) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::domain("base point lies outside the body"));
        }
        let mut t = f64::INFINITY;
        for (n, h) in self.normals.iter().zip(&self.offsets) {
            let c = dot(n, u);
            if c > 0.0 {
                t = t.min(((h - dot(n, z)) / c).max(0.0));
            }
        }
        Ok(t)
    }

    /// Parameter interval of `{t : z + t u ∈ K}`, if non-empty.
    pub fn clip(&self, z: &[f64], u: &[f64]) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (n, h) in self.normals.iter().zip(&self.offsets) {
            let c = dot(n, u);
            let r = h - dot(n, z);
            if c > 0.0 {
                hi = hi.min(r / c);
            } else if c < 0.0 {
                lo = lo.max(r / c);
            } else if r < 0.0 {
                return None;
            }
            if lo >= hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    pub fn xray(&self, z: &[f64], u: &[f64]) -> f64 {
        self.clip(z, u).map_or(0.0, |(a, b)| b - a)
    }

    /// `(n−1)`-volume of every facet.
    pub fn facet_areas(&self) -> Vec<f64> {
        match self.dim {
            2 => self
                .facets
                .iter()
                .map(|f| {
                    let a = &self.vertices[f[0]];
                    let b = &self.vertices[f[1]];
                    (b[0] - a[0]).hypot(b[1] - a[1])
                })
                .collect(),
            _ => {
                let pts = self.points3();
                self.facets
                    .iter()
                    .zip(&self.normals)
                    .map(|(f, u)| polygon_area_3d(&pts, f, [u[0], u[1], u[2]]))
                    .collect()
            }
        }
    }

    fn points3(&self) -> Vec<[f64; 3]> {
        self.vertices.iter().map(|v| [v[0], v[1], v[2]]).collect()
    }

    /// Cone-volume identity `V = (1/n) Σ h_i |F_i|`, valid for any origin.
    pub fn volume(&self) -> f64 {
        let areas = self.facet_areas();
        let s: f64 = areas.iter().zip(&self.offsets).map(|(a, h)| a * h).sum();
        s / self.dim as f64
    }

    pub fn centroid(&self) -> Vec<f64> {
        match self.dim {
            2 => {
                let m = self.vertices.len();
                let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
                for k in 0..m {
                    let p = &self.vertices[k];
                    let q = &self.vertices[(k + 1) % m];
                    let c = p[0] * q[1] - q[0] * p[1];
                    a += c;
                    cx += (p[0] + q[0]) * c;
                    cy += (p[1] + q[1]) * c;
                }
                vec![cx / (3.0 * a), cy / (3.0 * a)]
            }
            _ => {
                let pts = self.points3();
                let o = self.vertices.iter().fold(vec![0.0; 3], |acc, v| {
                    acc.iter().zip(v).map(|(x, y)| x + y).collect()
                });
                let o: Vec<f64> = o.iter().map(|x| x / self.vertices.len() as f64).collect();
                let mut vol = 0.0;
                let mut c = [0.0; 3];
                for f in &self.facets {
                    let a = pts[f[0]];
                    for w in 1..f.len() - 1 {
                        let b = pts[f[w]];
                        let d = pts[f[w + 1]];
                        let e1 = [a[0] - o[0], a[1] - o[1], a[2] - o[2]];
                        let e2 = [b[0] - o[0], b[1] - o[1], b[2] - o[2]];
                        let e3 = [d[0] - o[0], d[1] - o[1], d[2] - o[2]];
                        let v = dot(&e1, &cross3(&e2, &e3)) / 6.0;
                        vol += v;
                        for j in 0..3 {
                            c[j] += v * (o[j] + a[j] + b[j] + d[j]) / 4.0;
                        }
                    }
                }
                c.iter().map(|x| x / vol).collect()
            }
        }
    }

    /// Translate by `t`.
    pub fn translate(&self, t: &[f64]) -> Polytope {
        let mut p = self.clone();
        for v in &mut p.vertices {
            for (x, d) in v.iter_mut().zip(t) {
                *x += d;
            }
        }
        for (u, h) in p.normals.iter().zip(p.offsets.iter_mut()) {
            *h += dot(u, t);
        }
        p
    }

    /// Dilate about the origin by `t > 0`.
    pub fn dilate(&self, t: f64) -> Polytope {
        let mut p = self.clone();
        for v in &mut p.vertices {
            for x in v.iter_mut() {
                *x *= t;
            }
        }
        for h in &mut p.offsets {
            *h *= t;
        }
        p
    }

    /// Image under the linear map `a` (row-major `n×n`, invertible).
    pub fn linear_image(&self, a: &nalgebra::DMatrix<f64>) -> Result<Polytope> {
        let inv_t = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::domain("singular matrix"))?
            .transpose();
        let verts: Vec<Vec<f64>> = self.vertices.iter().map(|v| crate::linalg::mat_vec(a, v)).collect();
        if self.offsets.iter().all(|&h| h > 0.0) {
            // Keep the facet labels: x·u ≤ h  ⇔  (Ax)·(A^{-T}u) ≤ h.
            let mut normals = Vec::with_capacity(self.normals.len());
            let mut offsets = Vec::with_capacity(self.normals.len());
            for (u, h) in self.normals.iter().zip(&self.offsets) {
                let w = crate::linalg::mat_vec(&inv_t, u);
                let l = norm(&w);
                normals.push(w.iter().map(|x| x / l).collect::<Vec<_>>());
                offsets.push(h / l);
            }
            let mut p = Polytope::from_halfspaces(&normals, &offsets)?;
            p.labels = p.labels.iter().map(|&i| self.labels[i]).collect();
            Ok(p)
        } else {
            Polytope::from_vertices(&verts)
        }
    }

    pub fn is_origin_symmetric(&self, tol: f64) -> bool {
        let s = tol * self.circumradius().max(1.0);
        self.vertices.iter().all(|v| {
            self.vertices
                .iter()
                .any(|w| v.iter().zip(w).all(|(x, y)| (x + y).abs() <= s))
        })
    }
}

fn intersect_lines(u: &[f64], h: f64, v: &[f64], g: f64) -> Vec<f64> {
    let det = u[0] * v[1] - u[1] * v[0];
    vec![(h * v[1] - g * u[1]) / det, (u[0] * g - v[0] * h) / det]
}

fn polygon_area_3d(pts: &[[f64; 3]], cycle: &[usize], normal: [f64; 3]) -> f64 {
    let mut s = [0.0; 3];
    for k in 0..cycle.len() {
        let a = pts[cycle[k]];
        let b = pts[cycle[(k + 1) % cycle.len()]];
        let c = cross3(&a, &b);
        for j in 0..3 {
            s[j] += c[j];
        }
    }
    0.5 * dot(&s, &normal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polytope {
        Polytope::from_halfspaces(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            &[1.0; 4],
        )
        .unwrap()
    }

    #[test]
    fn square_from_halfspaces() {
        let p = square();
        assert_eq!(p.vertices().len(), 4);
        assert!((p.volume() - 4.0).abs() < 1e-14);
        assert!(p.facet_areas().iter().all(|a| (a - 2.0).abs() < 1e-14));
        let c = p.centroid();
        assert!(norm(&c) < 1e-14);
    }

    #[test]
    fn redundant_halfspace_is_dropped() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = Polytope::from_halfspaces(
            &[
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
                vec![s, s],
            ],
            &[1.0, 1.0, 1.0, 1.0, 2.0],
        )
        .unwrap();
        assert_eq!(p.n_facets(), 4);
        assert!((p.support(&[s, s]) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn unbounded_is_rejected() {
        let r = Polytope::from_halfspaces(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]], &[1.0; 3]);
        assert!(matches!(r, Err(Error::Representation(_))));
    }

    #[test]
    fn cube_both_ways() {
        let mut normals = Vec::new();
        for j in 0..3 {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; 3];
                u[j] = s;
                normals.push(u);
            }
        }
        let p = Polytope::from_halfspaces(&normals, &[1.0; 6]).unwrap();
        assert_eq!(p.vertices().len(), 8);
        assert!((p.volume() - 8.0).abs() < 1e-12);
        assert!(p.facet_areas().iter().all(|a| (a - 4.0).abs() < 1e-12));
        let q = Polytope::from_vertices(p.vertices()).unwrap();
        assert!((q.volume() - 8.0).abs() < 1e-12);
        assert!(norm(&q.centroid()) < 1e-12);
    }

    #[test]
    fn xray_and_radial_of_square() {
        let p = square();
        assert!((p.xray(&[0.0, 0.5], &[1.0, 0.0]) - 2.0).abs() < 1e-14);
        assert_eq!(p.xray(&[5.0, 5.0], &[1.0, 0.0]), 0.0);
        assert!((p.radial(&[1.0, 0.0], &[-1.0, 0.0]).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(p.radial(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(p.radial(&[2.0, 0.0], &[1.0, 0.0]).is_err());
    }
}
