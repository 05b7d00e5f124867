//! Chord measures of polytopes:
//! `F_q(K, {u_k}) = (2q/ω_n) ∫_{facet k} Ṽ_{q-1}(K, z) dz`.

use super::dual::{hemisphere_radial_integral, polygon_radial_integral, PlanarWeight};
use super::{Estimate, Method};
use crate::body::Polytope;
use crate::error::{Error, Result};
use crate::grid::DiscreteMeasure;
use crate::quadrature::gauss_legendre_cached;
use crate::special::omega;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Resolution {
    /// Gauss–Legendre nodes per edge panel (planar) or subdivisions per
    /// triangle side (spatial facets).
    pub facet_nodes: usize,
    /// Planar edges are cut at `L/2^j` from both ends, `j = 1..=grading`.
    pub edge_grading: usize,
    /// Hemisphere rule at spatial facet points.
    pub sphere_rings: usize,
    pub sphere_azimuths: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { facet_nodes: 8, edge_grading: 3, sphere_rings: 16, sphere_azimuths: 32 }
    }
}

fn edge_panels(grading: usize) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0, 1.0];
    for j in 1..=grading {
        let t = 0.5f64.powi(j as i32);
        cuts.push(t);
        cuts.push(1.0 - t);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Nodes and weights of the facet rule on edge `k` of a polygon.
pub(crate) fn edge_rule(p: &Polytope, k: usize, res: &Resolution) -> Vec<(Vec<f64>, f64)> {
    let f = &p.facets()[k];
    let a = &p.vertices()[f[0]];
    let b = &p.vertices()[f[1]];
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let (x, w) = gauss_legendre_cached(res.facet_nodes);
    let mut out = Vec::new();
    for (lo, hi) in edge_panels(res.edge_grading) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (xi, wi) in x.iter().zip(w) {
            let t = mid + half * xi;
            out.push((vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], wi * half * len));
        }
    }
    out
}

/// Nodes and weights of the facet rule on a spatial facet: fan triangulation
/// from the vertex mean, each triangle cut into `r²` similar pieces sampled
/// at their centroids.
pub(crate) fn facet_rule_3d(p: &Polytope, k: usize, r: usize) -> Vec<(Vec<f64>, f64)> {
    let f = &p.facets()[k];
    let v = p.vertices();
    let m = f.len() as f64;
    let c: Vec<f64> = (0..3).map(|j| f.iter().map(|&i| v[i][j]).sum::<f64>() / m).collect();
    let rf = r as f64;
    let mut out = Vec::new();
    for e in 0..f.len() {
        let a = &v[f[e]];
        let b = &v[f[(e + 1) % f.len()]];
        let ab: Vec<f64> = (0..3).map(|j| a[j] - c[j]).collect();
        let ac: Vec<f64> = (0..3).map(|j| b[j] - c[j]).collect();
        let cr = crate::linalg::cross3(&ab, &ac);
        let area = 0.5 * crate::linalg::norm(&cr);
        let w = area / (rf * rf);
        let mut push = |xi: f64, eta: f64| {
            out.push(((0..3).map(|j| c[j] + xi * ab[j] + eta * ac[j]).collect(), w));
        };
        for i in 0..r {
            for j in 0..r - i {
                push((i as f64 + 1.0 / 3.0) / rf, (j as f64 + 1.0 / 3.0) / rf);
                if i + j + 1 < r {
                    push((i as f64 + 2.0 / 3.0) / rf, (j as f64 + 2.0 / 3.0) / rf);
                }
            }
        }
    }
    out
}

/// `∫_{facet k} ∫_{S^{n-1}} w ρ_{K,z}^s du dz` for the requested facets
/// (all when `subset` is `None`; others are left at zero).
pub fn facet_radial_integrals(
    p: &Polytope,
    s: f64,
    weight: Option<&PlanarWeight>,
    subset: Option<&[usize]>,
    res: &Resolution,
) -> Result<Vec<f64>> {
    let all: Vec<usize> = (0..p.n_facets()).collect();
    let which = subset.unwrap_or(&all);
    let vals: Vec<(usize, f64)> = match p.dim() {
        2 => which
            .par_iter()
            .map(|&k| {
                let v = edge_rule(p, k, res)
                    .iter()
                    .map(|(z, w)| w * polygon_radial_integral(p, z, s, weight).0)
                    .sum();
                (k, v)
            })
            .collect(),
        3 => {
            if weight.is_some() {
                return Err(Error::unsupported("weighted facet integrals are planar only"));
            }
            which
                .par_iter()
                .map(|&k| {
                    let inward: Vec<f64> = p.normals()[k].iter().map(|x| -x).collect();
                    let v = facet_rule_3d(p, k, res.facet_nodes)
                        .iter()
                        .map(|(z, w)| {
                            w * hemisphere_radial_integral(p, z, &inward, s, res.sphere_rings, res.sphere_azimuths)
                        })
                        .sum();
                    (k, v)
                })
                .collect()
        }
        n => return Err(Error::unsupported(format!("chord measures for n = {n}"))),
    };
    let mut out = vec![0.0; p.n_facets()];
    for (k, v) in vals {
        out[k] = v;
    }
    Ok(out)
}

/// Chord-measure weight of each facet (in facet order).
pub fn chord_measure_weights(p: &Polytope, q: f64, subset: Option<&[usize]>, res: &Resolution) -> Result<Vec<f64>> {
    if !(q > 0.0) {
        return Err(Error::domain("q must be positive"));
    }
    let n = p.dim() as f64;
    let c = 2.0 * q / omega(n) / n;
    Ok(facet_radial_integrals(p, q - 1.0, None, subset, res)?
        .into_iter()
        .map(|v| c * v)
        .collect())
}

pub fn chord_measure_polytope(p: &Polytope, q: f64, res: &Resolution) -> Result<DiscreteMeasure> {
    let w = chord_measure_weights(p, q, None, res)?;
    DiscreteMeasure::new(p.normals().to_vec(), w)
}

fn require_origin_interior(p: &Polytope) -> Result<()> {
    if p.offsets().iter().any(|&h| !(h > 0.0)) {
        return Err(Error::domain("origin is not interior (nonpositive support number)"));
    }
    Ok(())
}

pub fn lp_chord_measure(p: &Polytope, q: f64, p_exp: f64, res: &Resolution) -> Result<DiscreteMeasure> {
    require_origin_interior(p)?;
    let f = chord_measure_weights(p, q, None, res)?;
    let w = f
        .iter()
        .zip(p.offsets())
        .map(|(fk, h)| h.powf(1.0 - p_exp) * fk)
        .collect();
    DiscreteMeasure::new(p.normals().to_vec(), w)
}

/// `I_q(K) = (n+q-1)^{-1} Σ_k h_k F_q(K, {u_k})`.
pub fn chord_integral_boundary(p: &Polytope, q: f64, res: &Resolution) -> Result<Estimate> {
    require_origin_interior(p)?;
    let f = chord_measure_weights(p, q, None, res)?;
    let n = p.dim() as f64;
    let v: f64 = f.iter().zip(p.offsets()).map(|(a, h)| a * h).sum::<f64>() / (n + q - 1.0);
    let nodes = match p.dim() {
        2 => p.n_facets() * res.facet_nodes * edge_panels(res.edge_grading).len(),
        _ => p.facets().iter().map(|f| f.len()).sum::<usize>() * res.facet_nodes * res.facet_nodes,
    };
    Ok(Estimate::exact(v, Method::Boundary, nodes as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Body;

    #[test]
    fn q1_is_surface_area() {
        let sq = Body::cube(2, 1.0).unwrap();
        let m = chord_measure_polytope(sq.as_polytope().unwrap(), 1.0, &Resolution::default()).unwrap();
        for w in &m.weights {
            assert!((w - 2.0).abs() < 1e-12, "{w}");
        }
        let cube = Body::cube(3, 1.0).unwrap();
        let m = chord_measure_polytope(cube.as_polytope().unwrap(), 1.0, &Resolution::default()).unwrap();
        for w in &m.weights {
            assert!((w - 4.0).abs() < 1e-10, "{w}");
        }
    }

    #[test]
    fn boundary_volume_at_q1() {
        let sq = Body::cube(2, 1.0).unwrap();
        let e = chord_integral_boundary(sq.as_polytope().unwrap(), 1.0, &Resolution::default()).unwrap();
        assert!((e.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_matches_slice_on_square() {
        let sq = Body::cube(2, 1.0).unwrap();
        let p = sq.as_polytope().unwrap();
        let a = chord_integral_boundary(p, 2.5, &Resolution::default()).unwrap().value;
        let b = super::super::chord_integral_slice(p, 2.5, 8).unwrap().value;
        assert!((a - b).abs() < 1e-3 * b, "{a} vs {b}");
    }

    #[test]
    fn cube_q2_boundary_vs_known_identity() {
        // q = n+1 = 4: I_4 = 4 V²/ω_3.
        let cube = Body::cube(3, 1.0).unwrap();
        let e = chord_integral_boundary(cube.as_polytope().unwrap(), 4.0, &Resolution::default()).unwrap();
        let expect = 4.0 * 64.0 / omega(3.0);
        assert!((e.value - expect).abs() < 2e-2 * expect, "{} vs {expect}", e.value);
    }
}
