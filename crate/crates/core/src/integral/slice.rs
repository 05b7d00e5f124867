//! Deterministic chord integrals of planar polygons.
//!
//! For a fixed direction the chord length is piecewise linear in the
//! offset of the line, with breaks at vertex projections, so the offset
//! integral of `X^q` is exact. The angle is integrated by Gauss–Legendre
//! panels whose ends sit at the directions where two vertices project
//! together (where the integrand has kinks).

use super::{Estimate, Method};
use crate::body::Polytope;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_cached;
use std::f64::consts::PI;

/// Vertex-pair breakpoints are used up to this many vertices; beyond it a
/// uniform composite rule.
const EXACT_BREAKS_MAX_VERTICES: usize = 24;
const UNIFORM_PANELS: usize = 512;

fn piece(ds: f64, xa: f64, xb: f64, q: f64) -> f64 {
    let dx = xb - xa;
    if dx.abs() <= 1e-12 * xa.abs().max(xb.abs()).max(1e-300) {
        let x = 0.5 * (xa + xb);
        ds * x.max(0.0).powf(q)
    } else {
        ds * (xb.max(0.0).powf(q + 1.0) - xa.max(0.0).powf(q + 1.0)) / ((q + 1.0) * dx)
    }
}

/// `∫ X(s)^q ds` over lines parallel to `(cos φ, sin φ)`.
fn offset_integral(p: &Polytope, phi: f64, q: f64) -> f64 {
    let (sn, cs) = phi.sin_cos();
    let u = [cs, sn];
    let perp = [-sn, cs];
    let mut proj: Vec<f64> = p.vertices().iter().map(|v| v[0] * perp[0] + v[1] * perp[1]).collect();
    proj.sort_by(f64::total_cmp);
    proj.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    let chord = |s: f64| p.xray(&[s * perp[0], s * perp[1]], &u);
    let mut acc = 0.0;
    let mut xa = 0.0;
    let m = proj.len();
    for k in 0..m - 1 {
        let xb = if k + 1 == m - 1 { 0.0 } else { chord(proj[k + 1]) };
        acc += piece(proj[k + 1] - proj[k], xa, xb, q);
        xa = xb;
    }
    acc
}

/// `I_q(P) = (1/π) ∫_0^π ∫ X^q ds dφ` for a planar polygon.
pub fn chord_integral_slice(p: &Polytope, q: f64, order: usize) -> Result<Estimate> {
    if p.dim() != 2 {
        return Err(Error::unsupported("slice quadrature is planar"));
    }
    if !(q >= 0.0) {
        return Err(Error::domain("q must be nonnegative"));
    }
    let mut cuts = vec![0.0, PI];
    let verts = p.vertices();
    if verts.len() <= EXACT_BREAKS_MAX_VERTICES {
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                let mut a = (verts[j][1] - verts[i][1]).atan2(verts[j][0] - verts[i][0]);
                if a < 0.0 {
                    a += PI;
                }
                if a >= PI {
                    a -= PI;
                }
                cuts.push(a);
            }
        }
    } else {
        cuts.extend((1..UNIFORM_PANELS).map(|k| PI * k as f64 / UNIFORM_PANELS as f64));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13);
    let (x, w) = gauss_legendre_cached(order);
    let mut total = 0.0;
    let mut nodes = 0u64;
    for win in cuts.windows(2) {
        let (a, b) = (win[0], win[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(w) {
            total += half * wi * offset_integral(p, mid + half * xi, q);
            nodes += 1;
        }
    }
    Ok(Estimate::exact(total / PI, Method::SliceQuadrature, nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Body;

    #[test]
    fn square_identities() {
        let sq = Body::cube(2, 1.0).unwrap();
        let p = sq.as_polytope().unwrap();
        let v = chord_integral_slice(p, 1.0, 8).unwrap().value;
        assert!((v - 4.0).abs() < 1e-13);
        // I_3 = 3V²/π.
        let v = chord_integral_slice(p, 3.0, 8).unwrap().value;
        assert!((v - 3.0 * 16.0 / PI).abs() < 1e-9, "{v}");
        // I_0 is the perimeter over π.
        let v = chord_integral_slice(p, 0.0, 8).unwrap().value;
        assert!((v - 8.0 / PI).abs() < 1e-12, "{v}");
    }

    #[test]
    fn homogeneity() {
        let p = Polytope::from_vertices(&[vec![-1.0, -0.3], vec![0.8, -0.9], vec![1.1, 0.6], vec![-0.2, 1.0]]).unwrap();
        let a = chord_integral_slice(&p, 2.5, 8).unwrap().value;
        let b = chord_integral_slice(&p.dilate(1.7), 2.5, 8).unwrap().value;
        assert!((b / a - 1.7f64.powf(3.5)).abs() < 1e-10);
    }
}
