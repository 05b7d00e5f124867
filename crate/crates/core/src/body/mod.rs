//! Convex bodies: polytopes, ellipsoids and balls behind one enum.

mod ellipsoid;
mod polytope;

pub use ellipsoid::Ellipsoid;
pub use polytope::Polytope;

use crate::consts::{MEMBERSHIP_TOL, UNIT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::special::omega;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub radius: f64,
    pub center: Vec<f64>,
}

impl Ball {
    pub fn new(radius: f64, center: Vec<f64>) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || center.is_empty() {
            return Err(Error::representation("ball radius must be positive"));
        }
        Ok(Ball { radius, center })
    }

    pub fn unit(n: usize) -> Self {
        Ball { radius: 1.0, center: vec![0.0; n] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyRepr", into = "BodyRepr")]
pub enum Body {
    Polytope(Polytope),
    Ellipsoid(Ellipsoid),
    Ball(Ball),
}

/// Wire format. Polytopes are always written in H-form; V-form is accepted
/// on input and canonicalized.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodyRepr {
    Hpolytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    Vpolytope { vertices: Vec<Vec<f64>> },
    Ellipsoid { semi_axes: Vec<f64>, rotation: Vec<Vec<f64>>, center: Vec<f64> },
    Ball { radius: f64, center: Vec<f64> },
}

impl TryFrom<BodyRepr> for Body {
    type Error = Error;
    fn try_from(r: BodyRepr) -> Result<Body> {
        Ok(match r {
            BodyRepr::Hpolytope { normals, offsets } => {
                Body::Polytope(Polytope::from_halfspaces(&normals, &offsets)?)
            }
            BodyRepr::Vpolytope { vertices } => Body::Polytope(Polytope::from_vertices(&vertices)?),
            BodyRepr::Ellipsoid { semi_axes, rotation, center } => {
                let n = semi_axes.len();
                if rotation.len() != n || rotation.iter().any(|r| r.len() != n) {
                    return Err(Error::representation("rotation must be n×n"));
                }
                let m = DMatrix::from_fn(n, n, |i, j| rotation[i][j]);
                Body::Ellipsoid(Ellipsoid::new(semi_axes, m, center)?)
            }
            BodyRepr::Ball { radius, center } => Body::Ball(Ball::new(radius, center)?),
        })
    }
}

impl From<Body> for BodyRepr {
    fn from(b: Body) -> BodyRepr {
        match b {
            Body::Polytope(p) => BodyRepr::Hpolytope {
                normals: p.normals().to_vec(),
                offsets: p.offsets().to_vec(),
            },
            Body::Ellipsoid(e) => {
                let n = e.dim();
                BodyRepr::Ellipsoid {
                    semi_axes: e.semi_axes().to_vec(),
                    rotation: (0..n).map(|i| (0..n).map(|j| e.rotation()[(i, j)]).collect()).collect(),
                    center: e.center().to_vec(),
                }
            }
            Body::Ball(b) => BodyRepr::Ball { radius: b.radius, center: b.center },
        }
    }
}

/// Volume, facet areas, facet normals and centroid. Smooth bodies have no
/// facets.
#[derive(Debug, Clone, Serialize)]
pub struct FacetData {
    pub volume: f64,
    pub facet_areas: Vec<f64>,
    pub facet_normals: Vec<Vec<f64>>,
    pub centroid: Vec<f64>,
}

fn check_unit(u: &[f64]) -> Result<()> {
    if (norm(u) - 1.0).abs() > UNIT_TOL {
        return Err(Error::Precondition(format!("direction not unit (|u| = {})", norm(u))));
    }
    Ok(())
}

impl Body {
    pub fn unit_ball(n: usize) -> Body {
        Body::Ball(Ball::unit(n))
    }

    /// The cube `[-r, r]^n` for `n = 2, 3`.
    pub fn cube(n: usize, r: f64) -> Result<Body> {
        let mut normals = Vec::new();
        for j in 0..n {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; n];
                u[j] = s;
                normals.push(u);
            }
        }
        Ok(Body::Polytope(Polytope::from_halfspaces(&normals, &vec![r; 2 * n])?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Body::Polytope(p) => p.dim(),
            Body::Ellipsoid(e) => e.dim(),
            Body::Ball(b) => b.center.len(),
        }
    }

    pub fn as_polytope(&self) -> Option<&Polytope> {
        match self {
            Body::Polytope(p) => Some(p),
            _ => None,
        }
    }

    pub fn support(&self, u: &[f64]) -> Result<f64> {
        check_unit(u)?;
        Ok(self.support_unchecked(u))
    }

    /// Support function without the unit check; homogeneous of degree one.
    pub fn support_unchecked(&self, u: &[f64]) -> f64 {
        match self {
            Body::Polytope(p) => p.support(u),
            Body::Ellipsoid(e) => e.support(u),
            Body::Ball(b) => dot(&b.center, u) + b.radius * norm(u),
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        match self {
            Body::Polytope(p) => p.contains(z),
            Body::Ellipsoid(e) => e.contains(z),
            Body::Ball(b) => crate::linalg::dist(z, &b.center) <= b.radius * (1.0 + MEMBERSHIP_TOL),
        }
    }

    pub fn radial(&self, z: &[f64], u: &[f64]) -> Result<f64> {
        check_unit(u)?;
        match self {
            Body::Polytope(p) => p.radial(z, u),
            Body::Ellipsoid(e) => e.radial(z, u),
            Body::Ball(b) => {
                if !self.contains(z) {
                    return Err(Error::domain("base point lies outside the body"));
                }
                Ok(ball_clip(b, z, u).map_or(0.0, |(_, t)| t.max(0.0)))
            }
        }
    }

    /// Length of `K ∩ (z + R u)`; total.
    pub fn xray(&self, z: &[f64], u: &[f64]) -> f64 {
        match self {
            Body::Polytope(p) => p.xray(z, u),
            Body::Ellipsoid(e) => e.xray(z, u),
            Body::Ball(b) => ball_clip(b, z, u).map_or(0.0, |(a, t)| t - a),
        }
    }

    /// Radius of the smallest origin-centred ball containing the body.
    pub fn circumradius(&self) -> f64 {
        match self {
            Body::Polytope(p) => p.circumradius(),
            Body::Ellipsoid(e) => e.circumradius(),
            Body::Ball(b) => norm(&b.center) + b.radius,
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Body::Polytope(p) => p.volume(),
            Body::Ellipsoid(e) => e.volume(),
            Body::Ball(b) => omega(b.center.len() as f64) * b.radius.powi(b.center.len() as i32),
        }
    }

    pub fn facet_data(&self) -> FacetData {
        match self {
            Body::Polytope(p) => FacetData {
                volume: p.volume(),
                facet_areas: p.facet_areas(),
                facet_normals: p.normals().to_vec(),
                centroid: p.centroid(),
            },
            Body::Ellipsoid(e) => FacetData {
                volume: e.volume(),
                facet_areas: vec![],
                facet_normals: vec![],
                centroid: e.center().to_vec(),
            },
            Body::Ball(b) => FacetData {
                volume: self.volume(),
                facet_areas: vec![],
                facet_normals: vec![],
                centroid: b.center.clone(),
            },
        }
    }

    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Body> {
        let n = self.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::domain("matrix dimension mismatch"));
        }
        if m.determinant().abs() <= 1e-12 {
            return Err(Error::domain("singular matrix"));
        }
        Ok(match self {
            Body::Polytope(p) => Body::Polytope(p.linear_image(m)?),
            Body::Ellipsoid(e) => Body::Ellipsoid(e.linear_image(m)?),
            Body::Ball(b) => {
                // Scalar matrices keep a ball a ball.
                let s = m[(0, 0)];
                let scalar = (0..n).all(|i| (0..n).all(|j| m[(i, j)] == if i == j { s } else { 0.0 }));
                if scalar {
                    Body::Ball(Ball {
                        radius: b.radius * s.abs(),
                        center: b.center.iter().map(|c| c * s).collect(),
                    })
                } else {
                    let e = Ellipsoid::new(vec![b.radius; n], DMatrix::identity(n, n), b.center.clone())?;
                    Body::Ellipsoid(e.linear_image(m)?)
                }
            }
        })
    }

    pub fn dilate(&self, t: f64) -> Body {
        match self {
            Body::Polytope(p) => Body::Polytope(p.dilate(t)),
            Body::Ellipsoid(e) => Body::Ellipsoid(e.dilate(t)),
            Body::Ball(b) => Body::Ball(Ball {
                radius: b.radius * t,
                center: b.center.iter().map(|c| c * t).collect(),
            }),
        }
    }

    pub fn translate(&self, v: &[f64]) -> Body {
        match self {
            Body::Polytope(p) => Body::Polytope(p.translate(v)),
            Body::Ellipsoid(e) => Body::Ellipsoid(e.translate(v)),
            Body::Ball(b) => Body::Ball(Ball {
                radius: b.radius,
                center: b.center.iter().zip(v).map(|(c, d)| c + d).collect(),
            }),
        }
    }

    pub fn is_origin_symmetric(&self, tol: f64) -> bool {
        match self {
            Body::Polytope(p) => p.is_origin_symmetric(tol),
            Body::Ellipsoid(e) => norm(e.center()) <= tol,
            Body::Ball(b) => norm(&b.center) <= tol,
        }
    }
}

fn ball_clip(b: &Ball, z: &[f64], u: &[f64]) -> Option<(f64, f64)> {
    let y: Vec<f64> = z.iter().zip(&b.center).map(|(a, c)| a - c).collect();
    let a = dot(u, u);
    let bb = dot(&y, u);
    let c = dot(&y, &y) - b.radius * b.radius;
    let disc = bb * bb - a * c;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((-bb - s) / a, (-bb + s) / a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples_support() {
        let b = Body::unit_ball(3);
        assert_eq!(b.support(&[0.0, 1.0, 0.0]).unwrap(), 1.0);
        let cube = Body::Polytope(
            Polytope::from_vertices(&[
                vec![-1.0, -1.0],
                vec![1.0, -1.0],
                vec![1.0, 1.0],
                vec![-1.0, 1.0],
            ])
            .unwrap(),
        );
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cube.support(&[s, s]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(cube.support(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn ball_radial_and_xray() {
        let b = Body::unit_ball(2);
        assert!((b.radial(&[1.0, 0.0], &[-1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((b.xray(&[0.0, 0.5], &[1.0, 0.0]) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(b.xray(&[10.0, 10.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn ball_image_under_m_eps() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.25, 0.25, 1.0]));
        let e = Body::unit_ball(3).linear_image(&m).unwrap();
        match e {
            Body::Ellipsoid(e) => {
                for (a, b) in e.semi_axes().iter().zip([0.25, 0.25, 1.0]) {
                    assert!((a - b).abs() < 1e-14);
                }
            }
            _ => panic!("expected ellipsoid"),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let b = Body::cube(2, 1.5).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        let c: Body = serde_json::from_str(&s).unwrap();
        assert_eq!(s, serde_json::to_string(&c).unwrap());
        let bad = r#"{"type":"ball","radius":1.0,"center":[0,0],"extra":1}"#;
        assert!(serde_json::from_str::<Body>(bad).is_err());
    }
}
