//! The classical (surface area) Minkowski problem for even discrete data,
//! and the right-hand side used to build the shrinking family.

use crate::body::{Body, Polytope};
use crate::consts::CLOSURE_TOL;
use crate::error::{Error, Result};
use crate::grid::{DiscreteMeasure, SphericalGrid};
use crate::linalg::dot;
use crate::optim::{lbfgs_minimize, LbfgsOptions};
use crate::params::{split_norms, ProblemParams};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Weights below this fraction of the largest are treated as zero.
const ZERO_WEIGHT: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symmetry {
    pub even: bool,
    pub rotationally_symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalProblem {
    pub measure: DiscreteMeasure,
    pub symmetry: Symmetry,
}

impl ClassicalProblem {
    pub fn new(measure: DiscreteMeasure, symmetry: Symmetry) -> Result<Self> {
        let pb = ClassicalProblem { measure, symmetry };
        pb.check()?;
        Ok(pb)
    }

    /// Closure `Σ f_i u_i = 0` and the support not lying in a closed
    /// hemisphere.
    pub fn check(&self) -> Result<()> {
        let m = &self.measure;
        let total = m.total();
        if !(total > 0.0) {
            return Err(Error::Closure("measure has no mass".into()));
        }
        let mom = m.first_moment();
        let err = dot(&mom, &mom).sqrt();
        if err > CLOSURE_TOL * total {
            return Err(Error::Closure(format!("|Σ f_i u_i| = {err:e} against total {total:e}")));
        }
        let fmax = m.weights.iter().cloned().fold(0.0, f64::max);
        let pts: Vec<Vec<f64>> = m
            .directions
            .iter()
            .zip(&m.weights)
            .filter(|(_, &w)| w > ZERO_WEIGHT * fmax)
            .map(|(u, _)| u.clone())
            .collect();
        let spread = Polytope::from_vertices(&pts)
            .map(|p| p.offsets().iter().cloned().fold(f64::INFINITY, f64::min))
            .unwrap_or(0.0);
        if !(spread > 1e-12) {
            return Err(Error::Closure("support of the measure lies in a closed hemisphere".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.measure.directions[0].len()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub body: Body,
    /// Support value of `body` at every input direction.
    pub support: Vec<f64>,
    pub iterations: usize,
    /// Largest relative facet-area error over directions with positive weight.
    pub residual: f64,
    pub objective_trace: Vec<f64>,
    pub wall_time: f64,
}

/// `|x'|^α |x_n|^β (ε²|x'|² + x_n²)^{(γ-β)/2}`.
pub fn section3_density(x: &[f64], params: &ProblemParams) -> f64 {
    let (r, t) = split_norms(x);
    let eps = params.epsilon;
    let base = (eps * eps * r * r + t * t).powf(0.5 * (params.gamma - params.beta));
    let a = if r == 0.0 && params.alpha > 0.0 { 0.0 } else { r.powf(params.alpha) };
    let b = if t == 0.0 && params.beta > 0.0 { 0.0 } else { t.powf(params.beta) };
    let v = a * b * base;
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// `f_i = density(u_i) w_i`, averaged over antipodal pairs.
pub fn discretize_density(density: impl Fn(&[f64]) -> f64, grid: &SphericalGrid) -> Result<ClassicalProblem> {
    if !grid.is_zonal() {
        return Err(Error::Precondition("discretize_density needs a zonal grid".into()));
    }
    let mut raw = Vec::with_capacity(grid.len());
    for (u, w) in grid.directions().iter().zip(grid.weights()) {
        let d = density(u);
        if !d.is_finite() || d < 0.0 {
            return Err(Error::domain(format!("density is {d} at {u:?}")));
        }
        raw.push(d * w);
    }
    let f: Vec<f64> = (0..grid.len()).map(|i| 0.5 * (raw[i] + raw[grid.antipode(i)])).collect();
    ClassicalProblem::new(
        DiscreteMeasure::on_grid(grid, f)?,
        Symmetry { even: true, rotationally_symmetric: true },
    )
}

pub fn solve_classical_minkowski(problem: &ClassicalProblem) -> Result<SolveReport> {
    problem.check()?;
    let start = Instant::now();
    let (poly, iterations, trace) = match problem.dim() {
        2 => (solve_planar(problem)?, 0, Vec::new()),
        3 => solve_spatial(problem)?,
        n => return Err(Error::unsupported(format!("classical solver for n = {n}"))),
    };
    let support = problem.measure.directions.iter().map(|u| poly.support(u)).collect();
    let body = Body::Polytope(poly);
    let residual = facet_area_residual(&body, &problem.measure)?;
    Ok(SolveReport { body, support, iterations, residual, objective_trace: trace, wall_time: start.elapsed().as_secs_f64() })
}

/// Largest relative error between the facet areas of `body` and the weights
/// of `measure`, matching facets to directions by normal. Directions with
/// zero weight must carry no facet area.
pub fn facet_area_residual(body: &Body, measure: &DiscreteMeasure) -> Result<f64> {
    let p = body
        .as_polytope()
        .ok_or_else(|| Error::unsupported("facet residual needs a polytope"))?;
    let areas = p.facet_areas();
    let mut per_dir = vec![0.0; measure.directions.len()];
    for (k, u) in p.normals().iter().enumerate() {
        let j = measure
            .directions
            .iter()
            .position(|v| dot(u, v) > 1.0 - 1e-9)
            .ok_or_else(|| Error::Precondition("body has a facet normal outside the measure".into()))?;
        per_dir[j] += areas[k];
    }
    let fmax = measure.weights.iter().cloned().fold(0.0, f64::max);
    let mut r: f64 = 0.0;
    for (a, f) in per_dir.iter().zip(&measure.weights) {
        if *f > ZERO_WEIGHT * fmax {
            r = r.max((a - f).abs() / f);
        } else {
            r = r.max(a / fmax);
        }
    }
    Ok(r)
}

/// Edges of length `f_i` perpendicular to `u_i`, laid head to tail in angular
/// order, then centred at the centroid.
fn solve_planar(problem: &ClassicalProblem) -> Result<Polytope> {
    let m = &problem.measure;
    let mut order: Vec<usize> = (0..m.directions.len()).collect();
    let ang = |i: usize| m.directions[i][1].atan2(m.directions[i][0]);
    order.sort_by(|&a, &b| ang(a).total_cmp(&ang(b)));
    let mut h = vec![0.0; m.directions.len()];
    let mut pt = [0.0f64, 0.0];
    let mut pts = Vec::with_capacity(order.len());
    for &i in &order {
        let u = &m.directions[i];
        h[i] = u[0] * pt[0] + u[1] * pt[1];
        pts.push(pt);
        pt[0] -= m.weights[i] * u[1];
        pt[1] += m.weights[i] * u[0];
    }
    // Closure makes `pt` return to the origin up to rounding.
    let start = Polytope::from_vertices(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>())?;
    let c = start.centroid();
    for (hi, u) in h.iter_mut().zip(&m.directions) {
        *hi -= dot(u, &c);
    }
    Polytope::from_halfspaces(&m.directions, &h)
}

/// Minimize `Σ f_i h_i − log V([h])`; at the minimum the facet areas are
/// `V f_i`, and a dilation fixes the scale.
fn solve_spatial(problem: &ClassicalProblem) -> Result<(Polytope, usize, Vec<f64>)> {
    let m = &problem.measure;
    let dirs = &m.directions;
    let f = &m.weights;
    let n = 3.0;
    let total: f64 = f.iter().sum();
    let h0 = vec![n / total; dirs.len()];
    let fmax = f.iter().cloned().fold(0.0, f64::max);
    let eval = |h: &[f64]| -> Option<(f64, Vec<f64>)> {
        if h.iter().any(|&v| !(v > 0.0)) {
            return None;
        }
        let p = Polytope::from_halfspaces(dirs, h).ok()?;
        let v = p.volume();
        let areas = p.facet_areas();
        let mut g = f.clone();
        for (k, &lab) in p.labels().iter().enumerate() {
            g[lab] -= areas[k] / v;
        }
        Some((dot(f, h) - v.ln(), g))
    };
    let done = |h: &[f64], _: f64, g: &[f64]| -> bool {
        // g_i = f_i - A_i/V; residual in relative terms.
        let _ = h;
        g.iter().zip(f).all(|(gi, fi)| if *fi > ZERO_WEIGHT * fmax { gi.abs() <= 5e-7 * fi } else { *gi >= -1e-12 })
    };
    let opts = LbfgsOptions { memory: 12, max_iter: 10_000, grad_tol: 0.0, max_backtracks: 50, max_step: 0.1 * n / total };
    let res = lbfgs_minimize(h0, eval, done, &opts)
        .ok_or_else(|| Error::degenerate("initial support vector is degenerate"))?;
    let p = Polytope::from_halfspaces(dirs, &res.x)?;
    let t = (1.0 / p.volume()).powf(1.0 / (n - 1.0));
    let p = p.dilate(t);
    let c = p.centroid();
    let neg: Vec<f64> = c.iter().map(|x| -x).collect();
    Ok((p.translate(&neg), res.iterations, res.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProblemParams;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn params(eps: f64) -> ProblemParams {
        ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, eps)
    }

    #[test]
    fn density_examples() {
        let p = ProblemParams { n: 2, p: -1.0, q: 2.5, alpha: 0.0, beta: 0.0, gamma: -0.7, epsilon: 0.5 };
        let x = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        let expect = (0.25f64 * 0.5 + 0.5).powf(-0.35);
        assert!((section3_density(&x, &p) - expect).abs() < 1e-14);
        let q = params(0.2);
        assert_eq!(section3_density(&[0.0, 1.0], &q), 0.0);
        assert_eq!(section3_density(&[1.0, 0.0], &q), 0.0);
    }

    #[test]
    fn square_from_four_normals() {
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]];
        let pb = ClassicalProblem::new(
            DiscreteMeasure::new(dirs, vec![1.5; 4]).unwrap(),
            Symmetry { even: true, rotationally_symmetric: false },
        )
        .unwrap();
        let r = solve_classical_minkowski(&pb).unwrap();
        assert!(r.residual < 1e-12);
        assert!((r.body.volume() - 2.25).abs() < 1e-12);
        for h in &r.support {
            assert!((h - 0.75).abs() < 1e-12);
        }
        let g = SphericalGrid::from_parts(
            pb.measure.directions.clone(),
            vec![PI / 2.0; 4],
            false,
        )
        .unwrap();
        let pb2 = discretize_density(|_| 1.0, &g);
        assert!(pb2.is_err(), "non-zonal grid must be refused");
    }

    #[test]
    fn hemisphere_and_closure_rejected() {
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        let m = DiscreteMeasure::new(dirs, vec![1.0, 1.0, 1.0]).unwrap();
        let sym = Symmetry { even: false, rotationally_symmetric: false };
        assert!(matches!(ClassicalProblem::new(m, sym), Err(Error::Closure(_))));
        let dirs = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let m = DiscreteMeasure::new(dirs, vec![1.0, 1.0]).unwrap();
        assert!(matches!(ClassicalProblem::new(m, sym), Err(Error::Closure(_))));
    }

    #[test]
    fn section3_problem_is_closed_and_solved() {
        let g = SphericalGrid::zonal(2, 64, 0).unwrap();
        let pr = params(0.25);
        let pb = discretize_density(|x| section3_density(x, &pr), &g).unwrap();
        let m = pb.measure.first_moment();
        assert!(m.iter().all(|v| v.abs() < 1e-14));
        let r = solve_classical_minkowski(&pb).unwrap();
        assert!(r.residual < 1e-9, "{}", r.residual);
        assert!(r.body.is_origin_symmetric(1e-10));
        let again = facet_area_residual(&r.body, &pb.measure).unwrap();
        assert!((again - r.residual).abs() < 1e-12);
    }

    #[test]
    fn mass_converges_under_refinement() {
        let pr = params(0.25);
        let mass = |rings| {
            let g = SphericalGrid::zonal(2, rings, 0).unwrap();
            discretize_density(|x| section3_density(x, &pr), &g).unwrap().measure.total()
        };
        let (a, b) = (mass(64), mass(128));
        assert!((a - b).abs() < 5e-3 * b, "{a} {b}");
    }

    #[test]
    fn planar_scaling_law() {
        let g = SphericalGrid::zonal(2, 32, 0).unwrap();
        let pr = params(0.3);
        let pb = discretize_density(|x| section3_density(x, &pr), &g).unwrap();
        let r1 = solve_classical_minkowski(&pb).unwrap();
        let mut pb2 = pb.clone();
        pb2.measure.weights.iter_mut().for_each(|w| *w *= 2.0);
        let r2 = solve_classical_minkowski(&pb2).unwrap();
        for (a, b) in r1.support.iter().zip(&r2.support) {
            assert!((2.0 * a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn spatial_uniform_gives_round_body() {
        let g = SphericalGrid::zonal(3, 6, 8).unwrap();
        let pb = discretize_density(|_| 1.0, &g).unwrap();
        let r = solve_classical_minkowski(&pb).unwrap();
        assert!(r.residual < 1e-6, "residual {}", r.residual);
        let h = &r.support;
        let (lo, hi) = h.iter().fold((f64::INFINITY, 0.0f64), |a, &v| (a.0.min(v), a.1.max(v)));
        assert!(hi / lo < 1.2, "{lo} {hi}");
    }
}
