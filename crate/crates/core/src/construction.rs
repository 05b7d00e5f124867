//! The shrinking family `H_ε`: the classical solution `h_ε` for the
//! anisotropic right-hand side, its affine image `K_{H_ε} = ε^κ M_ε⁻¹ K_{h_ε}`,
//! and the density `f_ε` for which `H_ε` solves the L_p chord equation.

use crate::body::{Body, Polytope};
use crate::classical::{section3_density, solve_classical_minkowski, ClassicalProblem, SolveReport, Symmetry};
use crate::error::{Error, Result};
use crate::grid::{DiscreteMeasure, SphericalGrid, SupportVector};
use crate::integral::dual::{polygon_radial_integral, PlanarWeight};
use crate::integral::measure::{facet_radial_integrals, Resolution};
use crate::integral::{chord_integral_boundary, Estimate};
use crate::params::{split_norms, EpsilonMaps, ProblemParams, Stage};
use crate::special::omega;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

/// `H_ε` as a body: `ε^κ · M_ε⁻¹ K_{h_ε}`.
#[allow(non_snake_case)]
pub fn build_H_epsilon(h_eps: &Body, params: &ProblemParams) -> Result<Body> {
    let eps = params.epsilon;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain(format!("epsilon = {eps} outside (0, 1/2)")));
    }
    if !h_eps.is_origin_symmetric(1e-9) {
        return Err(Error::Precondition("h_eps must be origin-symmetric".into()));
    }
    let maps = params.maps()?;
    Ok(h_eps.linear_image(&maps.minv)?.dilate(eps.powf(params.kappa())))
}

/// `H_ε(x) = ε^κ |M⁻¹x| h_ε(x_ε)` from the formula.
#[allow(non_snake_case)]
pub fn H_epsilon_value(h_eps: &Body, params: &ProblemParams, x: &[f64]) -> Result<f64> {
    let maps = params.maps()?;
    let v = maps.apply_minv(x);
    let l = crate::linalg::norm(&v);
    let xe: Vec<f64> = v.iter().map(|t| t / l).collect();
    Ok(params.epsilon.powf(params.kappa()) * l * h_eps.support_unchecked(&xe))
}

/// Planar weight `|N_ε y|^{q-1-n}` in the polar angle of `y`.
fn n_weight(eps: f64, s: f64) -> impl Fn(f64) -> f64 + Sync {
    move |t: f64| {
        let (sn, cs) = t.sin_cos();
        (cs * cs + eps * eps * sn * sn).powf(0.5 * s)
    }
}

fn planar_polygon(h_eps: &Body) -> Result<&Polytope> {
    match h_eps.as_polytope() {
        Some(p) if p.dim() == 2 => Ok(p),
        _ => Err(Error::unsupported("f_epsilon is implemented for planar polygons")),
    }
}

/// `∫ |N_ε y|^{q-1-n} ρ_{K,z}(y)^{q-1} dy` at a point `z` of a polygon.
fn weighted_radial(p: &Polytope, z: &[f64], params: &ProblemParams) -> f64 {
    let eps = params.epsilon;
    let w = n_weight(eps, params.q - 1.0 - params.nf());
    let feats = [(FRAC_PI_2, eps), (-FRAC_PI_2, eps)];
    let pw = PlanarWeight { f: &w, features: &feats };
    polygon_radial_integral(p, z, params.q - 1.0, Some(&pw)).0
}

/// The factor `|x'|^α |x_n|^β |N_ε x|^{-γ-α-n-p}` of `f_ε`.
pub fn f_epsilon_envelope(x: &[f64], params: &ProblemParams, maps: &EpsilonMaps) -> f64 {
    let (r, t) = split_norms(x);
    let a = if r == 0.0 && params.alpha > 0.0 { 0.0 } else { r.powf(params.alpha) };
    let b = if t == 0.0 && params.beta > 0.0 { 0.0 } else { t.powf(params.beta) };
    a * b * maps.n_norm(x).powf(-params.gamma - params.alpha - params.nf() - params.p)
}

/// Pointwise `f_ε(x)`. The gradient point `∇h_ε(x_ε)` is the support vertex
/// in direction `x_ε`, ties going to the lexicographically smallest vertex.
pub fn f_epsilon_eval(x: &[f64], h_eps: &Body, params: &ProblemParams) -> Result<f64> {
    let p = planar_polygon(h_eps)?;
    let maps = params.maps()?;
    let xe = maps.pull_back(x);
    let z = p.support_point(&xe).to_vec();
    let h = p.support(&xe);
    let integral = weighted_radial(p, &z, params) / params.nf();
    Ok(h.powf(1.0 - params.p) * f_epsilon_envelope(x, params, &maps) * integral)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuermassCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

/// Both sides of `Ṽ_{q-1}(K_{u_ε}, ∇u_ε(x)) = (ε^{2-q}/n) ∫ |N_ε y|^{q-1-n} ρ^{q-1}_{K_{h_ε}, ∇h_ε(x_ε)}(y) dy`.
/// The left side is computed directly on the transformed polygon.
pub fn quermass_transform_check(h_eps: &Body, params: &ProblemParams, x: &[f64]) -> Result<QuermassCheck> {
    let p = planar_polygon(h_eps)?;
    let eps = params.epsilon;
    let maps = EpsilonMaps::new(params.n, eps)?;
    let xe = maps.pull_back(x);
    let z = p.support_point(&xe).to_vec();
    let ku = p.linear_image(&maps.minv)?;
    let zu = maps.apply_minv(&z);
    let n = params.nf();
    let lhs = polygon_radial_integral(&ku, &zu, params.q - 1.0, None).0 / n;
    let rhs = eps.powf(2.0 - params.q) / n * weighted_radial(p, &z, params);
    let rel_err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
    Ok(QuermassCheck { lhs, rhs, rel_err })
}

/// Grid of the classical problem: `v_k = x_ε(u_k)` with weights carrying
/// the Jacobian `ε/|N_ε u|^n` of `u ↦ x_ε`, so that facet `k` of `K_{h_ε}`
/// maps to the facet of `K_{H_ε}` with normal `u_k`.
pub fn pulled_back_grid(grid: &SphericalGrid, params: &ProblemParams) -> Result<SphericalGrid> {
    let maps = params.maps()?;
    let n = params.nf();
    let w = grid
        .directions()
        .iter()
        .zip(grid.weights())
        .map(|(u, w)| w * params.epsilon / maps.n_norm(u).powf(n))
        .collect();
    grid.pushed(|u| maps.apply_minv(u), w)
}

/// Everything the nonuniqueness run needs from the construction.
#[derive(Debug, Clone)]
pub struct Construction {
    pub params: ProblemParams,
    /// Directions `u_k` on which both solutions live.
    pub grid: Arc<SphericalGrid>,
    pub classical: ClassicalProblem,
    pub classical_report: SolveReport,
    /// `K_{h_ε}` (centred polygon, normals `x_ε(u_k)`).
    pub h_eps: Body,
    /// `K_{H_ε}` with normals exactly `u_k`.
    pub body: Polytope,
    pub support: SupportVector,
    /// `f_k = f_ε(u_k) w_k`, with the dual quermassintegral averaged over
    /// the facet of `K_{h_ε}` with normal `x_ε(u_k)`.
    pub f: DiscreteMeasure,
}

impl Construction {
    /// `μ = (2q/ω_n) f`, the right-hand side both solutions must match.
    pub fn mu(&self) -> DiscreteMeasure {
        let c = 2.0 * self.params.q / omega(self.params.nf());
        DiscreteMeasure {
            directions: self.f.directions.clone(),
            weights: self.f.weights.iter().map(|w| c * w).collect(),
        }
    }
}

pub fn construct(params: &ProblemParams, grid: Arc<SphericalGrid>, res: &Resolution) -> Result<Construction> {
    params.validate(Stage::Decay)?;
    if params.n != 2 {
        return Err(Error::unsupported("the construction pipeline is planar"));
    }
    let maps = params.maps()?;
    let cgrid = pulled_back_grid(&grid, params)?;
    let f_cl: Vec<f64> = cgrid
        .directions()
        .iter()
        .zip(cgrid.weights())
        .map(|(v, w)| section3_density(v, params) * w)
        .collect();
    let f_cl: Vec<f64> = (0..f_cl.len()).map(|i| 0.5 * (f_cl[i] + f_cl[cgrid.antipode(i)])).collect();
    let classical = ClassicalProblem::new(
        DiscreteMeasure::on_grid(&cgrid, f_cl)?,
        Symmetry { even: true, rotationally_symmetric: true },
    )?;
    let report = solve_classical_minkowski(&classical)?;
    let h_eps = report.body.clone();
    let kh = planar_polygon(&h_eps)?;

    let kap = params.epsilon.powf(params.kappa());
    let hvals: Vec<f64> = grid
        .directions()
        .iter()
        .zip(&report.support)
        .map(|(u, h)| kap * crate::linalg::norm(&maps.apply_minv(u)) * h)
        .collect();
    let support = SupportVector::new(grid.clone(), hvals)?;
    let body = Polytope::from_halfspaces(grid.directions(), &support.values)?;

    // Facet averages of the weighted radial integral on K_{h_ε}.
    let eps = params.epsilon;
    let w = n_weight(eps, params.q - 1.0 - params.nf());
    let feats = [(FRAC_PI_2, eps), (-FRAC_PI_2, eps)];
    let pw = PlanarWeight { f: &w, features: &feats };
    let totals = facet_radial_integrals(kh, params.q - 1.0, Some(&pw), None, res)?;
    let lens = kh.facet_areas();
    let mut avg = vec![f64::NAN; grid.len()];
    for (k, &lab) in kh.labels().iter().enumerate() {
        avg[lab] = totals[k] / lens[k];
    }
    let n = params.nf();
    let mut fk = Vec::with_capacity(grid.len());
    for (i, u) in grid.directions().iter().enumerate() {
        let integral = if avg[i].is_finite() {
            avg[i] / n
        } else {
            let z = kh.support_point(&cgrid.directions()[i]).to_vec();
            weighted_radial(kh, &z, params) / n
        };
        let h = report.support[i];
        fk.push(h.powf(1.0 - params.p) * f_epsilon_envelope(u, params, &maps) * integral * grid.weights()[i]);
    }
    let f = DiscreteMeasure::on_grid(&grid, fk)?;
    Ok(Construction { params: *params, grid, classical, classical_report: report, h_eps, body, support, f })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub iq: Option<Estimate>,
    pub paper_bound: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub ratio: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub solver_residual: f64,
    /// Support range `(min h_ε, max h_ε)` of the classical solution.
    #[serde(deserialize_with = "nullable_pair")]
    pub h_range: (f64, f64),
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
    /// Least-squares slope of `log I_q` against `log ε`.
    pub slope: f64,
    pub predicted_exponent: f64,
    /// Smallest `C` with `I_q ≤ C ε^{exponent}` over the sweep.
    pub bound_constant: f64,
}

pub fn epsilon_sweep(params: &ProblemParams, eps_list: &[f64], rings: usize, res: &Resolution) -> Result<SweepReport> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("eps_list must be nonempty and strictly descending".into()));
    }
    for &e in eps_list {
        params.with_epsilon(e).validate(Stage::Decay)?;
    }
    let grid = Arc::new(SphericalGrid::zonal(params.n, rings, 0)?);
    let records: Vec<SweepRecord> = eps_list
        .iter()
        .map(|&eps| {
            let pe = params.with_epsilon(eps);
            let bound = pe.paper_bound(eps);
            let run = || -> Result<(Estimate, f64, (f64, f64))> {
                let c = construct(&pe, grid.clone(), res)?;
                let iq = chord_integral_boundary(&c.body, pe.q, res)?;
                let hs = &c.classical_report.support;
                let range = hs.iter().fold((f64::INFINITY, 0.0f64), |a, &h| (a.0.min(h), a.1.max(h)));
                Ok((iq, c.classical_report.residual, range))
            };
            match run() {
                Ok((iq, r, range)) => SweepRecord {
                    epsilon: eps,
                    iq: Some(iq),
                    paper_bound: bound,
                    ratio: iq.value / bound,
                    solver_residual: r,
                    h_range: range,
                    error: None,
                },
                Err(e) => SweepRecord {
                    epsilon: eps,
                    iq: None,
                    paper_bound: bound,
                    ratio: f64::NAN,
                    solver_residual: f64::NAN,
                    h_range: (f64::NAN, f64::NAN),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.iq.map(|e| (r.epsilon.ln(), e.value.ln())))
        .collect();
    let slope = log_log_slope(&pts);
    let bound_constant = records.iter().filter(|r| r.iq.is_some()).map(|r| r.ratio).fold(0.0, f64::max);
    Ok(SweepReport { records, slope, predicted_exponent: params.decay_exponent(), bound_constant })
}

// JSON writes NaN and infinities as null; read them back as NaN.
fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nullable_pair<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<(f64, f64), D::Error> {
    let (a, b) = <(Option<f64>, Option<f64>)>::deserialize(d)?;
    Ok((a.unwrap_or(f64::NAN), b.unwrap_or(f64::NAN)))
}

/// Ordinary least-squares slope through `(x, y)` pairs.
pub fn log_log_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::Ellipsoid;
    use crate::integral::lp_chord_measure;

    fn params(eps: f64) -> ProblemParams {
        ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, eps)
    }

    #[test]
    fn unit_ball_maps_to_ellipse() {
        // Pick γ so that κ = 0.
        let mut pr = params(0.2);
        pr.gamma = pr.nf() - pr.p - 4.0 + pr.q;
        assert!(pr.kappa().abs() < 1e-15);
        let b = build_H_epsilon(&Body::unit_ball(2), &pr).unwrap();
        match b {
            Body::Ellipsoid(e) => {
                let a = e.semi_axes();
                assert!((a[0] - 1.0).abs() < 1e-12 && (a[1] - 5.0).abs() < 1e-12, "{a:?}");
            }
            other => panic!("expected an ellipse, got {other:?}"),
        }
        let _ = Ellipsoid::axis_aligned(vec![1.0, 5.0]).unwrap();
    }

    #[test]
    fn body_matches_formula_and_volume_law() {
        let pr = params(0.1);
        let grid = Arc::new(SphericalGrid::zonal(2, 32, 0).unwrap());
        let c = construct(&pr, grid.clone(), &Resolution::default()).unwrap();
        let direct = build_H_epsilon(&c.h_eps, &pr).unwrap();
        for (u, h) in grid.directions().iter().zip(&c.support.values) {
            let a = direct.support_unchecked(u);
            let b = H_epsilon_value(&c.h_eps, &pr, u).unwrap();
            assert!((a - h).abs() < 1e-10 * h && (b - h).abs() < 1e-10 * h);
        }
        let kap = pr.kappa();
        let expect = pr.epsilon.powf(kap * 2.0 + 1.0 - 2.0) * c.h_eps.volume();
        assert!((c.body.volume() - expect).abs() < 1e-8 * expect);
    }

    #[test]
    fn constructed_body_solves_its_own_equation() {
        let pr = params(0.1);
        let grid = Arc::new(SphericalGrid::zonal(2, 32, 0).unwrap());
        let res = Resolution::default();
        let c = construct(&pr, grid, &res).unwrap();
        let lp = lp_chord_measure(&c.body, pr.q, pr.p, &res).unwrap();
        let mu = c.mu();
        for (k, &lab) in c.body.labels().iter().enumerate() {
            let r = lp.weights[k] / mu.weights[lab];
            assert!((r - 1.0).abs() < 1e-6, "facet {k}: ratio {r}");
        }
    }

    #[test]
    fn quermass_law_at_a_few_directions() {
        let pr = params(0.5 - 1e-9);
        let sq = Body::cube(2, 1.0).unwrap();
        let x = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        let c = quermass_transform_check(&sq, &pr, &x).unwrap();
        assert!(c.rel_err < 1e-6, "{c:?}");
        let pr = params(0.1);
        for t in [0.3f64, 1.0, 2.0, 2.9] {
            let c = quermass_transform_check(&sq, &pr, &[t.cos(), t.sin()]).unwrap();
            assert!(c.rel_err < 1e-6, "{t}: {c:?}");
        }
    }

    #[test]
    fn slope_of_exact_power() {
        let pts: Vec<(f64, f64)> = [0.4f64, 0.2, 0.1].iter().map(|e| (e.ln(), 3.0 * e.ln() + 1.0)).collect();
        assert!((log_log_slope(&pts) - 3.0).abs() < 1e-12);
    }
}
