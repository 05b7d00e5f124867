//! The maximization problem `sup { Φ_p(h) = Σ f_i h_i^p : I_q([h]) = 1 }`
//! over even, rotationally symmetric support vectors, and the rescaling that
//! turns a maximizer into a solution of `F_{p,q}(K, ·) = (2q/ω_n) f`.

use crate::body::{Body, Polytope};
use crate::consts::SUPPORT_BOX;
use crate::error::{Error, Result};
use crate::grid::{DiscreteMeasure, SupportVector};
use crate::integral::measure::{chord_measure_weights, lp_chord_measure, Resolution};
use crate::integral::{chord_integral_boundary, Estimate};
use crate::linalg::dot;
use crate::optim::{lbfgs_minimize, LbfgsOptions};
use crate::params::ProblemParams;
use crate::special::{ball_chord_integral, omega};
use crate::wulff::wulff_shape;
use serde::{Deserialize, Serialize};

pub fn phi_p(h: &SupportVector, f: &DiscreteMeasure, p: f64) -> Result<f64> {
    if f.weights.len() != h.values.len() {
        return Err(Error::InvalidParams("measure and support vector differ in length".into()));
    }
    if !(p < 0.0) {
        return Err(Error::domain("p must be negative"));
    }
    if h.values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::domain("support values must be positive"));
    }
    Ok(f.weights.iter().zip(&h.values).map(|(w, v)| w * v.powf(p)).sum())
}

/// `λ h` with `λ = I_q([h])^{-1/(n+q-1)}`, using the boundary method.
pub fn normalize_unit_chord(h: &SupportVector, q: f64, res: &Resolution) -> Result<SupportVector> {
    let w = wulff_shape(h)?;
    let iq = chord_integral_boundary(&w.body, q, res)?.value;
    if !(iq > 0.0) {
        return Err(Error::degenerate(format!("chord integral {iq} is not positive")));
    }
    let n = h.grid.dim() as f64;
    Ok(h.scaled(iq.powf(-1.0 / (n + q - 1.0))))
}

/// `r_0` with `I_q(B_{r_0}) = 1`.
pub fn unit_chord_radius(n: usize, q: f64) -> f64 {
    ball_chord_integral(n, q).powf(-1.0 / (n as f64 + q - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaximizeOptions {
    /// Stop once the Euler–Lagrange defect falls below this.
    pub tol: f64,
    pub max_iter: usize,
    pub resolution: Resolution,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions { tol: 1e-3, max_iter: 2000, resolution: Resolution::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationalState {
    #[serde(skip)]
    pub h: SupportVector,
    /// The even zonal profile of `h`.
    pub profile: Vec<f64>,
    pub objective: f64,
    pub chord: Estimate,
    pub iteration: usize,
    /// Largest relative mismatch between the classes of `p f_i h_i^{p-1}`
    /// and `λ F_{q,i}`.
    pub stationarity: f64,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

/// Quantities at one profile: the Wulff body, induced support, chord
/// measure per grid direction and `I_q`.
struct Eval {
    body: Polytope,
    h: Vec<f64>,
    fq: Vec<f64>,
    iq: f64,
}

fn evaluate(hs: &SupportVector, q: f64, res: &Resolution) -> Result<Eval> {
    let w = wulff_shape(hs)?;
    let f = chord_measure_weights(&w.body, q, None, res)?;
    let mut fq = vec![0.0; hs.values.len()];
    for (k, &i) in w.facet_dir.iter().enumerate() {
        fq[i] += f[k];
    }
    let n = hs.grid.dim() as f64;
    let iq = dot(&fq, &w.induced) / (n + q - 1.0);
    Ok(Eval { body: w.body, h: w.induced, fq, iq })
}

/// Per-class sums `S_j = (n+q-1) Σ f_i h_i^p / Φ` and `T_j = Σ F_i h_i / I_q`;
/// both sum to `n+q-1`, and the Euler–Lagrange equation is `S = T`.
/// `Φ` is taken at the raw values `h`, not the induced support: it is
/// smaller there, agrees at the maximizer, and stays differentiable in
/// directions without a facet.
fn class_balance(f: &[f64], h: &[f64], e: &Eval, p: f64, grid: &crate::grid::SphericalGrid, n: f64, q: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let phi: f64 = f.iter().zip(h).map(|(w, v)| w * v.powf(p)).sum();
    let mut s = vec![0.0; grid.n_profile()];
    let mut t = vec![0.0; grid.n_profile()];
    for i in 0..f.len() {
        let j = grid.profile_index(i);
        s[j] += (n + q - 1.0) * f[i] * h[i].powf(p) / phi;
        t[j] += e.fq[i] * e.h[i] / e.iq;
    }
    (s, t, phi)
}

fn defect(s: &[f64], t: &[f64]) -> f64 {
    s.iter()
        .zip(t)
        .map(|(a, b)| {
            if *b > 0.0 {
                (a / b - 1.0).abs()
            } else if *a > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Ascent on `log Φ_p(h) − (p/(n+q−1)) log I_q([h])`, which is invariant
/// under dilation, in the logarithms of the zonal profile. Each trial point
/// is replaced by the support of its Wulff shape, and the result is scaled
/// to `I_q = 1`.
pub fn maximize(
    f: &DiscreteMeasure,
    grid: std::sync::Arc<crate::grid::SphericalGrid>,
    params: &ProblemParams,
    start: Option<&[f64]>,
    opts: &MaximizeOptions,
) -> Result<VariationalState> {
    if !grid.is_zonal() {
        return Err(Error::Precondition("the variational solver works on zonal grids".into()));
    }
    if f.weights.len() != grid.len() {
        return Err(Error::InvalidParams("measure and grid differ in length".into()));
    }
    if !(f.total() > 0.0) {
        return Err(Error::domain("f has no mass"));
    }
    if f.evenness_defect() > 1e-10 {
        return Err(Error::Precondition("f is not even".into()));
    }
    let (p, q, n) = (params.p, params.q, params.nf());
    let res = opts.resolution;
    let np = grid.n_profile();
    let r0 = unit_chord_radius(params.n, q);
    let x0: Vec<f64> = match start {
        Some(s) if s.len() == np => s.iter().map(|v| v.ln()).collect(),
        Some(_) => return Err(Error::InvalidParams("start profile has the wrong length".into())),
        None => vec![r0.ln(); np],
    };
    let fw = f.weights.clone();
    let g = grid.clone();
    let profile_to_sv = |x: &[f64]| -> Option<SupportVector> {
        let prof: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        SupportVector::new(g.clone(), g.expand_profile(&prof)).ok()
    };
    let last_defect = std::cell::Cell::new(f64::INFINITY);
    let box_hit = std::cell::Cell::new(false);
    let eval = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
        let hs = profile_to_sv(x)?;
        let e = evaluate(&hs, q, &res).ok()?;
        let (s, t, phi) = class_balance(&fw, &hs.values, &e, p, &g, n, q);
        // Objective in scale-free form, evaluated at the normalized body.
        let lam = e.iq.powf(-1.0 / (n + q - 1.0));
        let hmin = e.h.iter().cloned().fold(f64::INFINITY, f64::min) * lam;
        let hmax = e.h.iter().cloned().fold(0.0, f64::max) * lam;
        if hmin < SUPPORT_BOX.0 || hmax > SUPPORT_BOX.1 {
            box_hit.set(true);
            return None;
        }
        last_defect.set(defect(&s, &t));
        let val = -(phi.ln() - p / (n + q - 1.0) * e.iq.ln());
        // d/dx_j of the objective; inactive directions count with F = 0, which
        // pushes them back towards the body.
        let grad: Vec<f64> = s.iter().zip(&t).map(|(a, b)| -(p / (n + q - 1.0)) * (a - b)).collect();
        Some((val, grad))
    };
    let tol = opts.tol;
    let lopts = LbfgsOptions { memory: 10, max_iter: opts.max_iter, grad_tol: 0.0, max_backtracks: 30, max_step: 0.25 };
    // The optimizer calls `stop` right after evaluating the accepted point.
    let stop = |_: &[f64], _: f64, _: &[f64]| last_defect.get() <= tol;
    let out = lbfgs_minimize(x0, eval, stop, &lopts);
    if box_hit.get() && out.as_ref().is_none_or(|r| !r.converged) {
        return Err(Error::NotConverged(
            "iterate left the support box [1e-4, 1e4]; hypotheses on f or the grid are too coarse".into(),
        ));
    }
    let out = out.ok_or_else(|| Error::degenerate("starting profile gives a degenerate body"))?;
    let hs = profile_to_sv(&out.x).ok_or_else(|| Error::degenerate("final profile"))?;
    let e = evaluate(&hs, q, &res)?;
    let lam = e.iq.powf(-1.0 / (n + q - 1.0));
    let h = SupportVector::new(grid.clone(), e.h.iter().map(|v| v * lam).collect())?;
    let e1 = evaluate(&h, q, &res)?;
    let (s, t, phi) = class_balance(&fw, &h.values, &e1, p, &grid, n, q);
    let stationarity = defect(&s, &t);
    let profile = {
        let sums = grid.reduce_to_profile(&h.values);
        sums.iter().zip(grid.profile_counts()).map(|(a, c)| a / c as f64).collect()
    };
    let trace = out.trace.iter().map(|v| (-v).exp()).collect();
    let chord = chord_integral_boundary(&e1.body, q, &res)?;
    Ok(VariationalState {
        h,
        profile,
        objective: phi,
        chord,
        iteration: out.iterations,
        stationarity,
        objective_trace: trace,
        converged: stationarity <= tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RescaledSolution {
    pub body: Body,
    pub support: Vec<f64>,
    /// `C = 2q/((n+q−1)ω_n) Φ_p(h)`.
    pub c: f64,
    /// `C^{1/(n+q−p−1)}`.
    pub rescale_factor: f64,
    /// `C^{(n+q−1)/(n+q−p−1)}`.
    pub predicted_iq: f64,
    pub iq: Estimate,
}

pub fn euler_lagrange_rescale(
    state: &VariationalState,
    f: &DiscreteMeasure,
    params: &ProblemParams,
    res: &Resolution,
) -> Result<RescaledSolution> {
    let (p, q, n) = (params.p, params.q, params.nf());
    let phi = phi_p(&state.h, f, p)?;
    let c = 2.0 * q / ((n + q - 1.0) * omega(n)) * phi;
    if !(c > 0.0) {
        return Err(Error::degenerate("Euler–Lagrange constant is not positive"));
    }
    let a = c.powf(1.0 / (n + q - p - 1.0));
    let h = state.h.scaled(a);
    let w = wulff_shape(&h)?;
    let iq = chord_integral_boundary(&w.body, q, res)?;
    Ok(RescaledSolution {
        body: Body::Polytope(w.body),
        support: w.induced,
        c,
        rescale_factor: a,
        predicted_iq: c.powf((n + q - 1.0) / (n + q - p - 1.0)),
        iq,
    })
}

/// `max_i |r_i − median r| / median r` with `r_i = F_{p,q}(K, facet i)/μ_i`.
/// A facet without mass in `μ`, or mass of `μ` on a direction without a
/// facet, gives an infinite residual.
pub fn stationarity_residual(body: &Body, mu: &DiscreteMeasure, params: &ProblemParams, res: &Resolution) -> Result<f64> {
    let poly = body.as_polytope().ok_or_else(|| Error::unsupported("residual needs a polytope"))?;
    let lp = lp_chord_measure(poly, params.q, params.p, res)?;
    let mut got = vec![0.0; mu.weights.len()];
    for (u, w) in lp.directions.iter().zip(&lp.weights) {
        let j = mu
            .directions
            .iter()
            .position(|v| dot(u, v) > 1.0 - 1e-9)
            .ok_or_else(|| Error::Precondition("facet normal outside the measure's support".into()))?;
        got[j] += w;
    }
    let mmax = mu.weights.iter().cloned().fold(0.0, f64::max);
    let mut r = Vec::new();
    for (g, m) in got.iter().zip(&mu.weights) {
        let live = *m > 1e-13 * mmax;
        match (live, *g > 0.0) {
            (true, true) => r.push(g / m),
            (true, false) | (false, true) => return Ok(f64::INFINITY),
            (false, false) => {}
        }
    }
    if r.is_empty() {
        return Err(Error::degenerate("no active facets"));
    }
    let mut sorted = r.clone();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    let med = if k % 2 == 1 { sorted[k / 2] } else { 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]) };
    Ok(r.iter().map(|v| (v - med).abs() / med).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SphericalGrid;
    use std::sync::Arc;

    fn params() -> ProblemParams {
        ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, 0.1)
    }

    #[test]
    fn phi_examples() {
        let g = Arc::new(
            SphericalGrid::from_parts(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, 1.0], false).unwrap(),
        );
        let f = DiscreteMeasure::on_grid(&g, vec![1.0, 1.0]).unwrap();
        let h = SupportVector::new(g.clone(), vec![2.0, 2.0]).unwrap();
        assert!((phi_p(&h, &f, -1.0).unwrap() - 1.0).abs() < 1e-15);
        let one = SupportVector::new(g.clone(), vec![1.0, 1.0]).unwrap();
        assert_eq!(phi_p(&one, &f, -3.0).unwrap(), 2.0);
        assert!((phi_p(&one.scaled(3.0), &f, -2.0).unwrap() - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_is_idempotent() {
        let g = Arc::new(SphericalGrid::zonal(2, 16, 0).unwrap());
        let vals: Vec<f64> = g.directions().iter().map(|u| 1.0 + 0.3 * u[1] * u[1]).collect();
        let h = SupportVector::new(g, vals).unwrap();
        let res = Resolution::default();
        let a = normalize_unit_chord(&h, 2.5, &res).unwrap();
        let b = normalize_unit_chord(&a, 2.5, &res).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-10);
        }
        let w = wulff_shape(&a).unwrap();
        let iq = chord_integral_boundary(&w.body, 2.5, &res).unwrap().value;
        assert!((iq - 1.0).abs() < 1e-10);
    }

    #[test]
    fn residual_of_own_measure_and_scaling() {
        let g = Arc::new(SphericalGrid::zonal(2, 16, 0).unwrap());
        let vals: Vec<f64> = g.directions().iter().map(|u| 1.0 + 0.3 * u[1] * u[1]).collect();
        let h = SupportVector::new(g.clone(), vals).unwrap();
        let w = wulff_shape(&h).unwrap();
        let pr = params();
        let res = Resolution::default();
        let lp = lp_chord_measure(&w.body, pr.q, pr.p, &res).unwrap();
        let mut mu = vec![0.0; g.len()];
        for (k, &i) in w.facet_dir.iter().enumerate() {
            mu[i] = lp.weights[k];
        }
        let mu = DiscreteMeasure::on_grid(&g, mu).unwrap();
        let body = Body::Polytope(w.body.clone());
        let r = stationarity_residual(&body, &mu, &pr, &res).unwrap();
        assert!(r < 1e-12, "{r}");
        let t: f64 = 1.7;
        let scaled_mu = DiscreteMeasure {
            directions: mu.directions.clone(),
            weights: mu.weights.iter().map(|v| v * t.powf(pr.nf() + pr.q - pr.p - 1.0)).collect(),
        };
        let r2 = stationarity_residual(&body.dilate(t), &scaled_mu, &pr, &res).unwrap();
        assert!((r2 - r).abs() < 1e-10);
        // An unrelated measure is far off.
        let flat = DiscreteMeasure::on_grid(&g, g.weights().to_vec()).unwrap();
        assert!(stationarity_residual(&body, &flat, &pr, &res).unwrap() > 0.05);
    }

    #[test]
    fn uniform_f_gives_ball() {
        let g = Arc::new(SphericalGrid::zonal(2, 32, 0).unwrap());
        let f = DiscreteMeasure::on_grid(&g, g.weights().to_vec()).unwrap();
        let pr = params();
        let np = g.n_profile();
        let start: Vec<f64> = (0..np).map(|j| 1.0 + 0.2 * (j as f64 / np as f64)).collect();
        let st = maximize(&f, g.clone(), &pr, Some(&start), &MaximizeOptions::default()).unwrap();
        assert!(st.converged, "stationarity {}", st.stationarity);
        let (lo, hi) = st.profile.iter().fold((f64::INFINITY, 0.0f64), |a, &v| (a.0.min(v), a.1.max(v)));
        assert!(hi / lo - 1.0 < 1e-2, "{lo} {hi}");
        let r0 = unit_chord_radius(2, pr.q);
        let oracle = f.total() * r0.powf(pr.p);
        assert!((st.objective - oracle).abs() < 1e-2 * oracle);
        assert!(st.objective >= oracle * (1.0 - 1e-3));
    }
}
