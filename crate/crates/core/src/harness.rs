//! Experiment configuration, the two-solution pipeline, the self-check suite
//! and CSV/JSON export.

use crate::body::{Body, Ellipsoid, Polytope};
use crate::classical::{discretize_density, facet_area_residual, section3_density, solve_classical_minkowski};
use crate::construction::{construct, quermass_transform_check, SweepRecord};
use crate::error::{Error, Result};
use crate::grid::{DiscreteMeasure, SphericalGrid, SupportVector};
use crate::integral::bounds::{ellipsoid_chord_bound, first_variation_check, interpolation_bound_check};
use crate::integral::measure::{chord_measure_weights, Resolution};
use crate::integral::{chord_integral_boundary, chord_integral_crofton, chord_integral_slice, Estimate, LineSamplerConfig};
use crate::params::{ProblemParams, Stage};
use crate::special::{ball_chord_integral, ball_chord_integral_with, omega};
use crate::variational::{euler_lagrange_rescale, maximize, stationarity_residual, MaximizeOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

/// Gap thresholds for calling two solutions distinct.
pub const IQ_RATIO_THRESHOLD: f64 = 4.0;
pub const SUPPORT_GAP_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    /// Rings of the planar zonal grid (`2·rings` directions).
    pub rings: usize,
    pub resolution: Resolution,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { rings: 64, resolution: Resolution::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSettings {
    pub n_samples: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings { n_samples: 1_000_000 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub sweep_csv: Option<PathBuf>,
    pub report_json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ProblemParams,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub grid: GridSettings,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputPaths,
    #[serde(default)]
    pub solver: MaximizeOptions,
}

fn default_eps_list() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}

impl ExperimentConfig {
    pub fn new(params: ProblemParams) -> Self {
        ExperimentConfig {
            params,
            eps_list: default_eps_list(),
            grid: GridSettings::default(),
            mc: McSettings::default(),
            seed: 0,
            outputs: OutputPaths::default(),
            solver: MaximizeOptions::default(),
        }
    }

    /// Parse and check against the windows of `stage`.
    pub fn from_json(s: &str, stage: Stage) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s)?;
        c.validate(stage)?;
        Ok(c)
    }

    pub fn validate(&self, stage: Stage) -> Result<()> {
        if self.eps_list.is_empty() {
            return Err(Error::InvalidParams("eps_list is empty".into()));
        }
        if self.eps_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidParams("eps_list must be strictly descending".into()));
        }
        if self.grid.rings < 4 {
            return Err(Error::InvalidParams("grid.rings must be at least 4".into()));
        }
        self.params.validate(stage)?;
        for &e in &self.eps_list {
            self.params.with_epsilon(e).validate(stage)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<SphericalGrid>> {
        Ok(Arc::new(SphericalGrid::zonal(self.params.n, self.grid.rings, 0)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub iq_ratio: f64,
    pub support_gap: f64,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize)]
pub struct NonuniquenessReport {
    pub body_constructed: Option<Body>,
    pub body_variational: Option<Body>,
    pub Iq_constructed: Option<Estimate>,
    pub Iq_variational: Option<Estimate>,
    pub residual_constructed: Option<f64>,
    pub residual_variational: Option<f64>,
    /// `max_i |h_c − h_v| / max(h_c, h_v)` over the grid, unnormalized.
    pub support_gap: Option<f64>,
    pub distinct: bool,
    pub thresholds: Thresholds,
    pub params: ProblemParams,
    pub rings: usize,
    /// Euler–Lagrange constant and rescaling of the maximizer.
    pub c: Option<f64>,
    pub rescale_factor: Option<f64>,
    pub stationarity: Option<f64>,
    pub iterations: Option<usize>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

impl NonuniquenessReport {
    fn empty(cfg: &ExperimentConfig) -> Self {
        NonuniquenessReport {
            body_constructed: None,
            body_variational: None,
            Iq_constructed: None,
            Iq_variational: None,
            residual_constructed: None,
            residual_variational: None,
            support_gap: None,
            distinct: false,
            thresholds: Thresholds { iq_ratio: IQ_RATIO_THRESHOLD, support_gap: SUPPORT_GAP_THRESHOLD },
            params: cfg.params,
            rings: cfg.grid.rings,
            c: None,
            rescale_factor: None,
            stationarity: None,
            iterations: None,
            failed_stage: None,
            error: None,
        }
    }

    fn fail(mut self, stage: &str, e: Error) -> Self {
        self.failed_stage = Some(stage.into());
        self.error = Some(e.to_string());
        self
    }

    pub fn iq_ratio(&self) -> Option<f64> {
        Some(self.Iq_variational?.value / self.Iq_constructed?.value)
    }
}

pub fn support_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.max(*y)).fold(0.0, f64::max)
}

/// Build `H_ε`, solve the maximization problem for the same `f_ε`, and
/// compare the two solutions against `μ = (2q/ω_n) f_ε`. Runs at
/// `cfg.params.epsilon`. A failing stage leaves a partial report.
pub fn run_nonuniqueness(cfg: &ExperimentConfig) -> NonuniquenessReport {
    let mut rep = NonuniquenessReport::empty(cfg);
    let p = cfg.params;
    if let Err(e) = p.validate(Stage::Nonuniqueness) {
        return rep.fail("validate", e);
    }
    if !(p.q < p.nf() + 1.0) {
        return rep.fail("validate", Error::InvalidParams("q must be below n+1".into()));
    }
    let res = cfg.grid.resolution;
    let grid = match cfg.grid() {
        Ok(g) => g,
        Err(e) => return rep.fail("grid", e),
    };
    let con = match construct(&p, grid.clone(), &res) {
        Ok(c) => c,
        Err(e) => return rep.fail("construction", e),
    };
    let mu = con.mu();
    let body_c = Body::Polytope(con.body.clone());
    match chord_integral_boundary(&con.body, p.q, &res) {
        Ok(iq) => rep.Iq_constructed = Some(iq),
        Err(e) => return rep.fail("construction", e),
    }
    match stationarity_residual(&body_c, &mu, &p, &res) {
        Ok(r) => rep.residual_constructed = Some(r),
        Err(e) => return rep.fail("residual_constructed", e),
    }
    rep.body_constructed = Some(body_c);
    let state = match maximize(&con.f, grid.clone(), &p, None, &cfg.solver) {
        Ok(s) => s,
        Err(e) => return rep.fail("variational", e),
    };
    rep.stationarity = Some(state.stationarity);
    rep.iterations = Some(state.iteration);
    if !state.converged {
        return rep.fail(
            "variational",
            Error::NotConverged(format!("stationarity {:.3e} after {} iterations", state.stationarity, state.iteration)),
        );
    }
    let sol = match euler_lagrange_rescale(&state, &con.f, &p, &res) {
        Ok(s) => s,
        Err(e) => return rep.fail("rescale", e),
    };
    rep.c = Some(sol.c);
    rep.rescale_factor = Some(sol.rescale_factor);
    rep.Iq_variational = Some(sol.iq);
    match stationarity_residual(&sol.body, &mu, &p, &res) {
        Ok(r) => rep.residual_variational = Some(r),
        Err(e) => return rep.fail("residual_variational", e),
    }
    let gap = support_gap(&con.support.values, &sol.support);
    rep.support_gap = Some(gap);
    rep.body_variational = Some(sol.body);
    let ratio = rep.iq_ratio().unwrap_or(0.0);
    rep.distinct = ratio >= IQ_RATIO_THRESHOLD && gap >= SUPPORT_GAP_THRESHOLD;
    rep
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub level: Level,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

type Check = (&'static str, Box<dyn Fn(u64, Level) -> Result<(bool, String)>>);

/// Convex hull of points at radii `1 ± 0.3` around the circle.
pub fn random_polygon(rng: &mut ChaCha8Rng, k: usize) -> Result<Polytope> {
    let pts: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let a = (i as f64 + rng.random_range(-0.3..0.3)) * std::f64::consts::TAU / k as f64;
            let r = 1.0 + rng.random_range(-0.3..0.3);
            vec![r * a.cos(), r * a.sin()]
        })
        .collect();
    Polytope::from_vertices(&pts)
}

pub fn random_ellipsoid(rng: &mut ChaCha8Rng, n: usize) -> Result<Ellipsoid> {
    let axes: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let m = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let qr = m.qr();
    let center: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
    Ellipsoid::new(axes, qr.q(), center)
}

fn mc_samples(level: Level) -> u64 {
    match level {
        Level::Fast => 200_000,
        Level::Full => 1_000_000,
    }
}

fn checks() -> Vec<Check> {
    vec![
        (
            "ball_formula",
            Box::new(|seed, level| {
                let mut ok = true;
                let mut d = String::new();
                for (n, q) in [(2, 2.5), (3, 2.0)] {
                    let est = chord_integral_crofton(&Body::unit_ball(n), q, &LineSamplerConfig::new(mc_samples(level), seed))?;
                    let exact = ball_chord_integral(n, q);
                    ok &= est.within(exact, 3.0, 0.0);
                    d += &format!("n={n} q={q}: {:.6} vs {:.6} ± {:.1e}; ", est.value, exact, est.std_error);
                }
                Ok((ok, d))
            }),
        ),
        (
            "ball_formula_mutation",
            Box::new(|seed, level| {
                // A perturbed ω table must be caught by the same comparison.
                let bad = |s: f64| omega(s) * (1.0 + 0.05 * s);
                let est = chord_integral_crofton(&Body::unit_ball(2), 2.5, &LineSamplerConfig::new(mc_samples(level), seed))?;
                let wrong = ball_chord_integral_with(bad, 2, 2.5);
                let caught = !est.within(wrong, 3.0, 0.0);
                Ok((caught, format!("mutant {wrong:.6} vs estimate {:.6}", est.value)))
            }),
        ),
        (
            "volume_identities",
            Box::new(|seed, level| {
                let sq = Body::cube(2, 1.0)?;
                let cfg = LineSamplerConfig::new(mc_samples(level), seed);
                let i1 = chord_integral_crofton(&sq, 1.0, &cfg)?;
                let i3 = chord_integral_crofton(&sq, 3.0, &cfg)?;
                let v = sq.volume();
                let t3 = 3.0 * v * v / omega(2.0);
                let ok = i1.within(v, 3.0, 0.0) && i3.within(t3, 3.0, 0.0);
                Ok((ok, format!("I1 {:.5} V {v}; I3 {:.5} vs {t3:.5}", i1.value, i3.value)))
            }),
        ),
        (
            "homogeneity",
            Box::new(|seed, _| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let k = Body::Polytope(random_polygon(&mut rng, 9)?);
                let cfg = LineSamplerConfig::new(100_000, seed);
                let a = chord_integral_crofton(&k, 2.5, &cfg)?.value;
                let b = chord_integral_crofton(&k.dilate(2.0), 2.5, &cfg)?.value;
                let rel = (b / a / 2f64.powf(3.5) - 1.0).abs();
                Ok((rel <= 1e-10, format!("relative error {rel:.2e}")))
            }),
        ),
        (
            "measure_integral_consistency",
            Box::new(|seed, _| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p = random_polygon(&mut rng, 10)?;
                let res = Resolution::default();
                let f = chord_measure_weights(&p, 2.5, None, &res)?;
                let lhs: f64 = f.iter().zip(p.offsets()).map(|(a, b)| a * b).sum();
                let rhs = 3.5 * chord_integral_slice(&p, 2.5, 12)?.value;
                let rel = (lhs / rhs - 1.0).abs();
                Ok((rel <= 1e-2, format!("relative error {rel:.2e}")))
            }),
        ),
        (
            "first_variation",
            Box::new(|seed, _| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = Arc::new(SphericalGrid::zonal(2, 5, 0)?);
                let h: Vec<f64> = (0..g.len()).map(|_| 1.0 + rng.random_range(0.0..0.2)).collect();
                let h = SupportVector::new(g.clone(), h)?;
                let mut worst: f64 = 0.0;
                for _ in 0..3 {
                    let dir: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let fv = first_variation_check(&h, &dir, 2.5, 1e-4, &LineSamplerConfig::new(100_000, seed), &Resolution::default())?;
                    worst = worst.max(fv.rel_err);
                }
                Ok((worst <= 2e-2, format!("worst relative error {worst:.2e}")))
            }),
        ),
        (
            "ellipsoid_bound",
            Box::new(|seed, level| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let count = if level == Level::Fast { 6 } else { 100 };
                let mut bad = 0;
                for i in 0..count {
                    let n = 2 + i % 2;
                    let e = random_ellipsoid(&mut rng, n)?;
                    let est = chord_integral_crofton(&Body::Ellipsoid(e.clone()), 2.5, &LineSamplerConfig::new(100_000, seed + i as u64))?;
                    if est.value - 3.0 * est.std_error > ellipsoid_chord_bound(&e, 2.5)? {
                        bad += 1;
                    }
                }
                Ok((bad == 0, format!("{bad} violations in {count}")))
            }),
        ),
        (
            "interpolation_inequality",
            Box::new(|seed, level| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let count = if level == Level::Fast { 4 } else { 50 };
                let mut bad = 0;
                for i in 0..count {
                    let k = Body::Polytope(random_polygon(&mut rng, 5 + i % 6)?);
                    let c = interpolation_bound_check(&k, 2.0, 3.0, &LineSamplerConfig::new(100_000, seed + i as u64))?;
                    if !c.holds {
                        bad += 1;
                    }
                }
                Ok((bad == 0, format!("{bad} violations in {count}")))
            }),
        ),
        (
            "classical_solver",
            Box::new(|_, level| {
                let rings = if level == Level::Fast { 32 } else { 64 };
                let g = SphericalGrid::zonal(2, rings, 0)?;
                let mut worst: f64 = 0.0;
                for eps in [0.4, 0.05] {
                    let p = ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, eps);
                    let prob = discretize_density(|x| section3_density(x, &p), &g)?;
                    let rep = solve_classical_minkowski(&prob)?;
                    worst = worst.max(facet_area_residual(&rep.body, &prob.measure)?);
                }
                Ok((worst <= 1e-6, format!("worst facet-area residual {worst:.2e}")))
            }),
        ),
        (
            "quermass_law",
            Box::new(|_, _| {
                let sq = Body::cube(2, 1.0)?;
                let mut worst: f64 = 0.0;
                for eps in [0.5, 0.1] {
                    let p = ProblemParams { gamma: -0.7, ..ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, eps) };
                    for k in 0..5 {
                        let a = 0.3 + 0.6 * k as f64;
                        let c = quermass_transform_check(&sq, &p, &[a.cos(), a.sin()])?;
                        worst = worst.max(c.rel_err);
                    }
                }
                Ok((worst <= 1e-2, format!("worst relative error {worst:.2e}")))
            }),
        ),
        (
            "constructed_solution",
            Box::new(|_, level| {
                let rings = if level == Level::Fast { 24 } else { 64 };
                let p = ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, 0.1);
                let res = Resolution::default();
                let c = construct(&p, Arc::new(SphericalGrid::zonal(2, rings, 0)?), &res)?;
                let r = stationarity_residual(&Body::Polytope(c.body.clone()), &c.mu(), &p, &res)?;
                Ok((r <= 1e-6, format!("residual {r:.2e}")))
            }),
        ),
        (
            "variational_ball",
            Box::new(|_, level| {
                let rings = if level == Level::Fast { 12 } else { 32 };
                let g = Arc::new(SphericalGrid::zonal(2, rings, 0)?);
                let f = DiscreteMeasure::on_grid(&g, g.weights().to_vec())?;
                let p = ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, 0.1);
                let np = g.n_profile();
                let start: Vec<f64> = (0..np).map(|j| 1.0 + 0.2 * j as f64 / np as f64).collect();
                let st = maximize(&f, g.clone(), &p, Some(&start), &MaximizeOptions::default())?;
                let (lo, hi) = st.profile.iter().fold((f64::INFINITY, 0.0f64), |a, &v| (a.0.min(v), a.1.max(v)));
                let flat = hi / lo - 1.0;
                Ok((st.converged && flat <= 1e-2, format!("flatness {flat:.2e}, stationarity {:.2e}", st.stationarity)))
            }),
        ),
    ]
}

/// Every check runs even if an earlier one fails; errors count as failures.
pub fn run_verification_suite(level: Level, seed: u64) -> VerificationReport {
    let mut out = Vec::new();
    for (name, f) in checks() {
        let t = Instant::now();
        let (passed, detail) = match f(seed, level) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        out.push(CheckResult { name: name.into(), passed, detail, seconds: t.elapsed().as_secs_f64() });
    }
    let all_passed = out.iter().all(|c| c.passed);
    VerificationReport { level, seed, checks: out, all_passed }
}

// ---- export ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// 17 significant digits; non-finite values spelled out for CSV.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        w.write_all(fmt_f64(v as f64).as_bytes())
    }
}

/// Compact JSON with every float at 17 significant digits. Non-finite
/// floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    v.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// A record type with a fixed CSV layout.
pub trait CsvRecord: Serialize {
    const HEADER: &'static [&'static str];
    fn row(&self) -> Vec<String>;
}

impl CsvRecord for SweepRecord {
    const HEADER: &'static [&'static str] = &["epsilon", "Iq", "Iq_stderr", "paper_bound", "ratio", "solver_residual"];
    fn row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        vec![
            fmt_f64(self.epsilon),
            opt(self.iq.map(|e| e.value)),
            opt(self.iq.map(|e| e.std_error)),
            fmt_f64(self.paper_bound),
            fmt_f64(self.ratio),
            fmt_f64(self.solver_residual),
        ]
    }
}

/// One computed quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub body_id: String,
    pub q: f64,
    /// Only for `L_p` quantities.
    pub p: Option<f64>,
    pub method: String,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl ResultRecord {
    pub fn from_estimate(body_id: &str, q: f64, p: Option<f64>, e: &Estimate) -> Self {
        ResultRecord {
            body_id: body_id.into(),
            q,
            p,
            method: e.method.as_str().into(),
            value: e.value,
            std_error: e.std_error,
            n_samples: e.n_samples,
            seed: e.seed,
        }
    }
}

impl CsvRecord for ResultRecord {
    const HEADER: &'static [&'static str] = &["body_id", "q", "p", "method", "value", "std_error", "n_samples", "seed"];
    fn row(&self) -> Vec<String> {
        vec![
            self.body_id.clone(),
            fmt_f64(self.q),
            self.p.map(fmt_f64).unwrap_or_default(),
            self.method.clone(),
            fmt_f64(self.value),
            fmt_f64(self.std_error),
            self.n_samples.to_string(),
            self.seed.to_string(),
        ]
    }
}

pub fn render_results<T: CsvRecord>(records: &[T], format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(records),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(T::HEADER)?;
            for r in records {
                w.write_record(r.row())?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
        }
    }
}

pub fn export_results<T: CsvRecord>(records: &[T], format: Format, path: &Path) -> Result<()> {
    let s = render_results(records, format)?;
    std::fs::write(path, s)?;
    Ok(())
}
