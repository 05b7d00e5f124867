use anyhow::{bail, Context, Result};
use chords::body::Body;
use chords::classical::{discretize_density, section3_density, solve_classical_minkowski, ClassicalProblem, Symmetry};
use chords::construction::{construct, epsilon_sweep, SweepRecord};
use chords::grid::{DiscreteMeasure, SphericalGrid};
use chords::harness::{
    render_results, run_nonuniqueness, run_verification_suite, to_json, ExperimentConfig, Format, Level,
    ResultRecord,
};
use chords::integral::{
    chord_integral_boundary, chord_integral_crofton, chord_integral_slice, chord_measure_polytope, dual_quermass,
    lp_chord_measure, DualMethod, LineSamplerConfig, Resolution,
};
use chords::params::Stage;
use chords::variational::{euler_lagrange_rescale, maximize, stationarity_residual};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "chords", version, about = "Chord integrals and the L_p chord Minkowski problem")]
struct Cli {
    /// Seed for Monte Carlo estimators (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    /// Chord integral I_q.
    Iq,
    /// Dual quermassintegral at a base point.
    Dual,
    /// Chord measure F_q, one row per facet.
    Measure,
    /// L_p chord measure F_{p,q}, one row per facet.
    LpMeasure,
}

#[derive(Clone, Copy, ValueEnum)]
enum IqMethod {
    Boundary,
    Slice,
    Crofton,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Square,
    Cube,
    Disk,
    Ball,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Csv,
    Json,
}

impl From<Fmt> for Format {
    fn from(f: Fmt) -> Format {
        match f {
            Fmt::Csv => Format::Csv,
            Fmt::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

#[derive(Subcommand)]
enum Cmd {
    /// One-off I_q, dual quermassintegral or chord measure of a body.
    Compute {
        /// Body JSON file.
        #[arg(long, conflicts_with = "shape")]
        body: Option<PathBuf>,
        /// Built-in body: unit square/cube [-1,1]^n or unit disk/ball.
        #[arg(long)]
        shape: Option<Shape>,
        #[arg(long)]
        q: f64,
        /// Exponent for the L_p chord measure.
        #[arg(long, allow_hyphen_values = true)]
        p: Option<f64>,
        #[arg(long, value_enum, default_value = "iq")]
        quantity: Quantity,
        #[arg(long, value_enum, default_value = "boundary")]
        method: IqMethod,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Base point for the dual quermassintegral, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Fmt,
    },
    /// Solve the classical Minkowski problem for a measure file, or for the
    /// density of the construction at the config's ε.
    ClassicalSolve {
        #[arg(long, required_unless_present = "config")]
        measure: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// I_q(K_{H_ε}) over the config's ε list, as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Fmt,
    },
    /// Maximize Φ_p under I_q = 1 and rescale to a solution.
    VariationalSolve {
        #[arg(long)]
        config: PathBuf,
        /// Discrete measure on the config's grid; f_ε of the construction
        /// when absent.
        #[arg(long)]
        f: Option<PathBuf>,
    },
    /// Constructed and variational solutions of the same equation.
    Nonuniq {
        #[arg(long)]
        config: PathBuf,
    },
    /// Self-checks; exits nonzero if any fails.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: LevelArg,
    },
    /// Convert a JSON record file (sweep or result records) to CSV or JSON.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Fmt,
    },
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: &Path, stage: Stage, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::from_json(&read(path)?, stage)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    Ok(c)
}

fn load_body(body: &Option<PathBuf>, shape: Option<Shape>) -> Result<(String, Body)> {
    if let Some(p) = body {
        let b: Body = serde_json::from_str(&read(p)?).context("parsing body")?;
        let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "body".into());
        return Ok((id, b));
    }
    Ok(match shape {
        Some(Shape::Square) => ("square".into(), Body::cube(2, 1.0)?),
        Some(Shape::Cube) => ("cube".into(), Body::cube(3, 1.0)?),
        Some(Shape::Disk) => ("disk".into(), Body::unit_ball(2)),
        Some(Shape::Ball) => ("ball".into(), Body::unit_ball(3)),
        None => bail!("give --body or --shape"),
    })
}

fn measure_rows(id: &str, q: f64, p: Option<f64>, m: &DiscreteMeasure, method: &str) -> Vec<ResultRecord> {
    m.directions
        .iter()
        .zip(&m.weights)
        .enumerate()
        .map(|(k, (_, w))| ResultRecord {
            body_id: format!("{id}#{k}"),
            q,
            p,
            method: method.into(),
            value: *w,
            std_error: 0.0,
            n_samples: 0,
            seed: 0,
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn compute(
    body: &Option<PathBuf>,
    shape: Option<Shape>,
    q: f64,
    p: Option<f64>,
    quantity: Quantity,
    method: IqMethod,
    samples: u64,
    z: &Option<Vec<f64>>,
    seed: u64,
) -> Result<Vec<ResultRecord>> {
    let (id, b) = load_body(body, shape)?;
    let res = Resolution::default();
    let poly = || b.as_polytope().context("this quantity needs a polytope");
    Ok(match quantity {
        Quantity::Iq => {
            let e = match method {
                IqMethod::Crofton => chord_integral_crofton(&b, q, &LineSamplerConfig::new(samples, seed))?,
                IqMethod::Boundary => chord_integral_boundary(poly()?, q, &res)?,
                IqMethod::Slice => chord_integral_slice(poly()?, q, 12)?,
            };
            vec![ResultRecord::from_estimate(&id, q, None, &e)]
        }
        Quantity::Dual => {
            let z = z.clone().unwrap_or_else(|| vec![0.0; b.dim()]);
            let e = dual_quermass(&b, &z, q, &DualMethod::RadialQuadrature { grid: None })?;
            vec![ResultRecord::from_estimate(&id, q, None, &e)]
        }
        Quantity::Measure => measure_rows(&id, q, None, &chord_measure_polytope(poly()?, q, &res)?, "boundary"),
        Quantity::LpMeasure => {
            let p = p.context("--p is required for lp-measure")?;
            measure_rows(&id, q, Some(p), &lp_chord_measure(poly()?, q, p, &res)?, "boundary")
        }
    })
}

#[derive(Serialize)]
struct VariationalOutput {
    body: Body,
    #[serde(rename = "C")]
    c: f64,
    rescale_factor: f64,
    #[serde(rename = "Iq")]
    iq: chords::integral::Estimate,
    #[serde(rename = "predicted_Iq")]
    predicted_iq: f64,
    residual: f64,
    stationarity: f64,
    converged: bool,
    iterations: usize,
    trace: Vec<f64>,
}

fn variational(cfg: &ExperimentConfig, f_path: &Option<PathBuf>) -> Result<VariationalOutput> {
    let p = cfg.params;
    let res = cfg.grid.resolution;
    let grid = cfg.grid()?;
    let f = match f_path {
        Some(path) => {
            let m: DiscreteMeasure = serde_json::from_str(&read(path)?).context("parsing measure")?;
            on_grid(&m, &grid)?
        }
        None => {
            p.validate(Stage::Nonuniqueness)?;
            construct(&p, grid.clone(), &res)?.f
        }
    };
    let st = maximize(&f, grid.clone(), &p, None, &cfg.solver)?;
    if !st.converged {
        eprintln!("warning: stationarity {:.3e} above tolerance after {} iterations", st.stationarity, st.iteration);
    }
    let sol = euler_lagrange_rescale(&st, &f, &p, &res)?;
    let mu_w: Vec<f64> = f.weights.iter().map(|w| 2.0 * p.q / chords::special::omega(p.nf()) * w).collect();
    let mu = DiscreteMeasure::on_grid(&grid, mu_w)?;
    let residual = stationarity_residual(&sol.body, &mu, &p, &res)?;
    Ok(VariationalOutput {
        body: sol.body,
        c: sol.c,
        rescale_factor: sol.rescale_factor,
        iq: sol.iq,
        predicted_iq: sol.predicted_iq,
        residual,
        stationarity: st.stationarity,
        converged: st.converged,
        iterations: st.iteration,
        trace: st.objective_trace,
    })
}

/// Reorder a measure onto the grid's directions.
fn on_grid(m: &DiscreteMeasure, grid: &Arc<SphericalGrid>) -> Result<DiscreteMeasure> {
    let mut w = vec![0.0; grid.len()];
    let mut seen = vec![false; grid.len()];
    for (u, x) in m.directions.iter().zip(&m.weights) {
        let k = grid
            .directions()
            .iter()
            .position(|v| v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() > 1.0 - 1e-9)
            .context("measure direction is not on the config grid")?;
        if seen[k] {
            bail!("two measure directions map to one grid direction");
        }
        seen[k] = true;
        w[k] = *x;
    }
    Ok(DiscreteMeasure::on_grid(grid, w)?)
}

fn classical(measure: &Option<PathBuf>, config: &Option<PathBuf>, seed: Option<u64>) -> Result<String> {
    let problem = match (measure, config) {
        (Some(path), _) => {
            let m: DiscreteMeasure = serde_json::from_str(&read(path)?).context("parsing measure")?;
            ClassicalProblem::new(m, Symmetry { even: false, rotationally_symmetric: false })?
        }
        (None, Some(path)) => {
            let cfg = load_config(path, Stage::Decay, seed)?;
            let g = SphericalGrid::zonal(cfg.params.n, cfg.grid.rings, if cfg.params.n == 3 { 2 * cfg.grid.rings } else { 0 })?;
            discretize_density(|x| section3_density(x, &cfg.params), &g)?
        }
        (None, None) => bail!("give --measure or --config"),
    };
    Ok(to_json(&solve_classical_minkowski(&problem)?)?)
}

fn export(input: &Path, format: Format) -> Result<String> {
    let text = read(input)?;
    if let Ok(r) = serde_json::from_str::<Vec<ResultRecord>>(&text) {
        return Ok(render_results(&r, format)?);
    }
    let r: Vec<SweepRecord> = serde_json::from_str(&text).context("expected an array of result or sweep records")?;
    Ok(render_results(&r, format)?)
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("thread pool")?;
    }
    let seed = cli.seed;
    match &cli.cmd {
        Cmd::Compute { body, shape, q, p, quantity, method, samples, z, format } => {
            let recs = compute(body, *shape, *q, *p, *quantity, *method, *samples, z, seed.unwrap_or(0))?;
            emit(&cli.out, &render_results(&recs, (*format).into())?)?;
        }
        Cmd::ClassicalSolve { measure, config } => emit(&cli.out, &classical(measure, config, seed)?)?,
        Cmd::Sweep { config, format } => {
            let cfg = load_config(config, Stage::Decay, seed)?;
            let rep = epsilon_sweep(&cfg.params, &cfg.eps_list, cfg.grid.rings, &cfg.grid.resolution)?;
            let text = render_results(&rep.records, (*format).into())?;
            let out = cli.out.clone().or(cfg.outputs.sweep_csv.clone());
            emit(&out, &text)?;
            eprintln!(
                "slope {:.6} (bound exponent {:.6}), sweep constant {:.6}",
                rep.slope, rep.predicted_exponent, rep.bound_constant
            );
        }
        Cmd::VariationalSolve { config, f } => {
            let stage = if f.is_some() { Stage::Variational } else { Stage::Nonuniqueness };
            let cfg = load_config(config, stage, seed)?;
            emit(&cli.out, &to_json(&variational(&cfg, f)?)?)?;
        }
        Cmd::Nonuniq { config } => {
            let cfg = load_config(config, Stage::Nonuniqueness, seed)?;
            let rep = run_nonuniqueness(&cfg);
            let out = cli.out.clone().or(cfg.outputs.report_json.clone());
            emit(&out, &to_json(&rep)?)?;
            if let Some(stage) = &rep.failed_stage {
                eprintln!("failed at stage {stage}: {}", rep.error.as_deref().unwrap_or(""));
                return Ok(2);
            }
        }
        Cmd::Verify { level } => {
            let level = match level {
                LevelArg::Fast => Level::Fast,
                LevelArg::Full => Level::Full,
            };
            let rep = run_verification_suite(level, seed.unwrap_or(0));
            for c in &rep.checks {
                eprintln!("{:<30} {}  {}", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
            }
            emit(&cli.out, &to_json(&rep)?)?;
            if !rep.all_passed {
                return Ok(1);
            }
        }
        Cmd::Export { input, format } => emit(&cli.out, &export(input, (*format).into())?)?,
    }
    Ok(0)
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

