use chords::body::Body;
use chords::construction::{build_H_epsilon, construct, epsilon_sweep, log_log_slope};
use chords::grid::{DiscreteMeasure, SphericalGrid, SupportVector};
use chords::harness::{render_results, run_nonuniqueness, to_json, ExperimentConfig, Format};
use chords::integral::{chord_integral_boundary, Resolution};
use chords::params::ProblemParams;
use chords::variational::{euler_lagrange_rescale, maximize, normalize_unit_chord, phi_p, MaximizeOptions};
use rand::{Rng, SeedableRng};
use std::sync::Arc;

fn small_config(eps: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, eps));
    c.eps_list = vec![eps];
    c.grid.rings = 12;
    c
}

#[test]
fn nonuniqueness_report_is_byte_stable() {
    let cfg = small_config(0.2);
    let a = to_json(&run_nonuniqueness(&cfg)).unwrap();
    let b = to_json(&run_nonuniqueness(&cfg)).unwrap();
    assert_eq!(a, b);
    let rep = run_nonuniqueness(&cfg);
    assert!(rep.failed_stage.is_none(), "{:?}", rep.error);
    assert!(rep.residual_constructed.unwrap() < 1e-6);
    assert!(rep.residual_variational.unwrap() < 5e-2);
}

#[test]
fn sweep_csv_refit_matches_reported_slope() {
    let p = ProblemParams { gamma: -0.7, ..ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, 0.4) };
    let rep = epsilon_sweep(&p, &[0.4, 0.2, 0.1], 16, &Resolution::default()).unwrap();
    let csv = render_results(&rep.records, Format::Csv).unwrap();
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["epsilon", "Iq", "Iq_stderr", "paper_bound", "ratio", "solver_residual"]
    );
    let pts: Vec<(f64, f64)> = rd
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse::<f64>().unwrap().ln(), r[1].parse::<f64>().unwrap().ln())
        })
        .collect();
    assert!((log_log_slope(&pts) - rep.slope).abs() < 1e-12);
}

#[test]
fn resuming_from_serialized_classical_body() {
    let p = ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, 0.1);
    let res = Resolution::default();
    let c = construct(&p, Arc::new(SphericalGrid::zonal(2, 16, 0).unwrap()), &res).unwrap();
    let text = to_json(&c.h_eps).unwrap();
    let back: Body = serde_json::from_str(&text).unwrap();
    let h1 = build_H_epsilon(&back, &p).unwrap();
    let a = chord_integral_boundary(h1.as_polytope().unwrap(), p.q, &res).unwrap().value;
    let b = chord_integral_boundary(&c.body, p.q, &res).unwrap().value;
    assert!((a / b - 1.0).abs() < 1e-9, "{a} {b}");
}

#[test]
fn maximizer_is_first_order_optimal() {
    // Feasible perturbations (tangent to I_q = 1, then renormalized) do not
    // raise Φ_p at the computed maximizer.
    let g = Arc::new(SphericalGrid::zonal(2, 10, 0).unwrap());
    let f: Vec<f64> = g.directions().iter().zip(g.weights()).map(|(u, w)| w * (0.5 + u[1] * u[1])).collect();
    let f = DiscreteMeasure::on_grid(&g, f).unwrap();
    let p = ProblemParams::with_default_gamma(2, -1.0, 2.5, 0.5, 0.5, 0.1);
    let opts = MaximizeOptions { tol: 1e-5, ..Default::default() };
    let st = maximize(&f, g.clone(), &p, None, &opts).unwrap();
    assert!(st.converged, "{}", st.stationarity);
    let res = Resolution::default();
    let best = st.objective;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let prof: Vec<f64> = (0..g.n_profile()).map(|_| rng.random_range(-1e-3..1e-3)).collect();
        let d = g.expand_profile(&prof);
        let h = SupportVector::new(g.clone(), st.h.values.iter().zip(&d).map(|(a, b)| a + b).collect()).unwrap();
        let h = normalize_unit_chord(&h, p.q, &res).unwrap();
        assert!(phi_p(&h, &f, p.p).unwrap() <= best * (1.0 + 1e-8));
    }
    let sol = euler_lagrange_rescale(&st, &f, &p, &res).unwrap();
    assert!((sol.iq.value / sol.predicted_iq - 1.0).abs() < 2e-2);
}
