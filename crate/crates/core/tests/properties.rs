use chords::body::{Body, Polytope};
use chords::grid::{DiscreteMeasure, SphericalGrid, SupportVector};
use chords::harness::{fmt_f64, support_gap};
use chords::integral::measure::chord_measure_weights;
use chords::integral::{chord_integral_boundary, chord_integral_crofton, chord_integral_slice, LineSamplerConfig, Resolution};
use chords::params::EpsilonMaps;
use chords::variational::phi_p;
use proptest::prelude::*;
use std::sync::Arc;

fn polygon(radii: &[f64], jitter: &[f64]) -> Polytope {
    let k = radii.len();
    let pts: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let a = (i as f64 + 0.4 * jitter[i]) * std::f64::consts::TAU / k as f64;
            vec![radii[i] * a.cos(), radii[i] * a.sin()]
        })
        .collect();
    Polytope::from_vertices(&pts).unwrap()
}

fn arb_polygon() -> impl Strategy<Value = Polytope> {
    (5usize..11).prop_flat_map(|k| {
        (prop::collection::vec(0.6f64..1.4, k), prop::collection::vec(-1.0f64..1.0, k))
            .prop_map(|(r, j)| polygon(&r, &j))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slice_and_boundary_agree(p in arb_polygon(), q in 1.2f64..2.9) {
        let a = chord_integral_slice(&p, q, 12).unwrap().value;
        let b = chord_integral_boundary(&p, q, &Resolution::default()).unwrap().value;
        prop_assert!((a / b - 1.0).abs() < 1e-4, "{a} {b}");
    }

    #[test]
    fn dilation_and_translation(p in arb_polygon(), t in 0.3f64..3.0, dx in -0.2f64..0.2) {
        let q = 2.5;
        let base = chord_integral_slice(&p, q, 12).unwrap().value;
        let scaled = chord_integral_slice(&p.dilate(t), q, 12).unwrap().value;
        prop_assert!((scaled / base / t.powf(1.0 + q) - 1.0).abs() < 1e-10);
        let moved = chord_integral_slice(&p.translate(&[dx, -dx]), q, 12).unwrap().value;
        prop_assert!((moved / base - 1.0).abs() < 1e-9);
    }

    #[test]
    fn measure_pairs_to_integral(p in arb_polygon()) {
        let q = 2.5;
        let f = chord_measure_weights(&p, q, None, &Resolution::default()).unwrap();
        prop_assert!(f.iter().all(|w| *w > 0.0));
        let lhs: f64 = f.iter().zip(p.offsets()).map(|(a, b)| a * b).sum();
        let rhs = (1.0 + q) * chord_integral_slice(&p, q, 12).unwrap().value;
        prop_assert!((lhs / rhs - 1.0).abs() < 1e-3);
    }

    #[test]
    fn crofton_is_seed_deterministic(p in arb_polygon(), seed in 0u64..1000) {
        let b = Body::Polytope(p);
        let cfg = LineSamplerConfig::new(20_000, seed);
        let a = chord_integral_crofton(&b, 1.0, &cfg).unwrap();
        let c = chord_integral_crofton(&b, 1.0, &cfg).unwrap();
        prop_assert_eq!(a.value.to_bits(), c.value.to_bits());
        prop_assert!(a.within(b.volume(), 5.0, 0.0));
    }

    #[test]
    fn phi_is_homogeneous(vals in prop::collection::vec(0.5f64..2.0, 16), t in 0.2f64..5.0, p in -3.0f64..-0.1) {
        let g = Arc::new(SphericalGrid::zonal(2, 8, 0).unwrap());
        let f = DiscreteMeasure::on_grid(&g, g.weights().to_vec()).unwrap();
        let h = SupportVector::new(g, vals).unwrap();
        let a = phi_p(&h, &f, p).unwrap();
        let b = phi_p(&h.scaled(t), &f, p).unwrap();
        prop_assert!((b / a / t.powf(p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pull_back_is_unit_and_inverts(theta in 0.0f64..6.283, eps in 0.01f64..1.0) {
        let m = EpsilonMaps::new(2, eps).unwrap();
        let x = [theta.cos(), theta.sin()];
        let v = m.pull_back(&x);
        prop_assert!(((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs() < 1e-14);
        let back = m.apply_m(&v);
        let l = (back[0] * back[0] + back[1] * back[1]).sqrt();
        prop_assert!((back[0] / l - x[0]).abs() < 1e-12 && (back[1] / l - x[1]).abs() < 1e-12);
    }

    #[test]
    fn seventeen_digits_round_trip(v in prop::num::f64::NORMAL) {
        let s = fmt_f64(v);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn support_gap_is_symmetric_and_bounded(a in prop::collection::vec(0.1f64..10.0, 8), b in prop::collection::vec(0.1f64..10.0, 8)) {
        let g = support_gap(&a, &b);
        prop_assert_eq!(g, support_gap(&b, &a));
        prop_assert!((0.0..1.0).contains(&g));
    }
}
