//! Chord integrals, dual quermassintegrals and chord measures.

pub mod bounds;
pub mod crofton;
pub mod dual;
pub mod measure;
pub mod slice;

use serde::{Deserialize, Serialize};

pub use bounds::{
    ellipsoid_chord_bound, ellipsoid_chord_bound_integer, first_variation_check, interpolation_bound_check,
    interpolation_constant, FirstVariation, InterpolationCheck,
};
pub use crofton::{chord_integral_crofton, LineSamplerConfig};
pub use dual::{dual_quermass, DualMethod};
pub use measure::{chord_integral_boundary, chord_measure_polytope, lp_chord_measure, Resolution};
pub use slice::chord_integral_slice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CroftonMc,
    Boundary,
    RadialQuadrature,
    RieszMc,
    ClosedForm,
    /// Deterministic line integration: exact in the offset, Gauss–Legendre
    /// in the angle (planar polygons).
    SliceQuadrature,
}

impl Method {
    pub fn is_deterministic(self) -> bool {
        !matches!(self, Method::CroftonMc | Method::RieszMc)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CroftonMc => "crofton-mc",
            Method::Boundary => "boundary",
            Method::RadialQuadrature => "radial-quadrature",
            Method::RieszMc => "riesz-mc",
            Method::ClosedForm => "closed-form",
            Method::SliceQuadrature => "slice-quadrature",
        }
    }
}

/// A numerical value with its provenance. Deterministic methods carry a
/// zero standard error; `n_samples` is then the node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub method: Method,
}

impl Estimate {
    pub fn exact(value: f64, method: Method, nodes: u64) -> Self {
        Estimate { value, std_error: 0.0, n_samples: nodes, seed: 0, method }
    }

    /// `|value - target| ≤ k·std_error`, or exact agreement within `rel`
    /// for deterministic estimates.
    pub fn within(&self, target: f64, k: f64, rel: f64) -> bool {
        let d = (self.value - target).abs();
        d <= k * self.std_error || d <= rel * target.abs()
    }
}
