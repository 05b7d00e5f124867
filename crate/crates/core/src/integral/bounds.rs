//! Ellipsoid upper bound, interpolation inequality and the first-variation
//! check for chord integrals.

use super::crofton::{chord_integral_crofton, LineSamplerConfig};
use super::measure::{chord_measure_weights, Resolution};
use super::slice::chord_integral_slice;
use crate::body::{Body, Ellipsoid};
use crate::error::{Error, Result};
use crate::grid::SupportVector;
use crate::special::omega;
use crate::wulff::wulff_shape;
use serde::Serialize;

/// `c_{q,m,n}` of the ellipsoid estimate, `m = ⌊q⌋`.
pub fn ellipsoid_constant(n: usize, q: f64) -> Result<f64> {
    let m = q.floor();
    let nf = n as f64;
    if !(q > 1.0 && q < nf + 1.0) || q == m {
        return Err(Error::InvalidParams(format!("need non-integer q in (1, n+1), got {q}")));
    }
    let c = if m as usize == n {
        2f64.powf(q - nf + 2.0) * q * (q - 1.0) * omega(nf - 1.0).powi(2)
            / ((q - nf) * (q - nf + 1.0) * nf * omega(nf))
    } else {
        2f64.powf(nf - m + 3.0) * q * (q - 1.0) * (nf - m) * omega(m - 1.0).powi(2) * omega(nf - m).powi(2)
            / ((m + 1.0 - q) * (q - m) * (q - m + 1.0) * nf * omega(nf))
    };
    Ok(c)
}

/// `c_{q,m,n} (a_1⋯a_m)² a_m^{q-m-1} a_{m+1}⋯a_n` for `0 < a_1 ≤ … ≤ a_n ≤ 1`.
pub fn ellipsoid_chord_bound(e: &Ellipsoid, q: f64) -> Result<f64> {
    let a = e.semi_axes();
    let n = a.len();
    if a[n - 1] > 1.0 + 1e-12 {
        return Err(Error::Precondition("largest semi-axis exceeds 1".into()));
    }
    if q == q.floor() {
        return Err(Error::InvalidParams("integer q: use ellipsoid_chord_bound_integer".into()));
    }
    let c = ellipsoid_constant(n, q)?;
    let m = q.floor() as usize;
    let head: f64 = a[..m].iter().product();
    let tail: f64 = a[m..].iter().product();
    Ok(c * head * head * a[m - 1].powf(q - m as f64 - 1.0) * tail)
}

/// Integer `q`: the interpolation inequality with `q' = q + 1/2` applied to
/// the non-integer bound at `q'`.
pub fn ellipsoid_chord_bound_integer(e: &Ellipsoid, q: f64) -> Result<f64> {
    let qp = q + 0.5;
    let bound = ellipsoid_chord_bound(e, qp)?;
    let theta = (q - 1.0) / (qp - 1.0);
    Ok(interpolation_constant(qp, q) * e.volume().powf(1.0 - theta) * bound.powf(theta))
}

/// `c(s, r) = r s^{-(r-1)/(s-1)}`.
pub fn interpolation_constant(s: f64, r: f64) -> f64 {
    r * s.powf(-(r - 1.0) / (s - 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpolationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_std_error: f64,
    pub rhs_std_error: f64,
    pub holds: bool,
}

/// `I_r ≤ c(s,r) V^{1-θ} I_s^θ`, `θ = (r-1)/(s-1)`, both sides from the same
/// random lines; the verdict allows three standard errors.
pub fn interpolation_bound_check(body: &Body, r: f64, s: f64, cfg: &LineSamplerConfig) -> Result<InterpolationCheck> {
    if !(r >= 1.0 && s > r) {
        return Err(Error::InvalidParams("need 1 ≤ r < s".into()));
    }
    let ir = chord_integral_crofton(body, r, cfg)?;
    let is = chord_integral_crofton(body, s, cfg)?;
    let theta = (r - 1.0) / (s - 1.0);
    let c = interpolation_constant(s, r) * body.volume().powf(1.0 - theta);
    let rhs = c * is.value.powf(theta);
    // Delta method for the power.
    let rhs_se = if is.value > 0.0 { rhs * theta * is.std_error / is.value } else { 0.0 };
    let margin = 3.0 * (ir.std_error.powi(2) + rhs_se.powi(2)).sqrt();
    Ok(InterpolationCheck {
        lhs: ir.value,
        rhs,
        lhs_std_error: ir.std_error,
        rhs_std_error: rhs_se,
        holds: ir.value <= rhs + margin,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstVariation {
    pub fd: f64,
    pub measure_pairing: f64,
    pub rel_err: f64,
    /// The facet set of the Wulff shape changed between `±step`.
    pub facet_set_changed: bool,
}

/// Central difference of `t ↦ I_q([h + t g])` against `Σ g_i F_q,i`.
/// Planar Wulff shapes use the deterministic slice quadrature; spatial ones
/// use Crofton sampling with common random numbers.
pub fn first_variation_check(
    h: &SupportVector,
    g: &[f64],
    q: f64,
    step: f64,
    cfg: &LineSamplerConfig,
    res: &Resolution,
) -> Result<FirstVariation> {
    if g.len() != h.values.len() {
        return Err(Error::InvalidParams("perturbation length differs from grid".into()));
    }
    let shifted = |t: f64| -> Result<SupportVector> {
        SupportVector::new(h.grid.clone(), h.values.iter().zip(g).map(|(a, b)| a + t * b).collect())
    };
    let w0 = wulff_shape(h)?;
    let wp = wulff_shape(&shifted(step)?)?;
    let wm = wulff_shape(&shifted(-step)?)?;
    let iq = |b: &crate::body::Polytope| -> Result<f64> {
        if b.dim() == 2 {
            Ok(chord_integral_slice(b, q, 12)?.value)
        } else {
            Ok(chord_integral_crofton(&Body::Polytope(b.clone()), q, cfg)?.value)
        }
    };
    let fd = (iq(&wp.body)? - iq(&wm.body)?) / (2.0 * step);
    let f = chord_measure_weights(&w0.body, q, None, res)?;
    let pairing: f64 = w0.facet_dir.iter().zip(&f).map(|(&i, fk)| g[i] * fk).sum();
    let changed = wp.facet_dir != w0.facet_dir || wm.facet_dir != w0.facet_dir;
    let scale = pairing.abs().max(fd.abs());
    Ok(FirstVariation {
        fd,
        measure_pairing: pairing,
        rel_err: if scale > 0.0 { (fd - pairing).abs() / scale } else { 0.0 },
        facet_set_changed: changed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ball_chord_integral;

    #[test]
    fn constant_planar_case() {
        // n = 2, q = 2.5, m = 2 = n.
        let c = ellipsoid_constant(2, 2.5).unwrap();
        let expect = 2f64.powf(2.5) * 2.5 * 1.5 * 4.0 / (0.5 * 1.5 * 2.0 * std::f64::consts::PI);
        assert!((c - expect).abs() < 1e-12 * expect);
        let e = Ellipsoid::axis_aligned(vec![1.0, 1.0]).unwrap();
        assert!(ellipsoid_chord_bound(&e, 2.5).unwrap() >= ball_chord_integral(2, 2.5));
    }

    #[test]
    fn bound_scales_with_smallest_axis_squared() {
        let e1 = Ellipsoid::axis_aligned(vec![0.2, 0.5, 1.0]).unwrap();
        let e2 = Ellipsoid::axis_aligned(vec![0.1, 0.5, 1.0]).unwrap();
        let r = ellipsoid_chord_bound(&e1, 2.5).unwrap() / ellipsoid_chord_bound(&e2, 2.5).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn r_equal_one_is_equality() {
        assert_eq!(interpolation_constant(3.0, 1.0), 1.0);
    }
}
