//! Unit-ball volumes extended to real index, and the closed-form chord
//! integral of the unit ball.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Volume of the unit ball of (real) dimension `s`: `π^{s/2} / Γ(1 + s/2)`.
///
/// The Gamma extension lets chord-integral formulas be evaluated at
/// non-integer `q`. This is the single symbol used for unit-ball volumes
/// throughout the crate.
pub fn omega(s: f64) -> f64 {
    debug_assert!(s >= 0.0, "omega is defined for s >= 0");
    PI.powf(0.5 * s) / gamma(1.0 + 0.5 * s)
}

/// (n-1)-dimensional area of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    n as f64 * omega(n as f64)
}

/// `I_q(B_n)` for the unit ball under the line measure that makes
/// `I_1 = V`: `2^q ω_{n+q-1} / ω_q`.
pub fn ball_chord_integral(n: usize, q: f64) -> f64 {
    ball_chord_integral_with(omega, n, q)
}

/// Same closed form with an injectable `ω`, used to check that the ball
/// verification actually depends on the table.
pub fn ball_chord_integral_with(omega: impl Fn(f64) -> f64, n: usize, q: f64) -> f64 {
    let n = n as f64;
    2f64.powf(q) * omega(n + q - 1.0) / omega(q)
}

/// The ball formula exactly as it is usually printed,
/// `2^q ω_n ω_{n+q-1} / ω_q`. It exceeds [`ball_chord_integral`] by the
/// factor `ω_n`, so it is inconsistent with `I_1(K) = V(K)`; kept so the
/// discrepancy can be measured.
pub fn ball_chord_integral_printed(n: usize, q: f64) -> f64 {
    omega(n as f64) * ball_chord_integral(n, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integer_dimensions() {
        assert_relative_eq!(omega(0.0), 1.0, max_relative = 1e-14);
        assert_relative_eq!(omega(1.0), 2.0, max_relative = 1e-14);
        assert_relative_eq!(omega(2.0), PI, max_relative = 1e-14);
        assert_relative_eq!(omega(3.0), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(omega(4.0), PI * PI / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn half_integer_against_reflection_constant() {
        // Γ(2.75) = 1.75 · 0.75 · Γ(0.75), Γ(0.75) from tables.
        let gamma_075 = 1.225_416_702_465_177_6;
        let expected = PI.powf(1.75) / (1.75 * 0.75 * gamma_075);
        assert_relative_eq!(omega(3.5), expected, max_relative = 1e-13);
    }

    #[test]
    fn ball_formula_matches_slab_integral() {
        // I_q(B_2) = ∫_{-1}^{1} (2 sqrt(1-s^2))^q ds = 2^q sqrt(pi) Γ(q/2+1)/Γ(q/2+3/2)
        for q in [0.5, 1.0, 2.0, 2.5, 3.0] {
            let direct = 2f64.powf(q) * PI.sqrt() * gamma(q / 2.0 + 1.0) / gamma(q / 2.0 + 1.5);
            assert_relative_eq!(ball_chord_integral(2, q), direct, max_relative = 1e-12);
        }
        assert_relative_eq!(ball_chord_integral(2, 1.0), PI, max_relative = 1e-13);
        assert_relative_eq!(ball_chord_integral(2, 3.0), 3.0 * PI, max_relative = 1e-13);
        // I_{n+1} = (n+1) V^2 / ω_n in 3D
        let v = omega(3.0);
        assert_relative_eq!(ball_chord_integral(3, 4.0), 4.0 * v * v / omega(3.0), max_relative = 1e-13);
        assert_relative_eq!(ball_chord_integral(3, 1.0), v, max_relative = 1e-13);
        // I_0 = ω_{n-1} (projection volume)
        assert_relative_eq!(ball_chord_integral(3, 0.0), PI, max_relative = 1e-13);
    }

    #[test]
    fn printed_formula_differs_by_omega_n() {
        let r = ball_chord_integral_printed(2, 1.0) / ball_chord_integral(2, 1.0);
        assert_relative_eq!(r, PI, max_relative = 1e-13);
    }
}
