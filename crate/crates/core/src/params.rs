//! Exponents of the problem and the anisotropic maps `M_ε`, `N_ε`.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

/// Which admissibility windows a run relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Existence for the variational problem: `p < 0`, `1 ≤ q < n+1`, the
    /// lower bounds on `α`, `β`.
    Variational,
    /// Building `h_ε`, `H_ε`, `f_ε`: `2 < q ≤ n+1`, `α, β ≥ 0`, and
    /// `-1 < γ < -1 - p/(n+q-1)`.
    Construction,
    /// Decay of `I_q(K_{H_ε})` only: `2 < q ≤ n+1`, `α, β ≥ 0` and the
    /// wider window `-1 < γ < -1 - 2p/(n+q-1)`.
    Decay,
    /// Both solutions of the same equation (all of the above).
    Nonuniqueness,
}

impl ProblemParams {
    /// Parameters with `γ` at the midpoint of the construction window.
    pub fn with_default_gamma(n: usize, p: f64, q: f64, alpha: f64, beta: f64, epsilon: f64) -> Self {
        ProblemParams { n, p, q, alpha, beta, gamma: default_gamma(n, p, q), epsilon }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ProblemParams { epsilon, ..*self }
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn alpha_lower(&self) -> f64 {
        let n = self.nf();
        (1.0 - n).max(1.0 - n + (2.0 - n - self.q) / (n + self.q - 1.0) * self.p)
    }

    pub fn beta_lower(&self) -> f64 {
        (-1.0f64).max(-1.0 - self.p / (self.nf() + self.q - 1.0))
    }

    /// Upper end of the γ-window used to build `f_ε`.
    pub fn gamma_upper_construction(&self) -> f64 {
        -1.0 - self.p / (self.nf() + self.q - 1.0)
    }

    /// Upper end of the γ-window for the decay estimate (q > 2).
    pub fn gamma_upper_decay(&self) -> f64 {
        -1.0 - 2.0 * self.p / (self.nf() + self.q - 1.0)
    }

    /// Exponent `κ = (n-p-4-γ+q)/(n-p+q-1)` of the prefactor in `H_ε`.
    pub fn kappa(&self) -> f64 {
        let n = self.nf();
        (n - self.p - 4.0 - self.gamma + self.q) / (n - self.p + self.q - 1.0)
    }

    /// Exponent of `ε` in the upper bound for `I_q(K_{H_ε})`, q > 2 branch.
    pub fn decay_exponent(&self) -> f64 {
        let n = self.nf();
        let q = self.q;
        if q > 2.0 {
            2.0 - (3.0 + self.gamma) / (n - self.p + q - 1.0) * (q + n - 1.0)
        } else if q == 2.0 {
            2.0 - (3.0 + self.gamma) / (n - self.p + 1.0) * (n + 1.0)
        } else {
            q - (3.0 + self.gamma) / (n - self.p + q - 1.0) * (q + n - 1.0)
        }
    }

    /// `ε^{decay_exponent}`, with the `|log ε|` factor when `q = 2`.
    pub fn paper_bound(&self, eps: f64) -> f64 {
        let b = eps.powf(self.decay_exponent());
        if self.q == 2.0 {
            b * eps.ln().abs()
        } else {
            b
        }
    }

    pub fn validate(&self, stage: Stage) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        let n = self.nf();
        let (p, q, a, b, g) = (self.p, self.q, self.alpha, self.beta, self.gamma);
        if self.n < 2 {
            bad.push(format!("n = {} must be at least 2", self.n));
        }
        if ![p, q, a, b, g, self.epsilon].iter().all(|x| x.is_finite()) {
            bad.push("parameters must be finite".into());
        }
        if !(p < 0.0) {
            bad.push(format!("p = {p} must be negative"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            bad.push(format!("epsilon = {} must lie in (0, 1/2)", self.epsilon));
        }
        let variational = matches!(stage, Stage::Variational | Stage::Nonuniqueness);
        let construction = matches!(stage, Stage::Construction | Stage::Nonuniqueness);
        let decay = !matches!(stage, Stage::Variational);
        if variational {
            if !(q >= 1.0 && q < n + 1.0) {
                bad.push(format!("q = {q} must lie in [1, n+1) = [1, {})", n + 1.0));
            }
            if !(a > self.alpha_lower()) {
                bad.push(format!("alpha = {a} must exceed {:.6}", self.alpha_lower()));
            }
            if !(b > self.beta_lower()) {
                bad.push(format!("beta = {b} must exceed {:.6}", self.beta_lower()));
            }
        }
        if decay {
            if !(q > 2.0 && q <= n + 1.0) {
                bad.push(format!("q = {q} must lie in (2, n+1]"));
            }
            if !(a >= 0.0 && b >= 0.0) {
                bad.push(format!("alpha = {a}, beta = {b} must be nonnegative"));
            }
            if !(g > -1.0 && g < self.gamma_upper_decay()) {
                bad.push(format!("gamma = {g} must lie in (-1, {:.6})", self.gamma_upper_decay()));
            }
        }
        if construction && !(g < self.gamma_upper_construction()) {
            bad.push(format!("gamma = {g} must be below {:.6}", self.gamma_upper_construction()));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(bad.join("; ")))
        }
    }

    pub fn maps(&self) -> Result<EpsilonMaps> {
        EpsilonMaps::new(self.n, self.epsilon)
    }
}

/// Midpoint of `(-1, -1 - p/(n+q-1))`, the γ-range on which `f_ε` obeys
/// the growth bound needed by the variational problem. It lies inside
/// the decay window as well.
pub fn default_gamma(n: usize, p: f64, q: f64) -> f64 {
    -1.0 - p / (2.0 * (n as f64 + q - 1.0))
}

/// `M = diag(ε,…,ε,1)`, `M⁻¹`, and `N = ε M⁻¹ = diag(1,…,1,ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonMaps {
    pub epsilon: f64,
    pub m: DMatrix<f64>,
    pub minv: DMatrix<f64>,
    pub nmat: DMatrix<f64>,
}

impl EpsilonMaps {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) || n < 2 {
            return Err(Error::domain(format!("bad epsilon map (n = {n}, eps = {eps})")));
        }
        let d = |lead: f64, last: f64| {
            let mut v = vec![lead; n];
            v[n - 1] = last;
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v))
        };
        Ok(EpsilonMaps { epsilon: eps, m: d(eps, 1.0), minv: d(1.0 / eps, 1.0), nmat: d(1.0, eps) })
    }

    pub fn apply_m(&self, x: &[f64]) -> Vec<f64> {
        scale_head(x, self.epsilon)
    }

    pub fn apply_minv(&self, x: &[f64]) -> Vec<f64> {
        scale_head(x, 1.0 / self.epsilon)
    }

    /// `|N x| = sqrt(|x'|² + ε² x_n²)`.
    pub fn n_norm(&self, x: &[f64]) -> f64 {
        let k = x.len() - 1;
        let head: f64 = x[..k].iter().map(|t| t * t).sum();
        (head + (self.epsilon * x[k]).powi(2)).sqrt()
    }

    /// `x_ε = M⁻¹x / |M⁻¹x|`.
    pub fn pull_back(&self, x: &[f64]) -> Vec<f64> {
        let v = self.apply_minv(x);
        let l = crate::linalg::norm(&v);
        v.iter().map(|t| t / l).collect()
    }
}

fn scale_head(x: &[f64], s: f64) -> Vec<f64> {
    let k = x.len() - 1;
    x.iter().enumerate().map(|(i, &t)| if i < k { s * t } else { t }).collect()
}

/// `|x'|` and `|x_n|` of a unit vector.
pub(crate) fn split_norms(x: &[f64]) -> (f64, f64) {
    let k = x.len() - 1;
    (x[..k].iter().map(|t| t * t).sum::<f64>().sqrt(), x[k].abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ProblemParams {
        ProblemParams { n: 2, p: -1.0, q: 2.5, alpha: 0.5, beta: 0.5, gamma: -0.7, epsilon: 0.05 }
    }

    #[test]
    fn exponent_arithmetic() {
        let p = base();
        assert!((p.decay_exponent() - (2.0 - 2.3 / 4.5 * 3.5)).abs() < 1e-14);
        assert!((p.decay_exponent() - 0.211_111_111_111_111).abs() < 1e-12);
        assert!((p.gamma_upper_decay() - (-1.0 + 2.0 / 3.5)).abs() < 1e-14);
    }

    #[test]
    fn gamma_windows() {
        let p = base();
        assert!(p.validate(Stage::Decay).is_ok());
        // -0.7 sits above the construction window's upper end -0.714...
        assert!(p.validate(Stage::Construction).is_err());
        let d = ProblemParams { gamma: default_gamma(2, -1.0, 2.5), ..p };
        assert!((d.gamma + 1.0 - 1.0 / 7.0).abs() < 1e-14);
        assert!(d.validate(Stage::Nonuniqueness).is_ok());
    }

    #[test]
    fn theorem_b_lower_bounds() {
        let p = base();
        assert!((p.alpha_lower() - (-1.0 + 2.5 / 3.5)).abs() < 1e-14);
        assert!((p.beta_lower() - (-1.0 + 1.0 / 3.5)).abs() < 1e-14);
        let bad = ProblemParams { beta: -0.8, ..p };
        let msg = bad.validate(Stage::Variational).unwrap_err().to_string();
        assert!(msg.contains("beta"), "{msg}");
    }

    #[test]
    fn map_algebra() {
        let m = EpsilonMaps::new(3, 0.2).unwrap();
        let prod = &m.m * &m.minv;
        assert!((prod - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-15);
        assert!((&m.minv * 0.2 - &m.nmat).abs().max() < 1e-15);
        assert!((m.m.determinant() - 0.04).abs() < 1e-15);
        let y = [0.6, 0.0, 0.8];
        let nn = m.n_norm(&y);
        assert!(nn >= 0.2 - 1e-15 && nn <= 1.0);
        assert!((nn - (0.36f64 + 0.04 * 0.64).sqrt()).abs() < 1e-15);
    }
}
