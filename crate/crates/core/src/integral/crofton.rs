//! Monte Carlo chord integrals over random lines.
//!
//! A line is a direction `u` uniform on the sphere and a foot point `x`
//! uniform in the disk of radius `R` in `u^⊥`. Samples are drawn in fixed
//! chunks, each from its own ChaCha stream, and reduced in chunk order, so
//! the estimate depends only on the seed and not on the thread count.

use super::{Estimate, Method};
use crate::body::Body;
use crate::error::{Error, Result};
use crate::linalg::orthonormal_complement;
use crate::special::omega;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSamplerConfig {
    pub n_samples: u64,
    pub seed: u64,
    /// Disk radius; the body's circumradius about the origin when absent.
    #[serde(default)]
    pub bounding_radius: Option<f64>,
}

impl LineSamplerConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        LineSamplerConfig { n_samples, seed, bounding_radius: None }
    }
}

/// One random line: direction and foot point in `u^⊥`, the foot point
/// scaled to the unit disk.
pub(crate) fn sample_line(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let l = crate::linalg::norm(&u);
    u.iter_mut().for_each(|x| *x /= l);
    let k = n - 1;
    let x = if k == 1 {
        vec![2.0 * rng.random::<f64>() - 1.0]
    } else {
        let mut g: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let gl = crate::linalg::norm(&g);
        let r = rng.random::<f64>().powf(1.0 / k as f64);
        g.iter_mut().for_each(|v| *v *= r / gl);
        g
    };
    (u, x)
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Sums of `g(X)` and `g(X)²` over all sampled lines, `X` the chord length.
pub(crate) fn line_sums(
    body: &Body,
    radius: f64,
    cfg: &LineSamplerConfig,
    g: impl Fn(f64) -> f64 + Sync,
) -> (f64, f64) {
    let n = body.dim();
    let chunks = cfg.n_samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(cfg.seed, c);
            let count = CHUNK.min(cfg.n_samples - c * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let (u, x) = sample_line(&mut rng, n);
                let basis = orthonormal_complement(&u);
                let mut z = vec![0.0; n];
                for (b, xi) in basis.iter().zip(&x) {
                    for (zj, bj) in z.iter_mut().zip(b) {
                        *zj += radius * xi * bj;
                    }
                }
                let v = g(body.xray(&z, &u));
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    partial.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

pub(crate) fn resolve_radius(body: &Body, cfg: &LineSamplerConfig) -> Result<f64> {
    let rc = body.circumradius();
    match cfg.bounding_radius {
        None => Ok(rc),
        Some(r) if r >= rc * (1.0 - 1e-12) => Ok(r),
        Some(r) => Err(Error::Precondition(format!(
            "bounding radius {r} is smaller than the circumradius {rc}"
        ))),
    }
}

/// `I_q(K) = (1/(nω_n)) ∫_{S^{n-1}} ∫_{u^⊥} X_K(x,u)^q dx du` by Monte Carlo.
pub fn chord_integral_crofton(body: &Body, q: f64, cfg: &LineSamplerConfig) -> Result<Estimate> {
    if !(q >= 0.0) {
        return Err(Error::domain("q must be nonnegative"));
    }
    if cfg.n_samples < 2 {
        return Err(Error::InvalidParams("need at least two samples".into()));
    }
    let radius = resolve_radius(body, cfg)?;
    let n = body.dim();
    let area = omega((n - 1) as f64) * radius.powi(n as i32 - 1);
    let (s1, s2) = line_sums(body, radius, cfg, |x| if x > 0.0 { x.powf(q) } else { 0.0 });
    let m = cfg.n_samples as f64;
    let mean = s1 / m;
    let var = ((s2 - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(Estimate {
        value: area * mean,
        std_error: area * (var / m).sqrt(),
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        method: Method::CroftonMc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_of_square() {
        let sq = Body::cube(2, 1.0).unwrap();
        let e = chord_integral_crofton(&sq, 1.0, &LineSamplerConfig::new(200_000, 7)).unwrap();
        assert!((e.value - 4.0).abs() < 4.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn thread_count_does_not_matter() {
        let sq = Body::cube(2, 1.0).unwrap();
        let cfg = LineSamplerConfig::new(50_000, 3);
        let a = chord_integral_crofton(&sq, 2.5, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| chord_integral_crofton(&sq, 2.5, &cfg).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn small_radius_rejected() {
        let sq = Body::cube(2, 1.0).unwrap();
        let cfg = LineSamplerConfig { n_samples: 10, seed: 1, bounding_radius: Some(1.0) };
        assert!(matches!(chord_integral_crofton(&sq, 1.0, &cfg), Err(Error::Precondition(_))));
    }
}
