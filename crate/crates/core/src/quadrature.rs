//! One-dimensional rules: Gauss–Legendre nodes, Chebyshev nodes, and a
//! graded panel splitter for integrands with an endpoint blow-up.

use std::f64::consts::PI;
use std::sync::OnceLock;

const CACHED_ORDERS: usize = 65;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss–Legendre order must be positive");
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let m = order.div_ceil(2);
    let nf = order as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..order {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[order - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[order - 1 - i] = wi;
    }
    if order % 2 == 1 {
        x[order / 2] = 0.0;
    }
    (x, w)
}

/// Cached Gauss–Legendre rule; orders above the cache size are computed on
/// every call.
pub fn gauss_legendre_cached(order: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        (0..CACHED_ORDERS)
            .map(|k| if k == 0 { (vec![], vec![]) } else { gauss_legendre(k) })
            .collect()
    });
    assert!(
        order >= 1 && order < CACHED_ORDERS,
        "cached Gauss–Legendre order out of range"
    );
    &cache[order]
}

/// Integrate `f` over `[a, b]` with an `order`-point Gauss–Legendre rule.
#[inline]
pub fn gl_integrate(order: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre_cached(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        acc += wi * f(mid + half * xi);
    }
    acc * half
}

/// Split `[a, b]` into panels whose width exceeds neither `max_width` nor
/// `ratio` times `gap + floor` for the nearest feature `(point, floor)` of
/// `singular`. A zero floor grades geometrically into a true singularity;
/// a positive floor stops refining at that length scale. Breakpoints in
/// `extra` are always inserted.
pub fn graded_panels(
    a: f64,
    b: f64,
    singular: &[(f64, f64)],
    ratio: f64,
    max_width: f64,
    extra: &[f64],
) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = vec![a, b];
    cuts.extend(extra.iter().copied().filter(|&c| c > a && c < b));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
    let mut panels = Vec::new();
    for win in cuts.windows(2) {
        split_panel(win[0], win[1], singular, ratio, max_width, 0, &mut panels);
    }
    panels
}

fn split_panel(
    a: f64,
    b: f64,
    singular: &[(f64, f64)],
    ratio: f64,
    max_width: f64,
    depth: usize,
    out: &mut Vec<(f64, f64)>,
) {
    let gap = singular
        .iter()
        .map(|&(s, floor)| {
            floor
                + if s < a {
                    a - s
                } else if s > b {
                    s - b
                } else {
                    0.0
                }
        })
        .fold(f64::INFINITY, f64::min);
    let w = b - a;
    if depth >= 60 || (w <= max_width && w <= ratio * gap) {
        out.push((a, b));
        return;
    }
    let m = 0.5 * (a + b);
    split_panel(a, m, singular, ratio, max_width, depth + 1, out);
    split_panel(m, b, singular, ratio, max_width, depth + 1, out);
}

/// Chebyshev (first kind) nodes in `t = cos θ`: `θ_k = (k + 1/2)π/m`,
/// returned as polar angles, each with weight `π/m` for the measure `dθ`.
pub fn chebyshev_angles(m: usize) -> Vec<f64> {
    (0..m).map(|k| (k as f64 + 0.5) * PI / m as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for order in 1..12 {
            let (x, w) = gauss_legendre(order);
            let total: f64 = w.iter().sum();
            assert_relative_eq!(total, 2.0, max_relative = 1e-14);
            for deg in 0..(2 * order) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                assert!((approx - exact).abs() < 1e-13, "order {order} deg {deg}");
            }
        }
    }

    #[test]
    fn graded_panels_cover_interval() {
        let p = graded_panels(-1.0, 1.4, &[(1.5, 0.0), (-1.5, 0.0)], 0.5, 0.3, &[0.2]);
        assert_relative_eq!(p.first().unwrap().0, -1.0);
        assert_relative_eq!(p.last().unwrap().1, 1.4);
        for w in p.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-15);
        }
        for &(a, b) in &p {
            assert!(b > a);
            assert!(b - a <= 0.3 + 1e-12);
        }
        assert!(p.iter().any(|&(a, _)| (a - 0.2).abs() < 1e-15));
    }

    #[test]
    fn graded_rule_handles_near_singular_integrand() {
        // ∫_0^{1-δ} (1-x)^{-1.5} dx = 2(δ^{-1/2} - 1)
        let delta = 1e-4;
        let panels = graded_panels(0.0, 1.0 - delta, &[(1.0, 0.0)], 0.5, 0.25, &[]);
        let val: f64 = panels
            .iter()
            .map(|&(a, b)| gl_integrate(8, a, b, |x| (1.0 - x).powf(-1.5)))
            .sum();
        let exact = 2.0 * (delta.powf(-0.5) - 1.0);
        assert_relative_eq!(val, exact, max_relative = 1e-10);
    }
}
