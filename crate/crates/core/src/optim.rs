//! Limited-memory BFGS with a backtracking Armijo search. The objective may
//! refuse a point (returns `None`), in which case the step is shortened.

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the caller's convergence test passes or the gradient
    /// infinity-norm falls below this.
    pub grad_tol: f64,
    pub max_backtracks: usize,
    /// Cap on the first trial step length (in the variable's norm).
    pub max_step: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions { memory: 8, max_iter: 500, grad_tol: 1e-10, max_backtracks: 40, max_step: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f`. `eval(x)` returns the value and gradient; `done(x, f, g)`
/// is the caller's stopping test, checked after every accepted step.
pub fn lbfgs_minimize(
    x0: Vec<f64>,
    mut eval: impl FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    mut done: impl FnMut(&[f64], f64, &[f64]) -> bool,
    opts: &LbfgsOptions,
) -> Option<LbfgsResult> {
    let (mut fx, mut g) = eval(&x0)?;
    let mut x = x0;
    let mut trace = vec![fx];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut converged = done(&x, fx, &g);
    let mut it = 0;
    while !converged && it < opts.max_iter {
        it += 1;
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < opts.grad_tol {
            converged = true;
            break;
        }
        // Two-loop recursion.
        let mut d: Vec<f64> = g.clone();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dotv(&y_hist[i], &s_hist[i]);
            alpha[i] = rho * dotv(&s_hist[i], &d);
            for (dj, yj) in d.iter_mut().zip(&y_hist[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        if k > 0 {
            let gamma = dotv(&s_hist[k - 1], &y_hist[k - 1]) / dotv(&y_hist[k - 1], &y_hist[k - 1]);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for i in 0..k {
            let rho = 1.0 / dotv(&y_hist[i], &s_hist[i]);
            let b = rho * dotv(&y_hist[i], &d);
            for (dj, sj) in d.iter_mut().zip(&s_hist[i]) {
                *dj += (alpha[i] - b) * sj;
            }
        }
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dotv(&g, &d);
        if !(slope < 0.0) {
            // Not a descent direction: restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dotv(&g, &g);
        }
        let dn = dotv(&d, &d).sqrt();
        let mut t = if dn > opts.max_step { opts.max_step / dn } else { 1.0 };
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            if let Some((ft, gt)) = eval(&xt) {
                if ft <= fx + 1e-4 * t * slope {
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if s_hist.is_empty() {
                break;
            }
            s_hist.clear();
            y_hist.clear();
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dotv(&s, &y) > 1e-12 * dotv(&s, &s).sqrt() * dotv(&y, &y).sqrt() {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        x = xn;
        fx = fnew;
        g = gn;
        trace.push(fx);
        converged = done(&x, fx, &g);
    }
    Some(LbfgsResult { x, value: fx, iterations: it, trace, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let v = (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
            let g = vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ];
            Some((v, g))
        };
        let opts = LbfgsOptions { max_iter: 2000, grad_tol: 1e-9, ..Default::default() };
        let r = lbfgs_minimize(vec![-1.2, 1.0], f, |_, _, _| false, &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn refused_region_is_avoided() {
        // Minimum of (x-2)² restricted to x < 1.5 by refusal: stalls at the wall.
        let f = |x: &[f64]| if x[0] >= 1.5 { None } else { Some(((x[0] - 2.0).powi(2), vec![2.0 * (x[0] - 2.0)])) };
        let r = lbfgs_minimize(vec![0.0], f, |_, _, _| false, &LbfgsOptions::default()).unwrap();
        assert!(r.x[0] < 1.5 && r.x[0] > 1.4);
    }
}
