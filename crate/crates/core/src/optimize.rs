//! Limited-memory BFGS with backtracking (Armijo) line search and an optional
//! preconditioner used as the initial inverse Hessian.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    pub memory: usize,
    /// Converged once the objective drops by less than this fraction over
    /// `window` iterations.
    pub rel_tol: f64,
    pub window: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions { max_iters: 3000, memory: 12, rel_tol: 1e-6, window: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Minimizes `f`, which returns value and gradient. Evaluation errors during
/// the line search are treated as `+∞` and trigger backtracking.
pub fn lbfgs<F, P>(mut f: F, precond: P, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<LbfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    if !fx.is_finite() {
        return Err(Error::InvalidArgument("objective is not finite at the start".into()));
    }
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut values = vec![fx];
    let mut converged = false;
    let mut iters = 0;
    while iters < opts.max_iters {
        if dot(&g, &g).sqrt() <= 1e-14 * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
        let mut dir = two_loop(&g, &hist, &precond);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            // curvature information went bad: restart from the preconditioned gradient
            hist.clear();
            dir = two_loop(&g, &hist, &precond);
            slope = dot(&g, &dir);
            if !(slope < 0.0) {
                dir = g.iter().map(|v| -v).collect();
                slope = -dot(&g, &g);
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            if let Ok((ft, gt)) = f(&trial) {
                if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        iters += 1;
        let Some((xn, fnew, gn)) = accepted else {
            // no descent possible at machine precision
            converged = hist.is_empty();
            if !converged {
                hist.clear();
                continue;
            }
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if hist.len() == opts.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fnew;
        g = gn;
        values.push(fx);
        if values.len() > opts.window {
            let old = values[values.len() - 1 - opts.window];
            if old - fx <= opts.rel_tol * fx.abs().max(1e-12) {
                converged = true;
                break;
            }
        }
    }
    Ok(LbfgsResult { x, value: fx, iters, converged })
}

fn two_loop<P: Fn(&[f64]) -> Vec<f64>>(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, precond: &P) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let mut r = precond(&q);
    if let Some((s, y, _)) = hist.back() {
        let hy = precond(y);
        let gamma = dot(s, y) / dot(y, &hy);
        if gamma.is_finite() && gamma > 0.0 {
            r.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

/// Solves `K u = r` per coordinate for the tridiagonal kinetic matrix of a
/// path with fixed endpoints: `K_kk = 1/Δt_{k-1} + 1/Δt_k`, `K_{k,k±1} = -1/Δt`.
///
/// `r` holds the interior nodes row-major (`dim` entries per node).
pub fn solve_kinetic(dts: &[f64], dim: usize, r: &[f64]) -> Vec<f64> {
    let m = dts.len() - 1;
    let mut out = vec![0.0; r.len()];
    if m == 0 {
        return out;
    }
    let mut c = vec![0.0; m];
    let mut dprime = vec![0.0; m];
    for j in 0..dim {
        // Thomas algorithm
        for k in 0..m {
            let diag = 1.0 / dts[k] + 1.0 / dts[k + 1];
            let lower = if k > 0 { -1.0 / dts[k] } else { 0.0 };
            let upper = -1.0 / dts[k + 1];
            let rhs = r[k * dim + j];
            if k == 0 {
                c[k] = upper / diag;
                dprime[k] = rhs / diag;
            } else {
                let den = diag - lower * c[k - 1];
                c[k] = upper / den;
                dprime[k] = (rhs - lower * dprime[k - 1]) / den;
            }
        }
        out[(m - 1) * dim + j] = dprime[m - 1];
        for k in (0..m - 1).rev() {
            out[k * dim + j] = dprime[k] - c[k] * out[(k + 1) * dim + j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((v, g))
        };
        let opts = LbfgsOptions { rel_tol: 1e-14, ..Default::default() };
        let r = lbfgs(f, |g: &[f64]| g.to_vec(), vec![-1.2, 1.0], &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{r:?}");
    }

    #[test]
    fn kinetic_solve_inverts_tridiagonal() {
        let dts = [0.5, 0.25, 1.0, 0.5];
        let u = vec![1.0, -2.0, 0.5, 3.0, -1.0, 0.25];
        // K u, dim 2, three interior nodes
        let mut r = vec![0.0; 6];
        for k in 0..3 {
            for j in 0..2 {
                let mut v = (1.0 / dts[k] + 1.0 / dts[k + 1]) * u[k * 2 + j];
                if k > 0 {
                    v -= u[(k - 1) * 2 + j] / dts[k];
                }
                if k < 2 {
                    v -= u[(k + 1) * 2 + j] / dts[k + 1];
                }
                r[k * 2 + j] = v;
            }
        }
        let back = solve_kinetic(&dts, 2, &r);
        for (a, b) in back.iter().zip(&u) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn failed_start_is_an_error() {
        let r = lbfgs(
            |_: &[f64]| Err(Error::InvalidArgument("x".into())),
            |g: &[f64]| g.to_vec(),
            vec![0.0],
            &Default::default(),
        );
        assert!(r.is_err());
    }
}
