//! Quasipotential estimation by discrete action minimization, equivalence
//! tests, shell barriers and the constructive low-action paths.

mod constructions;
mod probe;
mod shell;

pub use constructions::{chain_zero_action_path, hamiltonian_drift_path, ChainWaypoint, CHAIN_LIMIT_TOL};
pub use probe::{local_lipschitz, pr_probe, PrWitness, ProbeCase, ProbeOptions};
pub use shell::{shell_quasipotential, ShellDirection, ShellOptions, ShellResult};

use rayon::prelude::*;

use crate::action::{action, action_with_gradient, lif_path, Path};
use crate::error::{Error, Result};
use crate::flow::integrate_ode;
use crate::linalg::{dist, lerp};
use crate::optimize::{lbfgs, solve_kinetic, LbfgsOptions};
use crate::systems::SystemSpec;

pub const DEFAULT_T_GRID: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];
pub const DEFAULT_SEGMENTS: usize = 200;
pub const DEFAULT_EQUIVALENCE_TOL: f64 = 0.02;
/// Equivalence is a long-time property (inside a rotating annulus the cost of
/// drifting across orbits decays like 1/T), so its test searches longer
/// durations than `quasipotential`, keeping ten segments per time unit.
pub const EQUIVALENCE_T_GRID: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
pub const EQUIVALENCE_SEGMENTS: usize = 640;

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub lbfgs: LbfgsOptions,
    /// Golden-section evaluations on `[T*/2, 3T*/2]` after the grid; 0 disables.
    pub refine_evals: usize,
    /// Step for the flow part of the flow-assisted start.
    pub flow_dt: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { lbfgs: LbfgsOptions::default(), refine_evals: 8, flow_dt: 1e-2 }
    }
}

impl MinimizeOptions {
    /// Cheaper settings for screening many endpoint pairs.
    pub fn coarse() -> Self {
        MinimizeOptions {
            lbfgs: LbfgsOptions { max_iters: 400, rel_tol: 1e-4, ..LbfgsOptions::default() },
            refine_evals: 0,
            flow_dt: 2e-2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuasipotentialResult {
    pub value: f64,
    pub path: Path,
    pub t_used: f64,
    pub n_segments: usize,
    pub optimizer_iters: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Start {
    Straight,
    FlowAssisted,
}

fn flatten_interior(path: &Path) -> Vec<f64> {
    path.points[1..path.points.len() - 1].iter().flatten().copied().collect()
}

fn with_interior(template: &Path, flat: &[f64]) -> Path {
    let d = template.dim();
    let mut p = template.clone();
    for (k, chunk) in flat.chunks(d).enumerate() {
        p.points[k + 1].copy_from_slice(chunk);
    }
    p
}

/// Minimizes the discrete action over interior nodes, endpoints and times fixed.
pub fn optimize_path(spec: &SystemSpec, init: &Path, opts: &LbfgsOptions) -> Result<QuasipotentialResult> {
    let n = init.n_segments();
    if n < 2 {
        let value = action(spec, init)?.value;
        return Ok(QuasipotentialResult {
            value,
            path: init.clone(),
            t_used: init.duration(),
            n_segments: n,
            optimizer_iters: 0,
            converged: true,
        });
    }
    let d = init.dim();
    let dts: Vec<f64> = init.times.windows(2).map(|w| w[1] - w[0]).collect();
    let objective = |flat: &[f64]| -> Result<(f64, Vec<f64>)> {
        let p = with_interior(init, flat);
        let (v, g) = action_with_gradient(spec, &p)?;
        Ok((v, g[1..n].iter().flatten().copied().collect()))
    };
    let precond = |r: &[f64]| solve_kinetic(&dts, d, r);
    let res = lbfgs(objective, precond, flatten_interior(init), opts)?;
    let path = with_interior(init, &res.x);
    let value = action(spec, &path)?.value;
    Ok(QuasipotentialResult {
        value,
        path,
        t_used: init.duration(),
        n_segments: n,
        optimizer_iters: res.iters,
        converged: res.converged,
    })
}

/// Flow from `x` to the point closest to `y` reached by time `0.9 T`, then a
/// straight line to `y`; resampled on `n` equal steps.
fn flow_assisted_start(spec: &SystemSpec, x: &[f64], y: &[f64], t: f64, n: usize, dt: f64) -> Result<Path> {
    let horizon = 0.9 * t;
    let tr = integrate_ode(spec, x, horizon, dt.min(horizon / 4.0))?;
    let (k, _) = tr.states.iter().enumerate().map(|(k, s)| (k, dist(s, y))).fold((0, f64::INFINITY), |acc, c| {
        if c.1 < acc.1 {
            c
        } else {
            acc
        }
    });
    let tau = tr.times[k];
    let rest = t - tau;
    let m = 64usize;
    let mut times = tr.times[..=k].to_vec();
    let mut points = tr.states[..=k].to_vec();
    let from = tr.states[k].clone();
    for j in 1..=m {
        times.push(tau + rest * j as f64 / m as f64);
        points.push(lerp(&from, y, j as f64 / m as f64));
    }
    let p = Path::new(times, points)?.resampled(n);
    Ok(p)
}

fn start_path(spec: &SystemSpec, x: &[f64], y: &[f64], t: f64, n: usize, start: Start, flow_dt: f64) -> Result<Path> {
    match start {
        Start::Straight => Ok(lif_path(x, y, n)?.rescaled(t)),
        Start::FlowAssisted => flow_assisted_start(spec, x, y, t, n, flow_dt),
    }
}

fn better(a: &QuasipotentialResult, b: &QuasipotentialResult) -> bool {
    a.value < b.value || (a.value == b.value && a.t_used < b.t_used)
}

/// Estimates `V(x, y)` by minimizing the discrete action over paths of
/// `n_segments` equal steps, for each duration in `t_grid` and two starts
/// (straight line; flow then straight line), then refining the best duration.
pub fn minimize_action(
    spec: &SystemSpec,
    x: &[f64],
    y: &[f64],
    n_segments: usize,
    t_grid: &[f64],
    opts: &MinimizeOptions,
) -> Result<QuasipotentialResult> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("duration grid must be nonempty and positive".into()));
    }
    if n_segments < 1 {
        return Err(Error::InvalidArgument("need at least one segment".into()));
    }
    for p in [x, y] {
        if p.len() != spec.dim {
            return Err(Error::Dimension { expected: spec.dim, got: p.len() });
        }
        if !spec.in_safe_region(p) {
            return Err(Error::SafeRadiusEscape { time: 0.0, point: p.to_vec(), radius: spec.safe_radius });
        }
    }
    if dist(x, y) == 0.0 {
        return Err(Error::InvalidArgument("endpoints coincide".into()));
    }
    let jobs: Vec<(f64, Start)> =
        t_grid.iter().flat_map(|&t| [(t, Start::Straight), (t, Start::FlowAssisted)]).collect();
    let runs: Vec<Option<QuasipotentialResult>> = jobs
        .par_iter()
        .map(|&(t, s)| {
            let init = start_path(spec, x, y, t, n_segments, s, opts.flow_dt).ok()?;
            optimize_path(spec, &init, &opts.lbfgs).ok()
        })
        .collect();
    let mut best: Option<QuasipotentialResult> = None;
    let mut iters = 0;
    for r in runs.into_iter().flatten() {
        iters += r.optimizer_iters;
        if best.as_ref().is_none_or(|b| better(&r, b)) {
            best = Some(r);
        }
    }
    let mut best = best.ok_or(Error::AllStartsDiverged)?;
    if opts.refine_evals > 0 {
        let (refined, extra) = refine_duration(spec, &best, opts)?;
        iters += extra;
        if better(&refined, &best) {
            best = refined;
        }
    }
    best.optimizer_iters = iters;
    Ok(best)
}

/// Golden-section search on `[T*/2, 3T*/2]`, warm-started from the incumbent.
fn refine_duration(
    spec: &SystemSpec,
    incumbent: &QuasipotentialResult,
    opts: &MinimizeOptions,
) -> Result<(QuasipotentialResult, usize)> {
    let t0 = incumbent.t_used;
    let mut best = incumbent.clone();
    let mut iters = 0;
    let mut eval = |t: f64, best: &mut QuasipotentialResult| -> f64 {
        let init = best.path.rescaled(t);
        match optimize_path(spec, &init, &opts.lbfgs) {
            Ok(r) => {
                iters += r.optimizer_iters;
                let v = r.value;
                if better(&r, best) {
                    *best = r;
                }
                v
            }
            Err(_) => f64::INFINITY,
        }
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.5 * t0, 1.5 * t0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = eval(c, &mut best);
    let mut fd = eval(d, &mut best);
    for _ in 2..opts.refine_evals {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d, &mut best);
        }
    }
    Ok((best, iters))
}

/// `V(x, y)` with the default duration grid, 200 segments and bracketing.
pub fn quasipotential(spec: &SystemSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(minimize_action(spec, x, y, DEFAULT_SEGMENTS, &DEFAULT_T_GRID, &MinimizeOptions::default())?.value)
}

/// Re-optimizes after doubling the segment count (nodes inserted at segment
/// midpoints); returns the lower of the refined and incoming results.
pub fn refine_segments(
    spec: &SystemSpec,
    incumbent: &QuasipotentialResult,
    opts: &LbfgsOptions,
) -> Result<QuasipotentialResult> {
    let p = &incumbent.path;
    let mut times = vec![p.times[0]];
    let mut points = vec![p.points[0].clone()];
    for k in 0..p.n_segments() {
        times.push(0.5 * (p.times[k] + p.times[k + 1]));
        points.push(lerp(&p.points[k], &p.points[k + 1], 0.5));
        times.push(p.times[k + 1]);
        points.push(p.points[k + 1].clone());
    }
    let mut r = optimize_path(spec, &Path::new(times, points)?, opts)?;
    r.optimizer_iters += incumbent.optimizer_iters;
    Ok(if r.value <= incumbent.value { r } else { incumbent.clone() })
}

/// `x ∼ y`: both quasipotentials below `tol`, searched over
/// [`EQUIVALENCE_T_GRID`].
pub fn is_equivalent(spec: &SystemSpec, x: &[f64], y: &[f64], tol: f64) -> Result<bool> {
    if dist(x, y) == 0.0 {
        return Ok(true);
    }
    let v = |a: &[f64], b: &[f64]| {
        minimize_action(spec, a, b, EQUIVALENCE_SEGMENTS, &EQUIVALENCE_T_GRID, &MinimizeOptions::default())
            .map(|r| r.value)
    };
    Ok(v(x, y)? < tol && v(y, x)? < tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::corpus_system;

    #[test]
    fn flow_image_is_free() {
        let s = corpus_system("closed_orbit_v1").unwrap();
        let y = integrate_ode(&s, &[3.0, 0.0], 2.0, 1e-3).unwrap().final_state().to_vec();
        let r = minimize_action(&s, &[3.0, 0.0], &y, 200, &DEFAULT_T_GRID, &MinimizeOptions::default()).unwrap();
        assert!(r.value <= 1e-4, "{}", r.value);
        assert_eq!(r.path.start(), &[3.0, 0.0]);
        assert_eq!(r.path.end(), y.as_slice());
        assert!((action(&s, &r.path).unwrap().value - r.value).abs() < 1e-10);
    }

    #[test]
    fn rejects_degenerate_queries() {
        let s = corpus_system("prnot").unwrap();
        let o = MinimizeOptions::default();
        assert!(minimize_action(&s, &[0.0, 0.0], &[0.0, 0.0], 10, &[1.0], &o).is_err());
        assert!(minimize_action(&s, &[0.0, 0.0], &[1.0, 0.0], 10, &[], &o).is_err());
        assert!(minimize_action(&s, &[0.0, 0.0], &[5.0, 0.0], 10, &[1.0], &o).is_err());
    }

    #[test]
    fn straight_line_bounds_the_estimate() {
        let s = corpus_system("twoco").unwrap();
        let (x, y) = ([0.3, -0.2], [-0.9, 0.4]);
        let v = quasipotential(&s, &x, &y).unwrap();
        assert!(v <= action(&s, &lif_path(&x, &y, 200).unwrap()).unwrap().value);
    }
}
