//! Barrier between two δ-shells of a region: screened over sampled boundary
//! pairs, polished, then (in the plane) slid along both shells.

use rayon::prelude::*;

use super::{minimize_action, MinimizeOptions, QuasipotentialResult};
use crate::action::{action, action_with_gradient, Path};
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::optimize::{lbfgs, solve_kinetic, LbfgsOptions};
use crate::region::{Region, ShellSample};
use crate::systems::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShellDirection {
    /// From the outer shell `∂(R)_{δ_outer}` to the inner shell `∂(R)_{δ_inner}`.
    Inward,
    /// From the inner shell to the outer shell.
    Outward,
}

#[derive(Debug, Clone)]
pub struct ShellOptions {
    pub nearest: usize,
    pub coarse_segments: usize,
    pub coarse_t_grid: Vec<f64>,
    pub polish: usize,
    pub n_segments: usize,
    pub t_grid: Vec<f64>,
    pub minimize: MinimizeOptions,
    /// Free the endpoint angles and duration in a final joint polish (planar regions).
    pub slide: bool,
}

impl Default for ShellOptions {
    fn default() -> Self {
        ShellOptions {
            nearest: 8,
            coarse_segments: 40,
            coarse_t_grid: vec![0.25, 1.0, 4.0],
            polish: 3,
            n_segments: 200,
            t_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
            minimize: MinimizeOptions::default(),
            slide: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShellResult {
    pub value: f64,
    pub best: QuasipotentialResult,
    pub pairs_screened: usize,
}

#[derive(Clone)]
struct Endpoint {
    param: f64,
    branch: usize,
    delta: f64,
}

/// Minimum of `V` between the `δ_outer`- and `δ_inner`-shells of `region`,
/// over `n_boundary_samples` points per shell. A clearly positive value is
/// numerical evidence of a barrier between the shells.
pub fn shell_quasipotential(
    spec: &SystemSpec,
    region: &Region,
    delta_outer: f64,
    delta_inner: f64,
    n_boundary_samples: usize,
    direction: ShellDirection,
    opts: &ShellOptions,
) -> Result<ShellResult> {
    if !(delta_outer > delta_inner && delta_inner > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need delta_outer > delta_inner > 0, got {delta_outer}, {delta_inner}"
        )));
    }
    let outer = region.shell_samples(delta_outer, n_boundary_samples);
    let inner = region.shell_samples(delta_inner, n_boundary_samples);
    let (from, to, d_from, d_to): (Vec<ShellSample>, Vec<ShellSample>, f64, f64) = match direction {
        ShellDirection::Inward => (outer, inner, delta_outer, delta_inner),
        ShellDirection::Outward => (inner, outer, delta_inner, delta_outer),
    };
    let inside = |p: &[f64]| spec.in_safe_region(p);
    let from: Vec<ShellSample> = from.into_iter().filter(|s| inside(&s.point)).collect();
    let to: Vec<ShellSample> = to.into_iter().filter(|s| inside(&s.point)).collect();
    if from.is_empty() || to.is_empty() {
        return Err(Error::InvalidArgument("no shell samples inside the safe radius".into()));
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, a) in from.iter().enumerate() {
        let mut near: Vec<(f64, usize)> = to.iter().enumerate().map(|(j, b)| (dist(&a.point, &b.point), j)).collect();
        near.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        pairs.extend(near.into_iter().take(opts.nearest).map(|(_, j)| (i, j)));
    }
    let coarse = MinimizeOptions::coarse();
    let screened: Vec<(f64, usize, usize)> = pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let r =
                minimize_action(spec, &from[i].point, &to[j].point, opts.coarse_segments, &opts.coarse_t_grid, &coarse)
                    .ok()?;
            Some((r.value, i, j))
        })
        .collect();
    let mut ranked = screened.clone();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    ranked.truncate(opts.polish.max(1));
    let polished: Vec<(QuasipotentialResult, usize, usize)> = ranked
        .par_iter()
        .filter_map(|&(_, i, j)| {
            minimize_action(spec, &from[i].point, &to[j].point, opts.n_segments, &opts.t_grid, &opts.minimize)
                .ok()
                .map(|r| (r, i, j))
        })
        .collect();
    let (mut best, i, j) =
        polished.into_iter().min_by(|a, b| a.0.value.total_cmp(&b.0.value)).ok_or(Error::AllStartsDiverged)?;

    let ends = [
        Endpoint { param: from[i].param, branch: from[i].branch, delta: d_from },
        Endpoint { param: to[j].param, branch: to[j].branch, delta: d_to },
    ];
    let planar = spec.dim == 2 && region.shell_point_at(d_from, ends[0].param, ends[0].branch).is_some();
    if planar && opts.slide {
        if let Ok(r) = joint_polish(spec, region, &best, &ends, &opts.minimize.lbfgs) {
            if r.value < best.value {
                let iters = best.optimizer_iters + r.optimizer_iters;
                best = r;
                best.optimizer_iters = iters;
            }
        }
    }
    Ok(ShellResult { value: best.value, best, pairs_screened: screened.len() })
}

/// Optimizes interior nodes, both endpoint angles along their shells and
/// the log-duration together. Angle and duration derivatives come from
/// central differences; the node block is preconditioned by the kinetic term.
fn joint_polish(
    spec: &SystemSpec,
    region: &Region,
    start: &QuasipotentialResult,
    ends: &[Endpoint; 2],
    opts: &LbfgsOptions,
) -> Result<QuasipotentialResult> {
    let base = &start.path;
    let n = base.n_segments();
    let d = spec.dim;
    let m = (n - 1) * d;
    let t0 = base.duration();
    let point = |e: &Endpoint, angle: f64| -> Result<Vec<f64>> {
        region
            .shell_point_at(e.delta, angle, e.branch)
            .ok_or_else(|| Error::InvalidPath(format!("no shell point at angle {angle}")))
    };
    let build = |v: &[f64]| -> Result<Path> {
        let scale = v[m + 2].exp();
        let times = base.times.iter().map(|t| t * scale).collect();
        let mut points = base.points.clone();
        points[0] = point(&ends[0], v[m])?;
        points[n] = point(&ends[1], v[m + 1])?;
        for (k, c) in v[..m].chunks(d).enumerate() {
            points[k + 1].copy_from_slice(c);
        }
        Ok(Path { times, points })
    };
    let objective = |v: &[f64]| -> Result<(f64, Vec<f64>)> {
        let p = build(v)?;
        let (val, g) = action_with_gradient(spec, &p)?;
        let mut grad: Vec<f64> = g[1..n].iter().flatten().copied().collect();
        let h = 1e-6;
        for (which, node) in [(0usize, 0usize), (1, n)] {
            let e = &ends[which];
            let (pp, pm) = (point(e, v[m + which] + h)?, point(e, v[m + which] - h)?);
            let tangent: f64 = (0..d).map(|i| g[node][i] * (pp[i] - pm[i]) / (2.0 * h)).sum();
            grad.push(tangent);
        }
        let hl = 1e-5;
        let at = |lam: f64| -> Result<f64> {
            Ok(action(
                spec,
                &Path { times: base.times.iter().map(|t| t * lam.exp()).collect(), points: p.points.clone() },
            )?
            .value)
        };
        grad.push((at(v[m + 2] + hl)? - at(v[m + 2] - hl)?) / (2.0 * hl));
        Ok((val, grad))
    };
    let dts: Vec<f64> = base.times.windows(2).map(|w| w[1] - w[0]).collect();
    let r2 = region.extent().max(1e-3).powi(2);
    let precond = |r: &[f64]| {
        let mut out = solve_kinetic(&dts, d, &r[..m]);
        out.push(r[m] * dts[0] / r2);
        out.push(r[m + 1] * dts[n - 1] / r2);
        out.push(r[m + 2]);
        out
    };
    let mut v0: Vec<f64> = base.points[1..n].iter().flatten().copied().collect();
    v0.extend([ends[0].param, ends[1].param, 0.0]);
    let res = lbfgs(objective, precond, v0, opts)?;
    let path = build(&res.x)?;
    let value = action(spec, &path)?.value;
    Ok(QuasipotentialResult {
        value,
        t_used: t0 * res.x[m + 2].exp(),
        n_segments: n,
        optimizer_iters: res.iters,
        converged: res.converged,
        path,
    })
}
