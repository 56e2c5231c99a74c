//! Explicit low-action paths: level-changing paths for Hamiltonian-type
//! systems and zero-action chains along connecting orbits.

use crate::action::{lif_path, link, Path};
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::systems::SystemSpec;

pub(super) type Field<'a> = dyn Fn(&[f64], &mut [f64]) + 'a;

pub(super) fn rk4(f: &Field<'_>, x: &[f64], h: f64) -> Vec<f64> {
    let d = x.len();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    f(x, &mut k1);
    let t: Vec<f64> = (0..d).map(|i| x[i] + 0.5 * h * k1[i]).collect();
    f(&t, &mut k2);
    let t: Vec<f64> = (0..d).map(|i| x[i] + 0.5 * h * k2[i]).collect();
    f(&t, &mut k3);
    let t: Vec<f64> = (0..d).map(|i| x[i] + h * k3[i]).collect();
    f(&t, &mut k4);
    (0..d).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Flow nodes recorded while following `f` from `x`, thinned where the motion
/// is slow, together with the node of closest approach to `target`.
pub(super) struct Followed {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub closest: usize,
    pub closest_dist: f64,
}

/// Integrates `f` for up to `horizon`, stopping early at the safe radius.
/// The closest approach to `target` is refined to sub-step accuracy.
pub(super) fn follow(spec: &SystemSpec, f: &Field<'_>, x: &[f64], target: &[f64], horizon: f64, dt: f64) -> Followed {
    let max_gap = 0.5f64.max(dt);
    let mut times = vec![0.0];
    let mut points = vec![x.to_vec()];
    let (mut best_t, mut best_d) = (0.0, dist(x, target));
    let mut cur = x.to_vec();
    let mut t = 0.0;
    let mut last_kept_t = 0.0;
    let mut prev_kept = x.to_vec();
    let n = (horizon / dt).ceil() as usize;
    let mut raw_prev = x.to_vec();
    let mut raw_prev_t = 0.0;
    let mut refine_from: Option<(Vec<f64>, f64)> = None;
    for _ in 0..n {
        let next = rk4(f, &cur, dt);
        if !spec.in_safe_region(&next) || next.iter().any(|v| !v.is_finite()) {
            break;
        }
        t += dt;
        let dn = dist(&next, target);
        if dn < best_d {
            best_d = dn;
            best_t = t;
            refine_from = Some((raw_prev.clone(), raw_prev_t));
        }
        if dist(&next, &prev_kept) >= 0.5 * dt || t - last_kept_t >= max_gap {
            times.push(t);
            points.push(next.clone());
            prev_kept = next.clone();
            last_kept_t = t;
        }
        raw_prev = cur;
        raw_prev_t = t - dt;
        cur = next;
    }
    // truncate at the closest node (in time), then refine within ±dt around it
    let mut keep = times.iter().rposition(|&s| s <= best_t).unwrap_or(0);
    if let Some((p0, t0)) = refine_from {
        let h = golden_min(|h| dist(&rk4(f, &p0, h), target), 0.0, 2.0 * dt, 60);
        let p = rk4(f, &p0, h);
        let dp = dist(&p, target);
        if t0 + h > times[keep] && dp <= best_d {
            times.truncate(keep + 1);
            points.truncate(keep + 1);
            times.push(t0 + h);
            points.push(p);
            keep += 1;
            best_d = dp;
        }
    }
    times.truncate(keep + 1);
    points.truncate(keep + 1);
    Followed { closest: keep, closest_dist: best_d, times, points }
}

/// Path from `x` to `y` on an annulus where `F ≡ 0`: follow `ℋ(H) - λ∇H`
/// until the level `H(y)` is crossed, ride the true flow round the level
/// curve to `y`, and bridge the remaining gap with a straight segment.
///
/// Along the first leg `dH/dt = -λ|∇H|²`, so `λ < 0` raises `H`.
pub fn hamiltonian_drift_path(spec: &SystemSpec, x: &[f64], y: &[f64], lambda: f64, dt: f64) -> Result<Path> {
    let ham = spec
        .hamiltonian
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not of Hamiltonian type", spec.name)))?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let (hx, hy) = ((ham.h)(x), (ham.h)(y));
    let dh = hy - hx;
    if dh != 0.0 && !(-lambda * dh > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda {lambda} moves H away from the target level (H(x)={hx}, H(y)={hy})"
        )));
    }
    let aux = |p: &[f64], out: &mut [f64]| {
        let g = ham.grad(p);
        out[0] = g[1] - lambda * g[0];
        out[1] = -g[0] - lambda * g[1];
    };
    let mut times = vec![0.0];
    let mut points = vec![x.to_vec()];
    let cap = 1e3f64.max(10.0 / lambda.abs().max(1e-300));
    let mut t = 0.0;
    let mut cur = x.to_vec();
    let sign = dh.signum();
    // Already on the target level: the auxiliary leg is empty.
    loop {
        if dh == 0.0 {
            break;
        }
        if t > cap {
            return Err(Error::LevelNotReached { level: hy, cap });
        }
        let next = rk4(&aux, &cur, dt);
        if !spec.in_safe_region(&next) {
            return Err(Error::SafeRadiusEscape { time: t + dt, point: next, radius: spec.safe_radius });
        }
        if sign * ((ham.h)(&next) - hy) >= 0.0 {
            // bisection on the step length for the crossing
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if sign * ((ham.h)(&rk4(&aux, &cur, mid)) - hy) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if hi > 0.0 {
                times.push(t + hi);
                points.push(rk4(&aux, &cur, hi));
            }
            break;
        }
        t += dt;
        times.push(t);
        points.push(next.clone());
        cur = next;
    }
    let first = if points.len() >= 2 { Some(Path::new(times, points)?) } else { None };
    let z = first.as_ref().map_or(x.to_vec(), |p| p.end().to_vec());
    let true_flow = |p: &[f64], out: &mut [f64]| spec.drift_into(p, out);
    // one revolution of the level curve is enough; allow generous slack
    let ride = follow(spec, &true_flow, &z, y, 200.0, dt);
    let mut parts: Vec<Path> = Vec::new();
    if let Some(p) = first {
        parts.push(p);
    }
    if ride.points.len() >= 2 {
        parts.push(Path::new(ride.times, ride.points)?);
    }
    let reached = parts.last().map_or(z.clone(), |p| p.end().to_vec());
    let gap = dist(&reached, y);
    if gap > 1e-14 {
        parts.push(lif_path(&reached, y, 1)?);
    } else if let Some(last) = parts.last_mut() {
        let k = last.points.len() - 1;
        last.points[k] = y.to_vec();
    }
    let mut it = parts.into_iter();
    let head = it.next().ok_or_else(|| Error::InvalidPath("empty construction".into()))?;
    it.try_fold(head, |acc, p| link(&acc, &p, 0.0))
}

/// A stop on a chain: a point near an invariant set and, except for the last
/// stop, a seed whose orbit runs from this set to the next.
#[derive(Debug, Clone)]
pub struct ChainWaypoint {
    pub point: Vec<f64>,
    pub seed: Option<Vec<f64>>,
}

/// Closest-approach tolerance for the seeds' limit checks.
pub const CHAIN_LIMIT_TOL: f64 = 0.05;

/// Zero-action chain `y₀ → … → y_k`: for each seed, a straight leg to its
/// backward orbit near `yᵢ`, the flow through the seed, and a straight leg
/// from the orbit's closest approach to `yᵢ₊₁`. Legs shrink as `horizon` grows.
pub fn chain_zero_action_path(spec: &SystemSpec, waypoints: &[ChainWaypoint], dt: f64, horizon: f64) -> Result<Path> {
    let first = waypoints.first().ok_or_else(|| Error::InvalidArgument("no waypoints".into()))?;
    if waypoints.len() == 1 {
        let tr = crate::flow::integrate_ode(spec, &first.point, dt, dt)?;
        return Path::from_trajectory(&tr);
    }
    let fwd = |p: &[f64], out: &mut [f64]| spec.drift_into(p, out);
    let bwd = |p: &[f64], out: &mut [f64]| {
        spec.drift_into(p, out);
        out.iter_mut().for_each(|v| *v = -*v);
    };
    let mut parts: Vec<Path> = Vec::new();
    for i in 0..waypoints.len() - 1 {
        let seed = waypoints[i].seed.as_ref().ok_or(Error::ChainSeed { index: i, reason: "missing seed".into() })?;
        let (here, next) = (&waypoints[i].point, &waypoints[i + 1].point);
        let back = follow(spec, &bwd, seed, here, horizon, dt);
        if back.closest_dist > CHAIN_LIMIT_TOL {
            return Err(Error::ChainSeed {
                index: i,
                reason: format!("backward orbit stays {:.3} from waypoint {i}", back.closest_dist),
            });
        }
        let entry = back.points[back.closest].clone();
        let ahead = follow(spec, &fwd, &entry, next, back.times[back.closest] + horizon, dt);
        if ahead.closest_dist > CHAIN_LIMIT_TOL {
            return Err(Error::ChainSeed {
                index: i,
                reason: format!("forward orbit stays {:.3} from waypoint {}", ahead.closest_dist, i + 1),
            });
        }
        let start = parts.last().map_or(here.clone(), |p: &Path| p.end().to_vec());
        if dist(&start, &entry) > 0.0 {
            parts.push(lif_path(&start, &entry, 1)?);
        }
        if ahead.points.len() >= 2 {
            parts.push(Path::new(ahead.times, ahead.points)?);
        }
        let reached = parts.last().map_or(entry.clone(), |p| p.end().to_vec());
        if dist(&reached, next) > 0.0 {
            parts.push(lif_path(&reached, next, 1)?);
        }
    }
    let mut it = parts.into_iter();
    let head = match it.next() {
        Some(p) => p,
        None => return chain_zero_action_path(spec, &waypoints[..1], dt, horizon),
    };
    it.try_fold(head, |acc, p| link(&acc, &p, 0.0))
}
