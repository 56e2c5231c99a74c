//! Probing whether every point of a region can leave a neighbourhood of it
//! at small cost, with the three constructions: straight hops off a null set,
//! riding a (transitive) orbit to an exit point, and a zero-quasipotential exit.

use super::constructions::follow;
use super::{minimize_action, MinimizeOptions, DEFAULT_T_GRID};
use crate::action::{action, extend_by_flow, lif_path, link_all, Path};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm, sym_max_eigenvalue};
use crate::region::Region;
use crate::systems::SystemSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeCase {
    /// Straight hops from a measure-zero set to declared exterior targets.
    LebesgueZero,
    /// Ride the flow inside the set to an exit base point, then step out.
    Transitive,
    /// Near-zero-action path to a declared `x₀`, then on to `z₀` outside.
    ZeroVExit,
    /// Every applicable case above, per start point.
    Auto,
}

impl ProbeCase {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeCase::LebesgueZero => "lebesgue_zero",
            ProbeCase::Transitive => "transitive",
            ProbeCase::ZeroVExit => "zero_v_exit",
            ProbeCase::Auto => "auto",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "lebesgue_zero" => ProbeCase::LebesgueZero,
            "transitive" => ProbeCase::Transitive,
            "zero_v_exit" | "zero_V_exit" => ProbeCase::ZeroVExit,
            "auto" => ProbeCase::Auto,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub n_starts: usize,
    /// Exterior targets for straight hops.
    pub exterior_targets: Vec<Vec<f64>>,
    /// `(x₀, z₀)` for the zero-quasipotential exit.
    pub exit_pair: Option<(Vec<f64>, Vec<f64>)>,
    /// Length of the orbit segment ridden in the transitive case.
    pub orbit_duration: f64,
    pub exit_candidates: usize,
    pub extension_t: f64,
    pub dt: f64,
    pub n_segments: usize,
    pub minimize: MinimizeOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            n_starts: 32,
            exterior_targets: vec![],
            exit_pair: None,
            orbit_duration: 100.0,
            exit_candidates: 16,
            extension_t: 5.0,
            dt: 1e-2,
            n_segments: 100,
            minimize: MinimizeOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrWitness {
    /// The start point whose witness is reported (the most expensive one when
    /// found, the first failing one otherwise).
    pub start: Vec<f64>,
    pub path: Option<Path>,
    pub exit_point: Option<Vec<f64>>,
    pub action: f64,
    pub eta: f64,
    pub found: bool,
    pub case_used: Option<ProbeCase>,
    /// Neighbourhood `(R)_δ` the exit has to leave.
    pub delta: f64,
    /// Empirical local constant behind `δ`.
    pub lipschitz: f64,
    pub starts_checked: usize,
    pub orbit_duration_used: f64,
}

/// `½ max (1 + |b|)² λ_max(a⁻¹)` over interior and nearby shell samples:
/// straight segments of unit speed near the region cost at most this per unit length.
pub fn local_lipschitz(spec: &SystemSpec, region: &Region, reach: f64) -> f64 {
    let mut pts = region.interior_samples(64);
    pts.extend(region.shell_samples(reach, 64).into_iter().map(|s| s.point));
    pts.iter()
        .filter(|p| spec.in_safe_region(p))
        .map(|p| {
            let b = norm(&spec.drift(p));
            let a = spec.diffusion_a(p);
            let inv_max = a.try_inverse().map_or(f64::INFINITY, |ai| sym_max_eigenvalue(&ai));
            0.5 * (1.0 + b).powi(2) * inv_max
        })
        .fold(0.0, f64::max)
}

struct Attempt {
    path: Path,
    value: f64,
    case: ProbeCase,
}

fn hop(spec: &SystemSpec, region: &Region, x: &[f64], delta: f64, targets: &[Vec<f64>]) -> Option<Attempt> {
    targets
        .iter()
        .filter(|z| region.distance(z) > delta && dist(x, z) > 0.0)
        .filter_map(|z| {
            let p = lif_path(x, z, 16).ok()?;
            let value = action(spec, &p).ok()?.value;
            Some(Attempt { path: p, value, case: ProbeCase::LebesgueZero })
        })
        .min_by(|a, b| a.value.total_cmp(&b.value))
}

fn ride(spec: &SystemSpec, region: &Region, x: &[f64], delta: f64, opts: &ProbeOptions) -> Option<Attempt> {
    let flow = |p: &[f64], out: &mut [f64]| spec.drift_into(p, out);
    region
        .shell_samples(2.0 * delta, opts.exit_candidates)
        .into_iter()
        .filter_map(|s| {
            let exit = s.point;
            let base = region.project(&exit);
            let orbit = follow(spec, &flow, x, &base, opts.orbit_duration, opts.dt);
            if orbit.closest_dist > delta {
                return None;
            }
            let mut parts = Vec::new();
            if orbit.points.len() >= 2 {
                parts.push(Path::new(orbit.times, orbit.points).ok()?);
            }
            let reached = parts.last().map_or(x.to_vec(), |p: &Path| p.end().to_vec());
            if dist(&reached, &base) > 0.0 {
                parts.push(lif_path(&reached, &base, 4).ok()?);
            }
            parts.push(lif_path(&base, &exit, 8).ok()?);
            let joined = link_all(&parts, 0.0).ok()?;
            let path = extend_by_flow(spec, &joined, opts.extension_t, opts.dt).ok()?;
            if region.distance(path.end()) <= delta {
                return None;
            }
            let value = action(spec, &path).ok()?.value;
            Some(Attempt { path, value, case: ProbeCase::Transitive })
        })
        .min_by(|a, b| a.value.total_cmp(&b.value))
}

fn zero_v_exit(spec: &SystemSpec, x: &[f64], exit_leg: &Path, opts: &ProbeOptions) -> Option<Attempt> {
    let x0 = exit_leg.start();
    let path = if dist(x, x0) == 0.0 {
        exit_leg.clone()
    } else {
        let first = minimize_action(spec, x, x0, opts.n_segments, &DEFAULT_T_GRID, &opts.minimize).ok()?;
        link_all(&[first.path, exit_leg.clone()], 0.0).ok()?
    };
    let value = action(spec, &path).ok()?.value;
    Some(Attempt { path, value, case: ProbeCase::ZeroVExit })
}

/// For up to `n_starts` points of `region`, looks for a path of action below
/// `eta` that ends outside `(R)_δ`, `δ = η / (4(L + 1))`. `found` needs a
/// witness for every start; failure is a value, not an error.
pub fn pr_probe(
    spec: &SystemSpec,
    region: &Region,
    eta: f64,
    case: ProbeCase,
    opts: &ProbeOptions,
) -> Result<PrWitness> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument("eta must be positive".into()));
    }
    let lipschitz = local_lipschitz(spec, region, 0.1);
    let delta = eta / (4.0 * (lipschitz + 1.0));
    let starts: Vec<Vec<f64>> =
        region.interior_samples(opts.n_starts).into_iter().filter(|p| spec.in_safe_region(p)).collect();
    if starts.is_empty() {
        return Err(Error::InvalidArgument("region has no sample points inside the safe radius".into()));
    }
    let want = |c: ProbeCase| case == c || case == ProbeCase::Auto;
    let exit_leg = match (&opts.exit_pair, want(ProbeCase::ZeroVExit)) {
        (Some((x0, z0)), true) => {
            if region.distance(z0) <= delta {
                return Err(Error::InvalidArgument("declared exit z₀ lies inside the probed neighbourhood".into()));
            }
            minimize_action(spec, x0, z0, opts.n_segments, &DEFAULT_T_GRID, &opts.minimize).ok().map(|r| r.path)
        }
        _ => None,
    };
    let mut worst: Option<(Vec<f64>, Attempt)> = None;
    let mut failure: Option<(Vec<f64>, Option<Attempt>)> = None;
    for x in &starts {
        let mut tries: Vec<Attempt> = Vec::new();
        if want(ProbeCase::LebesgueZero) && (case != ProbeCase::Auto || region.is_null_set()) {
            tries.extend(hop(spec, region, x, delta, &opts.exterior_targets));
        }
        if want(ProbeCase::Transitive) {
            tries.extend(ride(spec, region, x, delta, opts));
        }
        if let Some(leg) = &exit_leg {
            tries.extend(zero_v_exit(spec, x, leg, opts));
        }
        let best = tries.into_iter().min_by(|a, b| a.value.total_cmp(&b.value));
        match best {
            Some(a) if a.value < eta && region.distance(a.path.end()) > delta => {
                if worst.as_ref().is_none_or(|(_, w)| a.value > w.value) {
                    worst = Some((x.clone(), a));
                }
            }
            other => {
                failure = Some((x.clone(), other));
                break;
            }
        }
    }
    let orbit_duration_used = if want(ProbeCase::Transitive) { opts.orbit_duration } else { 0.0 };
    let base = |start: Vec<f64>, a: Option<Attempt>, found: bool| PrWitness {
        start,
        exit_point: a.as_ref().map(|a| a.path.end().to_vec()),
        action: a.as_ref().map_or(f64::INFINITY, |a| a.value),
        case_used: a.as_ref().map(|a| a.case),
        path: a.map(|a| a.path),
        eta,
        found,
        delta,
        lipschitz,
        starts_checked: starts.len(),
        orbit_duration_used,
    };
    Ok(match failure {
        Some((x, a)) => base(x, a, false),
        None => {
            let (x, a) = worst.expect("at least one start");
            base(x, Some(a), true)
        }
    })
}
