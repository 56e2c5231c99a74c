//! Deterministic flow: fixed-step RK4 integration, limit-set tails and
//! empirical attractor/repeller classification of regions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::region::Region;
use crate::systems::SystemSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has a node")
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("trajectory has a node")
    }
}

fn check_args(spec: &SystemSpec, x0: &[f64], t: f64, dt: f64) -> Result<()> {
    if x0.len() != spec.dim {
        return Err(Error::Dimension { expected: spec.dim, got: x0.len() });
    }
    if !(t > 0.0 && dt > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("need T > 0 and dt > 0, got T={t}, dt={dt}")));
    }
    if !spec.in_safe_region(x0) {
        return Err(Error::SafeRadiusEscape { time: 0.0, point: x0.to_vec(), radius: spec.safe_radius });
    }
    Ok(())
}

/// Node count for `[0, T]` at step `dt` with a shorter last step.
fn step_count(t: f64, dt: f64) -> usize {
    let n = (t / dt).ceil() as usize;
    // guard against 1.0000000001 steps from rounding
    if n > 1 && (n - 1) as f64 * dt >= t * (1.0 - 1e-12) {
        n - 1
    } else {
        n.max(1)
    }
}

fn rk4_step(spec: &SystemSpec, sign: f64, x: &[f64], h: f64, k: &mut [Vec<f64>; 4], tmp: &mut [f64], out: &mut [f64]) {
    let d = x.len();
    spec.drift_into(x, &mut k[0]);
    for i in 0..d {
        tmp[i] = x[i] + 0.5 * h * sign * k[0][i];
    }
    spec.drift_into(tmp, &mut k[1]);
    for i in 0..d {
        tmp[i] = x[i] + 0.5 * h * sign * k[1][i];
    }
    spec.drift_into(tmp, &mut k[2]);
    for i in 0..d {
        tmp[i] = x[i] + h * sign * k[2][i];
    }
    spec.drift_into(tmp, &mut k[3]);
    for i in 0..d {
        out[i] = x[i] + sign * h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

fn integrate_signed(spec: &SystemSpec, sign: f64, x0: &[f64], t: f64, dt: f64) -> Result<Trajectory> {
    check_args(spec, x0, t, dt)?;
    let n = step_count(t, dt);
    let d = spec.dim;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(x0.to_vec());
    let mut k = [vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut tmp = vec![0.0; d];
    for step in 1..=n {
        let t_now = if step == n { t } else { step as f64 * dt };
        let h = t_now - times[step - 1];
        let mut next = vec![0.0; d];
        rk4_step(spec, sign, &states[step - 1], h, &mut k, &mut tmp, &mut next);
        if !spec.in_safe_region(&next) || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::SafeRadiusEscape { time: t_now, point: next, radius: spec.safe_radius });
        }
        times.push(t_now);
        states.push(next);
    }
    Ok(Trajectory { times, states, dt })
}

/// `Ψ_t(x0)` on `[0, T]` by classical RK4; the last step may be shorter.
pub fn integrate_ode(spec: &SystemSpec, x0: &[f64], t: f64, dt: f64) -> Result<Trajectory> {
    integrate_signed(spec, 1.0, x0, t, dt)
}

/// Backward flow `Ψ_{-t}(x0)`, obtained by integrating `-b`.
pub fn reverse_integrate(spec: &SystemSpec, x0: &[f64], t: f64, dt: f64) -> Result<Trajectory> {
    integrate_signed(spec, -1.0, x0, t, dt)
}

/// Explicit Euler `x_{k+1} = x_k + b(x_k)dt`, `n_steps` steps; the noiseless
/// reference for Euler–Maruyama.
pub fn integrate_euler(spec: &SystemSpec, x0: &[f64], dt: f64, n_steps: usize) -> Result<Trajectory> {
    check_args(spec, x0, dt * n_steps.max(1) as f64, dt)?;
    let mut states = vec![x0.to_vec()];
    let mut b = vec![0.0; spec.dim];
    for step in 1..=n_steps {
        let x = &states[step - 1];
        spec.drift_into(x, &mut b);
        let next: Vec<f64> = x.iter().zip(&b).map(|(xi, bi)| xi + bi * dt).collect();
        if !spec.in_safe_region(&next) {
            return Err(Error::SafeRadiusEscape { time: step as f64 * dt, point: next, radius: spec.safe_radius });
        }
        states.push(next);
    }
    let times = (0..=n_steps).map(|k| k as f64 * dt).collect();
    Ok(Trajectory { times, states, dt })
}

/// Trailing `tail_fraction` of the states of a trajectory of length `horizon`.
pub fn omega_limit_estimate(
    spec: &SystemSpec,
    x0: &[f64],
    horizon: f64,
    tail_fraction: f64,
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("tail fraction {tail_fraction} not in (0,1)")));
    }
    let traj = integrate_ode(spec, x0, horizon, dt)?;
    let n = traj.states.len();
    let keep = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    Ok(traj.states[n - keep..].to_vec())
}

/// α-limit counterpart of [`omega_limit_estimate`].
pub fn alpha_limit_estimate(
    spec: &SystemSpec,
    x0: &[f64],
    horizon: f64,
    tail_fraction: f64,
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("tail fraction {tail_fraction} not in (0,1)")));
    }
    let traj = reverse_integrate(spec, x0, horizon, dt)?;
    let n = traj.states.len();
    let keep = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n);
    Ok(traj.states[n - keep..].to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassLabel {
    Attractor,
    Repeller,
    Inconclusive,
}

impl ClassLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Attractor => "attractor",
            ClassLabel::Repeller => "repeller",
            ClassLabel::Inconclusive => "inconclusive",
        }
    }
}

/// Empirical label of a region. Only sample-resolution evidence: uniform
/// convergence on a neighbourhood cannot be certified by finitely many orbits.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionClassification {
    pub label: ClassLabel,
    /// Latest entry time (into the inner shell, for good) over the samples.
    pub forward_escape_time: Option<f64>,
    pub backward_escape_time: Option<f64>,
    pub samples_used: usize,
    pub diagnostic: Option<String>,
}

/// Time after which the orbit stays within `tol` of the region, if it ends there.
fn settle_time(traj: &Trajectory, region: &Region, tol: f64) -> Option<f64> {
    let last_out = traj.states.iter().rposition(|x| region.distance(x) > tol);
    match last_out {
        None => Some(0.0),
        Some(k) if k + 1 < traj.states.len() => Some(traj.times[k + 1]),
        Some(_) => None,
    }
}

/// Every sample settles within `tol` by `escape_t`: the latest settling time.
fn all_settle(
    spec: &SystemSpec,
    starts: &[Vec<f64>],
    region: &Region,
    tol: f64,
    escape_t: f64,
    dt: f64,
    backward: bool,
) -> std::result::Result<f64, String> {
    let per_sample: Vec<std::result::Result<f64, String>> = starts
        .par_iter()
        .map(|x| {
            let traj =
                if backward { reverse_integrate(spec, x, escape_t, dt) } else { integrate_ode(spec, x, escape_t, dt) }
                    .map_err(|e| format!("sample {x:?}: {e}"))?;
            settle_time(&traj, region, tol).ok_or_else(|| format!("sample {x:?} did not settle"))
        })
        .collect();
    let mut worst = 0.0f64;
    for r in per_sample {
        worst = worst.max(r?);
    }
    Ok(worst)
}

/// Samples the `δ`-shell of `region` and tests whether every sample settles
/// within `δ/4` of it under the forward flow (attractor) or backward flow
/// (repeller) by `escape_t`.
pub fn classify_region(
    spec: &SystemSpec,
    region: &Region,
    shell_delta: f64,
    n_samples: usize,
    escape_t: f64,
    dt: f64,
) -> Result<RegionClassification> {
    if !(shell_delta > 0.0) || n_samples == 0 {
        return Err(Error::InvalidArgument("classify needs shell_delta > 0 and samples".into()));
    }
    if region.dim() != spec.dim {
        return Err(Error::Dimension { expected: spec.dim, got: region.dim() });
    }
    let starts: Vec<Vec<f64>> = region.shell_samples(shell_delta, n_samples).into_iter().map(|s| s.point).collect();
    if starts.is_empty() {
        return Ok(RegionClassification {
            label: ClassLabel::Inconclusive,
            forward_escape_time: None,
            backward_escape_time: None,
            samples_used: 0,
            diagnostic: Some("no shell samples found".into()),
        });
    }
    let tol = shell_delta / 4.0;
    let fwd = all_settle(spec, &starts, region, tol, escape_t, dt, false);
    if let Ok(t) = fwd {
        return Ok(RegionClassification {
            label: ClassLabel::Attractor,
            forward_escape_time: Some(t),
            backward_escape_time: None,
            samples_used: starts.len(),
            diagnostic: None,
        });
    }
    let bwd = all_settle(spec, &starts, region, tol, escape_t, dt, true);
    Ok(match bwd {
        Ok(t) => RegionClassification {
            label: ClassLabel::Repeller,
            forward_escape_time: None,
            backward_escape_time: Some(t),
            samples_used: starts.len(),
            diagnostic: None,
        },
        Err(b) => RegionClassification {
            label: ClassLabel::Inconclusive,
            forward_escape_time: None,
            backward_escape_time: None,
            samples_used: starts.len(),
            diagnostic: Some(format!("forward: {}; backward: {b}", fwd.unwrap_err())),
        },
    })
}

/// Largest distance of a point cloud from a region.
pub fn max_distance(cloud: &[Vec<f64>], region: &Region) -> f64 {
    cloud.iter().map(|x| region.distance(x)).fold(0.0, f64::max)
}

/// Largest distance between a cloud and a single point.
pub fn max_distance_to(cloud: &[Vec<f64>], p: &[f64]) -> f64 {
    cloud.iter().map(|x| norm(&crate::linalg::sub(x, p))).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{corpus_system, SystemSpec};
    use std::sync::Arc;

    fn decay() -> SystemSpec {
        SystemSpec::new(
            "decay",
            2,
            Arc::new(|x: &[f64], o: &mut [f64]| {
                o[0] = -x[0];
                o[1] = -x[1];
            }),
            10.0,
        )
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate_ode(&decay(), &[1.0, 0.0], 1.0, 1e-3).unwrap();
        assert!((tr.final_state()[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert_eq!(tr.times.len(), tr.states.len());
        assert_eq!(tr.duration(), 1.0);
    }

    #[test]
    fn last_step_shorter() {
        let tr = integrate_ode(&decay(), &[1.0, 0.0], 1.05, 0.1).unwrap();
        assert_eq!(tr.times.len(), 12);
        assert!((tr.times[11] - tr.times[10] - 0.05).abs() < 1e-12);
        assert!((tr.final_state()[0] - (-1.05f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn backward_decay_grows() {
        let tr = reverse_integrate(&decay(), &[0.1, 0.0], 3.0, 1e-3).unwrap();
        assert!((tr.final_state()[0] - 0.1 * 3.0f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn escape_reports_time() {
        let err = reverse_integrate(&decay(), &[1.0, 0.0], 10.0, 1e-2).unwrap_err();
        match err {
            Error::SafeRadiusEscape { time, .. } => assert!((time - 10f64.ln()).abs() < 0.02),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_arguments() {
        assert!(integrate_ode(&decay(), &[1.0, 0.0], 0.0, 1e-3).is_err());
        assert!(integrate_ode(&decay(), &[1.0, 0.0], 1.0, -1.0).is_err());
        assert!(integrate_ode(&decay(), &[11.0, 0.0], 1.0, 1e-3).is_err());
        assert!(integrate_ode(&decay(), &[1.0], 1.0, 1e-3).is_err());
    }

    #[test]
    fn twoco_equilibrium_is_fixed() {
        let s = corpus_system("twoco").unwrap();
        let tr = integrate_ode(&s, &[1.0, 0.0], 5.0, 1e-3).unwrap();
        assert!(norm(&crate::linalg::sub(tr.final_state(), &[1.0, 0.0])) < 1e-9);
    }

    #[test]
    fn closed_orbit_settles_on_circle() {
        let s = corpus_system("closed_orbit_v1").unwrap();
        let tr = integrate_ode(&s, &[3.0, 0.0], 50.0, 1e-3).unwrap();
        assert!((norm(tr.final_state()) - 2.0).abs() < 0.01);
        let cloud = omega_limit_estimate(&s, &[3.0, 0.0], 200.0, 0.1, 1e-2).unwrap();
        assert!(cloud.iter().all(|x| (norm(x) - 2.0).abs() < 0.02));
    }

    #[test]
    fn closed_orbit_disk_radius_frozen_backward() {
        let s = corpus_system("closed_orbit_v1").unwrap();
        let tr = reverse_integrate(&s, &[0.5, 0.0], 50.0, 1e-3).unwrap();
        assert!((norm(tr.final_state()) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn double_well_basin() {
        let s = corpus_system("gradient_dw2").unwrap();
        let cloud = omega_limit_estimate(&s, &[0.9, 0.9], 50.0, 0.1, 1e-2).unwrap();
        assert!(max_distance_to(&cloud, &[1.0, 1.0]) < 1e-3);
        let still = omega_limit_estimate(&s, &[0.5, 0.5], 10.0, 0.5, 1e-2).unwrap();
        assert!(still.iter().all(|x| x == &vec![0.5, 0.5]));
    }

    #[test]
    fn euler_matches_hand_steps() {
        let tr = integrate_euler(&decay(), &[1.0, 2.0], 0.1, 2).unwrap();
        assert_eq!(tr.states[2], vec![0.81, 1.62]);
    }

    #[test]
    fn classify_simple_cases() {
        let s = corpus_system("closed_orbit_v1").unwrap();
        let disk = Region::ball(vec![0.0, 0.0], 1.0).unwrap();
        let c = classify_region(&s, &disk, 0.1, 16, 100.0, 0.01).unwrap();
        assert_eq!(c.label, ClassLabel::Repeller, "{c:?}");
        let circ = Region::circle_shell(vec![0.0, 0.0], 2.0, 0.05).unwrap();
        let c = classify_region(&s, &circ, 0.1, 16, 50.0, 0.01).unwrap();
        assert_eq!(c.label, ClassLabel::Attractor, "{c:?}");
        let p = corpus_system("prnot").unwrap();
        let g1 = Region::circle_shell(vec![0.0, 0.0], 1.0, 0.05).unwrap();
        let c = classify_region(&p, &g1, 0.1, 16, 50.0, 0.01).unwrap();
        assert_eq!(c.label, ClassLabel::Repeller, "{c:?}");
    }
}
