//! Discrete action functional on piecewise-linear paths and the elementary
//! path constructors (straight lines, concatenation, flow extension).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::flow::{integrate_ode, Trajectory};
use crate::linalg::{dist, lerp, norm, sub};
use crate::systems::{eval_inverse_quadform, solve_diffusion, Diffusion, SystemSpec};

/// Piecewise-linear path through `points` at strictly increasing `times`
/// starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl Path {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != points.len() || times.len() < 2 {
            return Err(Error::InvalidPath(format!("{} times for {} points (need ≥ 2)", times.len(), points.len())));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidPath("path must start at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath("times must be strictly increasing".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidPath("points must be finite and of equal dimension".into()));
        }
        Ok(Path { times, points })
    }

    pub fn from_trajectory(t: &Trajectory) -> Result<Self> {
        Path::new(t.times.clone(), t.states.clone())
    }

    /// Path of duration `t` through `points` at equal spacing.
    pub fn uniform(points: Vec<Vec<f64>>, t: f64) -> Result<Self> {
        let n = points.len().saturating_sub(1).max(1);
        let times = (0..points.len()).map(|k| t * k as f64 / n as f64).collect();
        Path::new(times, points)
    }

    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn end(&self) -> &[f64] {
        self.points.last().unwrap()
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn n_segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Interpolated position at time `t` (clamped to `[0, T]`).
    pub fn at(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(0.0, self.duration());
        let k = match self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(k) => return self.points[k].clone(),
            Err(k) => k,
        };
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        lerp(&self.points[k - 1], &self.points[k], (t - t0) / (t1 - t0))
    }

    /// The same nodes traversed backwards in time.
    pub fn reversed(&self) -> Path {
        let t = self.duration();
        Path {
            times: self.times.iter().rev().map(|s| t - s).collect(),
            points: self.points.iter().rev().cloned().collect(),
        }
    }

    /// Same geometry over duration `t`.
    pub fn rescaled(&self, t: f64) -> Path {
        let c = t / self.duration();
        Path { times: self.times.iter().map(|s| s * c).collect(), points: self.points.clone() }
    }

    /// Resamples at `n` equal time steps (piecewise-linear interpolation).
    pub fn resampled(&self, n: usize) -> Path {
        let t = self.duration();
        let n = n.max(1);
        let times: Vec<f64> = (0..=n).map(|k| t * k as f64 / n as f64).collect();
        let mut points: Vec<Vec<f64>> = times.iter().map(|&s| self.at(s)).collect();
        points[0] = self.start().to_vec();
        points[n] = self.end().to_vec();
        Path { times, points }
    }

    /// Splits at interior node `k` into `[0, t_k]` and `[t_k, T]` (re-based).
    pub fn split_at(&self, k: usize) -> Result<(Path, Path)> {
        if k == 0 || k >= self.n_segments() {
            return Err(Error::InvalidPath(format!("split index {k} is not interior")));
        }
        let tk = self.times[k];
        let first = Path::new(self.times[..=k].to_vec(), self.points[..=k].to_vec())?;
        let second = Path::new(self.times[k..].iter().map(|s| s - tk).collect(), self.points[k..].to_vec())?;
        Ok((first, second))
    }

    /// Largest Euclidean norm of a node.
    pub fn max_norm(&self) -> f64 {
        self.points.iter().map(|p| norm(p)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionValue {
    pub value: f64,
    pub quadrature: Quadrature,
    pub n_segments: usize,
}

fn check_nodes(spec: &SystemSpec, points: &[Vec<f64>]) -> Result<()> {
    for p in points {
        if p.len() != spec.dim {
            return Err(Error::Dimension { expected: spec.dim, got: p.len() });
        }
        if !spec.in_safe_region(p) {
            return Err(Error::SafeRadiusEscape { time: f64::NAN, point: p.clone(), radius: spec.safe_radius });
        }
    }
    Ok(())
}

/// Per-segment contributions `½Δt (v - b(m))ᵀ a(m)⁻¹ (v - b(m))`.
pub fn segment_actions(spec: &SystemSpec, path: &Path) -> Result<Vec<f64>> {
    check_nodes(spec, &path.points)?;
    let d = spec.dim;
    let mut b = vec![0.0; d];
    let mut m = vec![0.0; d];
    let mut w = vec![0.0; d];
    let mut out = Vec::with_capacity(path.n_segments());
    for k in 0..path.n_segments() {
        let dt = path.times[k + 1] - path.times[k];
        let (x0, x1) = (&path.points[k], &path.points[k + 1]);
        for i in 0..d {
            m[i] = 0.5 * (x0[i] + x1[i]);
        }
        spec.drift_into(&m, &mut b);
        for i in 0..d {
            w[i] = (x1[i] - x0[i]) / dt - b[i];
        }
        out.push(0.5 * dt * eval_inverse_quadform(spec, &m, &w)?);
    }
    Ok(out)
}

/// Midpoint-rule discretization of `S_T(φ) = ½∫ (φ̇ - b)ᵀ a⁻¹ (φ̇ - b) dt`.
pub fn action(spec: &SystemSpec, path: &Path) -> Result<ActionValue> {
    // summed in index order so the value is reproducible bit for bit
    let value = segment_actions(spec, path)?.iter().sum::<f64>();
    Ok(ActionValue { value, quadrature: Quadrature::Midpoint, n_segments: path.n_segments() })
}

/// Derivative of `zᵀ a(m) z` along each coordinate of `m` (central differences).
fn quad_derivative(spec: &SystemSpec, m: &[f64], z: &[f64]) -> Vec<f64> {
    let Diffusion::Field(f) = &spec.diffusion else {
        return vec![0.0; m.len()];
    };
    let zv = DVector::from_column_slice(z);
    let mut p = m.to_vec();
    (0..m.len())
        .map(|j| {
            let h = 1e-6 * m[j].abs().max(1.0);
            p[j] = m[j] + h;
            let ap: DMatrix<f64> = f(&p);
            p[j] = m[j] - h;
            let am: DMatrix<f64> = f(&p);
            p[j] = m[j];
            (zv.transpose() * (ap - am) * &zv)[(0, 0)] / (2.0 * h)
        })
        .collect()
}

/// Discrete action and its gradient with respect to every node.
///
/// With `w = v - b(m)` and `z = a(m)⁻¹w` a segment contributes
/// `z - ½Δt J_bᵀz - ¼Δt ∂(zᵀaz)` to its right node and `-z - ½Δt J_bᵀz - ¼Δt ∂(zᵀaz)`
/// to its left node; `J_b` comes from central differences of the drift.
pub fn action_with_gradient(spec: &SystemSpec, path: &Path) -> Result<(f64, Vec<Vec<f64>>)> {
    check_nodes(spec, &path.points)?;
    let d = spec.dim;
    let mut grad = vec![vec![0.0; d]; path.points.len()];
    let mut total = 0.0;
    let mut b = vec![0.0; d];
    let mut m = vec![0.0; d];
    let mut w = vec![0.0; d];
    for k in 0..path.n_segments() {
        let dt = path.times[k + 1] - path.times[k];
        let (x0, x1) = (&path.points[k], &path.points[k + 1]);
        for i in 0..d {
            m[i] = 0.5 * (x0[i] + x1[i]);
        }
        spec.drift_into(&m, &mut b);
        for i in 0..d {
            w[i] = (x1[i] - x0[i]) / dt - b[i];
        }
        let z = solve_diffusion(spec, &m, &w)?;
        total += 0.5 * dt * w.iter().zip(&z).map(|(a, c)| a * c).sum::<f64>();
        let jac = spec.drift_jacobian(&m);
        let q = quad_derivative(spec, &m, &z);
        for j in 0..d {
            let jtz: f64 = (0..d).map(|i| jac[(i, j)] * z[i]).sum();
            let common = -0.5 * dt * jtz - 0.25 * dt * q[j];
            grad[k + 1][j] += z[j] + common;
            grad[k][j] += -z[j] + common;
        }
    }
    Ok((total, grad))
}

/// Unit-speed straight path from `x` to `y` in `n_segments` equal pieces.
pub fn lif_path(x: &[f64], y: &[f64], n_segments: usize) -> Result<Path> {
    if n_segments == 0 {
        return Err(Error::InvalidArgument("need at least one segment".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    let len = dist(x, y);
    if len == 0.0 {
        return Err(Error::InvalidPath("straight path between identical points".into()));
    }
    let mut points: Vec<Vec<f64>> = (0..=n_segments).map(|k| lerp(x, y, k as f64 / n_segments as f64)).collect();
    points[n_segments] = y.to_vec();
    let times = (0..=n_segments).map(|k| len * k as f64 / n_segments as f64).collect();
    Path::new(times, points)
}

/// Concatenation `p1 ∗ p2`; a straight bridge of duration equal to its
/// length closes any gap up to `tol`.
pub fn link(p1: &Path, p2: &Path, tol: f64) -> Result<Path> {
    let gap = dist(p1.end(), p2.start());
    if gap > tol {
        return Err(Error::LinkGap { gap, tol });
    }
    let mut times = p1.times.clone();
    let mut points = p1.points.clone();
    let mut offset = p1.duration();
    if gap > 0.0 {
        offset += gap;
        times.push(offset);
        points.push(p2.start().to_vec());
    }
    for (t, p) in p2.times.iter().zip(&p2.points).skip(1) {
        times.push(offset + t);
        points.push(p.clone());
    }
    Path::new(times, points)
}

/// Concatenates a sequence of paths, bridging gaps up to `tol`.
pub fn link_all(parts: &[Path], tol: f64) -> Result<Path> {
    let mut it = parts.iter();
    let first = it.next().ok_or_else(|| Error::InvalidPath("nothing to link".into()))?.clone();
    it.try_fold(first, |acc, p| link(&acc, p, tol))
}

/// Appends the flow `Ψ_t(path.end)` for `t ∈ (0, extra_t]`.
pub fn extend_by_flow(spec: &SystemSpec, path: &Path, extra_t: f64, dt: f64) -> Result<Path> {
    let tail = integrate_ode(spec, path.end(), extra_t, dt)?;
    link(path, &Path::from_trajectory(&tail)?, 0.0)
}

/// Largest segment ratio `½|v - b|²_{a⁻¹} / |v|` along a path: an empirical
/// local Lipschitz constant for straight-line costs.
pub fn segment_lipschitz(spec: &SystemSpec, path: &Path) -> Result<f64> {
    let seg = segment_actions(spec, path)?;
    let mut worst = 0.0f64;
    for (k, s) in seg.iter().enumerate() {
        let len = dist(&path.points[k + 1], &path.points[k]);
        if len > 0.0 {
            worst = worst.max(s / len);
        }
    }
    Ok(worst)
}

/// Straight line from `x` to `y` traversed in time `t` rather than `|y - x|`.
pub fn straight_path(x: &[f64], y: &[f64], t: f64, n_segments: usize) -> Result<Path> {
    Ok(lif_path(x, y, n_segments)?.rescaled(t))
}

/// Constant path at `x` of duration `t`.
pub fn constant_path(x: &[f64], t: f64, n_segments: usize) -> Result<Path> {
    Path::uniform(vec![x.to_vec(); n_segments.max(1) + 1], t)
}

/// Net displacement `y - x` of a path.
pub fn displacement(path: &Path) -> Vec<f64> {
    sub(path.end(), path.start())
}
