//! Composable set descriptors with membership, distance and boundary
//! sampling queries.
//!
//! `distance(x) == 0` exactly when `x` lies in the closure of the region.
//! For the geometric variants the distance is exact; for [`Region::Sublevel`]
//! it is the first-order estimate `(g(x) - level) / |grad g(x)|`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};

pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Region {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        r_in: f64,
        r_out: f64,
    },
    CircleShell {
        center: Vec<f64>,
        radius: f64,
        half_width: f64,
    },
    /// `{x : field(x) <= level}`. `anchor` is an interior point from which the
    /// region is star-shaped and `extent` bounds its distance from the anchor.
    Sublevel {
        field: ScalarField,
        level: f64,
        anchor: Vec<f64>,
        extent: f64,
        description: String,
    },
    Union(Vec<Region>),
}

/// A point on the boundary of a δ-neighbourhood, tagged with the direction
/// parameter (angle in 2D) and the branch it was found on along its ray.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSample {
    pub point: Vec<f64>,
    pub param: f64,
    pub branch: usize,
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidArgument(format!("ball radius {radius} must be nonnegative")));
        }
        Ok(Region::Ball { center, radius })
    }

    pub fn annulus(center: Vec<f64>, r_in: f64, r_out: f64) -> Result<Self> {
        if !(0.0 <= r_in && r_in <= r_out) {
            return Err(Error::InvalidArgument(format!("annulus needs 0 <= r_in <= r_out, got {r_in}, {r_out}")));
        }
        Ok(Region::Annulus { center, r_in, r_out })
    }

    pub fn circle_shell(center: Vec<f64>, radius: f64, half_width: f64) -> Result<Self> {
        if !(radius >= 0.0 && half_width >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "circle shell needs nonnegative radius and half width, got {radius}, {half_width}"
            )));
        }
        Ok(Region::CircleShell { center, radius, half_width })
    }

    pub fn sublevel(
        field: ScalarField,
        level: f64,
        anchor: Vec<f64>,
        extent: f64,
        description: impl Into<String>,
    ) -> Result<Self> {
        if !(extent > 0.0) {
            return Err(Error::InvalidArgument("sublevel extent must be positive".into()));
        }
        Ok(Region::Sublevel { field, level, anchor, extent, description: description.into() })
    }

    pub fn union(parts: Vec<Region>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("union of no regions".into()));
        }
        Ok(Region::Union(parts))
    }

    /// Radial bounds `[lo, hi]` of the rotationally symmetric variants.
    fn radial_bounds(&self) -> Option<(&[f64], f64, f64)> {
        match self {
            Region::Ball { center, radius } => Some((center, 0.0, *radius)),
            Region::Annulus { center, r_in, r_out } => Some((center, *r_in, *r_out)),
            Region::CircleShell { center, radius, half_width } => {
                Some((center, (radius - half_width).max(0.0), radius + half_width))
            }
            _ => None,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Sublevel { field, level, .. } => field(x) <= *level,
            Region::Union(parts) => parts.iter().any(|p| p.contains(x)),
            _ => self.distance(x) == 0.0,
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        if let Some((c, lo, hi)) = self.radial_bounds() {
            let r = dist(x, c);
            return if r < lo {
                lo - r
            } else if r > hi {
                r - hi
            } else {
                0.0
            };
        }
        match self {
            Region::Sublevel { field, level, .. } => {
                let g = field(x);
                if g <= *level {
                    return 0.0;
                }
                let grad = fd_gradient(field.as_ref(), x);
                let gn = norm(&grad);
                if gn > 0.0 && gn.is_finite() {
                    (g - level) / gn
                } else {
                    f64::INFINITY
                }
            }
            Region::Union(parts) => parts.iter().map(|p| p.distance(x)).fold(f64::INFINITY, f64::min),
            _ => unreachable!(),
        }
    }

    /// An interior reference point (centre for the geometric variants).
    pub fn anchor(&self) -> &[f64] {
        match self {
            Region::Ball { center, .. } | Region::Annulus { center, .. } | Region::CircleShell { center, .. } => center,
            Region::Sublevel { anchor, .. } => anchor,
            Region::Union(parts) => parts[0].anchor(),
        }
    }

    pub fn dim(&self) -> usize {
        self.anchor().len()
    }

    /// Radius about the anchor that contains the whole region.
    pub fn extent(&self) -> f64 {
        match self {
            Region::Sublevel { extent, .. } => *extent,
            Region::Union(parts) => {
                let a = parts[0].anchor();
                parts.iter().map(|p| dist(a, p.anchor()) + p.extent()).fold(0.0, f64::max)
            }
            _ => self.radial_bounds().map(|(_, _, hi)| hi).unwrap(),
        }
    }

    /// True when the region has Lebesgue measure zero.
    pub fn is_null_set(&self) -> bool {
        match self {
            Region::Ball { radius, .. } => *radius == 0.0,
            Region::Annulus { r_in, r_out, .. } => r_in == r_out,
            Region::CircleShell { half_width, .. } => *half_width == 0.0,
            Region::Sublevel { .. } => false,
            Region::Union(parts) => parts.iter().all(Region::is_null_set),
        }
    }

    /// Closest point of the region to `x` (exact for the geometric variants,
    /// Newton descent on the field for sublevel sets).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        if let Some((c, lo, hi)) = self.radial_bounds() {
            let r = dist(x, c);
            let target = r.clamp(lo, hi);
            if r == target {
                return x.to_vec();
            }
            if r == 0.0 {
                let mut p = c.to_vec();
                p[0] += target;
                return p;
            }
            return c.iter().zip(x).map(|(ci, xi)| ci + (xi - ci) * target / r).collect();
        }
        match self {
            Region::Sublevel { field, level, .. } => {
                let mut p = x.to_vec();
                for _ in 0..50 {
                    let g = field(&p);
                    if g <= *level {
                        break;
                    }
                    let grad = fd_gradient(field.as_ref(), &p);
                    let gn2: f64 = grad.iter().map(|v| v * v).sum();
                    if !(gn2 > 0.0) {
                        break;
                    }
                    // slight overshoot so the iterate lands inside
                    let step = (g - level) / gn2 * (1.0 + 1e-9);
                    for (pi, gi) in p.iter_mut().zip(&grad) {
                        *pi -= step * gi;
                    }
                }
                p
            }
            Region::Union(parts) => {
                let best = parts.iter().min_by(|a, b| a.distance(x).total_cmp(&b.distance(x))).unwrap();
                best.project(x)
            }
            _ => unreachable!(),
        }
    }

    /// Points of `∂(R)_δ` on the ray from the anchor in direction `dir`,
    /// ordered by distance from the anchor.
    pub fn shell_points_on_ray(&self, delta: f64, dir: &[f64]) -> Vec<Vec<f64>> {
        if let Some((c, lo, hi)) = self.radial_bounds() {
            let mut radii = Vec::new();
            if lo - delta > 0.0 {
                radii.push(lo - delta);
            }
            radii.push(hi + delta);
            return radii.into_iter().map(|r| c.iter().zip(dir).map(|(ci, di)| ci + r * di).collect()).collect();
        }
        // ray march on the distance function, bisection on each crossing
        let anchor = self.anchor();
        let reach = self.extent() + 2.0 * delta;
        let h = (delta / 8.0).min(reach / 400.0);
        let at = |t: f64| -> Vec<f64> { anchor.iter().zip(dir).map(|(a, d)| a + t * d).collect() };
        let f = |t: f64| self.distance(&at(t)) - delta;
        let mut out = Vec::new();
        let mut t0 = 0.0;
        let mut f0 = f(t0);
        let mut t = h;
        while t <= reach + h {
            let f1 = f(t);
            if f0.signum() != f1.signum() && f0.is_finite() && f1.is_finite() {
                let (mut a, mut b, mut fa) = (t0, t, f0);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    let fm = f(m);
                    if fm.signum() == fa.signum() {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                out.push(at(0.5 * (a + b)));
            }
            t0 = t;
            f0 = f1;
            t += h;
        }
        out
    }

    /// `n` low-discrepancy samples on `∂(R)_δ`.
    pub fn shell_samples(&self, delta: f64, n: usize) -> Vec<ShellSample> {
        let dim = self.dim();
        let mut out = Vec::new();
        for (param, dir) in directions(dim, n) {
            for (branch, p) in self.shell_points_on_ray(delta, &dir).into_iter().enumerate() {
                out.push(ShellSample { point: p, param, branch });
            }
        }
        out
    }

    /// Shell point for a 2D direction angle and branch, if it exists.
    pub fn shell_point_at(&self, delta: f64, angle: f64, branch: usize) -> Option<Vec<f64>> {
        let dir = [angle.cos(), angle.sin()];
        self.shell_points_on_ray(delta, &dir).into_iter().nth(branch)
    }

    /// Up to `n` low-discrepancy points inside the region. Balls start with
    /// their centre; null sets are sampled on the set itself.
    pub fn interior_samples(&self, n: usize) -> Vec<Vec<f64>> {
        let dim = self.dim();
        if let Some((c, lo, hi)) = self.radial_bounds() {
            let mut out = Vec::with_capacity(n);
            if lo == 0.0 {
                out.push(c.to_vec());
            }
            let dirs = directions(dim, n);
            let mut k = 0;
            while out.len() < n && k < n {
                let (_, dir) = &dirs[k];
                // radius distributed uniformly in area/volume
                let u = radical_inverse(k as u64 + 1, 2);
                let r = if hi == lo {
                    hi
                } else {
                    let p = dim as f64;
                    (lo.powf(p) + u * (hi.powf(p) - lo.powf(p))).powf(1.0 / p)
                };
                out.push(c.iter().zip(dir).map(|(ci, di)| ci + r * di).collect());
                k += 1;
            }
            return out;
        }
        match self {
            Region::Sublevel { .. } => {
                let a = self.anchor();
                let e = self.extent();
                let mut out = Vec::new();
                if self.contains(a) {
                    out.push(a.to_vec());
                }
                let mut k = 1u64;
                while out.len() < n && k < 64 * n as u64 {
                    let p: Vec<f64> = (0..dim)
                        .map(|i| a[i] + e * (2.0 * radical_inverse(k, PRIMES[i % PRIMES.len()]) - 1.0))
                        .collect();
                    if self.contains(&p) {
                        out.push(p);
                    }
                    k += 1;
                }
                out
            }
            Region::Union(parts) => {
                let per: Vec<Vec<Vec<f64>>> =
                    parts.iter().map(|p| p.interior_samples(n.div_ceil(parts.len()))).collect();
                let mut out = Vec::new();
                let mut i = 0;
                while out.len() < n {
                    let mut any = false;
                    for s in &per {
                        if let Some(p) = s.get(i) {
                            if out.len() < n {
                                out.push(p.clone());
                            }
                            any = true;
                        }
                    }
                    if !any {
                        break;
                    }
                    i += 1;
                }
                out
            }
            _ => unreachable!(),
        }
    }

    pub fn describe(&self) -> String {
        let pt = |p: &[f64]| {
            let inner: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            format!("({})", inner.join(","))
        };
        match self {
            Region::Ball { center, radius } => format!("ball(center={}, radius={radius})", pt(center)),
            Region::Annulus { center, r_in, r_out } => {
                format!("annulus(center={}, r_in={r_in}, r_out={r_out})", pt(center))
            }
            Region::CircleShell { center, radius, half_width } => {
                format!("circle_shell(center={}, radius={radius}, half_width={half_width})", pt(center))
            }
            Region::Sublevel { level, description, .. } => format!("sublevel({description} <= {level})"),
            Region::Union(parts) => {
                let inner: Vec<String> = parts.iter().map(Region::describe).collect();
                format!("union[{}]", inner.join("; "))
            }
        }
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Van der Corput radical inverse of `k` in `base`.
pub fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += f * (k % base) as f64;
        k /= base;
        f *= inv;
    }
    r
}

/// `n` well-spread unit directions with a scalar parameter each (the angle in
/// 2D, the index otherwise).
pub fn directions(dim: usize, n: usize) -> Vec<(f64, Vec<f64>)> {
    match dim {
        1 => (0..n).map(|k| (k as f64, vec![if k % 2 == 0 { 1.0 } else { -1.0 }])).collect(),
        2 => (0..n)
            .map(|k| {
                let a = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                (a, vec![a.cos(), a.sin()])
            })
            .collect(),
        3 => {
            // Fibonacci sphere
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * k as f64;
                    (k as f64, vec![rho * phi.cos(), rho * phi.sin(), z])
                })
                .collect()
        }
        _ => (0..n)
            .map(|k| {
                let mut v: Vec<f64> = (0..dim)
                    .map(|i| {
                        let u1 = radical_inverse(k as u64 + 1, PRIMES[(2 * i) % PRIMES.len()]).max(1e-12);
                        let u2 = radical_inverse(k as u64 + 1, PRIMES[(2 * i + 1) % PRIMES.len()]);
                        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
                    })
                    .collect();
                let nv = norm(&v);
                v.iter_mut().for_each(|x| *x /= nv);
                (k as f64, v)
            })
            .collect(),
    }
}

pub(crate) fn fd_gradient(f: &(dyn Fn(&[f64]) -> f64 + Send + Sync), x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            p[i] = x[i] + h;
            let fp = f(&p);
            p[i] = x[i] - h;
            let fm = f(&p);
            p[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk_field() -> ScalarField {
        Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1])
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(Region::ball(vec![0.0, 0.0], -1.0).is_err());
        assert!(Region::annulus(vec![0.0, 0.0], 2.0, 1.0).is_err());
        assert!(Region::circle_shell(vec![0.0, 0.0], 1.0, -0.1).is_err());
    }

    #[test]
    fn ball_distance_and_membership() {
        let b = Region::ball(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(b.distance(&[1.5, 0.0]), 0.0);
        assert!(b.contains(&[2.0, 0.0]));
        assert!((b.distance(&[4.0, 0.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn circle_shell_is_annulus() {
        let s = Region::circle_shell(vec![0.0, 0.0], 2.0, 0.1).unwrap();
        assert!((s.distance(&[1.5, 0.0]) - 0.4).abs() < 1e-12);
        assert!((s.distance(&[0.0, 3.0]) - 0.9).abs() < 1e-12);
        assert!(s.contains(&[0.0, -2.05]));
        assert!(Region::circle_shell(vec![0.0, 0.0], 1.0, 0.0).unwrap().is_null_set());
    }

    #[test]
    fn sublevel_distance_is_first_order_exact_for_disk() {
        let r = Region::sublevel(disk_field(), 1.0, vec![0.0, 0.0], 1.0, "r^2").unwrap();
        assert_eq!(r.distance(&[0.3, 0.2]), 0.0);
        // (r^2 - 1)/(2r) at r = 1.1
        let d = r.distance(&[1.1, 0.0]);
        assert!((d - 0.21 / 2.2).abs() < 1e-8);
        let p = r.project(&[1.5, 0.0]);
        assert!(r.contains(&p) && (p[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shell_samples_sit_at_delta() {
        let regions = vec![
            Region::ball(vec![0.0, 0.0], 1.0).unwrap(),
            Region::circle_shell(vec![0.0, 0.0], 2.0, 0.05).unwrap(),
            Region::sublevel(disk_field(), 1.0, vec![0.0, 0.0], 1.0, "r^2").unwrap(),
        ];
        for r in &regions {
            let s = r.shell_samples(0.1, 16);
            assert!(!s.is_empty());
            for p in &s {
                assert!((r.distance(&p.point) - 0.1).abs() < 1e-6, "{r:?} {:?}", p.point);
            }
        }
        // circle shell has an inner and an outer branch
        assert_eq!(regions[1].shell_samples(0.1, 16).len(), 32);
    }

    #[test]
    fn union_takes_min_distance() {
        let u = Region::union(vec![
            Region::ball(vec![-1.0, 0.0], 0.0).unwrap(),
            Region::ball(vec![1.0, 0.0], 0.0).unwrap(),
        ])
        .unwrap();
        assert!((u.distance(&[0.8, 0.0]) - 0.2).abs() < 1e-12);
        assert!(u.is_null_set());
        assert_eq!(u.project(&[0.8, 0.1]), vec![1.0, 0.0]);
    }

    #[test]
    fn interior_samples_are_inside() {
        let b = Region::ball(vec![0.0, 0.0], 1.0).unwrap();
        let s = b.interior_samples(32);
        assert_eq!(s.len(), 32);
        assert_eq!(s[0], vec![0.0, 0.0]);
        assert!(s.iter().all(|p| b.contains(p)));
        let c = Region::circle_shell(vec![0.0, 0.0], 1.0, 0.0).unwrap();
        assert!(c.interior_samples(8).iter().all(|p| (norm(p) - 1.0).abs() < 1e-12));
    }
}
