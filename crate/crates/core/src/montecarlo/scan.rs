//! Concentration decay: region masses across noise levels and the fit
//! `log m = c - κ̂/ε²`.

use rayon::prelude::*;

use super::histogram::{occupation_histogram_replicas, region_mass, BoxBounds};
use super::rng::derive_seed;
use super::SimConfig;
use crate::error::{Error, Result};
use crate::region::Region;
use crate::systems::SystemSpec;

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub dt: f64,
    pub n_steps: u64,
    /// Per-ε override of `n_steps` (same order as the ε list).
    pub n_steps_per_epsilon: Option<Vec<u64>>,
    /// Fraction of each run discarded.
    pub burn_in_fraction: f64,
    pub master_seed: u64,
    pub bounds: BoxBounds,
    pub bins_per_axis: Vec<usize>,
    pub x0: Vec<f64>,
    pub replicas: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub epsilons: Vec<f64>,
    pub masses: Vec<f64>,
    pub log_masses: Vec<f64>,
    /// Zero-count cells replaced by one pseudo-count.
    pub floored: Vec<bool>,
    pub kappa_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl DecayFit {
    /// Any floored cell makes the fit lower-confidence.
    pub fn low_confidence(&self) -> bool {
        self.floored.iter().any(|&f| f)
    }
}

/// Least squares of `log m` on `1/ε²`; `κ̂` is minus the slope. Zero masses
/// get one pseudo-count out of `n_samples[i]`.
pub fn fit_decay(epsilons: &[f64], masses: &[f64], n_samples: &[u64]) -> Result<DecayFit> {
    if epsilons.len() < 3 || epsilons.len() != masses.len() || masses.len() != n_samples.len() {
        return Err(Error::InvalidArgument("decay fit needs at least three matching (ε, mass) pairs".into()));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("noise levels must be positive".into()));
    }
    let floored: Vec<bool> = masses.iter().map(|&m| m <= 0.0).collect();
    let used: Vec<f64> =
        masses.iter().zip(n_samples).map(|(&m, &n)| if m > 0.0 { m } else { 1.0 / n.max(1) as f64 }).collect();
    let x: Vec<f64> = epsilons.iter().map(|e| 1.0 / (e * e)).collect();
    let y: Vec<f64> = used.iter().map(|m| m.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&x, &y);
    Ok(DecayFit {
        epsilons: epsilons.to_vec(),
        masses: used,
        log_masses: y,
        floored,
        kappa_hat: -slope,
        intercept,
        r_squared: r2,
    })
}

/// Ordinary least squares `y = a x + c`: `(a, c, R²)`. A constant `y` has R² = 1.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// Region mass per noise level (seeds derived from the master seed by index)
/// and the decay fit across them.
pub fn concentration_scan(
    spec: &SystemSpec,
    region: &Region,
    epsilons: &[f64],
    opts: &ScanOptions,
) -> Result<DecayFit> {
    if epsilons.len() < 3 || epsilons.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("need at least three positive noise levels".into()));
    }
    if let Some(v) = &opts.n_steps_per_epsilon {
        if v.len() != epsilons.len() {
            return Err(Error::InvalidArgument("per-ε step counts do not match the ε list".into()));
        }
    }
    let runs: Vec<Result<(f64, u64)>> = epsilons
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let n_steps = opts.n_steps_per_epsilon.as_ref().map_or(opts.n_steps, |v| v[i]);
            let burn = (n_steps as f64 * opts.burn_in_fraction) as u64;
            let cfg = SimConfig::new(eps, opts.dt, n_steps, derive_seed(opts.master_seed, i as u64), opts.x0.clone())
                .with_burn_in(burn);
            let h = occupation_histogram_replicas(spec, &cfg, &opts.bounds, &opts.bins_per_axis, opts.replicas)
                .map_err(|e| Error::Scan { epsilon: eps, source: Box::new(e) })?;
            Ok((region_mass(&h, region), h.n_samples))
        })
        .collect();
    let mut masses = Vec::new();
    let mut counts = Vec::new();
    for r in runs {
        let (m, n) = r?;
        masses.push(m);
        counts.push(n);
    }
    fit_decay(epsilons, &masses, &counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_is_recovered() {
        let eps = [0.5, 0.4, 0.3];
        let m: Vec<f64> = eps.iter().map(|e: &f64| 2.0 * (-0.7 / (e * e)).exp()).collect();
        let f = fit_decay(&eps, &m, &[1000; 3]).unwrap();
        assert!((f.kappa_hat - 0.7).abs() < 1e-12);
        assert!((f.intercept - 2f64.ln()).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(!f.low_confidence());
    }

    #[test]
    fn zero_mass_is_floored_and_flagged() {
        let f = fit_decay(&[0.5, 0.4, 0.3], &[0.1, 0.01, 0.0], &[100, 100, 1000]).unwrap();
        assert!(f.floored[2] && f.low_confidence());
        assert!((f.masses[2] - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn too_few_levels() {
        assert!(fit_decay(&[0.5, 0.4], &[0.1, 0.01], &[1, 1]).is_err());
    }
}
