//! Small-noise simulation and stationary-measure estimation.

mod density;
mod histogram;
pub mod rng;
mod scan;
mod simulate;

pub use density::{compare_to_density, density_histogram, DensityComparison};
pub use histogram::{
    occupation_histogram, occupation_histogram_replicas, region_mass, region_mass_with_error, BoxBounds,
    OccupationHistogram, N_BATCHES,
};
pub use scan::{concentration_scan, fit_decay, DecayFit, ScanOptions};
pub use simulate::{em_path, em_replica, em_simulate, EmStream};

use crate::error::{Error, Result};
use crate::systems::SystemSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub n_steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    pub x0: Vec<f64>,
}

impl SimConfig {
    /// Burn-in defaults to 5% of the run.
    pub fn new(epsilon: f64, dt: f64, n_steps: u64, seed: u64, x0: Vec<f64>) -> Self {
        SimConfig { epsilon, dt, n_steps, burn_in: n_steps / 20, seed, x0 }
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self, spec: &SystemSpec) -> Result<()> {
        if !(self.dt > 0.0) || !(self.epsilon >= 0.0) || self.n_steps <= self.burn_in {
            return Err(Error::InvalidArgument(format!(
                "need dt > 0, epsilon ≥ 0 and n_steps > burn_in (dt={}, epsilon={}, n_steps={}, burn_in={})",
                self.dt, self.epsilon, self.n_steps, self.burn_in
            )));
        }
        if self.x0.len() != spec.dim {
            return Err(Error::Dimension { expected: spec.dim, got: self.x0.len() });
        }
        if !spec.in_safe_region(&self.x0) {
            return Err(Error::SafeRadiusEscape { time: 0.0, point: self.x0.clone(), radius: spec.safe_radius });
        }
        Ok(())
    }

    /// Number of post-burn-in samples `X_k`, `burn_in ≤ k < n_steps`.
    pub fn n_samples(&self) -> u64 {
        self.n_steps - self.burn_in
    }
}
