//! Euler–Maruyama for `dX = b dt + εσ dw`, `σ` the symmetric root of `a`.

use nalgebra::{DMatrix, DVector};

use super::rng::NormalStream;
use super::SimConfig;
use crate::error::{Error, Result};
use crate::linalg::sym_sqrt;
use crate::systems::{Diffusion, SystemSpec};

/// Stepper yielding `X_1, X_2, …` after `X_0 = x0`.
pub struct EmStream<'a> {
    spec: &'a SystemSpec,
    eps_sqrt_dt: f64,
    dt: f64,
    x: Vec<f64>,
    b: Vec<f64>,
    xi: Vec<f64>,
    noise: Option<NormalStream>,
    step: u64,
}

impl<'a> EmStream<'a> {
    pub fn current(&self) -> &[f64] {
        &self.x
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// Advances one step; escaping the safe radius is an error.
    #[inline]
    pub fn advance(&mut self) -> Result<&[f64]> {
        let d = self.x.len();
        self.spec.drift_into(&self.x, &mut self.b);
        match &mut self.noise {
            None => {
                for i in 0..d {
                    self.x[i] += self.b[i] * self.dt;
                }
            }
            Some(rng) => {
                rng.fill(&mut self.xi);
                match &self.spec.diffusion {
                    Diffusion::Identity => {
                        for i in 0..d {
                            self.x[i] += self.b[i] * self.dt + self.eps_sqrt_dt * self.xi[i];
                        }
                    }
                    Diffusion::Constant { sigma, .. } => {
                        apply(&mut self.x, &self.b, sigma, &self.xi, self.dt, self.eps_sqrt_dt)
                    }
                    Diffusion::Field(f) => {
                        let sigma = sym_sqrt(&f(&self.x));
                        apply(&mut self.x, &self.b, &sigma, &self.xi, self.dt, self.eps_sqrt_dt);
                    }
                }
            }
        }
        self.step += 1;
        let r2: f64 = self.x.iter().map(|v| v * v).sum();
        if !(r2 <= self.spec.safe_radius * self.spec.safe_radius) {
            return Err(Error::SimulationEscape { step: self.step, radius: self.spec.safe_radius });
        }
        Ok(&self.x)
    }
}

fn apply(x: &mut [f64], b: &[f64], sigma: &DMatrix<f64>, xi: &[f64], dt: f64, scale: f64) {
    let n = sigma * DVector::from_column_slice(xi);
    for i in 0..x.len() {
        x[i] += b[i] * dt + scale * n[i];
    }
}

/// Starts an Euler–Maruyama stream for replica 0.
pub fn em_simulate<'a>(spec: &'a SystemSpec, config: &SimConfig) -> Result<EmStream<'a>> {
    em_replica(spec, config, 0)
}

/// Stream `replica` of the configuration (independent noise, same `x0`).
pub fn em_replica<'a>(spec: &'a SystemSpec, config: &SimConfig, replica: u64) -> Result<EmStream<'a>> {
    config.validate(spec)?;
    let noise = (config.epsilon > 0.0).then(|| NormalStream::new(config.seed, replica, spec.dim));
    Ok(EmStream {
        spec,
        eps_sqrt_dt: config.epsilon * config.dt.sqrt(),
        dt: config.dt,
        x: config.x0.clone(),
        b: vec![0.0; spec.dim],
        xi: vec![0.0; spec.dim],
        noise,
        step: 0,
    })
}

/// `X_0, …, X_{n_steps}` collected in memory (for short runs).
pub fn em_path(spec: &SystemSpec, config: &SimConfig) -> Result<Vec<Vec<f64>>> {
    let mut s = em_simulate(spec, config)?;
    let mut out = Vec::with_capacity(config.n_steps as usize + 1);
    out.push(config.x0.clone());
    for _ in 0..config.n_steps {
        out.push(s.advance()?.to_vec());
    }
    Ok(out)
}
