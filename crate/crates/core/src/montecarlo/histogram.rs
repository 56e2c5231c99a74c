//! Occupation histograms of Euler–Maruyama runs and region masses.

use rayon::prelude::*;

use super::simulate::em_replica;
use super::SimConfig;
use crate::error::{Error, Result};
use crate::region::Region;
use crate::systems::SystemSpec;

/// Batches used for batch-means standard errors.
pub const N_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument(format!("bad box {lo:?} .. {hi:?}")));
        }
        Ok(BoxBounds { lo, hi })
    }

    /// `[-h, h]^dim`.
    pub fn symmetric(h: f64, dim: usize) -> Result<Self> {
        BoxBounds::new(vec![-h; dim], vec![h; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

#[derive(Debug, Clone)]
pub struct OccupationHistogram {
    pub bounds: BoxBounds,
    pub bins_per_axis: Vec<usize>,
    /// Row-major (last axis fastest) fraction of samples per bin.
    pub weights: Vec<f64>,
    pub out_of_box_mass: f64,
    pub config: SimConfig,
    pub replicas: u64,
    pub counts: Vec<u64>,
    pub out_of_box: u64,
    pub n_samples: u64,
    /// Per-batch bin counts (consecutive blocks of each replica's samples).
    pub batch_counts: Vec<Vec<u64>>,
    pub batch_out: Vec<u64>,
}

impl OccupationHistogram {
    pub fn n_bins(&self) -> usize {
        self.weights.len()
    }

    pub fn bin_widths(&self) -> Vec<f64> {
        (0..self.bounds.dim()).map(|j| (self.bounds.hi[j] - self.bounds.lo[j]) / self.bins_per_axis[j] as f64).collect()
    }

    /// Per-axis index of flat bin `flat`.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.bins_per_axis.len()];
        for j in (0..idx.len()).rev() {
            idx[j] = flat % self.bins_per_axis[j];
            flat /= self.bins_per_axis[j];
        }
        idx
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        let w = self.bin_widths();
        self.multi_index(flat).iter().enumerate().map(|(j, &i)| self.bounds.lo[j] + (i as f64 + 0.5) * w[j]).collect()
    }

    /// Builds a histogram from given weights (e.g. a quadrature of a density).
    pub fn from_weights(
        bounds: BoxBounds,
        bins_per_axis: Vec<usize>,
        weights: Vec<f64>,
        config: SimConfig,
    ) -> Result<Self> {
        let n: usize = bins_per_axis.iter().product();
        if weights.len() != n || bins_per_axis.len() != bounds.dim() {
            return Err(Error::InvalidArgument("weights do not match the bin layout".into()));
        }
        let total: f64 = weights.iter().sum();
        Ok(OccupationHistogram {
            bounds,
            bins_per_axis,
            out_of_box_mass: (1.0 - total).max(0.0),
            weights,
            replicas: 0,
            counts: vec![],
            out_of_box: 0,
            n_samples: config.n_samples(),
            batch_counts: vec![],
            batch_out: vec![],
            config,
        })
    }
}

struct Accumulator {
    counts: Vec<u64>,
    out: u64,
    batch_counts: Vec<Vec<u64>>,
    batch_out: Vec<u64>,
}

impl Accumulator {
    fn new(n_bins: usize) -> Self {
        Accumulator {
            counts: vec![0; n_bins],
            out: 0,
            batch_counts: vec![vec![0; n_bins]; N_BATCHES],
            batch_out: vec![0; N_BATCHES],
        }
    }
}

#[inline]
fn bin_of(x: &[f64], lo: &[f64], inv_w: &[f64], bins: &[usize]) -> Option<usize> {
    let mut flat = 0usize;
    for j in 0..x.len() {
        let t = (x[j] - lo[j]) * inv_w[j];
        if !(t >= 0.0) {
            return None;
        }
        let mut i = t as usize;
        if i >= bins[j] {
            // the upper face belongs to the last bin
            if t == bins[j] as f64 {
                i = bins[j] - 1;
            } else {
                return None;
            }
        }
        flat = flat * bins[j] + i;
    }
    Some(flat)
}

fn run_replica(
    spec: &SystemSpec,
    config: &SimConfig,
    bounds: &BoxBounds,
    bins: &[usize],
    replica: u64,
) -> Result<Accumulator> {
    let n_bins: usize = bins.iter().product();
    let inv_w: Vec<f64> = (0..bins.len()).map(|j| bins[j] as f64 / (bounds.hi[j] - bounds.lo[j])).collect();
    let mut acc = Accumulator::new(n_bins);
    let n_samples = config.n_samples();
    let mut stream = em_replica(spec, config, replica)?;
    let record = |k: u64, x: &[f64], acc: &mut Accumulator| {
        if k < config.burn_in {
            return;
        }
        let j = k - config.burn_in;
        let batch = ((j as u128 * N_BATCHES as u128) / n_samples as u128) as usize;
        match bin_of(x, &bounds.lo, &inv_w, bins) {
            Some(b) => {
                acc.counts[b] += 1;
                acc.batch_counts[batch][b] += 1;
            }
            None => {
                acc.out += 1;
                acc.batch_out[batch] += 1;
            }
        }
    };
    record(0, &config.x0, &mut acc);
    for k in 1..config.n_steps {
        let x = stream.advance()?;
        record(k, x, &mut acc);
    }
    Ok(acc)
}

/// Fraction of post-burn-in states `X_k`, `burn_in ≤ k < n_steps`, per bin.
pub fn occupation_histogram(
    spec: &SystemSpec,
    config: &SimConfig,
    bounds: &BoxBounds,
    bins_per_axis: &[usize],
) -> Result<OccupationHistogram> {
    occupation_histogram_replicas(spec, config, bounds, bins_per_axis, 1)
}

/// Pools `replicas` independent runs (noise streams `0..replicas`), merged in
/// replica order.
pub fn occupation_histogram_replicas(
    spec: &SystemSpec,
    config: &SimConfig,
    bounds: &BoxBounds,
    bins_per_axis: &[usize],
    replicas: u64,
) -> Result<OccupationHistogram> {
    config.validate(spec)?;
    if bounds.dim() != spec.dim || bins_per_axis.len() != spec.dim || bins_per_axis.contains(&0) || replicas == 0 {
        return Err(Error::InvalidArgument("box, bins and replicas must match the system".into()));
    }
    let parts: Vec<Result<Accumulator>> =
        (0..replicas).into_par_iter().map(|r| run_replica(spec, config, bounds, bins_per_axis, r)).collect();
    let n_bins: usize = bins_per_axis.iter().product();
    let mut total = Accumulator::new(n_bins);
    for p in parts {
        let p = p?;
        for (t, c) in total.counts.iter_mut().zip(&p.counts) {
            *t += c;
        }
        for (tb, pb) in total.batch_counts.iter_mut().zip(&p.batch_counts) {
            for (t, c) in tb.iter_mut().zip(pb) {
                *t += c;
            }
        }
        total.out += p.out;
        for (t, c) in total.batch_out.iter_mut().zip(&p.batch_out) {
            *t += c;
        }
    }
    let n = config.n_samples() * replicas;
    let weights = total.counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(OccupationHistogram {
        bounds: bounds.clone(),
        bins_per_axis: bins_per_axis.to_vec(),
        weights,
        out_of_box_mass: total.out as f64 / n as f64,
        config: config.clone(),
        replicas,
        counts: total.counts,
        out_of_box: total.out,
        n_samples: n,
        batch_counts: total.batch_counts,
        batch_out: total.batch_out,
    })
}

fn member_bins(hist: &OccupationHistogram, region: &Region) -> Vec<usize> {
    (0..hist.n_bins()).filter(|&b| region.contains(&hist.center(b))).collect()
}

/// Total weight of bins whose centres lie in `region`.
pub fn region_mass(hist: &OccupationHistogram, region: &Region) -> f64 {
    member_bins(hist, region).iter().map(|&b| hist.weights[b]).sum()
}

/// Region mass with a batch-means standard error over [`N_BATCHES`] batches.
pub fn region_mass_with_error(hist: &OccupationHistogram, region: &Region) -> (f64, f64) {
    let bins = member_bins(hist, region);
    let mass: f64 = bins.iter().map(|&b| hist.weights[b]).sum();
    if hist.batch_counts.is_empty() {
        return (mass, f64::NAN);
    }
    let per_batch: Vec<f64> = hist
        .batch_counts
        .iter()
        .zip(&hist.batch_out)
        .map(|(bc, out)| {
            let size = bc.iter().sum::<u64>() + out;
            let inside: u64 = bins.iter().map(|&b| bc[b]).sum();
            inside as f64 / size.max(1) as f64
        })
        .collect();
    let k = per_batch.len() as f64;
    let mean = per_batch.iter().sum::<f64>() / k;
    let var = per_batch.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mass, (var / k).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::corpus_system;

    #[test]
    fn bin_edges() {
        let lo = [0.0, 0.0];
        let inv = [2.0, 2.0];
        let bins = [2, 2];
        assert_eq!(bin_of(&[0.0, 0.0], &lo, &inv, &bins), Some(0));
        assert_eq!(bin_of(&[1.0, 1.0], &lo, &inv, &bins), Some(3));
        assert_eq!(bin_of(&[0.6, 0.1], &lo, &inv, &bins), Some(2));
        assert_eq!(bin_of(&[1.0001, 0.1], &lo, &inv, &bins), None);
        assert_eq!(bin_of(&[-1e-12, 0.1], &lo, &inv, &bins), None);
    }

    #[test]
    fn normalization_and_whole_box() {
        let s = corpus_system("prnot").unwrap();
        let cfg = SimConfig::new(0.5, 1e-3, 20_000, 3, vec![0.0, 0.0]);
        let b = BoxBounds::symmetric(0.5, 2).unwrap();
        let h = occupation_histogram(&s, &cfg, &b, &[10, 10]).unwrap();
        let total: f64 = h.weights.iter().sum::<f64>() + h.out_of_box_mass;
        assert!((total - 1.0).abs() < 1e-12);
        assert!(h.out_of_box_mass > 0.0);
        let whole = Region::ball(vec![0.0, 0.0], 10.0).unwrap();
        assert!((region_mass(&h, &whole) - (1.0 - h.out_of_box_mass)).abs() < 1e-12);
        let far = Region::ball(vec![5.0, 5.0], 0.1).unwrap();
        assert_eq!(region_mass(&h, &far), 0.0);
        assert_eq!(h.multi_index(37), vec![3, 7]);
        let c = h.center(37);
        assert!((c[0] + 0.15).abs() < 1e-12 && (c[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn replicas_pool_counts() {
        let s = corpus_system("gradient_dw2").unwrap();
        let cfg = SimConfig::new(0.3, 1e-3, 5_000, 9, vec![0.0, 0.0]);
        let b = BoxBounds::symmetric(1.5, 2).unwrap();
        let one = occupation_histogram(&s, &cfg, &b, &[8, 8]).unwrap();
        let two = occupation_histogram_replicas(&s, &cfg, &b, &[8, 8], 2).unwrap();
        assert_eq!(two.n_samples, 2 * one.n_samples);
        for (a, c) in one.counts.iter().zip(&two.counts) {
            assert!(c >= a);
        }
    }
}
