//! Comparison of a histogram with a density `∝ exp(-2U/ε²)` on its box.

use super::histogram::{BoxBounds, OccupationHistogram};
use super::scan::linear_fit;
use super::SimConfig;
use crate::error::Result;
use crate::region::ScalarField;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityComparison {
    pub tv_distance: f64,
    pub log_slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub bins_used: usize,
}

const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// `log ∫_bin exp(-2U/ε²)` (up to a common constant) for every bin, by a
/// tensor 3-point Gauss–Legendre rule.
fn log_bin_integrals(
    bins: &[usize],
    widths: &[f64],
    centers: impl Iterator<Item = Vec<f64>>,
    u: &ScalarField,
    eps: f64,
) -> Vec<f64> {
    let dim = bins.len();
    let npts = 3usize.pow(dim as u32);
    let beta = 2.0 / (eps * eps);
    centers
        .map(|c| {
            let mut logs = Vec::with_capacity(npts);
            for q in 0..npts {
                let mut p = c.clone();
                let mut w = 1.0;
                let mut r = q;
                for j in 0..dim {
                    let k = r % 3;
                    r /= 3;
                    p[j] += 0.5 * widths[j] * GL3_NODES[k];
                    w *= GL3_WEIGHTS[k];
                }
                logs.push(w.ln() - beta * u(&p));
            }
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
        })
        .collect()
}

fn normalized(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Histogram of the density `C(ε) exp(-2U/ε²)` normalized over the box, by
/// per-bin quadrature. Its nominal sample count is effectively infinite.
pub fn density_histogram(
    bounds: &BoxBounds,
    bins_per_axis: &[usize],
    u: &ScalarField,
    eps: f64,
) -> Result<OccupationHistogram> {
    let n: usize = bins_per_axis.iter().product();
    let cfg = SimConfig { epsilon: eps, dt: 0.0, n_steps: 1 << 53, burn_in: 0, seed: 0, x0: vec![0.0; bounds.dim()] };
    let template =
        OccupationHistogram::from_weights(bounds.clone(), bins_per_axis.to_vec(), vec![0.0; n], cfg.clone())?;
    let widths = template.bin_widths();
    let logs = log_bin_integrals(bins_per_axis, &widths, (0..n).map(|b| template.center(b)), u, eps);
    OccupationHistogram::from_weights(bounds.clone(), bins_per_axis.to_vec(), normalized(&logs), cfg)
}

/// Total-variation distance `½Σ|w - q|` to the quadrature `q` of the
/// normalized density, and the regression of `log w` on the bin-averaged
/// potential `Ū = -(ε²/2) log(mean of exp(-2U/ε²) over the bin)` for bins
/// with weight above `10/N`. The expected slope is `-2/ε²`.
pub fn compare_to_density(hist: &OccupationHistogram, u: &ScalarField, eps: f64) -> DensityComparison {
    let n = hist.n_bins();
    let widths = hist.bin_widths();
    let logs = log_bin_integrals(&hist.bins_per_axis, &widths, (0..n).map(|b| hist.center(b)), u, eps);
    let q = normalized(&logs);
    let tv = 0.5 * hist.weights.iter().zip(&q).map(|(w, p)| (w - p).abs()).sum::<f64>();
    let threshold = 10.0 / hist.n_samples.max(1) as f64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    // GL weights sum to 1 per axis, so logs are log-means of exp(-2U/ε²)
    for (w, l) in hist.weights.iter().zip(&logs) {
        if *w > threshold {
            xs.push(-0.5 * eps * eps * l);
            ys.push(w.ln());
        }
    }
    let (log_slope, intercept, r_squared) =
        if xs.len() >= 2 { linear_fit(&xs, &ys) } else { (f64::NAN, f64::NAN, f64::NAN) };
    DensityComparison { tv_distance: tv, log_slope, intercept, r_squared, bins_used: xs.len() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::corpus::prnot_potential;
    use std::sync::Arc;

    #[test]
    fn self_comparison_is_exact() {
        let u: ScalarField = Arc::new(prnot_potential);
        let b = BoxBounds::symmetric(2.0, 2).unwrap();
        let h = density_histogram(&b, &[40, 40], &u, 0.5).unwrap();
        assert!((h.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let c = compare_to_density(&h, &u, 0.5);
        assert_eq!(c.tv_distance, 0.0);
        assert!((c.log_slope + 8.0).abs() < 1e-9, "{}", c.log_slope);
        assert!(c.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn flat_potential_is_uniform() {
        let u: ScalarField = Arc::new(|_: &[f64]| 0.0);
        let b = BoxBounds::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]).unwrap();
        let h = density_histogram(&b, &[2, 3, 4], &u, 0.3).unwrap();
        assert!(h.weights.iter().all(|w| (w - 1.0 / 24.0).abs() < 1e-15));
    }
}
