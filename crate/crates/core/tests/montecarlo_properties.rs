use std::sync::Arc;

use limset::flow::integrate_euler;
use limset::montecarlo::{
    concentration_scan, density_histogram, em_path, occupation_histogram, region_mass, region_mass_with_error,
    BoxBounds, ScanOptions, SimConfig,
};
use limset::region::{Region, ScalarField};
use limset::systems::corpus::{prnot_potential, twoco_cycle_shell};
use limset::systems::{corpus_system, SystemSpec};

fn ou() -> SystemSpec {
    SystemSpec::new(
        "ou",
        2,
        Arc::new(|x: &[f64], out: &mut [f64]| {
            out[0] = -x[0];
            out[1] = -x[1];
        }),
        50.0,
    )
}

#[test]
fn ornstein_uhlenbeck_variance() {
    let s = ou();
    let cfg = SimConfig::new(1.0, 1e-3, 10_000_000, 17, vec![0.0, 0.0]);
    let mut stream = limset::montecarlo::em_simulate(&s, &cfg).unwrap();
    let (mut sum, mut sq) = ([0.0; 2], [0.0; 2]);
    let mut n = 0.0;
    for k in 0..cfg.n_steps {
        let x = stream.advance().unwrap();
        if k >= cfg.burn_in {
            for i in 0..2 {
                sum[i] += x[i];
                sq[i] += x[i] * x[i];
            }
            n += 1.0;
        }
    }
    for i in 0..2 {
        let var = sq[i] / n - (sum[i] / n).powi(2);
        assert!((var - 0.5).abs() <= 0.05 * 0.5, "axis {i}: {var}");
    }
}

#[test]
fn zero_noise_is_explicit_euler_bitwise() {
    for name in ["closed_orbit_v1", "prnot", "twoco", "kifer"] {
        let s = corpus_system(name).unwrap();
        let x0 = s.metadata.default_start.clone();
        let x0 = if x0.iter().all(|v| *v == 0.0) { vec![0.3; s.dim] } else { x0 };
        let em = em_path(&s, &SimConfig::new(0.0, 1e-3, 5000, 9, x0.clone())).unwrap();
        let euler = integrate_euler(&s, &x0, 1e-3, 5000).unwrap();
        assert_eq!(em, euler.states, "{name}");
    }
}

#[test]
fn fixed_seed_reproduces_paths_and_histograms() {
    let s = corpus_system("prnot").unwrap();
    let cfg = SimConfig::new(0.5, 1e-3, 1000, 42, vec![0.1, 0.0]);
    assert_eq!(em_path(&s, &cfg).unwrap(), em_path(&s, &cfg).unwrap());
    let other = SimConfig { seed: 43, ..cfg.clone() };
    assert_ne!(em_path(&s, &cfg).unwrap(), em_path(&s, &other).unwrap());
    let cfg = SimConfig::new(0.5, 1e-3, 200_000, 42, vec![0.1, 0.0]);
    let b = BoxBounds::symmetric(2.0, 2).unwrap();
    let h1 = occupation_histogram(&s, &cfg, &b, &[40, 40]).unwrap();
    let h2 = occupation_histogram(&s, &cfg, &b, &[40, 40]).unwrap();
    assert_eq!(h1.weights, h2.weights);
    assert_eq!(h1.out_of_box_mass, h2.out_of_box_mass);
}

#[test]
fn disjoint_seeds_agree_within_three_standard_errors() {
    let s = corpus_system("prnot").unwrap();
    let b = BoxBounds::symmetric(2.0, 2).unwrap();
    let ball = Region::ball(vec![0.0, 0.0], 0.3).unwrap();
    let run = |seed| {
        let h = occupation_histogram(&s, &SimConfig::new(0.5, 1e-3, 4_000_000, seed, vec![0.0, 0.0]), &b, &[80, 80])
            .unwrap();
        region_mass_with_error(&h, &ball)
    };
    let ((m1, e1), (m2, e2)) = (run(1), run(2));
    assert!((m1 - m2).abs() <= 3.0 * e1.hypot(e2), "{m1}±{e1} vs {m2}±{e2}");
}

#[test]
fn ball_mass_matches_exact_density() {
    let s = corpus_system("prnot").unwrap();
    let b = BoxBounds::symmetric(2.0, 2).unwrap();
    let ball = Region::ball(vec![0.0, 0.0], 0.3).unwrap();
    let h = occupation_histogram(&s, &SimConfig::new(0.5, 1e-3, 4_000_000, 8, vec![0.0, 0.0]), &b, &[80, 80]).unwrap();
    let u: ScalarField = Arc::new(prnot_potential);
    let exact = region_mass(&density_histogram(&b, &[80, 80], &u, 0.5).unwrap(), &ball);
    let got = region_mass(&h, &ball);
    assert!((got - exact).abs() <= 0.25 * exact, "{got} vs {exact}");
}

#[test]
fn whole_box_and_disjoint_region_masses() {
    let s = corpus_system("prnot").unwrap();
    let h = occupation_histogram(
        &s,
        &SimConfig::new(0.6, 1e-3, 200_000, 3, vec![0.0, 0.0]),
        &BoxBounds::symmetric(1.0, 2).unwrap(),
        &[20, 20],
    )
    .unwrap();
    let whole = Region::ball(vec![0.0, 0.0], 10.0).unwrap();
    assert!((region_mass(&h, &whole) - (1.0 - h.out_of_box_mass)).abs() < 1e-12);
    assert!(h.out_of_box_mass > 0.0);
    assert_eq!(region_mass(&h, &Region::ball(vec![5.0, 5.0], 0.5).unwrap()), 0.0);
}

#[test]
fn zero_noise_mass_sits_on_the_attractor() {
    let s = corpus_system("closed_orbit_v1").unwrap();
    let cfg = SimConfig::new(0.0, 1e-3, 200_000, 0, vec![3.0, 0.0]).with_burn_in(100_000);
    let h = occupation_histogram(&s, &cfg, &BoxBounds::symmetric(3.0, 2).unwrap(), &[60, 60]).unwrap();
    let diag = h.bin_widths().iter().map(|w| w * w).sum::<f64>().sqrt();
    let circle = Region::circle_shell(vec![0.0, 0.0], 2.0, 0.0).unwrap();
    let near: f64 = (0..h.n_bins())
        .filter(|&b| circle.distance(&h.center(b)) <= 2.0 * diag + 0.5 * diag)
        .map(|b| h.weights[b])
        .sum();
    assert!((near - 1.0).abs() < 1e-12, "{near}");
}

#[test]
fn twoco_cycles_carry_equal_mass() {
    let s = corpus_system("twoco").unwrap();
    let h = occupation_histogram(
        &s,
        &SimConfig::new(0.2, 1e-3, 10_000_000, 6, vec![1.3, 0.0]),
        &BoxBounds::symmetric(2.5, 2).unwrap(),
        &[100, 100],
    )
    .unwrap();
    let (p, ep) = region_mass_with_error(&h, &twoco_cycle_shell(1.0, 0.25));
    let (m, em) = region_mass_with_error(&h, &twoco_cycle_shell(-1.0, 0.25));
    assert!((p - m).abs() <= 3.0 * ep.hypot(em), "{p}±{ep} vs {m}±{em}");
}

fn closed_orbit_scan(region: &Region, epsilons: &[f64]) -> limset::montecarlo::DecayFit {
    let s = corpus_system("closed_orbit_v1").unwrap();
    let opts = ScanOptions {
        dt: 1e-3,
        n_steps: 10_000_000,
        n_steps_per_epsilon: None,
        burn_in_fraction: 0.05,
        master_seed: 2024,
        bounds: BoxBounds::symmetric(3.0, 2).unwrap(),
        bins_per_axis: vec![120, 120],
        x0: vec![2.0, 0.0],
        replicas: 1,
    };
    concentration_scan(&s, region, epsilons, &opts).unwrap()
}

#[test]
fn repelling_disk_mass_decays() {
    let f = closed_orbit_scan(&Region::ball(vec![0.0, 0.0], 0.3).unwrap(), &[0.9, 0.8, 0.7, 0.6]);
    assert!(f.kappa_hat > 0.0 && f.r_squared >= 0.8, "{f:?}");
}

#[test]
fn attractor_neighborhood_mass_does_not_decay() {
    let f = closed_orbit_scan(&Region::annulus(vec![0.0, 0.0], 1.7, 2.3).unwrap(), &[0.3, 0.25, 0.2, 0.15]);
    assert!(f.kappa_hat.abs() <= 0.05, "{f:?}");
}
