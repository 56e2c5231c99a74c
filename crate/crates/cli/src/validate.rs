//! Machine-checked validation rows with named tolerances. Which checks exist
//! depends on what the catalog knows about the system.

use anyhow::Result;
use limset::flow::classify_region;
use limset::montecarlo::{
    compare_to_density, concentration_scan, density_histogram, fit_decay, occupation_histogram, region_mass, BoxBounds,
    ScanOptions, SimConfig,
};
use limset::quasipotential::{
    minimize_action, pr_probe, shell_quasipotential, MinimizeOptions, ProbeCase, ProbeOptions, ShellDirection,
    ShellOptions, DEFAULT_SEGMENTS, DEFAULT_T_GRID,
};
use limset::region::Region;
use limset::systems::corpus::twoco_cycle_shell;
use limset::systems::{RegionLabel, SystemSpec};

use crate::config::Resolved;

pub struct Check {
    pub check: &'static str,
    pub quantity: String,
    pub measured: String,
    pub target: String,
    pub pass: bool,
}

fn row(check: &'static str, quantity: &str, measured: f64, target: &str, pass: bool) -> Check {
    Check { check, quantity: quantity.into(), measured: measured.to_string(), target: target.into(), pass }
}

fn near(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs()
}

fn classifiable(spec: &SystemSpec) -> bool {
    spec.metadata
        .invariant_regions
        .iter()
        .any(|r| r.probe.is_some() && matches!(r.label, RegionLabel::Attractor | RegionLabel::Repeller))
}

pub fn checks_for(spec: &SystemSpec) -> Vec<&'static str> {
    let mut v = Vec::new();
    if classifiable(spec) {
        v.push("classify");
    }
    match spec.name.as_str() {
        "prnot" => v.extend(["density", "quasipotential", "shell", "decay", "probe"]),
        "closed_orbit_v1" => v.extend(["concentration", "probe"]),
        "twoco" | "gradient_dw2" => v.push("symmetry"),
        _ => {}
    }
    v
}

pub fn run(r: &Resolved) -> Result<Vec<Check>> {
    let p = r.config.validate.as_ref().expect("resolved");
    let spec = r.spec();
    let scale = p.steps_scale.unwrap();
    let steps = |n: u64| ((n as f64 * scale).round() as u64).max(1000);
    let o = vec![0.0; spec.dim];
    let mut out = Vec::new();
    for name in p.checks.as_deref().unwrap_or_default() {
        match (name.as_str(), spec.name.as_str()) {
            ("classify", _) => {
                for l in &spec.metadata.invariant_regions {
                    let (Some(h), true) = (l.probe, matches!(l.label, RegionLabel::Attractor | RegionLabel::Repeller))
                    else {
                        continue;
                    };
                    let c = classify_region(spec, &l.region, h.shell_delta, 64, h.escape_time, h.dt)?;
                    out.push(Check {
                        check: "classify",
                        quantity: format!("label of {}", l.name),
                        measured: c.label.as_str().into(),
                        target: l.label.as_str().into(),
                        pass: c.label.as_str() == l.label.as_str(),
                    });
                }
            }
            ("density", _) => {
                let u = spec.metadata.exact_density_potential.clone().expect("density check needs a potential");
                let n = steps(20_000_000);
                let cfg = SimConfig::new(0.5, 1e-3, n + n / 20, r.seed, o.clone()).with_burn_in(n / 20);
                let h = occupation_histogram(spec, &cfg, &BoxBounds::symmetric(2.0, 2)?, &[80, 80])?;
                let c = compare_to_density(&h, &u, 0.5);
                out.push(row("density", "tv_distance", c.tv_distance, "<= 0.15", c.tv_distance <= 0.15));
                out.push(row("density", "log_slope", c.log_slope, "-8 +-10%", near(c.log_slope, -8.0, 0.1)));
                out.push(row("density", "r_squared", c.r_squared, ">= 0.95", c.r_squared >= 0.95));
            }
            ("quasipotential", _) => {
                let opts = MinimizeOptions::default();
                for (y, want, label) in [(1.0, 5.0 / 6.0, "5/6"), (2f64.sqrt(), 2.0 / 3.0, "2/3")] {
                    let v = minimize_action(spec, &o, &[y, 0.0], DEFAULT_SEGMENTS, &DEFAULT_T_GRID, &opts)?.value;
                    out.push(row(
                        "quasipotential",
                        &format!("V(O,({y},0))"),
                        v,
                        &format!("{label} +-10%"),
                        near(v, want, 0.1),
                    ));
                }
            }
            ("shell", _) => {
                let disk = Region::ball(o.clone(), 1.0)?;
                let opts = ShellOptions::default();
                let inward = shell_quasipotential(spec, &disk, 0.2, 0.1, 32, ShellDirection::Inward, &opts)?.value;
                let outward = shell_quasipotential(spec, &disk, 0.2, 0.1, 32, ShellDirection::Outward, &opts)?.value;
                out.push(row("shell", "inward r=1.2 -> 1.1", inward, "0.0494 +-20%", near(inward, 0.0494, 0.2)));
                out.push(row("shell", "outward r=1.1 -> 1.2", outward, "<= 1e-3", outward <= 1e-3));
            }
            ("decay", _) => {
                let u = spec.metadata.exact_density_potential.clone().expect("decay check needs a potential");
                let eps = p.epsilons.clone().unwrap();
                let shell = Region::circle_shell(o.clone(), 2f64.sqrt(), 0.1)?;
                let bounds = BoxBounds::symmetric(2.0, 2)?;
                let bins = vec![200, 200];
                let opts = ScanOptions {
                    dt: 1e-3,
                    n_steps: steps(50_000_000),
                    n_steps_per_epsilon: None,
                    burn_in_fraction: 0.05,
                    master_seed: r.seed,
                    bounds: bounds.clone(),
                    bins_per_axis: bins.clone(),
                    x0: o.clone(),
                    replicas: 1,
                };
                let fit = concentration_scan(spec, &shell, &eps, &opts)?;
                let exact: Vec<f64> = eps
                    .iter()
                    .map(|&e| density_histogram(&bounds, &bins, &u, e).map(|h| region_mass(&h, &shell)))
                    .collect::<limset::Result<_>>()?;
                let exact_fit = fit_decay(&eps, &exact, &vec![u64::MAX; eps.len()])?;
                let k = fit.kappa_hat;
                out.push(row("decay", "kappa_hat", k, "[0.45, 0.75]", (0.45..=0.75).contains(&k)));
                out.push(row("decay", "r_squared", fit.r_squared, ">= 0.9", fit.r_squared >= 0.9));
                out.push(row(
                    "decay",
                    "kappa_hat - exact-density kappa",
                    k - exact_fit.kappa_hat,
                    "|.| <= 0.05",
                    (k - exact_fit.kappa_hat).abs() <= 0.05,
                ));
            }
            ("concentration", _) => {
                let cfg = SimConfig::new(0.15, 1e-3, steps(20_000_000), r.seed, vec![2.0, 0.0]);
                let h = occupation_histogram(spec, &cfg, &BoxBounds::symmetric(3.0, 2)?, &[120, 120])?;
                let ring = region_mass(&h, &Region::annulus(o.clone(), 1.8, 2.2)?);
                let ball = region_mass(&h, &Region::ball(o.clone(), 0.9)?);
                out.push(row("concentration", "mass Annulus(O,1.8,2.2)", ring, ">= 0.9", ring >= 0.9));
                out.push(row("concentration", "mass Ball(O,0.9)", ball, "<= 0.01", ball <= 0.01));
            }
            ("probe", "prnot") => {
                let cycle = Region::circle_shell(o.clone(), 1.0, 0.0)?;
                let w = pr_probe(spec, &cycle, 0.05, ProbeCase::Transitive, &ProbeOptions::default())?;
                out.push(row(
                    "probe",
                    "unstable cycle r=1 witness action",
                    w.action,
                    "found, < 0.05",
                    w.found && w.action < 0.05,
                ));
                let disk = Region::ball(o.clone(), 1.0)?;
                let w = pr_probe(spec, &disk, 0.1, ProbeCase::Auto, &ProbeOptions::default())?;
                out.push(Check {
                    check: "probe",
                    quantity: "unit disk witness found (eta=0.1)".into(),
                    measured: w.found.to_string(),
                    target: "false".into(),
                    pass: !w.found,
                });
            }
            ("probe", _) => {
                let disk = Region::ball(o.clone(), 1.0)?;
                let opts =
                    ProbeOptions { exit_pair: Some((vec![1.0, 0.0], vec![1.05, 0.0])), ..ProbeOptions::default() };
                let w = pr_probe(spec, &disk, 0.05, ProbeCase::ZeroVExit, &opts)?;
                out.push(row(
                    "probe",
                    "unit disk witness action",
                    w.action,
                    "found, < 0.05",
                    w.found && w.action < 0.05,
                ));
            }
            ("symmetry", "twoco") => {
                let cfg = SimConfig::new(0.2, 1e-3, steps(20_000_000), r.seed, vec![1.3, 0.0]);
                let h = occupation_histogram(spec, &cfg, &BoxBounds::symmetric(2.5, 2)?, &[100, 100])?;
                for (sign, name) in [(1.0, "mass of the x1>0 cycle shell"), (-1.0, "mass of the x1<0 cycle shell")] {
                    let m = region_mass(&h, &twoco_cycle_shell(sign, 0.25));
                    out.push(row("symmetry", name, m, "0.5 +-0.1", (m - 0.5).abs() <= 0.1));
                }
            }
            ("symmetry", _) => {
                let cfg = SimConfig::new(0.15, 1e-3, steps(200_000_000), r.seed, o.clone());
                let h =
                    occupation_histogram(spec, &cfg, &BoxBounds::new(vec![-1.0, -1.0], vec![2.0, 2.0])?, &[120, 120])?;
                for m in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
                    let w = region_mass(&h, &Region::ball(m.to_vec(), 0.2)?);
                    out.push(row(
                        "symmetry",
                        &format!("mass Ball({m:?},0.2)"),
                        w,
                        "0.25 +-0.1",
                        (w - 0.25).abs() <= 0.1,
                    ));
                }
            }
            (other, _) => unreachable!("check {other} passed config validation"),
        }
    }
    Ok(out)
}
