//! Command bodies. Each returns the files to write plus the report text;
//! nothing touches the filesystem until the whole run has succeeded.

use std::fmt::Write as _;

use anyhow::{Context, Result};
use limset::export::{
    write_decay_csv, write_histogram_csv, write_path_csv, write_quasipotential_csv, write_trajectory_csv,
};
use limset::flow::{classify_region, Trajectory};
use limset::montecarlo::{
    compare_to_density, concentration_scan, em_path, occupation_histogram_replicas, region_mass_with_error, BoxBounds,
    ScanOptions, SimConfig,
};
use limset::quasipotential::{minimize_action, refine_segments, MinimizeOptions};
use limset::systems::RegionLabel;

use crate::config::{RegionSpec, Resolved};

pub struct Run {
    pub files: Vec<(String, Vec<u8>)>,
    pub report: String,
    /// Validation verdict; `None` for commands that do not judge.
    pub passed: Option<bool>,
}

impl Run {
    fn new() -> Self {
        Run { files: Vec::new(), report: String::new(), passed: None }
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> limset::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf).with_context(|| format!("writing {name}"))?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.report.push_str(s.as_ref());
        self.report.push('\n');
    }
}

fn bounds(lo: &Option<Vec<f64>>, hi: &Option<Vec<f64>>) -> Result<BoxBounds> {
    Ok(BoxBounds::new(lo.clone().expect("resolved"), hi.clone().expect("resolved"))?)
}

pub fn simulate(r: &Resolved) -> Result<Run> {
    let p = r.config.simulate.as_ref().expect("resolved");
    let spec = r.spec();
    let cfg = SimConfig::new(p.epsilon.unwrap(), p.dt.unwrap(), p.n_steps.unwrap(), r.seed, p.x0.clone().unwrap())
        .with_burn_in(p.burn_in.unwrap());
    let b = bounds(&p.box_lo, &p.box_hi)?;
    let bins = p.bins_per_axis.clone().unwrap();
    let h = occupation_histogram_replicas(spec, &cfg, &b, &bins, p.replicas.unwrap())?;
    let mut run = Run::new();
    run.csv("histogram.csv", |w| write_histogram_csv(w, &h))?;
    let traj_steps = p.trajectory_steps.unwrap();
    if traj_steps > 0 {
        let states = em_path(spec, &SimConfig { n_steps: traj_steps, burn_in: 0, ..cfg.clone() })?;
        let times = (0..states.len()).map(|k| k as f64 * cfg.dt).collect();
        let traj = Trajectory { times, states, dt: cfg.dt };
        run.csv("trajectory.csv", |w| write_trajectory_csv(w, &traj))?;
    }
    run.line(format!("samples after burn-in: {} x {} replica(s)", h.n_samples / h.replicas.max(1), h.replicas));
    run.line(format!("out-of-box mass: {}", h.out_of_box_mass));
    run.line("region masses (batch-means standard error):");
    let catalog = spec.metadata.invariant_regions.iter().filter(|l| !l.region.is_null_set());
    let mut named: Vec<(String, limset::Region)> =
        catalog.map(|l| (format!("{} [{}]", l.name, l.label.as_str()), l.region.clone())).collect();
    for rs in p.regions.as_deref().unwrap_or_default() {
        named.push((rs.describe(), rs.build(spec).map_err(anyhow::Error::msg)?));
    }
    for (name, region) in &named {
        let (m, se) = region_mass_with_error(&h, region);
        run.line(format!("  {name}: {m:.6} +- {se:.6}"));
    }
    if let Some(u) = &spec.metadata.exact_density_potential {
        if cfg.epsilon > 0.0 {
            let c = compare_to_density(&h, u, cfg.epsilon);
            run.line("exact stationary density comparison:");
            run.line(format!("  tv_distance: {}", c.tv_distance));
            run.line(format!("  log_slope: {} (expected {})", c.log_slope, -2.0 / (cfg.epsilon * cfg.epsilon)));
            run.line(format!("  r_squared: {}", c.r_squared));
            run.line(format!("  bins_used: {}", c.bins_used));
        }
    }
    Ok(run)
}

pub fn quasipotential(r: &Resolved) -> Result<Run> {
    let p = r.config.quasipotential.as_ref().expect("resolved");
    let spec = r.spec();
    let opts = MinimizeOptions { refine_evals: p.refine_evals.unwrap(), ..MinimizeOptions::default() };
    let (x, y) = (p.x.clone().unwrap(), p.y.clone().unwrap());
    let mut q = minimize_action(spec, &x, &y, p.n_segments.unwrap(), p.t_grid.as_ref().unwrap(), &opts)?;
    let coarse_value = q.value;
    if p.refine_segments.unwrap() {
        q = refine_segments(spec, &q, &opts.lbfgs)?;
    }
    let mut run = Run::new();
    run.csv("quasipotential.csv", |w| write_quasipotential_csv(w, &q))?;
    run.csv("path.csv", |w| write_path_csv(w, &q.path))?;
    run.line(format!("V({x:?}, {y:?}) = {}", q.value));
    if p.refine_segments.unwrap() {
        run.line(format!("before segment doubling: {coarse_value}"));
    }
    run.line(format!("duration used: {}", q.t_used));
    run.line(format!("segments: {}", q.n_segments));
    run.line(format!("optimizer iterations: {}", q.optimizer_iters));
    run.line(format!("converged: {}", q.converged));
    Ok(run)
}

pub fn classify(r: &Resolved) -> Result<Run> {
    let p = r.config.classify.as_ref().expect("resolved");
    let spec = r.spec();
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["region", "label", "expected", "forward_settle_time", "backward_settle_time", "samples"])?;
    let mut run = Run::new();
    let mut agree = true;
    for rs in p.regions.as_deref().unwrap_or_default() {
        let region = rs.build(spec).map_err(anyhow::Error::msg)?;
        let catalog = match rs {
            RegionSpec::Named { name } => spec.metadata.region(name),
            _ => None,
        };
        let hint = catalog.and_then(|l| l.probe);
        let delta = p.shell_delta.or(hint.map(|h| h.shell_delta)).unwrap_or(0.1);
        let escape = p.escape_time.or(hint.map(|h| h.escape_time)).unwrap_or(50.0);
        let dt = p.dt.or(hint.map(|h| h.dt)).unwrap_or(0.01);
        let c = classify_region(spec, &region, delta, p.n_samples.unwrap(), escape, dt)?;
        let expected = catalog.map(|l| l.label).filter(|l| matches!(l, RegionLabel::Attractor | RegionLabel::Repeller));
        let opt = |v: Option<f64>| v.map_or(String::new(), |t| t.to_string());
        out.write_record([
            rs.describe(),
            c.label.as_str().to_string(),
            expected.map_or(String::new(), |l| l.as_str().to_string()),
            opt(c.forward_escape_time),
            opt(c.backward_escape_time),
            c.samples_used.to_string(),
        ])?;
        let mut line = format!("{}: {} (delta={delta}, horizon={escape}, dt={dt})", rs.describe(), c.label.as_str());
        if let Some(e) = expected {
            let ok = e.as_str() == c.label.as_str();
            agree &= ok;
            let _ = write!(line, ", catalog says {} -> {}", e.as_str(), if ok { "agrees" } else { "DISAGREES" });
        }
        if let Some(d) = &c.diagnostic {
            let _ = write!(line, "; {d}");
        }
        run.line(line);
    }
    run.files.push(("classification.csv".into(), out.into_inner()?));
    run.line(format!("all catalog labels reproduced: {agree}"));
    Ok(run)
}

pub fn scan(r: &Resolved) -> Result<Run> {
    let p = r.config.scan.as_ref().expect("resolved");
    let spec = r.spec();
    let region_spec = p.region.as_ref().unwrap();
    let region = region_spec.build(spec).map_err(anyhow::Error::msg)?;
    let opts = ScanOptions {
        dt: p.dt.unwrap(),
        n_steps: p.n_steps.unwrap(),
        n_steps_per_epsilon: p.n_steps_per_epsilon.clone(),
        burn_in_fraction: p.burn_in_fraction.unwrap(),
        master_seed: r.seed,
        bounds: bounds(&p.box_lo, &p.box_hi)?,
        bins_per_axis: p.bins_per_axis.clone().unwrap(),
        x0: p.x0.clone().unwrap(),
        replicas: p.replicas.unwrap(),
    };
    let fit = concentration_scan(spec, &region, p.epsilons.as_ref().unwrap(), &opts)?;
    let mut run = Run::new();
    run.csv("decay.csv", |w| write_decay_csv(w, &fit))?;
    run.line(format!("region: {}", region_spec.describe()));
    for ((e, m), fl) in fit.epsilons.iter().zip(&fit.masses).zip(&fit.floored) {
        run.line(format!("  epsilon {e}: mass {m}{}", if *fl { " (zero count, floored)" } else { "" }));
    }
    run.line(format!("kappa_hat: {}", fit.kappa_hat));
    run.line(format!("intercept: {}", fit.intercept));
    run.line(format!("r_squared: {}", fit.r_squared));
    if fit.low_confidence() {
        run.line("LOW CONFIDENCE: at least one mass was floored at one count");
    }
    Ok(run)
}

pub fn validate(r: &Resolved) -> Result<Run> {
    let checks = crate::validate::run(r)?;
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["check", "quantity", "measured", "target", "status"])?;
    let mut run = Run::new();
    let mut all = true;
    for c in &checks {
        all &= c.pass;
        let status = if c.pass { "PASS" } else { "FAIL" };
        out.write_record([c.check, &c.quantity, &c.measured, &c.target, status])?;
        run.line(format!("{status} {}: {} = {} (target {})", c.check, c.quantity, c.measured, c.target));
    }
    run.files.push(("validation.csv".into(), out.into_inner()?));
    run.line(format!("overall: {}", if all { "PASS" } else { "FAIL" }));
    run.passed = Some(all);
    Ok(run)
}
