//! Experiment configuration: TOML with one optional section per command.
//! Unknown keys are rejected; every error carries a line number when the
//! offending key can be located.

use std::fmt;
use std::path::PathBuf;

use limset::region::Region;
use limset::systems::{corpus_system, SystemSpec};
use serde::{Deserialize, Serialize};

use crate::Command;

#[derive(Debug)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: Option<String>,
    pub command: Option<String>,
    pub output_dir: Option<PathBuf>,
    pub master_seed: Option<u64>,
    pub simulate: Option<SimulateParams>,
    pub quasipotential: Option<QuasipotentialParams>,
    pub classify: Option<ClassifyParams>,
    pub scan: Option<ScanParams>,
    pub validate: Option<ValidateParams>,
}

/// A region literal: a catalog name of the chosen system or explicit geometry.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Named { name: String },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    CircleShell { center: Vec<f64>, radius: f64, half_width: f64 },
}

impl RegionSpec {
    pub fn build(&self, spec: &SystemSpec) -> Result<Region, String> {
        let check = |c: &[f64]| {
            if c.len() == spec.dim {
                Ok(())
            } else {
                Err(format!("center has {} coordinates, system {} has dimension {}", c.len(), spec.name, spec.dim))
            }
        };
        match self {
            RegionSpec::Named { name } => spec
                .metadata
                .region(name)
                .map(|r| r.region.clone())
                .ok_or_else(|| format!("system {} has no region named {name:?}", spec.name)),
            RegionSpec::Ball { center, radius } => {
                check(center)?;
                Region::ball(center.clone(), *radius).map_err(|e| e.to_string())
            }
            RegionSpec::Annulus { center, r_in, r_out } => {
                check(center)?;
                Region::annulus(center.clone(), *r_in, *r_out).map_err(|e| e.to_string())
            }
            RegionSpec::CircleShell { center, radius, half_width } => {
                check(center)?;
                Region::circle_shell(center.clone(), *radius, *half_width).map_err(|e| e.to_string())
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RegionSpec::Named { name } => name.clone(),
            RegionSpec::Ball { center, radius } => format!("Ball({center:?}, {radius})"),
            RegionSpec::Annulus { center, r_in, r_out } => format!("Annulus({center:?}, {r_in}, {r_out})"),
            RegionSpec::CircleShell { center, radius, half_width } => {
                format!("CircleShell({center:?}, {radius}, {half_width})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub epsilon: Option<f64>,
    pub dt: Option<f64>,
    pub n_steps: Option<u64>,
    /// Defaults to 5% of `n_steps`.
    pub burn_in: Option<u64>,
    pub x0: Option<Vec<f64>>,
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
    pub bins_per_axis: Option<Vec<usize>>,
    pub replicas: Option<u64>,
    /// Leading steps written to `trajectory.csv`; 0 disables.
    pub trajectory_steps: Option<u64>,
    /// Extra regions whose masses are reported next to the catalog regions.
    pub regions: Option<Vec<RegionSpec>>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuasipotentialParams {
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub n_segments: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    pub refine_evals: Option<usize>,
    /// Re-optimize once with doubled segments.
    pub refine_segments: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClassifyParams {
    /// Defaults to every catalog region that carries classification scales.
    pub regions: Option<Vec<RegionSpec>>,
    pub shell_delta: Option<f64>,
    pub n_samples: Option<usize>,
    pub escape_time: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    pub region: Option<RegionSpec>,
    pub epsilons: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub n_steps: Option<u64>,
    pub n_steps_per_epsilon: Option<Vec<u64>>,
    pub burn_in_fraction: Option<f64>,
    pub x0: Option<Vec<f64>>,
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
    pub bins_per_axis: Option<Vec<usize>>,
    pub replicas: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ValidateParams {
    /// Subset of checks to run; defaults to every check defined for the system.
    pub checks: Option<Vec<String>>,
    /// Multiplies every Monte Carlo step count (1 = acceptance scale).
    pub steps_scale: Option<f64>,
    /// Noise grid of the decay check.
    pub epsilons: Option<Vec<f64>>,
}

/// 1-based line of `key = ...` inside `[section]` (top level when `None`).
pub fn locate(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[') {
            current = Some(h.trim_end_matches(']').trim().to_string());
            continue;
        }
        let here = current.as_deref() == section;
        if here {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e: toml::de::Error| ConfigError {
        line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })
}

/// Everything a run needs, with defaults filled in.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub spec: SystemSpec,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Resolved {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn toml(&self) -> String {
        toml::to_string(&self.config).expect("config serializes")
    }
}

struct Ctx<'a> {
    text: &'a str,
    section: &'static str,
    spec: &'a SystemSpec,
}

impl Ctx<'_> {
    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: locate(self.text, Some(self.section), key),
            message: format!("{}.{key}: {}", self.section, message.into()),
        }
    }

    fn point(&self, key: &str, p: &[f64]) -> Result<(), ConfigError> {
        if p.len() != self.spec.dim {
            return Err(self.err(key, format!("expected {} coordinates, got {}", self.spec.dim, p.len())));
        }
        if p.iter().any(|v| !v.is_finite()) || !self.spec.in_safe_region(p) {
            return Err(self.err(key, format!("{p:?} is outside the safe radius {}", self.spec.safe_radius)));
        }
        Ok(())
    }

    fn positive(&self, key: &str, v: f64) -> Result<(), ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(self.err(key, format!("must be positive, got {v}")))
        }
    }

    fn region(&self, key: &str, r: &RegionSpec) -> Result<(), ConfigError> {
        r.build(self.spec).map(|_| ()).map_err(|m| self.err(key, m))
    }

    fn bounds(
        &self,
        lo: &mut Option<Vec<f64>>,
        hi: &mut Option<Vec<f64>>,
        bins: &mut Option<Vec<usize>>,
    ) -> Result<(), ConfigError> {
        let d = self.spec.dim;
        // Largest cube inside the safe ball, rounded down to a multiple of 0.5.
        let inscribed = self.spec.safe_radius / (d as f64).sqrt();
        let h = if inscribed >= 0.5 { (2.0 * inscribed).floor() / 2.0 } else { inscribed };
        let lo = lo.get_or_insert_with(|| vec![-h; d]);
        let hi = hi.get_or_insert_with(|| vec![h; d]);
        let bins = bins.get_or_insert_with(|| vec![if d <= 2 { 80 } else { 40 }; d]);
        if lo.len() != d || hi.len() != d || lo.iter().zip(hi.iter()).any(|(a, b)| !(a < b)) {
            return Err(self.err("box_lo", format!("box must have {d} coordinates per corner with lo < hi")));
        }
        if bins.len() != d || bins.contains(&0) {
            return Err(self.err("bins_per_axis", format!("need {d} positive bin counts")));
        }
        Ok(())
    }
}

fn missing(text: &str, section: &str, what: &str) -> ConfigError {
    let line = text.lines().position(|l| l.trim() == format!("[{section}]")).map(|i| i + 1);
    ConfigError { line, message: format!("[{section}] needs `{what}`") }
}

/// Applies overrides and defaults and type-checks against the chosen system.
pub fn resolve(
    text: &str,
    mut cfg: ExperimentConfig,
    command: Command,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<Resolved, ConfigError> {
    let name = command.name();
    if let Some(c) = &cfg.command {
        if c != name {
            return Err(ConfigError {
                line: locate(text, None, "command"),
                message: format!("config is for command {c:?} but {name:?} was requested"),
            });
        }
    }
    cfg.command = Some(name.to_string());
    cfg.master_seed = Some(seed.or(cfg.master_seed).unwrap_or(0));
    let output_dir = out.or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from(format!("limset-{name}")));
    cfg.output_dir = Some(output_dir.clone());
    let system =
        cfg.system.clone().ok_or_else(|| ConfigError { line: None, message: "missing top-level `system`".into() })?;
    let spec = corpus_system(&system).ok_or_else(|| ConfigError {
        line: locate(text, None, "system"),
        message: format!("unknown system {system:?}; run `limset corpus-list` for the catalog"),
    })?;
    // Only the requested command's section is kept, so the echoed config
    // describes exactly this run.
    let (sim, qp, cl, sc, va) =
        (cfg.simulate.take(), cfg.quasipotential.take(), cfg.classify.take(), cfg.scan.take(), cfg.validate.take());
    match command {
        Command::Simulate => cfg.simulate = Some(resolve_simulate(text, &spec, sim.unwrap_or_default())?),
        Command::Quasipotential => {
            cfg.quasipotential = Some(resolve_quasipotential(text, &spec, qp.unwrap_or_default())?)
        }
        Command::Classify => cfg.classify = Some(resolve_classify(text, &spec, cl.unwrap_or_default())?),
        Command::Scan => cfg.scan = Some(resolve_scan(text, &spec, sc.unwrap_or_default())?),
        Command::Validate => cfg.validate = Some(resolve_validate(text, &spec, va.unwrap_or_default())?),
        Command::CorpusList => unreachable!("corpus-list takes no config"),
    }
    let seed = cfg.master_seed.unwrap_or(0);
    Ok(Resolved { config: cfg, spec, output_dir, seed })
}

fn resolve_simulate(text: &str, spec: &SystemSpec, mut p: SimulateParams) -> Result<SimulateParams, ConfigError> {
    let c = Ctx { text, section: "simulate", spec };
    let eps = p.epsilon.ok_or_else(|| missing(text, "simulate", "epsilon"))?;
    if !(eps >= 0.0) {
        return Err(c.err("epsilon", "must be nonnegative"));
    }
    c.positive("dt", *p.dt.get_or_insert(1e-3))?;
    let n = *p.n_steps.get_or_insert(1_000_000);
    let burn = *p.burn_in.get_or_insert(n / 20);
    if n <= burn {
        return Err(c.err("n_steps", format!("must exceed burn_in ({burn})")));
    }
    c.point("x0", p.x0.get_or_insert_with(|| spec.metadata.default_start.clone()))?;
    c.bounds(&mut p.box_lo, &mut p.box_hi, &mut p.bins_per_axis)?;
    if *p.replicas.get_or_insert(1) == 0 {
        return Err(c.err("replicas", "must be at least 1"));
    }
    p.trajectory_steps.get_or_insert(10_000.min(n));
    for r in p.regions.get_or_insert_with(Vec::new).iter() {
        c.region("regions", r)?;
    }
    Ok(p)
}

fn resolve_quasipotential(
    text: &str,
    spec: &SystemSpec,
    mut p: QuasipotentialParams,
) -> Result<QuasipotentialParams, ConfigError> {
    let c = Ctx { text, section: "quasipotential", spec };
    c.point("x", p.x.get_or_insert_with(|| spec.metadata.default_start.clone()))?;
    let y = p.y.as_ref().ok_or_else(|| missing(text, "quasipotential", "y"))?;
    c.point("y", y)?;
    if p.x.as_ref() == Some(y) {
        return Err(c.err("y", "endpoints coincide"));
    }
    if *p.n_segments.get_or_insert(limset::quasipotential::DEFAULT_SEGMENTS) == 0 {
        return Err(c.err("n_segments", "must be at least 1"));
    }
    let grid = p.t_grid.get_or_insert_with(|| limset::quasipotential::DEFAULT_T_GRID.to_vec());
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0)) {
        return Err(c.err("t_grid", "durations must be a nonempty list of positive numbers"));
    }
    p.refine_evals.get_or_insert(8);
    p.refine_segments.get_or_insert(false);
    Ok(p)
}

fn resolve_classify(text: &str, spec: &SystemSpec, mut p: ClassifyParams) -> Result<ClassifyParams, ConfigError> {
    let c = Ctx { text, section: "classify", spec };
    let regions = p.regions.get_or_insert_with(|| {
        spec.metadata
            .invariant_regions
            .iter()
            .filter(|r| r.probe.is_some())
            .map(|r| RegionSpec::Named { name: r.name.clone() })
            .collect()
    });
    if regions.is_empty() {
        return Err(c.err("regions", format!("system {} has no classifiable catalog regions; list some", spec.name)));
    }
    for r in regions.iter() {
        c.region("regions", r)?;
    }
    // Explicit scales apply to every region; otherwise each catalog region
    // uses its own and literals fall back to these defaults.
    for (key, v) in [("shell_delta", p.shell_delta), ("escape_time", p.escape_time), ("dt", p.dt)] {
        if let Some(v) = v {
            c.positive(key, v)?;
        }
    }
    if *p.n_samples.get_or_insert(64) == 0 {
        return Err(c.err("n_samples", "must be at least 1"));
    }
    Ok(p)
}

fn resolve_scan(text: &str, spec: &SystemSpec, mut p: ScanParams) -> Result<ScanParams, ConfigError> {
    let c = Ctx { text, section: "scan", spec };
    let region = p.region.as_ref().ok_or_else(|| missing(text, "scan", "region"))?;
    c.region("region", region)?;
    let eps = p.epsilons.as_ref().ok_or_else(|| missing(text, "scan", "epsilons"))?;
    if eps.len() < 3 || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(c.err("epsilons", "need at least three positive noise levels"));
    }
    c.positive("dt", *p.dt.get_or_insert(1e-3))?;
    p.n_steps.get_or_insert(1_000_000);
    if let Some(v) = &p.n_steps_per_epsilon {
        if v.len() != eps.len() {
            return Err(c.err("n_steps_per_epsilon", format!("expected {} entries, got {}", eps.len(), v.len())));
        }
    }
    let f = *p.burn_in_fraction.get_or_insert(0.05);
    if !(0.0..1.0).contains(&f) {
        return Err(c.err("burn_in_fraction", "must lie in [0, 1)"));
    }
    c.point("x0", p.x0.get_or_insert_with(|| spec.metadata.default_start.clone()))?;
    c.bounds(&mut p.box_lo, &mut p.box_hi, &mut p.bins_per_axis)?;
    if *p.replicas.get_or_insert(1) == 0 {
        return Err(c.err("replicas", "must be at least 1"));
    }
    Ok(p)
}

fn resolve_validate(text: &str, spec: &SystemSpec, mut p: ValidateParams) -> Result<ValidateParams, ConfigError> {
    let c = Ctx { text, section: "validate", spec };
    let available = crate::validate::checks_for(spec);
    let checks = p.checks.get_or_insert_with(|| available.iter().map(|s| s.to_string()).collect());
    for ch in checks.iter() {
        if !available.contains(&ch.as_str()) {
            return Err(c.err("checks", format!("unknown check {ch:?} for {}; available: {available:?}", spec.name)));
        }
    }
    c.positive("steps_scale", *p.steps_scale.get_or_insert(1.0))?;
    let eps = p.epsilons.get_or_insert_with(|| vec![0.55, 0.5, 0.45, 0.4, 0.35]);
    if eps.len() < 3 || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(c.err("epsilons", "need at least three positive noise levels"));
    }
    Ok(p)
}
