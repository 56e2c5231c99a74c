//! `limset <command> [--config FILE] [--out DIR] [--seed N]`.
//!
//! Exit status: 0 success, 2 validation failure, 1 any other error.
//! `LIMSET_WORKERS` caps the worker threads.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};

pub const WORKERS_ENV: &str = "LIMSET_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CorpusList,
    Simulate,
    Quasipotential,
    Classify,
    Scan,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CorpusList => "corpus-list",
            Command::Simulate => "simulate",
            Command::Quasipotential => "quasipotential",
            Command::Classify => "classify",
            Command::Scan => "scan",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "limset", version, about = "Small-noise limit experiments on the built-in system corpus")]
struct Cli {
    command: Command,
    /// Experiment config (TOML); required except for corpus-list.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
}

enum Outcome {
    Done,
    ValidationFailed,
}

fn configure_workers() -> Result<()> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .with_context(|| format!("{WORKERS_ENV}={v:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    configure_workers()?;
    if cli.command == Command::CorpusList {
        print!("{}", limset::systems::catalog());
        return Ok(Outcome::Done);
    }
    let Some(path) = cli.config else { bail!("{} needs --config <file>", cli.command.name()) };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let located = |e: config::ConfigError| anyhow::anyhow!("{}:{e}", path.display());
    let cfg = config::parse(&text).map_err(located)?;
    let resolved = config::resolve(&text, cfg, cli.command, cli.out, cli.seed).map_err(located)?;
    let mut run = match cli.command {
        Command::Simulate => commands::simulate(&resolved),
        Command::Quasipotential => commands::quasipotential(&resolved),
        Command::Classify => commands::classify(&resolved),
        Command::Scan => commands::scan(&resolved),
        Command::Validate => commands::validate(&resolved),
        Command::CorpusList => unreachable!(),
    }
    .with_context(|| format!("{} on {}", cli.command.name(), resolved.spec().name))?;
    let toml = resolved.toml();
    let mut report = format!(
        "limset {} report\nsystem: {}\nmaster_seed: {}\n\n[resolved config]\n{toml}\n[results]\n{}",
        cli.command.name(),
        resolved.spec().name,
        resolved.seed,
        run.report
    );
    let mut names: Vec<&str> = run.files.iter().map(|f| f.0.as_str()).collect();
    names.extend([output::RESOLVED_CONFIG, "report.txt"]);
    report.push_str(&format!("\n[files]\n{}\n", names.join("\n")));
    run.files.push((output::RESOLVED_CONFIG.into(), toml.into_bytes()));
    run.files.push(("report.txt".into(), report.clone().into_bytes()));
    output::commit(&resolved.output_dir, &run.files)
        .with_context(|| format!("writing {}", resolved.output_dir.display()))?;
    print!("{report}");
    Ok(match run.passed {
        Some(false) => Outcome::ValidationFailed,
        _ => Outcome::Done,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
