//! Experiment orchestration: each subcommand runs one named experiment
//! end-to-end, writes its artifacts (CSV + JSON) into the output directory,
//! and finishes with a machine-readable summary. The exit code is zero only
//! if every exercised check passed.

mod experiments;
mod report;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

use geodlab_core::config::{parse_config, ExperimentConfig};

#[derive(Parser)]
#[command(name = "geodlab", version, about = "Geodesic flow laboratory")]
struct Cli {
    /// Configuration file (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts and the summary.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Random seed override for Monte Carlo experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand, Clone, Copy)]
enum Experiment {
    /// Build the configured surface and machine-check its invariants.
    CheckSurface,
    /// Integrate one geodesic and export the trajectory and events.
    Trace,
    /// Count geodesic segments between the configured points.
    Count,
    /// Counting integral and its growth series from the configured point.
    Integral,
    /// Wavefront length evolution and the length-vs-integral inequality.
    Front,
    /// Section transit tabulation, return-map checks, and the rescaled
    /// family's convergence to the twist limit.
    Returnmap,
    /// Invariant-circle confinement sweep over the cylinder lengths.
    Circle,
    /// Sojourn times, curvature bound, and finite-time exponents against
    /// the analytic bound.
    Lyapunov,
    /// Splitting gap amplitude sweep.
    Splitting,
    /// Growth-slope separation between the oscillating family and the
    /// neck tangle.
    Headline,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::CheckSurface => "check-surface",
            Experiment::Trace => "trace",
            Experiment::Count => "count",
            Experiment::Integral => "integral",
            Experiment::Front => "front",
            Experiment::Returnmap => "returnmap",
            Experiment::Circle => "circle",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Splitting => "splitting",
            Experiment::Headline => "headline",
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if cli.threads > 0 {
        cfg.run.threads = cli.threads;
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let exit = match run(&cli) {
        Ok(all_passed) => {
            if all_passed {
                0
            } else {
                1
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    };
    std::process::exit(exit);
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    if cfg.run.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
            .ok();
    }
    let ctx = experiments::Ctx::new(cfg, cli.out.join(cli.experiment.name()));
    let report = match cli.experiment {
        Experiment::CheckSurface => experiments::check_surface(&ctx)?,
        Experiment::Trace => experiments::trace(&ctx)?,
        Experiment::Count => experiments::count(&ctx)?,
        Experiment::Integral => experiments::integral(&ctx)?,
        Experiment::Front => experiments::front(&ctx)?,
        Experiment::Returnmap => experiments::returnmap(&ctx)?,
        Experiment::Circle => experiments::circle(&ctx)?,
        Experiment::Lyapunov => experiments::lyapunov(&ctx)?,
        Experiment::Splitting => experiments::splitting(&ctx)?,
        Experiment::Headline => experiments::headline(&ctx)?,
    };
    let passed = report.all_passed();
    report.write_summary(cli.experiment.name(), &ctx)?;
    for check in &report.checks {
        println!(
            "[{}] {} {}",
            if check.passed { "pass" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    println!(
        "{}: {} ({} checks, artifacts in {})",
        cli.experiment.name(),
        if passed { "ok" } else { "FAILED" },
        report.checks.len(),
        ctx.out.display()
    );
    Ok(passed)
}
