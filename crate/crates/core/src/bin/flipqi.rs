use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use flipqi::harness::bench::run_bench;
use flipqi::harness::distortion::{run_distortion, DistortionError, DistortionOptions};
use flipqi::harness::export::export_artifacts;
use flipqi::harness::invariants::run_invariants;
use flipqi::harness::{Instance, InstanceConfig};

#[derive(Parser)]
#[command(name = "flipqi", version, about = "Three-tree embedding experiments on flip graph manifold covers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Instance configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Pair count for distortion (defaults to the config's sample_count), query count for bench.
    #[arg(long, global = true, value_name = "N")]
    pairs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// Radius multiplier of the comparison build in the doubling check.
    #[arg(long, global = true, value_name = "F", default_value_t = 1.5)]
    radii_scale: f64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the instance and write its build log.
    Generate,
    /// Run the invariant suite.
    Invariants,
    /// Measure distortion on doubling-certified safe-core pairs.
    Distortion,
    /// Time the build and distance queries.
    Bench,
    /// Write DOT, edge-list, embedding and audit files.
    Export,
}

enum Failure {
    Usage(String),
    Violation(String),
}

fn write(path: &Path, body: String) -> Result<(), Failure> {
    std::fs::write(path, body).map_err(|e| Failure::Usage(format!("writing {}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let usage = |e: &dyn std::fmt::Display| Failure::Usage(e.to_string());
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage("--config PATH is required".into()))?;
    let mut cfg = InstanceConfig::load(path).map_err(|e| usage(&e))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if !(cli.radii_scale.is_finite() && cli.radii_scale >= 1.0) {
        return Err(Failure::Usage(format!("--radii-scale {} must be at least 1", cli.radii_scale)));
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Failure::Usage(format!("creating {}: {e}", cli.out.display())))?;

    match cli.command {
        Command::Generate => {
            let inst = Instance::build(&cfg).map_err(|e| usage(&e))?;
            let log = inst.complex.log();
            write(&cli.out.join("instance.json"), cfg.to_json() + "\n")?;
            write(&cli.out.join("build_log.json"), serde_json::to_string_pretty(log).unwrap() + "\n")?;
            println!(
                "{} pieces, {} vertices, {} edges, {} identified pairs",
                log.pieces, log.vertices, log.edges, log.identified_pairs
            );
            match &inst.quotients {
                Ok((t1, t2)) => println!("T1 has {} classes, T2 has {}", t1.len(), t2.len()),
                Err(e) => return Err(Failure::Violation(e.to_string())),
            }
        }
        Command::Invariants => {
            let inst = Instance::build(&cfg).map_err(|e| usage(&e))?;
            let report = run_invariants(&inst);
            write(&cli.out.join("invariants.json"), serde_json::to_string_pretty(&report).unwrap() + "\n")?;
            for c in &report.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                println!("{mark} {} checked={} failures={} skipped={} {}", c.name, c.checked, c.failures, c.skipped, c.detail);
            }
            if !report.passed() {
                return Err(Failure::Violation(format!("failed: {}", report.failed().join(", "))));
            }
        }
        Command::Distortion => {
            let inst = Instance::build(&cfg).map_err(|e| usage(&e))?;
            let opts = DistortionOptions {
                pairs: cli.pairs.unwrap_or(cfg.sample_count),
                seed: cfg.seed,
                radii_scale: cli.radii_scale,
            };
            let report = run_distortion(&inst, &opts).map_err(|e| match e {
                DistortionError::Instance(_) | DistortionError::Io { .. } => usage(&e),
                _ => Failure::Violation(e.to_string()),
            })?;
            report.write(&cli.out).map_err(|e| usage(&e))?;
            let s = &report.summary;
            println!(
                "{} pairs ({} drawn), max expansion {:.3}, max contraction {:.3}, paths {}/{} built, {} violations",
                s.pairs, s.doubling.drawn, s.max_expansion, s.max_contraction, s.path.built, s.path.attempted, s.total_violations
            );
            if !report.passed() {
                return Err(Failure::Violation(format!("{} violations", s.total_violations)));
            }
        }
        Command::Bench => {
            let (_, report) = run_bench(&cfg, cli.pairs.unwrap_or(100), cfg.seed).map_err(|e| usage(&e))?;
            write(&cli.out.join("bench.json"), serde_json::to_string_pretty(&report).unwrap() + "\n")?;
            println!(
                "{} vertices built in {:.2}s; query mean {:.3} ms, max {:.3} ms; batch speedup {:.2} on {} threads",
                report.vertices,
                report.build_seconds,
                report.mean_query_ms,
                report.max_query_ms,
                report.batch_speedup,
                report.threads
            );
        }
        Command::Export => {
            let inst = Instance::build(&cfg).map_err(|e| usage(&e))?;
            let files = export_artifacts(&inst, &cli.out).map_err(|e| Failure::Violation(e.to_string()))?;
            for f in files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(m)) => {
            eprintln!("violation: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
