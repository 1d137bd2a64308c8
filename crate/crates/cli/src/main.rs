//! `vexint` command line: runs configured experiments and the acceptance suite.
//!
//! Exit status: 0 when every contract holds, 1 on a contract failure or a
//! runtime error, 2 on an invalid config or invocation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vexint::config::{schema, ExperimentConfig};
use vexint::experiment::{norm_values, NormKind, Report};
use vexint::suite;

#[derive(Parser)]
#[command(name = "vexint", version, about = "Variable-exponent Triebel-Lizorkin experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Run the full acceptance suite.
    Suite {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "vexint-out")]
        out: PathBuf,
    },
    /// Print one norm per corpus item of a config.
    Norm {
        /// lux, mixed, f, finfty, F or Finfty.
        #[arg(long, value_parser = parse_kind)]
        kind: NormKind,
        config: PathBuf,
    },
    /// Print the JSON schema of experiment configs.
    DescribeSchema,
}

fn parse_kind(s: &str) -> Result<NormKind, String> {
    Ok(match s {
        "lux" => NormKind::Lux,
        "mixed" => NormKind::Mixed,
        "f" => NormKind::F,
        "finfty" => NormKind::Finfty,
        "F" => NormKind::FunctionF,
        "Finfty" => NormKind::FunctionFinfty,
        _ => return Err(format!("unknown norm kind `{s}`; expected lux, mixed, f, finfty, F or Finfty")),
    })
}

enum Failure {
    Contract,
    Config(String),
    Runtime(anyhow::Error),
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn print_failures(report: &Report) {
    for e in &report.summary.errors {
        eprintln!("error: {e}");
    }
    for r in report.rows.iter().filter(|r| !r.pass) {
        eprintln!(
            "fail: criterion {} check {}: value={:e} bound={:e} margin={:e}",
            r.criterion, r.check, r.value, r.bound, r.margin
        );
    }
}

fn finish(report: &Report, dir: &Path, stem: &str) -> Result<(), Failure> {
    let (csv, json) = report.write(dir, stem).map_err(|e| Failure::Runtime(e.into()))?;
    println!("wrote {} and {}", csv.display(), json.display());
    println!(
        "{}: {} rows, {} failed",
        report.summary.experiment, report.summary.rows, report.summary.failed
    );
    if let Some(criteria) = &report.summary.criteria {
        for c in criteria {
            println!("criterion {:>2} {} {}", c.id, if c.pass { "PASS" } else { "FAIL" }, c.title);
        }
    }
    if report.pass() {
        return Ok(());
    }
    print_failures(report);
    if let Some(criteria) = &report.summary.criteria {
        let ids: Vec<String> = criteria.iter().filter(|c| !c.pass).map(|c| c.id.to_string()).collect();
        eprintln!("failed criteria: {}", ids.join(", "));
    }
    Err(Failure::Contract)
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let report = vexint::run(&cfg).map_err(|e| Failure::Runtime(e.into()))?;
            let dir = match config.parent() {
                Some(parent) if cfg.output.dir.is_relative() => parent.join(&cfg.output.dir),
                _ => cfg.output.dir.clone(),
            };
            finish(&report, &dir, &cfg.stem())
        }
        Command::Suite { seed, out } => {
            let report = suite::run(seed).map_err(|e| Failure::Runtime(e.into()))?;
            finish(&report, &out, "suite")
        }
        Command::Norm { kind, config } => {
            let cfg = load(&config)?;
            let values = norm_values(&cfg, kind).map_err(|e| Failure::Runtime(e.into()))?;
            for (i, v) in values.iter().enumerate() {
                println!("{i}\t{v:.17e}");
            }
            Ok(())
        }
        Command::DescribeSchema => {
            println!("{}", serde_json::to_string_pretty(&schema()).expect("schema serializes"));
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("VEXINT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("VEXINT_THREADS: expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")
        .map_err(Failure::Runtime)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Contract) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("invalid config: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
