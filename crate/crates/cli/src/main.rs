//! Command-line entry point.
//!
//! Exit codes: 0 all checks pass, 1 at least one check failed, 2 runtime
//! error (blow-up, invalid config, I/O). Failures print one machine-parsable
//! `RUNFAIL ...` line on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rotconv_cli::config::{load_config, parse_config, ExperimentKind, RunConfig};
use rotconv_cli::experiments::{run, RunError};
use rotconv_cli::RunSummary;

#[derive(Parser)]
#[command(
    name = "rotconv",
    version,
    about = "Pseudo-spectral experiments for a weakly regularized rotationally constrained convection model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key: --set params.dt=5e-4 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default out/<kind>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count recorded in the manifest (computation is
    /// sequential; results are identical for any fixed value).
    #[arg(long)]
    threads: Option<usize>,
    /// Top-level seed for every random draw in the run.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the model and record diagnostics.
    Simulate(RunArgs),
    /// Fit decay rates and check the large-time envelopes.
    DecayStudy(RunArgs),
    /// Run the velocity-truncated iteration against a full-resolution reference.
    GalerkinStudy(RunArgs),
    /// Measure continuous dependence on initial data.
    Perturb(RunArgs),
    /// Property-test the functional inequalities and identities.
    IneqLab(RunArgs),
}

fn assemble_config(kind: ExperimentKind, args: &RunArgs) -> Result<RunConfig, String> {
    let mut config = match &args.config {
        Some(path) => load_config(path, &args.set).map_err(|e| e.to_string())?,
        None => {
            let base =
                serde_json::to_string(&RunConfig::minimal(kind)).map_err(|e| e.to_string())?;
            parse_config(&base, &args.set).map_err(|e| e.to_string())?
        }
    };
    if config.kind != kind {
        return Err(format!(
            "config kind '{}' does not match subcommand '{}'",
            config.kind, kind
        ));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err("threads must be >= 1".into());
        }
        config.threads = threads;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    let errs = config.validation_errors();
    if !errs.is_empty() {
        return Err(format!(
            "config failed validation:\n  - {}",
            errs.join("\n  - ")
        ));
    }
    Ok(config)
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let config = match assemble_config(kind, args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            eprintln!("RUNFAIL kind=config experiment={kind}");
            return ExitCode::from(2);
        }
    };
    let out_dir = config
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(kind.to_string()));
    match run(&config, &out_dir) {
        Ok(RunSummary {
            checks, all_pass, ..
        }) => {
            for check in &checks {
                println!(
                    "{} {}: {}",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name,
                    check.detail
                );
            }
            if all_pass {
                println!(
                    "ok: {} checks passed, outputs in {}",
                    checks.len(),
                    out_dir.display()
                );
                ExitCode::SUCCESS
            } else {
                let failed: Vec<&str> = checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name.as_str())
                    .collect();
                eprintln!(
                    "RUNFAIL kind=checks experiment={kind} failed={}",
                    failed.join(",")
                );
                ExitCode::from(1)
            }
        }
        Err(RunError::Core(rotconv::Error::BlowUp { field, step })) => {
            eprintln!("RUNFAIL kind=blow-up experiment={kind} field={field} step={step}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            eprintln!("RUNFAIL kind=runtime experiment={kind}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Simulate(args) => execute(ExperimentKind::Simulate, args),
        Command::DecayStudy(args) => execute(ExperimentKind::DecayStudy, args),
        Command::GalerkinStudy(args) => execute(ExperimentKind::GalerkinStudy, args),
        Command::Perturb(args) => execute(ExperimentKind::Perturb, args),
        Command::IneqLab(args) => execute(ExperimentKind::IneqLab, args),
    }
}
