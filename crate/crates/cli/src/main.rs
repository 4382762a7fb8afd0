mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{Outcome, Status};
use config::RunConfig;
use tfprop_core::Error;

/// Time-frequency experiments for Schrodinger propagators.
///
/// Exit codes: 0 all checks passed, 1 a certificate failed, 2 configuration
/// error or refused precondition.
#[derive(Parser)]
#[command(name = "tfprop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// STFT of a signal with norms, peak and ridge.
    Stft(Args),
    /// Harmonic oscillator evolving the constant function.
    Example1(Args),
    /// Oscillator perturbed by |sin x|^mu.
    Example2(Args),
    /// Symbol-class certificate of a Weyl operator.
    Certify(Args),
    /// Propagate a signal under a Hamiltonian.
    Propagate(Args),
    /// Wave front set of a signal.
    Wavefront(Args),
    /// Frame bounds and dual window of a Gabor system.
    Frame(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON configuration; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root of the output tree.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replace a configuration value, e.g. `propagator.t=0.5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

type Runner = fn(&RunConfig) -> tfprop_core::Result<Outcome>;

impl Command {
    fn parts(&self) -> (&'static str, &Args, Runner) {
        match self {
            Command::Stft(a) => ("stft", a, commands::stft_cmd),
            Command::Example1(a) => ("example1", a, commands::example1),
            Command::Example2(a) => ("example2", a, commands::example2),
            Command::Certify(a) => ("certify", a, commands::certify),
            Command::Propagate(a) => ("propagate", a, commands::propagate),
            Command::Wavefront(a) => ("wavefront", a, commands::wavefront),
            Command::Frame(a) => ("frame", a, commands::frame),
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidArgument(_) | Error::GridMismatch(_) | Error::CoarseLattice(_))
}

fn write_outputs(dir: &Path, name: &str, cfg: &RunConfig, outcome: &Outcome) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let status = match outcome.status {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Refused => "refused",
    };
    let report = json!({
        "command": name,
        "status": status,
        "passed": outcome.status == Status::Pass,
        "config": cfg,
        "results": outcome.report,
        "metadata": { "tool": "tfprop", "version": env!("CARGO_PKG_VERSION") },
    });
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    for (file, bytes) in &outcome.files {
        std::fs::write(dir.join(file), bytes)?;
    }
    Ok(())
}

fn run(cli: Cli) -> ExitCode {
    let (name, args, runner) = cli.command.parts();
    let cfg = match config::load(args.config.as_deref(), &args.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("tfprop {name}: {e}");
            return ExitCode::from(2);
        }
    };
    let experiment = cfg.experiment.clone().unwrap_or_else(|| name.to_string());
    let dir = args.out.join(&experiment);
    log::info!("running {name} into {}", dir.display());
    let outcome = match runner(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("tfprop {name}: {e}");
            return ExitCode::from(if is_config_error(&e) { 2 } else { 1 });
        }
    };
    if let Err(e) = write_outputs(&dir, name, &cfg, &outcome) {
        eprintln!("tfprop {name}: cannot write {}: {e}", dir.display());
        return ExitCode::from(2);
    }
    match outcome.status {
        Status::Pass => {
            println!("{name}: pass ({})", dir.display());
            ExitCode::SUCCESS
        }
        Status::Fail => {
            println!("{name}: FAIL ({})", dir.display());
            ExitCode::from(1)
        }
        Status::Refused => {
            println!("{name}: refused, see {}", dir.join("report.json").display());
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(Cli::parse())
}
