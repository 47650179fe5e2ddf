use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cma_lab::runner::{run, write_report, Command, RunConfig};

#[derive(Parser)]
#[command(version, about = "Complex Monge-Ampère solver and estimate laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance and report the estimate quantities.
    Solve(Args),
    /// Solve and run every verification check on the instance.
    Verify(Args),
    /// Run the dependency-stress sweep.
    Sweep(Args),
    /// Run the degenerate-density family study.
    Degenerate(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Degenerate(a) => (Command::Degenerate, a),
    };
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = args.output {
        cfg.output_dir = out;
    }
    let report = match run(&cfg, Some(command)).and_then(|r| write_report(&r).map(|p| (r, p))) {
        Ok((r, path)) => {
            println!("report: {}", path.display());
            r
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for c in &report.checks {
        println!(
            "{} {} = {:.6e} ({} {:.3e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.threshold
        );
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
