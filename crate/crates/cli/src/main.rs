mod error;
mod output;
mod run;
mod scenario;
mod setup;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::run::{Command, RunConfig};
use crate::scenario::Scenario;

#[derive(Parser)]
#[command(name = "dirac-ibvp", version, about = "Dirac initial-boundary value problems: solves and certificates")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the Clifford relations of the γ-matrix representation.
    CheckAlgebra(RunArgs),
    /// Algebra, κ, symbol, normal form, admissibility and corner jets.
    AnalyzeSystem(RunArgs),
    /// Analysis plus the time-stepped solution and snapshot CSVs.
    Solve(RunArgs),
    /// Solve and run the listed certificates other than green and convergence.
    Verify(RunArgs),
    /// Green-operator certificate.
    Green(RunArgs),
    /// Convergence-order certificate and `convergence.csv`.
    Converge(RunArgs),
    /// Every stage and every listed certificate.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (default: the scenario's output.dir, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated stages: algebra, system, solve or certificate names.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_scale: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::CheckAlgebra(a) => (Command::CheckAlgebra, a),
        Cmd::AnalyzeSystem(a) => (Command::AnalyzeSystem, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Green(a) => (Command::Green, a),
        Cmd::Converge(a) => (Command::Converge, a),
        Cmd::All(a) => (Command::All, a),
    };
    match execute(command, args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(command: Command, args: RunArgs) -> Result<u8, error::CliError> {
    let mut scenario = Scenario::load(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(scale) = args.tol_scale {
        scenario.verify.tol_scale = scale;
    }
    let out = args
        .out
        .or_else(|| scenario.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run::run(&scenario, &RunConfig { command, out: out.clone(), only: args.only })?;
    println!(
        "{}: {} (digest {}, report {})",
        scenario.name,
        outcome.report.status,
        &outcome.report.digest[..12],
        out.join("report.json").display()
    );
    Ok(outcome.exit_code)
}
