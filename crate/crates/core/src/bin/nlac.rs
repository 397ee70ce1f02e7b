use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlacoustics::app::{run, Command};

#[derive(Parser)]
#[command(name = "nlac", version, about = "Spectral simulator and Newton-Kantorovich verifier for nonlinear acoustics")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the configured problem and write trajectory, certificate and plots.
    Simulate(Args),
    /// Run the property suite.
    Verify(Args),
    /// Refinement study in the time step or the cutoff.
    Convergence(Args),
    /// Build the harmonic lift of the boundary data and check it.
    Lift(Args),
    /// Run simulate over a list of parameter values.
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Convergence(a) => (Command::Convergence, a),
        Cmd::Lift(a) => (Command::Lift, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };
    let report = run(command, &args.config, args.out.as_deref(), args.seed, args.threads);
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    if report.status.exit_code() == 0 {
        println!("{}", report.summary);
    } else {
        eprintln!("{}", report.summary);
    }
    ExitCode::from(report.status.exit_code() as u8)
}
