//! `capvertex` command line: runs one scenario configuration and writes its
//! artifacts.
//!
//! Exit status is 0 when the run succeeds and every check holds, 1 when a
//! check fails and 2 on errors, in which case nothing is written.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use capvertex::harness::{run, Command};

#[derive(Parser)]
#[command(name = "capvertex", version, about = "Capillary drops in wedges, trihedral corners and prisms")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Classify contact-angle data on a grid.
    Classify(Common),
    /// Construct an analytic cap and its mesh.
    Cap(Common),
    /// Solve the mean curvature equation on a rectangle.
    SolveGraph(Common),
    /// Relax a seeded drop with the surface evolver.
    Evolve(Common),
    /// Run a verification suite.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Random seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, args) = match cli.command {
        Sub::Classify(a) => (Command::Classify, a),
        Sub::Cap(a) => (Command::Cap, a),
        Sub::SolveGraph(a) => (Command::SolveGraph, a),
        Sub::Evolve(a) => (Command::Evolve, a),
        Sub::Verify(a) => (Command::Verify, a),
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let outcome = match run(command, &text, args.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = outcome.artifacts.commit(&args.out) {
        eprintln!("error: writing {}: {e}", args.out.display());
        return ExitCode::from(2);
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("{}", if outcome.pass { "PASS" } else { "FAIL" });
    ExitCode::from(if outcome.pass { 0 } else { 1 })
}
