//! `symcone`: property suites for gauge-reversing maps of symmetric cones.
//!
//! Exit status is 0 when every checked property holds, 1 when any fails, and
//! 2 for usage or configuration errors.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::Outcome;
use config::{CommonArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "symcone", version, about = "Jordan structure recovery from gauge-reversing maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every property suite against a map and emit one report.
    Suite(CommonArgs),
    /// Recover the Jordan product and compare it with the builtin one.
    Reconstruct(CommonArgs),
    /// Print the gauges `m(x,y)`, `M(x,y)` and the Thompson distance.
    Gauge(CommonArgs),
    /// Strong atomicity spot checks at `--x` (or a sampled point).
    Atomicity(CommonArgs),
    /// Quadratic Jordan and JB norm axioms of a product tensor.
    Algebra(CommonArgs),
}

type Handler = fn(&RunConfig) -> Result<Outcome>;

fn run(cli: Cli) -> Result<Outcome> {
    let (name, args, f): (&str, &CommonArgs, Handler) = match &cli.command {
        Command::Suite(a) => ("suite", a, commands::suite),
        Command::Reconstruct(a) => ("reconstruct", a, commands::reconstruct_cmd),
        Command::Gauge(a) => ("gauge", a, commands::gauge),
        Command::Atomicity(a) => ("atomicity", a, commands::atomicity),
        Command::Algebra(a) => ("algebra", a, commands::algebra),
    };
    let cfg = RunConfig::resolve(name, args)?;
    let outcome = f(&cfg)?;
    let mut body = outcome.body.clone();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match &cfg.out {
        Some(path) => std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
