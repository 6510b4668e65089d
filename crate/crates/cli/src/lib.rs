//! Command-line front end: argument parsing, file formats and plots.

pub mod args;
pub mod commands;
pub mod io;
pub mod plot;

pub use args::{Cli, Command};

/// Runs a parsed command and returns the process exit code. Errors are
/// reported on stderr and map to the input-error code.
pub fn run(cli: Cli) -> i32 {
    let g = &cli.global;
    let result = match &cli.command {
        Command::Solve => commands::solve(g),
        Command::Mpc => commands::mpc(g),
        Command::VerifyNash { controls, resolve } => commands::verify_nash(g, controls.as_ref(), *resolve),
        Command::Bench { samples, mc, bins } => commands::bench(g, *samples, mc.as_ref(), *bins),
        Command::Plot { csv } => commands::plot(g, csv),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        commands::EXIT_INPUT
    })
}
