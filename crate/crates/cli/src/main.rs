//! `envara-rds`: batch experiment runner for the reaction-diffusion lab.
//!
//! Subcommands: `simulate`, `equilibria`, `energy-audit`, `convergence`,
//! `slow-manifold`, `parse`. A JSON config file (`--config`) supplies
//! defaults; command-line flags override file values. Exit codes: 0 ok,
//! 2 invalid configuration, 3 solver failure, 4 i/o failure.

mod commands;
mod config;
mod presets;

use clap::Parser;

fn main() {
    let cli = config::Cli::parse();
    std::process::exit(commands::dispatch(cli));
}
