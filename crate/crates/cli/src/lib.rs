//! Batch command line for regression manifolds of bivariate extremes.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod summary;

pub use args::Cli;
pub use error::CliError;

use args::Command;

pub fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Stationarize(a) => commands::stationarize_cmd(a),
        Command::Fit(a) => commands::fit(a),
        Command::Manifold(a) => commands::manifold(a),
        Command::Compare(a) => commands::compare(a),
        Command::Analyze(a) => commands::analyze(a),
    }
}
