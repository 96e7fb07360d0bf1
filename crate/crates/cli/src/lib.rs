//! The `mmdin` command-line pipeline: poster feature extraction, dataset
//! building, training, evaluation and multi-seed comparison.
//!
//! Exit codes: 0 success, 2 input error, 3 training failure, 4 checkpoint
//! or evaluation mismatch.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use args::{Cli, Command};
pub use error::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::ExtractFeatures(a) => commands::extract_features(a),
        Command::BuildDataset(a) => commands::build_dataset_cmd(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
    }
}
