//! Experiment runner for the `elm-core` solvers: TOML configs, parallel
//! repetitions, JSON-lines metrics and CSV summaries.

pub mod config;
pub mod error;
pub mod runner;

pub use config::RunConfig;
pub use error::CliError;
pub use runner::{cmd_compare, cmd_run, cmd_sweep, run_repetition, RepetitionResult};

use elm_core::problems::ProblemKind;

/// Lines printed by `list-problems`.
pub fn problem_listing() -> Vec<String> {
    ProblemKind::ALL
        .iter()
        .map(|k| {
            let params = match k {
                ProblemKind::AffineL1 => "n, p, seed",
                ProblemKind::SlackL1Net => {
                    "widths, radius, train_size, test_size, batch_size, dataset_seed, init_seed, spread"
                }
                ProblemKind::StochasticAffine => "n, p, noise_scale, seed",
                ProblemKind::Exactness1d => "slope",
            };
            format!(
                "{:<18} {}\n{:<18} parameters: {}",
                k.name(),
                k.description(),
                "",
                params
            )
        })
        .collect()
}
