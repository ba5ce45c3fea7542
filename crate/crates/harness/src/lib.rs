//! Experiment runner for the `gradreg` solvers: TOML experiment configs,
//! seeded Monte Carlo replication over a thread pool, CSV summaries, log-log
//! rate fits and named verification suites.

pub mod config;
mod error;
pub mod fit;
pub mod plot;
pub mod run;
pub mod verify;

pub use config::{AlgorithmSpec, ExperimentConfig, CONFIG_VERSION};
pub use error::{HarnessError, Result};
pub use fit::{fit_rate, fit_summary, RateFit};
pub use run::{run_experiment, sweep, RunOptions, RunOutput, SummaryRow};
pub use verify::{verify, Suite, SuiteReport};
