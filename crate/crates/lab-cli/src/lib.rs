//! Experiment driver for the deep ReLU free-energy laboratory: configs, sample-size sweeps,
//! slope fits against `lambda_ReLU`, property suites and estimator validation.

pub mod bound;
pub mod config;
pub mod error;
pub mod fit;
pub mod oracle;
pub mod suite;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use fit::{fit_lambda, SlopeFit};
pub use sweep::{run_sweep, SweepRow};
