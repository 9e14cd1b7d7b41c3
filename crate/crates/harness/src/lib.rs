//! Experiment harness for EigenVI fits: JSON configs, sweeps over basis orders
//! and batch sizes, divergence metrics and CSV output. The `eigenvi` binary is
//! a thin layer over [`cli::main_with_args`].

pub mod cli;
pub mod config;
pub mod error;
pub mod metrics;
pub mod record;
pub mod run;

pub use config::{ExperimentConfig, Overrides, CONFIG_SCHEMA_VERSION};
pub use error::{HarnessError, Result, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};
pub use metrics::{fisher_divergence_empirical, forward_kl, forward_kl_from_samples, Estimate};
pub use record::{MetricRow, RunRecord};
pub use run::{fit_one, run, RunOutcome};
