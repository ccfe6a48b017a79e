//! Experiment harness for accelerated stochastic gradient on streaming least
//! squares: JSON configs, seeded multi-run orchestration, CSV curves, JSON
//! summaries and log-log slope fits.

pub mod config;
mod error;
pub mod experiments;
pub mod output;
pub mod slope;

pub use config::{ExperimentConfig, ExperimentKind, ResolvedConfig};
pub use error::{Error, Result};
pub use experiments::{run_experiment, Outcome, Summary, Verdict};
pub use slope::{fit_slope, SlopeEstimate};
