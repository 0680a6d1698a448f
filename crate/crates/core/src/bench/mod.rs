//! Experiment harness: configuration, Monte Carlo runs, the complexity-ratio
//! table, and the self-check suite.

pub mod config;
pub mod experiment;
pub mod ratio;
pub mod validate;

pub use config::{Backend, CodebookSpec, ExperimentConfig, Limit};
pub use experiment::{run_experiment, Cdf, ExperimentSummary, TrialRecord};
pub use ratio::{complexity_ratio, ratio_table, RatioRow};
pub use validate::{validate, Level, ValidationReport};
