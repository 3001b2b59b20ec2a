//! Experiment driver for the `sbl` estimators: Monte Carlo sweeps over SNR,
//! number of measurements or sparsity, with per-trial and aggregate CSV output.

pub mod estimator;
pub mod experiment;
pub mod output;

pub use estimator::{Engine, EstimatorSpec, NoiseMode};
pub use experiment::{
    preset, run_experiment, AggregateRecord, Base, ExperimentConfig, Report, Sweep, TrialRecord,
    PRESETS,
};
pub use output::{write_aggregate, write_trials};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] sbl::SblError),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
