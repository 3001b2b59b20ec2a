//! CSV output.

use std::io::Write;

use crate::experiment::{AggregateRecord, TrialRecord};
use crate::HarnessError;

pub const AGGREGATE_HEADER: [&str; 10] = [
    "sweep_name",
    "sweep_value",
    "estimator",
    "mean_mse",
    "mean_k_hat",
    "mean_iters",
    "mean_oracle_mse",
    "trials",
    "snr_definition",
    "estimator_config",
];

pub const TRIALS_HEADER: [&str; 11] = [
    "sweep_name",
    "sweep_value",
    "trial",
    "seed",
    "estimator",
    "mse",
    "k_hat",
    "iters",
    "oracle_mse",
    "support_exact",
    "status",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_aggregate<W: Write>(w: W, rows: &[AggregateRecord]) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        out.write_record([
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.estimator.clone(),
            r.mean_mse.to_string(),
            r.mean_k_hat.to_string(),
            r.mean_iters.to_string(),
            r.mean_oracle_mse.to_string(),
            r.trials.to_string(),
            r.snr_definition.clone(),
            r.estimator_config.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_trials<W: Write>(w: W, rows: &[TrialRecord]) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRIALS_HEADER)?;
    for r in rows {
        out.write_record([
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.estimator.clone(),
            opt(r.mse),
            opt(r.k_hat),
            opt(r.iters),
            r.oracle_mse.to_string(),
            opt(r.support_exact),
            r.status.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
