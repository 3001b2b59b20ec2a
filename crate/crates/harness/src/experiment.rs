//! Monte Carlo sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sbl::{generate_problem, oracle_mse, Complex64, Field, FieldKind, GenConfig, ProblemInstance, SNR_DEFINITION};

use crate::estimator::{Engine, EstimatorSpec};
use crate::HarnessError;

/// The swept quantity and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    Snr(Vec<f64>),
    M(Vec<usize>),
    K(Vec<usize>),
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::Snr(_) => "snr",
            Sweep::M(_) => "m",
            Sweep::K(_) => "k",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::Snr(v) => v.len(),
            Sweep::M(v) => v.len(),
            Sweep::K(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value(&self, i: usize) -> f64 {
        match self {
            Sweep::Snr(v) => v[i],
            Sweep::M(v) => v[i] as f64,
            Sweep::K(v) => v[i] as f64,
        }
    }

    fn apply(&self, i: usize, base: &Base) -> Base {
        let mut b = *base;
        match self {
            Sweep::Snr(v) => b.snr_db = v[i],
            Sweep::M(v) => b.m = v[i],
            Sweep::K(v) => b.k = v[i],
        }
        b
    }
}

/// Problem dimensions shared by all sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Base {
    pub m: usize,
    pub l: usize,
    pub k: usize,
    pub snr_db: f64,
    pub field: FieldKind,
}

impl Default for Base {
    fn default() -> Self {
        let g = GenConfig::default();
        Base { m: g.m, l: g.l, k: g.k, snr_db: g.snr_db, field: g.field }
    }
}

impl Base {
    fn gen(&self, seed: u64) -> GenConfig {
        GenConfig {
            m: self.m,
            l: self.l,
            k: self.k,
            snr_db: self.snr_db,
            field: self.field,
            seed,
            noise_precision: None,
        }
    }
}

fn default_trials() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sweep: Sweep,
    #[serde(default)]
    pub base: Base,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub estimators: Vec<EstimatorSpec>,
    /// Trial `t` uses seed `base_seed + t` at every sweep point.
    #[serde(default)]
    pub base_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.sweep.is_empty() {
            return Err(HarnessError::Config("sweep has no values".into()));
        }
        if self.estimators.is_empty() {
            return Err(HarnessError::Config("no estimators given".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be positive".into()));
        }
        for i in 0..self.sweep.len() {
            let b = self.sweep.apply(i, &self.base);
            b.gen(0).validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            if b.k == 0 {
                return Err(HarnessError::Config("K = 0 has no SNR; sweep points need K >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Built-in configurations.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let fast_set = || {
        vec![
            EstimatorSpec::new(Engine::FastRvm).named("Fast-RVM"),
            EstimatorSpec::new(Engine::FastLaplace).named("Fast-Laplace"),
            EstimatorSpec::new(Engine::Fast2l).with_epsilon(0.0).named("Fast-2L(0)"),
            EstimatorSpec::new(Engine::Fast2l).with_epsilon(0.5).named("Fast-2L(0.5)"),
            EstimatorSpec::new(Engine::Fast3l).with_epsilon(0.0).named("Fast-3L(0)"),
        ]
    };
    let snr_grid = || Sweep::Snr(vec![10.0, 20.0, 30.0, 40.0]);
    match name {
        "fig4-complex-desk" => Some(ExperimentConfig {
            sweep: snr_grid(),
            base: Base::default(),
            trials: 50,
            estimators: fast_set(),
            base_seed: 0,
        }),
        "fig4-real-desk" => Some(ExperimentConfig {
            sweep: snr_grid(),
            base: Base { field: FieldKind::Real, ..Base::default() },
            trials: 50,
            estimators: fast_set(),
            base_seed: 0,
        }),
        "m-sweep-desk" => Some(ExperimentConfig {
            sweep: Sweep::M(vec![40, 60, 80, 100, 120]),
            base: Base { snr_db: 20.0, ..Base::default() },
            trials: 50,
            estimators: fast_set(),
            base_seed: 0,
        }),
        "em-compare-desk" => Some(ExperimentConfig {
            sweep: Sweep::Snr(vec![10.0, 20.0, 30.0]),
            base: Base::default(),
            trials: 20,
            estimators: vec![
                EstimatorSpec::new(Engine::Fast2l).with_epsilon(0.0).named("Fast-2L(0)"),
                EstimatorSpec::new(Engine::EmRvm).named("EM-RVM"),
                EstimatorSpec::new(Engine::EmLaplace).named("EM-Laplace"),
            ],
            base_seed: 0,
        }),
        "smoke" => Some(ExperimentConfig {
            sweep: Sweep::Snr(vec![20.0]),
            base: Base { m: 20, l: 40, k: 4, ..Base::default() },
            trials: 3,
            estimators: vec![
                EstimatorSpec::new(Engine::FastRvm),
                EstimatorSpec::new(Engine::Fast2l).with_epsilon(0.0),
            ],
            base_seed: 0,
        }),
        _ => None,
    }
}

pub const PRESETS: [&str; 5] =
    ["fig4-complex-desk", "fig4-real-desk", "m-sweep-desk", "em-compare-desk", "smoke"];

/// Outcome of one estimator on one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub estimator: String,
    /// `None` when the estimator failed on this trial.
    pub mse: Option<f64>,
    pub k_hat: Option<usize>,
    pub iters: Option<usize>,
    pub oracle_mse: f64,
    pub support_exact: Option<bool>,
    /// Fit flag, or the error message of a failed run.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRecord {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub estimator: String,
    pub mean_mse: f64,
    pub mean_k_hat: f64,
    pub mean_iters: f64,
    pub mean_oracle_mse: f64,
    /// Trials that completed without error.
    pub trials: usize,
    pub snr_definition: String,
    pub estimator_config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub aggregate: Vec<AggregateRecord>,
    pub trials: Vec<TrialRecord>,
}

impl Report {
    pub fn failed_trials(&self) -> usize {
        self.trials.iter().filter(|t| t.mse.is_none()).count()
    }
}

fn run_point<S: Field<Real = f64>>(
    cfg: &ExperimentConfig,
    point: usize,
    trial: usize,
) -> Result<Vec<TrialRecord>, HarnessError> {
    let seed = cfg.base_seed.wrapping_add(trial as u64);
    let base = cfg.sweep.apply(point, &cfg.base);
    let p: ProblemInstance<S> = generate_problem(&base.gen(seed))?;
    let oracle = oracle_mse(&p)?;
    Ok(cfg
        .estimators
        .iter()
        .map(|spec| {
            let mut r = TrialRecord {
                sweep_name: cfg.sweep.name().to_string(),
                sweep_value: cfg.sweep.value(point),
                trial,
                seed,
                estimator: spec.label(),
                mse: None,
                k_hat: None,
                iters: None,
                oracle_mse: oracle,
                support_exact: None,
                status: String::new(),
            };
            match spec.run(&p) {
                Ok((fit, m)) => {
                    r.mse = Some(m.mse);
                    r.k_hat = Some(m.k_hat);
                    r.iters = Some(m.iterations);
                    r.support_exact = Some(m.support_exact);
                    r.status = serde_json::to_value(fit.flag)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default();
                }
                Err(e) => r.status = format!("error: {e}"),
            }
            r
        })
        .collect())
}

/// Runs every sweep point, trial and estimator. Results are ordered by sweep
/// point, then trial, then estimator, and do not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.sweep.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let per_task: Vec<Vec<TrialRecord>> = tasks
        .par_iter()
        .map(|&(p, t)| match cfg.base.field {
            FieldKind::Real => run_point::<f64>(cfg, p, t),
            FieldKind::Complex => run_point::<Complex64>(cfg, p, t),
        })
        .collect::<Result<_, _>>()?;
    let trials: Vec<TrialRecord> = per_task.into_iter().flatten().collect();
    Ok(Report { aggregate: aggregate(cfg, &trials), trials })
}

fn aggregate(cfg: &ExperimentConfig, trials: &[TrialRecord]) -> Vec<AggregateRecord> {
    let n_est = cfg.estimators.len();
    let mut out = Vec::with_capacity(cfg.sweep.len() * n_est);
    for point in 0..cfg.sweep.len() {
        for (e, spec) in cfg.estimators.iter().enumerate() {
            // trials of this point are contiguous, estimators interleaved
            let start = point * cfg.trials * n_est;
            let rows: Vec<&TrialRecord> = (0..cfg.trials)
                .map(|t| &trials[start + t * n_est + e])
                .filter(|r| r.mse.is_some())
                .collect();
            let n = rows.len();
            let mean = |f: &dyn Fn(&TrialRecord) -> f64| {
                if n == 0 {
                    f64::NAN
                } else {
                    rows.iter().map(|r| f(r)).sum::<f64>() / n as f64
                }
            };
            out.push(AggregateRecord {
                sweep_name: cfg.sweep.name().to_string(),
                sweep_value: cfg.sweep.value(point),
                estimator: spec.label(),
                mean_mse: mean(&|r| r.mse.unwrap_or(f64::NAN)),
                mean_k_hat: mean(&|r| r.k_hat.unwrap_or(0) as f64),
                mean_iters: mean(&|r| r.iters.unwrap_or(0) as f64),
                mean_oracle_mse: mean(&|r| r.oracle_mse),
                trials: n,
                snr_definition: SNR_DEFINITION.to_string(),
                estimator_config: spec.config_json(),
            });
        }
    }
    out
}
