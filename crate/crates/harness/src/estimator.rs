//! Named estimator configurations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use sbl::{
    run_em, run_fast, run_vmp, EmConfig, FastConfig, Field, Fit, LambdaMode, Metrics,
    PriorConfig, ProblemInstance, VmpConfig,
};

/// Inference engine plus prior family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    EmRvm,
    EmLaplace,
    Em2l,
    Em3l,
    FastRvm,
    FastLaplace,
    Fast2l,
    Fast3l,
    Vmp2l,
    Vmp3l,
}

impl Engine {
    pub const ALL: [Engine; 10] = [
        Engine::EmRvm,
        Engine::EmLaplace,
        Engine::Em2l,
        Engine::Em3l,
        Engine::FastRvm,
        Engine::FastLaplace,
        Engine::Fast2l,
        Engine::Fast3l,
        Engine::Vmp2l,
        Engine::Vmp3l,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::EmRvm => "emrvm",
            Engine::EmLaplace => "emlaplace",
            Engine::Em2l => "em2l",
            Engine::Em3l => "em3l",
            Engine::FastRvm => "fastrvm",
            Engine::FastLaplace => "fastlaplace",
            Engine::Fast2l => "fast2l",
            Engine::Fast3l => "fast3l",
            Engine::Vmp2l => "vmp2l",
            Engine::Vmp3l => "vmp3l",
        }
    }

    fn three_layer(self) -> bool {
        matches!(self, Engine::Em3l | Engine::Fast3l | Engine::Vmp3l)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown estimator `{s}`"))
    }
}

/// How the noise precision reaches the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// The true precision of the instance.
    #[default]
    Known,
    Estimate,
}

/// An estimator as written in experiment configs. Unset shape and rate
/// parameters fall back to the defaults of the prior family: `ε = 1/2`,
/// `η = 1` (2-L) and `ε = 0`, `a = 1`, `b = 0.1` (3-L).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    /// Label used in the output; derived from the parameters when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub engine: Engine,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default)]
    pub noise: NoiseMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl EstimatorSpec {
    pub fn new(engine: Engine) -> Self {
        EstimatorSpec {
            name: None,
            engine,
            epsilon: None,
            eta: None,
            a: None,
            b: None,
            noise: NoiseMode::Known,
            max_iters: None,
            tol: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    /// The prior actually used, after defaults.
    pub fn prior(&self) -> PriorConfig<f64> {
        match self.engine {
            Engine::EmRvm | Engine::FastRvm => PriorConfig::rvm(),
            Engine::EmLaplace => PriorConfig::two_layer(1.0, self.eta.unwrap_or(1.0)),
            // the shared rate is estimated; this is only its starting value
            Engine::FastLaplace => PriorConfig::two_layer(1.0, 0.0),
            e if e.three_layer() => PriorConfig::three_layer(
                self.epsilon.unwrap_or(0.0),
                self.a.unwrap_or(1.0),
                self.b.unwrap_or(0.1),
            ),
            _ => PriorConfig::two_layer(self.epsilon.unwrap_or(0.5), self.eta.unwrap_or(1.0)),
        }
    }

    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let p = self.prior();
        match self.engine {
            Engine::EmRvm | Engine::FastRvm | Engine::FastLaplace => self.engine.to_string(),
            Engine::EmLaplace => format!("{}(eta={})", self.engine, p.eta.get(0)),
            e if e.three_layer() => {
                format!("{}(eps={},a={},b={})", e, p.epsilon, p.a.get(0), p.b.get(0))
            }
            e => format!("{}(eps={},eta={})", e, p.epsilon, p.eta.get(0)),
        }
    }

    /// Full configuration as compact JSON, for provenance columns.
    pub fn config_json(&self) -> String {
        let mut resolved = self.clone();
        let p = self.prior();
        resolved.name = Some(self.label());
        resolved.epsilon = Some(p.epsilon);
        match p.layers {
            sbl::Layers::Two => resolved.eta = Some(p.eta.get(0)),
            sbl::Layers::Three => {
                resolved.a = Some(p.a.get(0));
                resolved.b = Some(p.b.get(0));
            }
        }
        serde_json::to_string(&resolved).expect("estimator specs always serialize")
    }

    fn lambda_mode(&self, lambda: Option<f64>) -> LambdaMode<f64> {
        match (self.noise, lambda) {
            (NoiseMode::Known, Some(l)) => LambdaMode::Known(l),
            _ => LambdaMode::Estimate,
        }
    }

    /// Runs on an observation; `lambda` is the known noise precision, if any.
    pub fn fit<S: Field<Real = f64>>(
        &self,
        obs: &sbl::Observation<S>,
        lambda: Option<f64>,
    ) -> sbl::Result<Fit<S>> {
        let mode = self.lambda_mode(lambda);
        match self.engine {
            Engine::EmRvm | Engine::EmLaplace | Engine::Em2l | Engine::Em3l => {
                sbl::fit_em(obs, &self.em_config(mode))
            }
            Engine::FastRvm | Engine::FastLaplace | Engine::Fast2l | Engine::Fast3l => {
                sbl::fit_fast(obs, &self.fast_config(mode))
            }
            Engine::Vmp2l | Engine::Vmp3l => sbl::fit_vmp(obs, &self.vmp_config(mode)),
        }
    }

    /// Runs on a synthetic instance with its true noise precision.
    pub fn run<S: Field<Real = f64>>(
        &self,
        p: &ProblemInstance<S>,
    ) -> sbl::Result<(Fit<S>, Metrics)> {
        let mode = self.lambda_mode(Some(p.lambda_true));
        match self.engine {
            Engine::EmRvm | Engine::EmLaplace | Engine::Em2l | Engine::Em3l => {
                run_em(p, &self.em_config(mode))
            }
            Engine::FastRvm | Engine::FastLaplace | Engine::Fast2l | Engine::Fast3l => {
                run_fast(p, &self.fast_config(mode))
            }
            Engine::Vmp2l | Engine::Vmp3l => run_vmp(p, &self.vmp_config(mode)),
        }
    }

    fn em_config(&self, mode: LambdaMode<f64>) -> EmConfig<f64> {
        let mut c = EmConfig::new(self.prior(), mode);
        if let Some(n) = self.max_iters {
            c.max_iters = n;
        }
        if let Some(t) = self.tol {
            c.tol = t;
        }
        c
    }

    fn fast_config(&self, mode: LambdaMode<f64>) -> FastConfig<f64> {
        let mut c = match self.engine {
            Engine::FastLaplace => FastConfig::laplace(mode),
            _ => FastConfig::new(self.prior(), mode),
        };
        if let Some(n) = self.max_iters {
            c.max_iters = n;
        }
        if let Some(t) = self.tol {
            c.tol = t;
        }
        c
    }

    fn vmp_config(&self, mode: LambdaMode<f64>) -> VmpConfig<f64> {
        let mut c = VmpConfig::new(self.prior(), mode);
        if let Some(n) = self.max_iters {
            c.max_iters = n;
        }
        if let Some(t) = self.tol {
            c.tol = t;
        }
        c
    }
}
