//! Synthetic problems, the support oracle, and evaluation metrics.

mod io;

pub use io::{peek_field, read_problem, write_problem, ProblemFile};

use num_traits::Zero;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result, SblError};
use crate::linalg::{Cholesky, Mat};
use crate::scalar::{norm_sq, Field, FieldKind, Real};

/// Dictionary and observation: everything an estimator may look at.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<S: Field> {
    pub h: Mat<S>,
    pub y: Vec<S>,
}

impl<S: Field> Observation<S> {
    pub fn new(h: Mat<S>, y: Vec<S>) -> Result<Self> {
        if h.rows() != y.len() {
            return Err(SblError::Dimension(format!(
                "dictionary has {} rows but y has {} entries",
                h.rows(),
                y.len()
            )));
        }
        if h.rows() == 0 || h.cols() == 0 {
            return Err(SblError::Dimension("empty dictionary".into()));
        }
        Ok(Observation { h, y })
    }

    pub fn m(&self) -> usize {
        self.h.rows()
    }

    pub fn l(&self) -> usize {
        self.h.cols()
    }
}

/// An observation together with the ground truth that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<S: Field> {
    pub obs: Observation<S>,
    pub alpha_true: Vec<S>,
    pub lambda_true: S::Real,
    /// Sorted indices of the nonzero entries of `alpha_true`.
    pub support_true: Vec<usize>,
}

impl<S: Field> ProblemInstance<S> {
    pub fn new(obs: Observation<S>, alpha_true: Vec<S>, lambda_true: S::Real) -> Result<Self> {
        if alpha_true.len() != obs.l() {
            return Err(SblError::Dimension(format!(
                "alpha_true has {} entries, dictionary has {} columns",
                alpha_true.len(),
                obs.l()
            )));
        }
        if !(lambda_true > S::Real::zero()) {
            return Err(config(format!("noise precision must be positive, got {lambda_true}")));
        }
        let support_true = alpha_true
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != S::zero())
            .map(|(i, _)| i)
            .collect();
        Ok(ProblemInstance {
            obs,
            alpha_true,
            lambda_true,
            support_true,
        })
    }

    pub fn field(&self) -> FieldKind {
        S::KIND
    }
}

/// Parameters of a synthetic problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub m: usize,
    pub l: usize,
    pub k: usize,
    pub snr_db: f64,
    pub field: FieldKind,
    pub seed: u64,
    /// Overrides the SNR-derived noise precision; needed when `k = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_precision: Option<f64>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            m: 100,
            l: 256,
            k: 20,
            snr_db: 30.0,
            field: FieldKind::Complex,
            seed: 0,
            noise_precision: None,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.l == 0 {
            return Err(config("M and L must be positive"));
        }
        if self.k > self.l {
            return Err(config(format!("K = {} exceeds L = {}", self.k, self.l)));
        }
        if !self.snr_db.is_finite() {
            return Err(config("SNR must be finite"));
        }
        if let Some(l) = self.noise_precision {
            if !(l > 0.0 && l.is_finite()) {
                return Err(config(format!("noise precision must be positive, got {l}")));
            }
        }
        Ok(())
    }

    /// Noise precision used for this configuration.
    ///
    /// Without an explicit override, `K = 0` falls back to `10^(snr/10)`.
    pub fn lambda(&self) -> Result<f64> {
        match self.noise_precision {
            Some(l) => Ok(l),
            None => snr_to_noise_precision(self.snr_db, self.k.max(1)),
        }
    }
}

/// Identifier of the SNR convention, written next to every result.
pub const SNR_DEFINITION: &str = "snr=E|(Ha)_m|^2/E|w_m|^2=K*lambda";

/// `λ = 10^(snr/10) / K`: with unit-variance dictionary entries and weights
/// the per-sample signal power is `K`.
pub fn snr_to_noise_precision(snr_db: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(config("SNR is undefined for K = 0; give the noise precision explicitly"));
    }
    Ok(10f64.powf(snr_db / 10.0) / k as f64)
}

/// Draws a problem: iid unit-variance (circular) Gaussian dictionary,
/// uniformly placed support, unit-variance weights, white noise.
pub fn generate_problem<S: Field>(cfg: &GenConfig) -> Result<ProblemInstance<S>> {
    cfg.validate()?;
    if cfg.field != S::KIND {
        return Err(config(format!(
            "configuration asks for a {} problem, scalar type is {}",
            cfg.field,
            S::KIND
        )));
    }
    let lambda = cfg.lambda()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let data: Vec<S> = (0..cfg.m * cfg.l).map(|_| S::sample_unit(&mut rng)).collect();
    let h = Mat::from_col_major(cfg.m, cfg.l, data)?;
    let mut support = index::sample(&mut rng, cfg.l, cfg.k).into_vec();
    support.sort_unstable();
    let mut alpha = vec![S::zero(); cfg.l];
    for &i in &support {
        let mut a = S::sample_unit(&mut rng);
        while a == S::zero() {
            a = S::sample_unit(&mut rng);
        }
        alpha[i] = a;
    }
    let sd = S::Real::lit(lambda.recip().sqrt());
    let mut y = h.mul_vec(&alpha);
    for v in y.iter_mut() {
        *v += S::sample_unit(&mut rng).scale(sd);
    }
    let lambda = S::Real::lit(lambda);
    ProblemInstance::new(Observation::new(h, y)?, alpha, lambda)
}

fn support_gram<S: Field>(p: &ProblemInstance<S>) -> Result<Option<(Mat<S>, Cholesky<S>)>> {
    if p.support_true.is_empty() {
        return Ok(None);
    }
    let ho = p.obs.h.select_cols(&p.support_true);
    let g = ho.gram();
    let ch = Cholesky::new(&g).map_err(|_| {
        SblError::Singular("support columns of the dictionary are linearly dependent".into())
    })?;
    Ok(Some((ho, ch)))
}

/// Least squares restricted to the true support.
pub fn oracle_estimate<S: Field>(p: &ProblemInstance<S>) -> Result<Vec<S>> {
    let mut out = vec![S::zero(); p.obs.l()];
    if let Some((ho, ch)) = support_gram(p)? {
        let x = ch.solve(&ho.adjoint_mul_vec(&p.obs.y));
        for (&i, v) in p.support_true.iter().zip(x) {
            out[i] = v;
        }
    }
    Ok(out)
}

/// `λ^{-1} tr((H_o^H H_o)^{-1})`.
pub fn oracle_mse<S: Field>(p: &ProblemInstance<S>) -> Result<S::Real> {
    match support_gram(p)? {
        None => Ok(S::Real::zero()),
        Some((_, ch)) => Ok(ch.inverse().trace().re() / p.lambda_true),
    }
}

/// Per-run accuracy figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `‖α̂ - α‖²`
    pub mse: f64,
    /// Number of exactly nonzero entries in the estimate.
    pub k_hat: usize,
    pub iterations: usize,
    pub support_exact: bool,
}

pub fn evaluate<S: Field>(
    alpha_hat: &[S],
    p: &ProblemInstance<S>,
    iterations: usize,
) -> Result<Metrics> {
    if alpha_hat.len() != p.alpha_true.len() {
        return Err(SblError::Dimension(format!(
            "estimate has {} entries, truth has {}",
            alpha_hat.len(),
            p.alpha_true.len()
        )));
    }
    let diff: Vec<S> = alpha_hat
        .iter()
        .zip(&p.alpha_true)
        .map(|(&a, &b)| a - b)
        .collect();
    let nonzero: Vec<usize> = alpha_hat
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != S::zero())
        .map(|(i, _)| i)
        .collect();
    Ok(Metrics {
        mse: norm_sq(&diff).to_f64_lossy(),
        k_hat: nonzero.len(),
        iterations,
        support_exact: nonzero == p.support_true,
    })
}
