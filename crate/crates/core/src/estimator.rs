//! Types shared by the inference engines.

use num_traits::{Float, FloatConst, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SblError};
use crate::linalg::{Cholesky, Mat};
use crate::model::Observation;
use crate::scalar::{dotc, norm_sq, Field, Real};

/// Upper clamp for estimated noise precisions.
pub const LAMBDA_MAX: f64 = 1e12;

/// Whether the noise precision is given or estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode<T> {
    Known(T),
    Estimate,
}

/// Why a run ended the way it did, beyond plain convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFlag {
    Ok,
    /// Every component was pruned; the estimate is zero.
    AllPruned,
    /// No move improved the objective from the empty model.
    NoImprovingCandidate,
    /// The iteration budget ran out.
    MaxIters,
}

/// Objective value before and after one update with the same active set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep<T> {
    pub before: T,
    pub after: T,
}

/// Result of an estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit<S: Field> {
    /// Full-length estimate, exactly zero off `active`.
    pub alpha: Vec<S>,
    pub active: Vec<usize>,
    /// Variance estimates aligned with `active` (posterior means for the
    /// variational engine).
    pub gamma: Vec<S::Real>,
    pub iterations: usize,
    pub converged: bool,
    pub flag: FitFlag,
    /// Final noise precision (the known value in known mode).
    pub lambda: S::Real,
    pub trace: Vec<TraceStep<S::Real>>,
}

impl<S: Field> Fit<S> {
    pub(crate) fn scatter(l: usize, active: &[usize], mu: &[S]) -> Vec<S> {
        let mut alpha = vec![S::zero(); l];
        for (&i, &v) in active.iter().zip(mu) {
            alpha[i] = v;
        }
        alpha
    }
}

/// Quantities of the observation that every engine reuses.
#[derive(Debug, Clone)]
pub(crate) struct Precomputed<S: Field> {
    pub gram: Mat<S>,
    /// `H^H y`
    pub hty: Vec<S>,
    /// `‖y‖²`
    pub yy: S::Real,
    pub m: usize,
}

impl<S: Field> Precomputed<S> {
    pub fn new(obs: &Observation<S>) -> Self {
        Precomputed {
            gram: obs.h.gram(),
            hty: obs.h.adjoint_mul_vec(&obs.y),
            yy: norm_sq(&obs.y),
            m: obs.m(),
        }
    }

    pub fn hty_on(&self, active: &[usize]) -> Vec<S> {
        active.iter().map(|&i| self.hty[i]).collect()
    }

    /// `‖y - H_a μ‖² + tr(H_a Σ H_a^H)`.
    pub fn expected_residual(&self, active: &[usize], mu: &[S], sigma: &Mat<S>) -> S::Real {
        let g = self.gram.select_square(active);
        let gmu = g.mul_vec(mu);
        let za = self.hty_on(active);
        let two = S::Real::lit(2.0);
        let mut r = self.yy - two * dotc(&za, mu).re() + dotc(mu, &gmu).re();
        for i in 0..active.len() {
            for j in 0..active.len() {
                r += (g[(i, j)] * sigma[(j, i)]).re();
            }
        }
        r.max(S::Real::zero())
    }
}

/// Gaussian posterior of the active weights given per-component precisions.
#[derive(Debug, Clone)]
pub struct GaussianPosterior<S: Field> {
    pub sigma: Mat<S>,
    pub mu: Vec<S>,
    /// `log det(λ G_aa + D)`
    pub log_det_precision: S::Real,
}

/// `Σ = (λ G_aa + diag(d))^{-1}`, `μ = λ Σ H_a^H y`.
pub(crate) fn gaussian_posterior<S: Field>(
    pre: &Precomputed<S>,
    active: &[usize],
    diag: &[S::Real],
    lambda: S::Real,
) -> Result<GaussianPosterior<S>> {
    let mut a = pre.gram.select_square(active);
    for i in 0..active.len() {
        for j in 0..active.len() {
            a[(i, j)] = a[(i, j)].scale(lambda);
        }
        a[(i, i)] += S::from_real(diag[i]);
    }
    let ch = Cholesky::new(&a).map_err(|e| {
        SblError::Numerical(format!(
            "posterior precision not positive definite ({e}); diagonal terms {:?}",
            diag.iter().map(|d| d.to_f64_lossy()).collect::<Vec<_>>()
        ))
    })?;
    let sigma = ch.inverse();
    let za = pre.hty_on(active);
    let mu = ch.solve(&za).into_iter().map(|v| v.scale(lambda)).collect();
    Ok(GaussianPosterior {
        sigma,
        mu,
        log_det_precision: ch.log_det(),
    })
}

/// `log N(y; 0, C)` with `C = λ^{-1} I + H_a Γ H_a^H`, from the posterior of
/// the same configuration.
pub(crate) fn log_evidence<S: Field>(
    pre: &Precomputed<S>,
    active: &[usize],
    gamma: &[S::Real],
    lambda: S::Real,
    post: &GaussianPosterior<S>,
) -> S::Real {
    let rho = S::rho();
    let m = S::Real::lit(pre.m as f64);
    let log_det_c = -m * lambda.ln()
        + gamma.iter().map(|g| g.ln()).fold(S::Real::zero(), |a, b| a + b)
        + post.log_det_precision;
    let za = pre.hty_on(active);
    let quad = lambda * (pre.yy - dotc(&za, &post.mu).re());
    -rho * m * (S::Real::PI() / rho).ln() - rho * log_det_c - rho * quad
}

/// `x ln y` with `0 ln 0 = 0`.
pub(crate) fn xlogy<T: Real>(x: T, y: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * y.ln()
    }
}
