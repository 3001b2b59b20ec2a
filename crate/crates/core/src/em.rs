//! Generalized EM estimator.
//!
//! E-step: Gaussian posterior of the active weights. M-step: sequential
//! closed-form maximization of the expected complete-data log-likelihood in
//! `γ`, then `η` (3-L only), then `λ`. Components whose `γ` falls below a
//! threshold are pruned permanently.

use num_traits::{Float, One, Zero};

use crate::error::{config, Result};
use crate::estimator::{
    gaussian_posterior, log_evidence, xlogy, Fit, FitFlag, GaussianPosterior, LambdaMode,
    Precomputed, TraceStep, LAMBDA_MAX,
};
use crate::model::{evaluate, Metrics, Observation, ProblemInstance};
use crate::priors::{Layers, PriorConfig};
use crate::scalar::{Field, FieldKind, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig<T> {
    pub prior: PriorConfig<T>,
    pub prune_gamma: T,
    pub max_iters: usize,
    /// Relative change of the objective that ends the iteration.
    pub tol: T,
    pub lambda_mode: LambdaMode<T>,
}

impl<T: Real> EmConfig<T> {
    pub fn new(prior: PriorConfig<T>, lambda_mode: LambdaMode<T>) -> Self {
        EmConfig {
            prior,
            prune_gamma: T::lit(1e-5),
            max_iters: 1000,
            tol: T::lit(1e-8),
            lambda_mode,
        }
    }

    fn validate(&self, l: usize, rho: T) -> Result<()> {
        self.prior.validate(l)?;
        if !(self.prune_gamma > T::zero()) {
            return Err(config("prune_gamma must be positive"));
        }
        if self.max_iters == 0 {
            return Err(config("max_iters must be at least 1"));
        }
        if !(self.tol >= T::zero()) {
            return Err(config("tol must be >= 0"));
        }
        if let LambdaMode::Known(lam) = self.lambda_mode {
            if !(lam > T::zero() && lam.is_finite()) {
                return Err(config(format!("known lambda must be positive, got {lam}")));
            }
        }
        let eps = self.prior.epsilon;
        match self.prior.layers {
            Layers::Two => {
                let has_zero_eta = (0..l).any(|i| self.prior.eta.get(i) == T::zero());
                if has_zero_eta && eps >= T::one() + rho {
                    return Err(config(
                        "eta = 0 with epsilon >= 1 + rho has no finite gamma update",
                    ));
                }
            }
            Layers::Three => {
                if (0..l).any(|i| eps + self.prior.a.get(i) < T::one()) {
                    return Err(config("3-L EM needs epsilon + a >= 1"));
                }
            }
        }
        Ok(())
    }
}

/// Gaussian posterior of the active weights: `Σ = (λ H_a^H H_a + Γ^{-1})^{-1}`,
/// `μ = λ Σ H_a^H y`.
pub fn e_step<S: Field>(
    obs: &Observation<S>,
    active: &[usize],
    gamma: &[S::Real],
    lambda: S::Real,
) -> Result<GaussianPosterior<S>> {
    let pre = Precomputed::new(obs);
    let inv: Vec<S::Real> = gamma.iter().map(|g| g.recip()).collect();
    gaussian_posterior(&pre, active, &inv, lambda)
}

/// Mode of the `γ_l` update given `⟨|α_l|²⟩`.
///
/// Evaluated in a cancellation-free form; `η = 0` gives `ρm / (1 + ρ - ε)`,
/// and `+∞` when that limit does not exist.
pub fn m_step_gamma<T: Real>(second_moment: T, eta: T, epsilon: T, field: FieldKind) -> T {
    let rho = T::lit(field.rho());
    let two = T::lit(2.0);
    let b = epsilon - rho - T::one();
    let rm = rho * second_moment;
    let g = if eta == T::zero() {
        if b >= T::zero() {
            return T::infinity();
        }
        -rm / b
    } else {
        let d = (b * b + T::lit(4.0) * eta * rm).sqrt();
        if b >= T::zero() {
            (b + d) / (two * eta)
        } else {
            two * rm / (d - b)
        }
    };
    g.max(T::zero())
}

/// Mode of the `η_l` update, `(ε + a - 1) / (γ + b)`.
pub fn m_step_eta<T: Real>(gamma: T, epsilon: T, a: T, b: T) -> Result<T> {
    let num = epsilon + a - T::one();
    if num < T::zero() {
        return Err(config(format!(
            "eta mode undefined for epsilon + a = {} < 1",
            epsilon + a
        )));
    }
    Ok(num / (gamma + b))
}

/// `M / ⟨‖y - Hα‖²⟩`, clamped to [`LAMBDA_MAX`].
pub fn m_step_lambda<T: Real>(residual_expect: T, m: usize) -> T {
    let max = T::lit(LAMBDA_MAX);
    if !(residual_expect > T::zero()) {
        return max;
    }
    (T::lit(m as f64) / residual_expect).min(max)
}

/// `log p(y, γ, η, λ)` up to constants, restricted to the active set.
fn objective<S: Field>(
    pre: &Precomputed<S>,
    active: &[usize],
    gamma: &[S::Real],
    eta: &[S::Real],
    lambda: S::Real,
    prior: &PriorConfig<S::Real>,
    post: &GaussianPosterior<S>,
) -> S::Real {
    let eps = prior.epsilon;
    let one = S::Real::one();
    let mut v = log_evidence(pre, active, gamma, lambda, post);
    for (k, &i) in active.iter().enumerate() {
        let (g, e) = (gamma[k], eta[k]);
        v += xlogy(eps - one, g) - e * g;
        v += match prior.layers {
            Layers::Two => xlogy(eps, e),
            Layers::Three => xlogy(eps + prior.a.get(i) - one, e) - prior.b.get(i) * e,
        };
    }
    v
}

/// Runs GEM on an observation.
pub fn fit_em<S: Field>(obs: &Observation<S>, cfg: &EmConfig<S::Real>) -> Result<Fit<S>> {
    let rho = S::rho();
    let l = obs.l();
    cfg.validate(l, rho)?;
    let pre = Precomputed::new(obs);
    let prior = &cfg.prior;
    let eps = prior.epsilon;

    let mut active: Vec<usize> = (0..l).collect();
    let mut gamma = vec![S::Real::one(); l];
    let mut eta: Vec<S::Real> = (0..l)
        .map(|i| match prior.layers {
            Layers::Two => prior.eta.get(i),
            Layers::Three => prior.a.get(i) / prior.b.get(i),
        })
        .collect();
    let mut lambda = match cfg.lambda_mode {
        LambdaMode::Known(v) => v,
        LambdaMode::Estimate => m_step_lambda(pre.yy, pre.m),
    };
    let inv = |g: &[S::Real]| g.iter().map(|x| x.recip()).collect::<Vec<_>>();
    let mut post = gaussian_posterior(&pre, &active, &inv(&gamma), lambda)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let before = objective(&pre, &active, &gamma, &eta, lambda, prior, &post);

        for k in 0..active.len() {
            let m2 = post.sigma[(k, k)].re() + post.mu[k].abs_sq();
            gamma[k] = m_step_gamma(m2, eta[k], eps, S::KIND);
            if prior.layers == Layers::Three {
                let i = active[k];
                eta[k] = m_step_eta(gamma[k], eps, prior.a.get(i), prior.b.get(i))?;
            }
        }
        if cfg.lambda_mode == LambdaMode::Estimate {
            let res = pre.expected_residual(&active, &post.mu, &post.sigma);
            lambda = m_step_lambda(res, pre.m);
        }

        let all_positive = gamma.iter().all(|&g| g > S::Real::zero());
        let mut change = S::Real::infinity();
        let refreshed = if all_positive {
            let next = gaussian_posterior(&pre, &active, &inv(&gamma), lambda)?;
            let after = objective(&pre, &active, &gamma, &eta, lambda, prior, &next);
            trace.push(TraceStep { before, after });
            change = (after - before).abs() / after.abs().max(S::Real::one());
            Some(next)
        } else {
            None
        };

        let keep: Vec<usize> = (0..active.len())
            .filter(|&k| gamma[k] >= cfg.prune_gamma)
            .collect();
        if keep.len() < active.len() {
            active = keep.iter().map(|&k| active[k]).collect();
            gamma = keep.iter().map(|&k| gamma[k]).collect();
            eta = keep.iter().map(|&k| eta[k]).collect();
            if active.is_empty() {
                return Ok(Fit {
                    alpha: vec![S::zero(); l],
                    active,
                    gamma,
                    iterations,
                    converged: true,
                    flag: FitFlag::AllPruned,
                    lambda,
                    trace,
                });
            }
            post = gaussian_posterior(&pre, &active, &inv(&gamma), lambda)?;
            continue;
        }
        post = refreshed.expect("all gammas are above the prune threshold");
        if change <= cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(Fit {
        alpha: Fit::scatter(l, &active, &post.mu),
        active,
        gamma,
        iterations,
        converged,
        flag: if converged { FitFlag::Ok } else { FitFlag::MaxIters },
        lambda,
        trace,
    })
}

/// [`fit_em`] on a synthetic problem, with metrics against its ground truth.
pub fn run_em<S: Field>(
    p: &ProblemInstance<S>,
    cfg: &EmConfig<S::Real>,
) -> Result<(Fit<S>, Metrics)> {
    let fit = fit_em(&p.obs, cfg)?;
    let metrics = evaluate(&fit.alpha, p, fit.iterations)?;
    Ok((fit, metrics))
}
