//! Variational message passing with a mean-field posterior
//! `q(α) q(γ) q(η) q(λ)`.
//!
//! `q(α)` is Gaussian, each `q(γ_l)` is generalized inverse Gaussian,
//! `q(η_l)` (3-L) and `q(λ)` are gamma. Components whose `⟨γ_l^{-1}⟩` blows up
//! are removed for good.

use num_traits::{Float, One, Zero};

use crate::error::{config, Result};
use crate::estimator::{gaussian_posterior, Fit, FitFlag, LambdaMode, Precomputed, LAMBDA_MAX};
use crate::gig::Gig;
use crate::linalg::Mat;
use crate::model::{evaluate, Metrics, Observation, ProblemInstance};
use crate::priors::{Layers, PriorConfig};
use crate::scalar::{Field, FieldKind, Real};

/// Second moments below this prune the component outright.
pub const MIN_SECOND_MOMENT: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct VmpConfig<T> {
    pub prior: PriorConfig<T>,
    pub max_iters: usize,
    /// Largest relative change of any `⟨γ_l^{-1}⟩` that counts as converged.
    pub tol: T,
    /// Components with `⟨γ_l^{-1}⟩` above this are removed.
    pub prune_inv_gamma: T,
    pub lambda_mode: LambdaMode<T>,
}

impl<T: Real> VmpConfig<T> {
    pub fn new(prior: PriorConfig<T>, lambda_mode: LambdaMode<T>) -> Self {
        VmpConfig {
            prior,
            max_iters: 1000,
            tol: T::lit(1e-6),
            prune_inv_gamma: T::lit(1e8),
            lambda_mode,
        }
    }

    fn validate(&self, l: usize, rho: T) -> Result<()> {
        self.prior.validate(l)?;
        if self.max_iters == 0 {
            return Err(config("max_iters must be at least 1"));
        }
        if !(self.tol >= T::zero()) || !(self.prune_inv_gamma > T::zero()) {
            return Err(config("tol must be >= 0 and prune_inv_gamma > 0"));
        }
        if let LambdaMode::Known(lam) = self.lambda_mode {
            if !(lam > T::zero() && lam.is_finite()) {
                return Err(config(format!("known lambda must be positive, got {lam}")));
            }
        }
        if self.prior.layers == Layers::Two
            && self.prior.epsilon >= rho
            && (0..l).any(|i| self.prior.eta.get(i) == T::zero())
        {
            return Err(config("variational 2-L with eta = 0 needs epsilon < rho"));
        }
        Ok(())
    }
}

/// `q(γ_l)` given `⟨|α_l|²⟩`: GIG with `p = ε - ρ`, `u = 2⟨η⟩`, `v = 2ρ⟨|α_l|²⟩`.
/// Returns `(⟨γ⟩, ⟨γ^{-1}⟩)`.
pub fn update_q_gamma<T: Real>(
    second_moment: T,
    eta_mean: T,
    epsilon: T,
    field: FieldKind,
) -> Result<(T, T)> {
    let rho = T::lit(field.rho());
    let two = T::lit(2.0);
    let p = epsilon - rho;
    let q = Gig::new(p, two * eta_mean, two * rho * second_moment)?;
    let inv = if p == T::lit(0.5) && eta_mean > T::zero() && second_moment > T::zero() {
        (eta_mean / (rho * second_moment)).sqrt()
    } else {
        q.inv_mean()?
    };
    Ok((q.mean()?, inv))
}

/// `⟨η_l⟩ = (ε + a) / (⟨γ_l⟩ + b)`.
pub fn update_q_eta<T: Real>(gamma_mean: T, epsilon: T, a: T, b: T) -> T {
    (epsilon + a) / (gamma_mean + b)
}

/// `⟨λ⟩ = (ρM + c) / (ρ⟨‖y - Hα‖²⟩ + d)`, clamped to [`LAMBDA_MAX`].
pub fn update_q_lambda<T: Real>(residual_expect: T, m: usize, c: T, d: T, field: FieldKind) -> T {
    let rho = T::lit(field.rho());
    let den = rho * residual_expect + d;
    let max = T::lit(LAMBDA_MAX);
    if !(den > T::zero()) {
        return max;
    }
    ((rho * T::lit(m as f64) + c) / den).min(max)
}

/// Outcome of one full sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep<T> {
    pub max_rel_change: T,
    pub pruned: usize,
}

/// Moments of the factorized posterior over the surviving components.
#[derive(Debug, Clone)]
pub struct VmpState<S: Field> {
    pre: Precomputed<S>,
    pub active: Vec<usize>,
    pub gamma_mean: Vec<S::Real>,
    pub inv_gamma_mean: Vec<S::Real>,
    pub eta_mean: Vec<S::Real>,
    pub lambda_mean: S::Real,
    pub sigma: Mat<S>,
    pub mu: Vec<S>,
}

impl<S: Field> VmpState<S> {
    pub fn new(obs: &Observation<S>, cfg: &VmpConfig<S::Real>) -> Result<Self> {
        let l = obs.l();
        cfg.validate(l, S::rho())?;
        let pre = Precomputed::new(obs);
        let prior = &cfg.prior;
        let eta_mean = (0..l)
            .map(|i| match prior.layers {
                Layers::Two => prior.eta.get(i),
                Layers::Three => prior.a.get(i) / prior.b.get(i),
            })
            .collect();
        let lambda_mean = match cfg.lambda_mode {
            LambdaMode::Known(v) => v,
            LambdaMode::Estimate => crate::em::m_step_lambda(pre.yy, pre.m),
        };
        let mut st = VmpState {
            pre,
            active: (0..l).collect(),
            gamma_mean: vec![S::Real::one(); l],
            inv_gamma_mean: vec![S::Real::one(); l],
            eta_mean,
            lambda_mean,
            sigma: Mat::zeros(0, 0),
            mu: Vec::new(),
        };
        st.update_q_alpha()?;
        Ok(st)
    }

    /// `Σ = (⟨λ⟩ G_aa + diag⟨γ^{-1}⟩)^{-1}`, `μ = ⟨λ⟩ Σ H_a^H y`.
    pub fn update_q_alpha(&mut self) -> Result<()> {
        let post =
            gaussian_posterior(&self.pre, &self.active, &self.inv_gamma_mean, self.lambda_mean)?;
        self.sigma = post.sigma;
        self.mu = post.mu;
        Ok(())
    }

    /// Updates `q(γ)`, `q(η)`, `q(λ)` from the current `q(α)`, prunes, then
    /// refreshes `q(α)`.
    pub fn sweep(&mut self, cfg: &VmpConfig<S::Real>) -> Result<Sweep<S::Real>> {
        let prior = &cfg.prior;
        let eps = prior.epsilon;
        let n = self.active.len();
        let mut change = S::Real::zero();
        let mut keep = vec![true; n];
        for k in 0..n {
            let i = self.active[k];
            let m2 = self.sigma[(k, k)].re() + self.mu[k].abs_sq();
            if m2 < S::Real::lit(MIN_SECOND_MOMENT) {
                keep[k] = false;
                continue;
            }
            let (g, ig) = update_q_gamma(m2, self.eta_mean[k], eps, S::KIND)?;
            let old = self.inv_gamma_mean[k];
            change = change.max((ig - old).abs() / old);
            self.gamma_mean[k] = g;
            self.inv_gamma_mean[k] = ig;
            if prior.layers == Layers::Three {
                self.eta_mean[k] = update_q_eta(g, eps, prior.a.get(i), prior.b.get(i));
            }
            if !(ig <= cfg.prune_inv_gamma) {
                keep[k] = false;
            }
        }
        if cfg.lambda_mode == LambdaMode::Estimate {
            let res = self.pre.expected_residual(&self.active, &self.mu, &self.sigma);
            self.lambda_mean =
                update_q_lambda(res, self.pre.m, prior.lambda_c, prior.lambda_d, S::KIND);
        }
        let pruned = keep.iter().filter(|k| !**k).count();
        if pruned > 0 {
            retain_by(&mut self.active, &keep);
            retain_by(&mut self.gamma_mean, &keep);
            retain_by(&mut self.inv_gamma_mean, &keep);
            retain_by(&mut self.eta_mean, &keep);
        }
        self.update_q_alpha()?;
        Ok(Sweep {
            max_rel_change: change,
            pruned,
        })
    }
}

fn retain_by<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut it = keep.iter();
    v.retain(|_| *it.next().expect("aligned"));
}

/// Runs variational inference on an observation; the estimate is `⟨α⟩`.
pub fn fit_vmp<S: Field>(obs: &Observation<S>, cfg: &VmpConfig<S::Real>) -> Result<Fit<S>> {
    let l = obs.l();
    let mut st = VmpState::new(obs, cfg)?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let sw = st.sweep(cfg)?;
        if st.active.is_empty() {
            return Ok(Fit {
                alpha: vec![S::zero(); l],
                active: Vec::new(),
                gamma: Vec::new(),
                iterations,
                converged: true,
                flag: FitFlag::AllPruned,
                lambda: st.lambda_mean,
                trace: Vec::new(),
            });
        }
        if sw.pruned == 0 && sw.max_rel_change < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(Fit {
        alpha: Fit::scatter(l, &st.active, &st.mu),
        active: st.active,
        gamma: st.gamma_mean,
        iterations,
        converged,
        flag: if converged { FitFlag::Ok } else { FitFlag::MaxIters },
        lambda: st.lambda_mean,
        trace: Vec::new(),
    })
}

/// [`fit_vmp`] on a synthetic problem, with metrics against its ground truth.
pub fn run_vmp<S: Field>(
    p: &ProblemInstance<S>,
    cfg: &VmpConfig<S::Real>,
) -> Result<(Fit<S>, Metrics)> {
    let fit = fit_vmp(&p.obs, cfg)?;
    let metrics = evaluate(&fit.alpha, p, fit.iterations)?;
    Ok((fit, metrics))
}
