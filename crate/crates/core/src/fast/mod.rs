//! Sequential (greedy) type-II estimator.
//!
//! Starting from an empty model, each iteration scores every column by the
//! gain of adding it, re-estimating its variance, or deleting it, and
//! executes the single best move. Per-column maximizers come from the
//! stationarity cubic in [`cubic`]; the bookkeeping lives in [`state`].

pub mod cubic;
pub mod state;

use num_traits::{Float, One, Zero};

use crate::em::{m_step_eta, m_step_lambda};
use crate::error::{config, Result, SblError};
use crate::estimator::{Fit, FitFlag, LambdaMode, TraceStep};
use crate::model::{evaluate, Metrics, Observation, ProblemInstance};
use crate::priors::{Layers, PriorConfig};
use crate::scalar::{Field, Real};

pub use cubic::{
    analyze, cubic_coefficients, delta_objective, gamma_fastlaplace, gamma_fastrvm,
    gamma_stationary, objective_l, objective_l_derivative, CubicAnalysis, SparsityFactors,
};
pub use state::{FastState, REFRESH_INTERVAL};

/// Columns with `s` below this are never scored.
pub const MIN_SPARSITY: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct FastConfig<T> {
    pub prior: PriorConfig<T>,
    pub max_iters: usize,
    /// Stop once the best gain is below `tol · |objective|`.
    pub tol: T,
    pub lambda_mode: LambdaMode<T>,
    /// Iterations before the noise precision is first re-estimated.
    pub lambda_burn_in: usize,
    /// Period of the full `η` sweep in the 3-L model.
    pub eta_sweep_every: usize,
    /// Share one `η = (n - 1) / Σ γ` across components (requires `ε = 1`).
    pub laplace_shared_eta: bool,
}

impl<T: Real> FastConfig<T> {
    pub fn new(prior: PriorConfig<T>, lambda_mode: LambdaMode<T>) -> Self {
        FastConfig {
            prior,
            max_iters: 1000,
            tol: T::lit(1e-8),
            lambda_mode,
            lambda_burn_in: 10,
            eta_sweep_every: 10,
            laplace_shared_eta: false,
        }
    }

    pub fn rvm(lambda_mode: LambdaMode<T>) -> Self {
        Self::new(PriorConfig::rvm(), lambda_mode)
    }

    /// `ε = 1` with the shared rate re-estimated from the active variances.
    pub fn laplace(lambda_mode: LambdaMode<T>) -> Self {
        FastConfig {
            laplace_shared_eta: true,
            ..Self::new(PriorConfig::two_layer(T::one(), T::zero()), lambda_mode)
        }
    }

    fn validate(&self, l: usize, rho: T) -> Result<()> {
        self.prior.validate(l)?;
        let eps = self.prior.epsilon;
        if eps > T::one() + rho {
            return Err(SblError::UnsupportedRegime {
                epsilon: eps.to_f64_lossy(),
                limit: (T::one() + rho).to_f64_lossy(),
            });
        }
        if self.max_iters == 0 {
            return Err(config("max_iters must be at least 1"));
        }
        if self.eta_sweep_every == 0 {
            return Err(config("eta_sweep_every must be at least 1"));
        }
        if !(self.tol >= T::zero()) {
            return Err(config("tol must be >= 0"));
        }
        if let LambdaMode::Known(lam) = self.lambda_mode {
            if !(lam > T::zero() && lam.is_finite()) {
                return Err(config(format!("known lambda must be positive, got {lam}")));
            }
        }
        match self.prior.layers {
            Layers::Two if self.laplace_shared_eta => {
                if eps != T::one() {
                    return Err(config("shared Laplace rate requires epsilon = 1"));
                }
            }
            Layers::Two => {
                if eps == T::one() + rho && (0..l).any(|i| self.prior.eta.get(i) == T::zero()) {
                    return Err(config("eta = 0 with epsilon = 1 + rho leaves gamma unbounded"));
                }
            }
            Layers::Three => {
                if self.laplace_shared_eta {
                    return Err(config("shared Laplace rate is a 2-L option"));
                }
                if (0..l).any(|i| eps + self.prior.a.get(i) < T::one()) {
                    return Err(config("3-L needs epsilon + a >= 1"));
                }
            }
        }
        Ok(())
    }
}

enum Move<T> {
    Add(usize, T),
    Reestimate(usize, T),
    Delete(usize),
}

/// Objective with `η` and `λ` fixed: log-evidence plus the active prior terms.
fn objective<S: Field>(st: &FastState<S>, eta: &[S::Real], eps: S::Real) -> Result<S::Real> {
    let mut v = st.log_evidence()?;
    for (&i, &g) in st.active().iter().zip(st.gamma()) {
        v += (eps - S::Real::one()) * g.ln() - eta[i] * g;
    }
    Ok(v)
}

fn shared_eta<T: Real>(gamma: &[T]) -> T {
    let n = gamma.len();
    if n <= 1 {
        return T::zero();
    }
    let sum = gamma.iter().fold(T::zero(), |a, &b| a + b);
    T::lit((n - 1) as f64) / sum
}

/// Runs the sequential scheme on an observation.
pub fn fit_fast<S: Field>(obs: &Observation<S>, cfg: &FastConfig<S::Real>) -> Result<Fit<S>> {
    let l = obs.l();
    cfg.validate(l, S::rho())?;
    let prior = &cfg.prior;
    let eps = prior.epsilon;
    let eta_mode = |i: usize, g: S::Real| m_step_eta(g, eps, prior.a.get(i), prior.b.get(i));

    let mut eta: Vec<S::Real> = match prior.layers {
        Layers::Two if cfg.laplace_shared_eta => vec![S::Real::zero(); l],
        Layers::Two => (0..l).map(|i| prior.eta.get(i)).collect(),
        Layers::Three => (0..l).map(|i| eta_mode(i, S::Real::zero())).collect::<Result<_>>()?,
    };
    let lambda0 = match cfg.lambda_mode {
        LambdaMode::Known(v) => v,
        LambdaMode::Estimate => m_step_lambda(crate::scalar::norm_sq(&obs.y), obs.m()),
    };
    let mut st = FastState::new(obs, lambda0)?;
    let min_s = S::Real::lit(MIN_SPARSITY);
    let mut trace = Vec::new();
    let mut moves = 0;
    let mut converged = false;
    let mut flag = FitFlag::Ok;

    while moves < cfg.max_iters {
        let before = objective(&st, &eta, eps)?;
        let mut best: Option<(S::Real, Move<S::Real>)> = None;
        for i in 0..l {
            let sf = st.factors(i);
            if !(sf.s > min_s) {
                continue;
            }
            let g = gamma_stationary(sf, eta[i], eps, S::KIND)?;
            let cur = st.gamma_of(i);
            let (gain, mv) = match cur {
                None if g > S::Real::zero() => {
                    (objective_l(g, sf, eta[i], eps, S::KIND)?, Move::Add(i, g))
                }
                None => continue,
                Some(c) if g > S::Real::zero() => (
                    delta_objective(c, g, sf, eta[i], eps, S::KIND)?,
                    Move::Reestimate(i, g),
                ),
                Some(c) => (-objective_l(c, sf, eta[i], eps, S::KIND)?, Move::Delete(i)),
            };
            if best.as_ref().is_none_or(|(b, _)| gain > *b) {
                best = Some((gain, mv));
            }
        }
        let threshold = cfg.tol * before.abs();
        let Some((gain, mv)) = best.filter(|(g, _)| *g > threshold) else {
            if moves == 0 {
                flag = FitFlag::NoImprovingCandidate;
            }
            converged = true;
            break;
        };
        debug_assert!(gain.is_finite());
        moves += 1;
        let moved = match mv {
            Move::Add(i, g) => {
                st.add(i, g)?;
                i
            }
            Move::Reestimate(i, g) => {
                st.reestimate(i, g)?;
                i
            }
            Move::Delete(i) => {
                st.delete(i)?;
                i
            }
        };
        let after = objective(&st, &eta, eps)?;
        trace.push(TraceStep { before, after });

        match prior.layers {
            Layers::Two if cfg.laplace_shared_eta => {
                let e = shared_eta(st.gamma());
                eta.iter_mut().for_each(|v| *v = e);
            }
            Layers::Two => {}
            Layers::Three => {
                if moves % cfg.eta_sweep_every == 0 {
                    for (i, e) in eta.iter_mut().enumerate() {
                        *e = eta_mode(i, st.gamma_of(i).unwrap_or(S::Real::zero()))?;
                    }
                } else {
                    eta[moved] = eta_mode(moved, st.gamma_of(moved).unwrap_or(S::Real::zero()))?;
                }
            }
        }
        if cfg.lambda_mode == LambdaMode::Estimate && moves >= cfg.lambda_burn_in {
            let lam = m_step_lambda(st.expected_residual(), st.m());
            st.set_lambda(lam)?;
        }
    }
    if !converged {
        flag = FitFlag::MaxIters;
    }
    st.recompute()?;
    if st.active().is_empty() && flag == FitFlag::Ok {
        flag = FitFlag::AllPruned;
    }
    Ok(Fit {
        alpha: Fit::scatter(l, st.active(), st.mu()),
        active: st.active().to_vec(),
        gamma: st.gamma().to_vec(),
        iterations: moves,
        converged,
        flag,
        lambda: st.lambda(),
        trace,
    })
}

/// [`fit_fast`] on a synthetic problem, with metrics against its ground truth.
pub fn run_fast<S: Field>(
    p: &ProblemInstance<S>,
    cfg: &FastConfig<S::Real>,
) -> Result<(Fit<S>, Metrics)> {
    let fit = fit_fast(&p.obs, cfg)?;
    let metrics = evaluate(&fit.alpha, p, fit.iterations)?;
    Ok((fit, metrics))
}
