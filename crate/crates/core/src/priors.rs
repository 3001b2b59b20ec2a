//! Hierarchical Bessel-K priors: densities, penalties and scalar shrinkage rules.
//!
//! The two-layer (2-L) prior mixes a zero-mean Gaussian over a gamma-distributed
//! variance `γ ~ Ga(ε, η)`. The three-layer (3-L) prior additionally draws the
//! rate `η ~ Ga(a, b)`. The field constant `ρ` comes from the scalar type.

use num_traits::{Float, FloatConst, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result, SblError};
use crate::gig::Gig;
use crate::scalar::{Field, Real};
use crate::specfun::{hyper_u, ln_gamma, log_bessel_k};

/// A hyperparameter shared by all components or given per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerComponent<T> {
    Uniform(T),
    Each(Vec<T>),
}

impl<T: Copy> PerComponent<T> {
    pub fn get(&self, l: usize) -> T {
        match self {
            PerComponent::Uniform(v) => *v,
            PerComponent::Each(v) => v[l],
        }
    }

    fn check_len(&self, l: usize, name: &str) -> Result<()> {
        match self {
            PerComponent::Each(v) if v.len() != l => Err(config(format!(
                "{name} has {} entries for {l} components",
                v.len()
            ))),
            _ => Ok(()),
        }
    }

    fn values(&self) -> Box<dyn Iterator<Item = T> + '_> {
        match self {
            PerComponent::Uniform(v) => Box::new(std::iter::once(*v)),
            PerComponent::Each(v) => Box::new(v.iter().copied()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layers {
    Two,
    Three,
}

/// Prior on the weights and noise precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig<T> {
    pub layers: Layers,
    /// Gamma shape of the variances `γ_l`.
    pub epsilon: T,
    /// Gamma rates `η_l` (2-L only).
    pub eta: PerComponent<T>,
    /// Shape and rate of the hyperprior on `η_l` (3-L only).
    pub a: PerComponent<T>,
    pub b: PerComponent<T>,
    /// Gamma prior `Ga(c, d)` on the noise precision (variational engine only).
    pub lambda_c: T,
    pub lambda_d: T,
}

impl<T: Real> PriorConfig<T> {
    pub fn two_layer(epsilon: T, eta: T) -> Self {
        PriorConfig {
            layers: Layers::Two,
            epsilon,
            eta: PerComponent::Uniform(eta),
            a: PerComponent::Uniform(T::one()),
            b: PerComponent::Uniform(T::one()),
            lambda_c: T::zero(),
            lambda_d: T::zero(),
        }
    }

    pub fn three_layer(epsilon: T, a: T, b: T) -> Self {
        PriorConfig {
            layers: Layers::Three,
            epsilon,
            eta: PerComponent::Uniform(T::zero()),
            a: PerComponent::Uniform(a),
            b: PerComponent::Uniform(b),
            lambda_c: T::zero(),
            lambda_d: T::zero(),
        }
    }

    /// `ε = 1, η = 0`: the relevance vector machine hyperprior.
    pub fn rvm() -> Self {
        Self::two_layer(T::one(), T::zero())
    }

    /// `ε = η = 0`: the Jeffreys limit.
    pub fn jeffreys() -> Self {
        Self::two_layer(T::zero(), T::zero())
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        if !(self.epsilon >= T::zero() && self.epsilon.is_finite()) {
            return Err(config(format!("epsilon must be finite and >= 0, got {}", self.epsilon)));
        }
        match self.layers {
            Layers::Two => {
                self.eta.check_len(l, "eta")?;
                if self.eta.values().any(|e| !(e >= T::zero() && e.is_finite())) {
                    return Err(config("eta entries must be finite and >= 0"));
                }
            }
            Layers::Three => {
                self.a.check_len(l, "a")?;
                self.b.check_len(l, "b")?;
                if self.a.values().chain(self.b.values()).any(|v| !(v > T::zero() && v.is_finite()))
                {
                    return Err(config("a and b entries must be finite and > 0"));
                }
            }
        }
        if !(self.lambda_c >= T::zero() && self.lambda_d >= T::zero()) {
            return Err(config("noise prior constants must be >= 0"));
        }
        Ok(())
    }

    pub fn component(&self, l: usize) -> ComponentPrior<T> {
        match self.layers {
            Layers::Two => ComponentPrior::TwoLayer {
                epsilon: self.epsilon,
                eta: self.eta.get(l),
            },
            Layers::Three => ComponentPrior::ThreeLayer {
                epsilon: self.epsilon,
                a: self.a.get(l),
                b: self.b.get(l),
            },
        }
    }
}

/// Prior of a single weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentPrior<T> {
    TwoLayer { epsilon: T, eta: T },
    ThreeLayer { epsilon: T, a: T, b: T },
}

/// Marginal 2-L density of one weight.
///
/// `ε = 0` or `η = 0` give an improper density and are rejected; use
/// [`log_penalty`] for those.
pub fn pdf_2l<S: Field>(alpha: S, epsilon: S::Real, eta: S::Real) -> Result<S::Real> {
    let rho = S::rho();
    if !(epsilon > S::Real::zero() && eta > S::Real::zero()) {
        return Err(SblError::ImproperDensity(format!(
            "2-L density needs epsilon > 0 and eta > 0, got epsilon = {epsilon}, eta = {eta}"
        )));
    }
    let two = S::Real::lit(2.0);
    let nu = epsilon - rho;
    let c = two * (rho * eta).sqrt();
    let half_sum = (epsilon + rho) / two;
    let log_front = two.ln() + half_sum * rho.ln() - rho * S::Real::PI().ln() - ln_gamma(epsilon)
        + half_sum * eta.ln();
    let r = alpha.modulus();
    let log_kernel = if r > S::Real::zero() {
        nu * r.ln() + log_bessel_k(nu, c * r)?
    } else if nu > S::Real::zero() {
        ln_gamma(nu) + (nu - S::Real::one()) * two.ln() - nu * c.ln()
    } else {
        return Err(SblError::Pole(format!(
            "2-L density is unbounded at 0 for epsilon = {epsilon} <= rho"
        )));
    };
    Ok((log_front + log_kernel).exp())
}

/// Marginal 3-L density of one weight.
pub fn pdf_3l<S: Field>(alpha: S, epsilon: S::Real, a: S::Real, b: S::Real) -> Result<S::Real> {
    let rho = S::rho();
    let one = S::Real::one();
    if !(epsilon > S::Real::zero()) {
        return Err(SblError::ImproperDensity(format!(
            "3-L density needs epsilon > 0, got {epsilon}"
        )));
    }
    if !(a > S::Real::zero() && b > S::Real::zero()) {
        return Err(domain(format!("3-L density needs a, b > 0, got a = {a}, b = {b}")));
    }
    let log_front = rho * (rho / (S::Real::PI() * b)).ln() + ln_gamma(epsilon + a) + ln_gamma(a + rho)
        - ln_gamma(epsilon)
        - ln_gamma(a);
    let z = rho * alpha.abs_sq() / b;
    // z^{ε-ρ} U(ε+a; ε-ρ+1; z) = U(a+ρ; ρ-ε+1; z)
    let log_kernel = if z > S::Real::zero() {
        hyper_u(a + rho, rho - epsilon + one, z)?.ln()
    } else if epsilon > rho {
        ln_gamma(epsilon - rho) - ln_gamma(a + epsilon)
    } else {
        return Err(SblError::Pole(format!(
            "3-L density is unbounded at 0 for epsilon = {epsilon} <= rho"
        )));
    };
    Ok((log_front + log_kernel).exp())
}

/// `-log p(α_l)` up to a constant independent of `α_l`.
pub fn component_penalty<S: Field>(alpha: S, prior: ComponentPrior<S::Real>) -> Result<S::Real> {
    let rho = S::rho();
    let zero = S::Real::zero();
    let one = S::Real::one();
    let two = S::Real::lit(2.0);
    let r = alpha.modulus();
    let pole = |eps: S::Real| {
        SblError::Pole(format!("zero weight with epsilon = {eps} sits on the pole of the prior"))
    };
    match prior {
        ComponentPrior::TwoLayer { epsilon, eta } => {
            let nu = epsilon - rho;
            if eta > zero {
                let c = two * (rho * eta).sqrt();
                if r > zero {
                    Ok(-(nu * r.ln() + log_bessel_k(nu, c * r)?))
                } else if nu > zero {
                    Ok(-(ln_gamma(nu) + (nu - one) * two.ln() - nu * c.ln()))
                } else {
                    Err(pole(epsilon))
                }
            } else if nu > zero {
                Ok(zero)
            } else if nu < zero {
                if r > zero {
                    Ok(-two * nu * r.ln())
                } else {
                    Err(pole(epsilon))
                }
            } else {
                Err(config("eta = 0 with epsilon = rho gives no usable penalty"))
            }
        }
        ComponentPrior::ThreeLayer { epsilon, a, b } => {
            let z = rho * alpha.abs_sq() / b;
            if z > zero {
                Ok(-hyper_u(a + rho, rho - epsilon + one, z)?.ln())
            } else if epsilon > rho {
                Ok(-(ln_gamma(epsilon - rho) - ln_gamma(a + epsilon)))
            } else {
                Err(pole(epsilon))
            }
        }
    }
}

/// Penalty `Q(α) = -Σ_l log p(α_l)` up to an additive constant.
///
/// In the Jeffreys limit this is `2ρ Σ log|α_l|`.
pub fn log_penalty<S: Field>(alpha: &[S], prior: &PriorConfig<S::Real>) -> Result<S::Real> {
    prior.validate(alpha.len())?;
    alpha
        .iter()
        .enumerate()
        .map(|(l, &a)| component_penalty(a, prior.component(l)))
        .sum()
}

/// `sign(z) max(0, |z| - λ^{-1} sqrt(η/ρ))`, with `sign(z) = z/|z|`.
pub fn soft_threshold<S: Field>(z: S, eta: S::Real, lambda: S::Real) -> S {
    let thr = (eta / S::rho()).sqrt() / lambda;
    let r = z.modulus();
    if r <= thr {
        S::zero()
    } else {
        z.scale((r - thr) / r)
    }
}

/// `E[1/γ | α]` under the component prior; `+∞` at a pole.
pub fn posterior_inv_gamma<S: Field>(
    abs_sq: S::Real,
    prior: ComponentPrior<S::Real>,
) -> Result<S::Real> {
    let rho = S::rho();
    let zero = S::Real::zero();
    let one = S::Real::one();
    let two = S::Real::lit(2.0);
    match prior {
        ComponentPrior::TwoLayer { epsilon, eta } => {
            let (p, u, v) = (epsilon - rho, two * eta, two * rho * abs_sq);
            if u == zero && p >= zero {
                // flat penalty: no shrinkage
                return Ok(zero);
            }
            if v == zero && p <= one {
                return Ok(S::Real::infinity());
            }
            Gig::new(p, u, v)?.inv_mean()
        }
        ComponentPrior::ThreeLayer { epsilon, a, b } => {
            let z = rho * abs_sq / b;
            let (aa, bb) = (a + rho, rho - epsilon + one);
            if z == zero {
                if bb < zero {
                    let ratio = (ln_gamma(-bb) - ln_gamma(aa - bb)
                        - (ln_gamma(one - bb) - ln_gamma(aa - bb + one)))
                        .exp();
                    return Ok(aa / b * ratio);
                }
                return Ok(S::Real::infinity());
            }
            Ok(aa / b * hyper_u(aa + one, bb + one, z)? / hyper_u(aa, bb, z)?)
        }
    }
}

/// Outcome of the scalar fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMap<S> {
    pub value: S,
    pub iterations: usize,
    pub converged: bool,
}

pub const SCALAR_MAP_TOL: f64 = 1e-10;
pub const SCALAR_MAP_MAX_ITERS: usize = 500;

/// MAP estimate of one weight observed through an orthonormal dictionary:
/// approximately minimizes `ρλ|z - α|² + Q(α)`.
///
/// Iterates `α ← z / (1 + E[1/γ | α] / λ)` from `α = z`, the EM scheme that
/// treats `γ` as missing data.
pub fn scalar_map_orthonormal<S: Field>(
    z: S,
    prior: ComponentPrior<S::Real>,
    lambda: S::Real,
) -> Result<ScalarMap<S>> {
    if !(lambda > S::Real::zero()) {
        return Err(domain(format!("lambda must be positive, got {lambda}")));
    }
    let tol = S::Real::lit(SCALAR_MAP_TOL);
    let one = S::Real::one();
    let mut alpha = z;
    for it in 1..=SCALAR_MAP_MAX_ITERS {
        if alpha == S::zero() {
            return Ok(ScalarMap {
                value: alpha,
                iterations: it - 1,
                converged: true,
            });
        }
        let w = posterior_inv_gamma::<S>(alpha.abs_sq(), prior)?;
        let next = if w.is_infinite() {
            S::zero()
        } else {
            z.scale((one + w / lambda).recip())
        };
        let step = (next - alpha).modulus();
        alpha = next;
        if step <= tol {
            return Ok(ScalarMap {
                value: alpha,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(ScalarMap {
        value: alpha,
        iterations: SCALAR_MAP_MAX_ITERS,
        converged: false,
    })
}
