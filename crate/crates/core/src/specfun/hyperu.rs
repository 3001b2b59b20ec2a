//! Tricomi's confluent hypergeometric function `U(a; b; x)`.
//!
//! Evaluated from the Laplace integral
//! `U = x^{-a} / Γ(a) ∫_0^∞ e^{-τ} τ^{a-1} (1 + τ/x)^{b-a-1} dτ`
//! with adaptive quadrature. On `[0, 1]` the substitution `s = τ^a` removes
//! the endpoint singularity when `a < 1`.

use super::gamma::ln_gamma;
use crate::error::{domain, Result};
use crate::quad::{integrate, integrate_to_infinity};
use crate::scalar::Real;

/// `U(a; b; x)` for `a >= 0`, real `b`, `x > 0`.
pub fn hyper_u<T: Real>(a: T, b: T, x: T) -> Result<T> {
    if !(a.is_finite() && b.is_finite() && x.is_finite()) {
        return Err(domain("hyper_u requires finite arguments"));
    }
    if x <= T::zero() {
        return Err(domain(format!("hyper_u requires x > 0, got {x}")));
    }
    if a < T::zero() {
        return Err(domain(format!("hyper_u requires a >= 0, got {a}")));
    }
    if a == T::zero() {
        return Ok(T::one());
    }
    let one = T::one();
    let c = b - a - one;
    let g = move |tau: T| (one + tau / x).powf(c);
    let rel = (T::epsilon() * T::lit(1000.0)).max(T::lit(1e-13));
    let abs = T::min_positive_value();

    // ∫_0^1, with prefactor 1/Γ(a) folded into 1/Γ(a+1) after substitution
    let (head, head_prefactor) = if a < one {
        let inv_a = a.recip();
        let r = integrate(
            |s: T| {
                let tau = s.powf(inv_a);
                (-tau).exp() * g(tau)
            },
            T::zero(),
            one,
            abs,
            rel,
        )?;
        (r.value, -ln_gamma(a + one))
    } else {
        let r = integrate(
            |tau: T| (-tau).exp() * tau.powf(a - one) * g(tau),
            T::zero(),
            one,
            abs,
            rel,
        )?;
        (r.value, -ln_gamma(a))
    };
    let tail = integrate_to_infinity(
        |tau: T| {
            let v = (-tau + (a - one) * tau.ln()).exp();
            if v == T::zero() {
                v
            } else {
                v * g(tau)
            }
        },
        one,
        abs,
        rel,
    )?
    .value;
    let lx = -a * x.ln();
    let head_term = if head > T::zero() {
        (head.ln() + head_prefactor + lx).exp()
    } else {
        T::zero()
    };
    let tail_term = if tail > T::zero() {
        (tail.ln() - ln_gamma(a) + lx).exp()
    } else {
        T::zero()
    };
    Ok(head_term + tail_term)
}
