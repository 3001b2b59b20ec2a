//! Generalized inverse Gaussian distribution
//! `p(γ) ∝ γ^{p-1} exp(-(uγ + v/γ) / 2)`.

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::specfun::{bessel_k_ratio, ln_gamma, log_bessel_k};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gig<T> {
    pub p: T,
    pub u: T,
    pub v: T,
}

impl<T: Real> Gig<T> {
    /// Validates that the parameters give a proper density.
    pub fn new(p: T, u: T, v: T) -> Result<Self> {
        if !(p.is_finite() && u.is_finite() && v.is_finite()) || u < T::zero() || v < T::zero() {
            return Err(domain(format!("invalid GIG parameters p={p}, u={u}, v={v}")));
        }
        if u == T::zero() && v == T::zero() {
            return Err(domain("GIG with u = v = 0"));
        }
        if u == T::zero() && p >= T::zero() {
            return Err(domain(format!("GIG with u = 0 needs p < 0, got {p}")));
        }
        if v == T::zero() && p <= T::zero() {
            return Err(domain(format!("GIG with v = 0 needs p > 0, got {p}")));
        }
        Ok(Gig { p, u, v })
    }

    /// `E[γ^n]`; `+∞` when the moment does not exist.
    pub fn moment(&self, n: i32) -> Result<T> {
        let nf = T::lit(n as f64);
        let two = T::lit(2.0);
        if self.v == T::zero() {
            // gamma(shape p, rate u/2)
            let shape = self.p + nf;
            if shape <= T::zero() {
                return Ok(T::infinity());
            }
            return Ok((nf * (two / self.u).ln() + ln_gamma(shape) - ln_gamma(self.p)).exp());
        }
        if self.u == T::zero() {
            // inverse gamma(shape -p, scale v/2)
            let shape = -self.p - nf;
            if shape <= T::zero() {
                return Ok(T::infinity());
            }
            return Ok((nf * (self.v / two).ln() + ln_gamma(shape) - ln_gamma(-self.p)).exp());
        }
        let w = (self.u * self.v).sqrt();
        let ratio = bessel_k_ratio(self.p, n, w)?;
        Ok((self.v / self.u).powf(nf / two) * ratio)
    }

    pub fn mean(&self) -> Result<T> {
        self.moment(1)
    }

    pub fn inv_mean(&self) -> Result<T> {
        self.moment(-1)
    }

    /// Normalized density at `x > 0` (both `u, v > 0`).
    pub fn pdf(&self, x: T) -> Result<T> {
        if x <= T::zero() {
            return Ok(T::zero());
        }
        let two = T::lit(2.0);
        if self.u == T::zero() || self.v == T::zero() {
            return Err(domain("pdf implemented for u, v > 0 only"));
        }
        let w = (self.u * self.v).sqrt();
        let log_norm =
            two.ln() + log_bessel_k(self.p, w)? + self.p / two * (self.v / self.u).ln();
        Ok(((self.p - T::one()) * x.ln() - (self.u * x + self.v / x) / two - log_norm).exp())
    }
}
