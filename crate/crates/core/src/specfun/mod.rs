//! Special functions used by the priors and the variational moments.

mod bessel;
mod gamma;
mod hyperu;

pub use bessel::{bessel_k, bessel_k_ratio, log_bessel_k};
pub use gamma::{gamma, ln_gamma};
pub use hyperu::hyper_u;
