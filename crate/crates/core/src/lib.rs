//! Sparse Bayesian learning with Gaussian scale mixture priors.
//!
//! Three inference engines share one hierarchical prior on the weights of
//! `y = Hα + w`: generalized EM ([`em`]), a sequential greedy scheme that
//! adds, re-estimates and deletes one column per iteration ([`fast`]), and
//! mean-field variational message passing ([`vmp`]). The prior has two
//! layers (Gaussian weights with gamma-distributed variances) or three (an
//! extra gamma layer on the variance rates); see [`priors`].
//!
//! Everything is generic over the field element: `f32`, `f64`,
//! `Complex<f32>` or `Complex<f64>`.

pub mod em;
pub mod error;
pub mod estimator;
pub mod fast;
pub mod gig;
pub mod linalg;
pub mod model;
pub mod priors;
pub mod quad;
pub mod scalar;
pub mod specfun;
pub mod vmp;

pub use num_complex::{Complex, Complex32, Complex64};

pub use em::{fit_em, run_em, EmConfig};
pub use error::{Result, SblError};
pub use estimator::{Fit, FitFlag, LambdaMode, TraceStep, LAMBDA_MAX};
pub use fast::{fit_fast, run_fast, FastConfig, FastState};
pub use gig::Gig;
pub use linalg::Mat;
pub use model::{peek_field, read_problem, write_problem, ProblemFile};
pub use model::{
    evaluate, generate_problem, oracle_estimate, oracle_mse, GenConfig, Metrics, Observation,
    ProblemInstance, SNR_DEFINITION,
};
pub use priors::{Layers, PerComponent, PriorConfig};
pub use scalar::{Field, FieldKind, Real};
pub use vmp::{fit_vmp, run_vmp, VmpConfig};

pub type RealProblem = ProblemInstance<f64>;
pub type ComplexProblem = ProblemInstance<Complex64>;
pub type RealObservation = Observation<f64>;
pub type ComplexObservation = Observation<Complex64>;
pub type RealFit = Fit<f64>;
pub type ComplexFit = Fit<Complex64>;
