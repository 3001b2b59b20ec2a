//! Scalar abstractions.
//!
//! Every estimator in this crate runs over a *field element* type `S: Field`,
//! which is either a real float (`f32`, `f64`) or a complex number built on one
//! (`Complex<f32>`, `Complex<f64>`). The field decides the constant `rho`
//! (1/2 for real models, 1 for complex ones) that appears in every density and
//! update rule.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Whether the linear model is real- or complex-valued.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Real,
    Complex,
}

impl FieldKind {
    /// 1/2 for real models, 1 for complex models.
    pub fn rho(self) -> f64 {
        match self {
            FieldKind::Real => 0.5,
            FieldKind::Complex => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Real => "real",
            FieldKind::Complex => "complex",
        }
    }
}

impl Display for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FieldKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(FieldKind::Real),
            "complex" => Ok(FieldKind::Complex),
            other => Err(format!("unknown field kind `{other}` (expected real or complex)")),
        }
    }
}

/// Element of the linear model: a real or complex number.
pub trait Field:
    Copy
    + Debug
    + Default
    + PartialEq
    + NumAssign
    + Neg<Output = Self>
    + Sum
    + Send
    + Sync
    + 'static
{
    type Real: Real;

    const KIND: FieldKind;

    fn from_real(r: Self::Real) -> Self;
    /// Builds an element from its parts; the imaginary part is dropped for real fields.
    fn from_parts(re: Self::Real, im: Self::Real) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn conj(self) -> Self;
    /// `|x|^2`
    fn abs_sq(self) -> Self::Real;
    /// `x * r` for a real `r`.
    fn scale(self, r: Self::Real) -> Self;
    fn all_finite(self) -> bool;

    /// Draws a zero-mean sample with unit total variance (circular for complex).
    fn sample_unit<G: Rng + ?Sized>(rng: &mut G) -> Self;

    /// `|x|`
    fn modulus(self) -> Self::Real {
        self.abs_sq().sqrt()
    }

    /// `rho` of the field as a scalar.
    fn rho() -> Self::Real {
        Self::Real::lit(Self::KIND.rho())
    }
}

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real:
    Field<Real = Self>
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Display
    + LowerExp
{
    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Field for $t {
            type Real = $t;
            const KIND: FieldKind = FieldKind::Real;

            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }
            #[inline]
            fn from_parts(re: $t, _im: $t) -> Self {
                re
            }
            #[inline]
            fn re(self) -> $t {
                self
            }
            #[inline]
            fn im(self) -> $t {
                0.0
            }
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn abs_sq(self) -> $t {
                self * self
            }
            #[inline]
            fn scale(self, r: $t) -> Self {
                self * r
            }
            #[inline]
            fn all_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            #[inline]
            fn modulus(self) -> $t {
                <$t>::abs(self)
            }
            fn sample_unit<G: Rng + ?Sized>(rng: &mut G) -> Self {
                StandardNormal.sample(rng)
            }
        }

        impl Real for $t {}
    };
}

impl_real!(f32);
impl_real!(f64);

macro_rules! impl_complex {
    ($t:ty) => {
        impl Field for Complex<$t> {
            type Real = $t;
            const KIND: FieldKind = FieldKind::Complex;

            #[inline]
            fn from_real(r: $t) -> Self {
                Complex::new(r, 0.0)
            }
            #[inline]
            fn from_parts(re: $t, im: $t) -> Self {
                Complex::new(re, im)
            }
            #[inline]
            fn re(self) -> $t {
                self.re
            }
            #[inline]
            fn im(self) -> $t {
                self.im
            }
            #[inline]
            fn conj(self) -> Self {
                Complex::new(self.re, -self.im)
            }
            #[inline]
            fn abs_sq(self) -> $t {
                self.re * self.re + self.im * self.im
            }
            #[inline]
            fn scale(self, r: $t) -> Self {
                Complex::new(self.re * r, self.im * r)
            }
            #[inline]
            fn all_finite(self) -> bool {
                self.re.is_finite() && self.im.is_finite()
            }
            #[inline]
            fn modulus(self) -> $t {
                self.re.hypot(self.im)
            }
            fn sample_unit<G: Rng + ?Sized>(rng: &mut G) -> Self {
                let re: $t = StandardNormal.sample(rng);
                let im: $t = StandardNormal.sample(rng);
                Complex::new(re, im) * <$t>::sqrt(0.5)
            }
        }
    };
}

impl_complex!(f32);
impl_complex!(f64);

/// `sum_i conj(a_i) * b_i`
#[inline]
pub fn dotc<S: Field>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x.conj() * y).sum()
}

/// Squared Euclidean norm.
#[inline]
pub fn norm_sq<S: Field>(a: &[S]) -> S::Real {
    a.iter().map(|x| x.abs_sq()).sum()
}
