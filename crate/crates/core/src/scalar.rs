//! Scalar abstractions.
//!
//! Numerical code is generic over [`Real`] (implemented for `f32` and `f64`);
//! the symbolic algebra is generic over [`Coefficient`], implemented both for
//! exact complex rationals and for floating-point complex numbers.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::RealField;
use num_complex::{Complex, Complex64};
use num_rational::Rational64;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Floating-point scalar used by the integrators, oracle and spectra.
pub trait Real: RealField + Copy + FromPrimitive + rustfft::FftNum + Default + fmt::LowerExp {
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn to_f64(self) -> f64;

    fn eps() -> Self;
}

impl Real for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }
}

/// Numeric coefficient ring of the operator algebra.
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + 'static
{
    fn conj(&self) -> Self;
    fn imag_unit() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_complex64(&self) -> Complex64;
    fn render(&self) -> String;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }
}

/// Exact complex-rational coefficient.
pub type ExactCoeff = Complex<Rational64>;

fn render_ratio(r: &Rational64) -> String {
    if *r.denom() == 1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Coefficient for ExactCoeff {
    fn conj(&self) -> Self {
        Complex::new(self.re, -self.im)
    }
    fn imag_unit() -> Self {
        Complex::new(Rational64::zero(), Rational64::one())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(Rational64::new(num, den), Rational64::zero())
    }
    fn to_complex64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
    fn render(&self) -> String {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => render_ratio(&self.re),
            (true, false) => {
                if self.im == Rational64::one() {
                    "i".to_string()
                } else if self.im == -Rational64::one() {
                    "-i".to_string()
                } else {
                    format!("{}i", render_ratio(&self.im))
                }
            }
            (false, false) => format!(
                "({}{}{}i)",
                render_ratio(&self.re),
                if self.im > Rational64::zero() { "+" } else { "-" },
                render_ratio(&self.im.abs())
            ),
        }
    }
}

impl Coefficient for Complex64 {
    fn conj(&self) -> Self {
        Complex::conj(self)
    }
    fn imag_unit() -> Self {
        Complex64::i()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn to_complex64(&self) -> Complex64 {
        *self
    }
    fn render(&self) -> String {
        if self.im == 0.0 {
            format!("{}", self.re)
        } else {
            format!("({}{:+}i)", self.re, self.im)
        }
    }
}

/// Complex number with a [`Real`] component type.
pub type Cx<T> = Complex<T>;

#[inline]
pub fn cx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Convert a `Complex64` into `Complex<T>`.
#[inline]
pub fn cx_from<T: Real>(z: Complex64) -> Complex<T> {
    Complex::new(T::c(z.re), T::c(z.im))
}
