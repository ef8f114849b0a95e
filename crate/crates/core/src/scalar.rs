//! Scalar abstraction for the geometry-side numerics.

use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Real floating-point type usable by the generic parts of the crate.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("representable integer")
    }
}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {}

/// Square root with `arg ∈ (−π/2, π/2]`, so the closed negative real axis maps to `+i√|z|`.
pub fn branch_sqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.im == T::zero() {
        if z.re >= T::zero() {
            return Complex::new(z.re.sqrt(), T::zero());
        }
        return Complex::new(T::zero(), (-z.re).sqrt());
    }
    // off the real axis the principal root already has Re > 0
    z.sqrt()
}
