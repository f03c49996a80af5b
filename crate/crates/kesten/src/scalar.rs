//! Scalar abstraction: the whole toolkit is generic over the working
//! precision via [`Real`], with `f32` and `f64` instances.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar used throughout the crate.
///
/// Everything numeric (norms, moment functions, Monte Carlo batches,
/// operator grids) is written against this trait so that the same code
/// runs in `f32` and `f64`. Tolerances are stated for `f64`; helpers such
/// as [`Real::tol`] widen them when the type cannot represent them.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Copy
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Shorthand conversion from an `f64` literal.
    fn of(x: f64) -> Self;

    /// Lossy conversion back to `f64` (exact for `f32`/`f64`).
    fn to_f64(self) -> f64;

    /// A tolerance that is `tol_f64` at full precision but never tighter
    /// than a small multiple of the machine epsilon.
    fn tol(tol_f64: f64) -> Self {
        let floor = Self::epsilon() * Self::of(64.0);
        let t = Self::of(tol_f64);
        if t > floor {
            t
        } else {
            floor
        }
    }
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}
