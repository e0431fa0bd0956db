//! Floating point abstraction shared by the model code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real number type the car-following, relaxation and analysis code is written against.
///
/// Implemented for `f32` and `f64`. The simulation engine and calibration run on `f64`.
pub trait Scalar:
    'static + Float + FromPrimitive + NumAssign + Default + Debug + Display + Send + Sync
{
    /// Converts an `f64` literal. Panics only if the target type cannot represent
    /// finite `f64` values at all, which does not happen for the provided impls.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Bisection on a bracketing interval `[lo, hi]` where `f(lo)` and `f(hi)` have opposite
/// signs (or one is zero). Stops when `|f(mid)| < ftol` or the bracket stops shrinking.
pub(crate) fn bisect<T: Scalar>(mut lo: T, mut hi: T, ftol: T, f: impl Fn(T) -> T) -> T {
    let mut flo = f(lo);
    if flo == T::zero() {
        return lo;
    }
    let two = T::lit(2.0);
    for _ in 0..400 {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            return mid;
        }
        let fm = f(mid);
        if fm.abs() < ftol {
            return mid;
        }
        if (fm < T::zero()) == (flo < T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / two
}
