use num_traits::float::FloatConst;
use num_traits::Float;
use rustfft::FftNum;
use std::fmt::{Debug, Display, LowerExp};

/// Floating-point scalar the solver is generic over.
///
/// Implemented for `f32` and `f64`. All tolerances quoted in tests assume
/// `f64`; the `f32` instantiation is usable but its round-off floors are
/// correspondingly larger (see [`Real::roundoff_tol`]).
pub trait Real:
    FftNum + Float + FloatConst + Default + Display + LowerExp + Debug + Send + Sync + 'static
{
    /// Lossy conversion from `f64` constants.
    fn of(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;

    /// Relative round-off allowance used for symmetry and realness checks
    /// (about 1e-12 for `f64`).
    fn roundoff_tol() -> Self {
        Self::epsilon() * Self::of(4096.0)
    }
}

impl Real for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
