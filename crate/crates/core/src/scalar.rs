use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the numerical code is generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal, which is always representable for the
    /// implementing types (possibly rounded).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to scalar")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to scalar")
    }

    /// Largest argument `exp` may be given without overflowing. Capped at 700
    /// so that `f64` never exponentiates beyond `e^700`.
    #[inline]
    fn exp_ceiling() -> Self {
        Self::max_value().ln().min(Self::lit(700.0))
    }

    /// `exp(x)` saturating at the largest finite value.
    #[inline]
    fn saturating_exp(x: Self) -> Self {
        if x > Self::exp_ceiling() {
            Self::max_value()
        } else {
            x.exp()
        }
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}
