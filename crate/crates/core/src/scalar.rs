//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar type")
    }

    /// An absolute tolerance of `value`, floored at a few ulps of the scalar
    /// type so the same call sites work for `f32`.
    fn tol(value: f64) -> Self {
        Self::lit(value).max(Self::epsilon() * Self::lit(64.0))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Smallest integer `k` with `k^root >= n`, i.e. `ceil(n^(1/root))` without
/// floating point rounding surprises at perfect powers.
pub fn ceil_root(n: usize, root: u32) -> usize {
    if n <= 1 {
        return n;
    }
    let mut k = (n as f64).powf(1.0 / root as f64).floor().max(1.0) as usize;
    while (k as u128).pow(root) >= n as u128 && k > 1 {
        k -= 1;
    }
    while (k as u128).pow(root) < n as u128 {
        k += 1;
    }
    k
}
