use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar the numeric core is generic over: `f32` or `f64`.
///
/// The trait bundles the `num-traits` capabilities the kernels need plus
/// two lossy conversions used for tolerances and diagnostics.
pub trait Scalar:
    Float + NumAssignOps + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant (tolerance, hyperparameter) into `Self`.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Widens to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
