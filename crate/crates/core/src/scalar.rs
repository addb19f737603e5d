use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used for distances and masses: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64`, rounding to the nearest representable value.
    fn of(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Bit pattern used for hashing; `-0.0` and `0.0` share one encoding.
    fn canonical_bits(self) -> u64 {
        let x = self.as_f64();
        if x == 0.0 {
            0
        } else {
            x.to_bits()
        }
    }

    fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sums values in ascending order with Neumaier compensation, so the result
/// depends only on the multiset of inputs.
pub(crate) fn stable_sum<T: Scalar>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.total_cmp(b));
    let mut sum = T::zero();
    let mut comp = T::zero();
    for &v in values.iter() {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}
