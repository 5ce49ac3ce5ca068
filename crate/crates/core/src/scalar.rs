//! Floating point abstraction shared by the numeric modules.
//!
//! Tag metrics, the boosted-tree learner and the ranking metrics are written
//! against [`Scalar`] so they run on either `f32` or `f64`. The pipeline itself
//! uses the `f64` aliases exported from the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    const HALF: Self;

    /// Lossy conversion from `f64`, used for constants and counts.
    fn of(value: f64) -> Self;

    fn as_f64(self) -> f64;

    fn of_usize(value: usize) -> Self {
        Self::of(value as f64)
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const HALF: Self = 0.5;

            #[inline]
            fn of(value: f64) -> Self {
                value as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Logistic function, clamped so the result stays strictly inside (0, 1).
pub fn sigmoid<T: Scalar>(margin: T) -> T {
    let p = T::one() / (T::one() + (-margin).exp());
    let eps = T::epsilon();
    p.max(eps).min(T::one() - eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric() {
        for &m in &[-3.0_f64, -0.5, 0.0, 0.25, 4.0] {
            assert!((sigmoid(m) + sigmoid(-m) - 1.0).abs() < 1e-15);
        }
        assert_eq!(sigmoid(0.0_f32), 0.5);
    }

    #[test]
    fn sigmoid_stays_open_interval() {
        assert!(sigmoid(1000.0_f64) < 1.0);
        assert!(sigmoid(-1000.0_f64) > 0.0);
    }
}
