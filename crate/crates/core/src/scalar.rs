//! Scalar abstractions.
//!
//! [`Scalar`] is enough for the exact loss algebra (counts, closed-form totals,
//! replay) and is satisfied by `f32`, `f64` and exact rationals such as
//! `num_rational::Ratio<i64>`. [`Real`] adds the floating-point operations that
//! eigenvalues, the simplex solver and the confidence-bound policies need.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }
}

impl<T> Scalar for T where
    T: Num + Signed + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static
{
}

pub trait Real: Scalar + Float + FloatConst + ToPrimitive {
    /// Converts an `f64` literal or sample into this type.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 representable")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Scalar + Float + FloatConst + ToPrimitive {}

/// Lowest-index minimizer. Ties keep the earlier index.
pub(crate) fn argmin_by<T: PartialOrd + Copy>(values: impl IntoIterator<Item = T>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(v < b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn half_is_exact_for_rationals() {
        assert_eq!(Ratio::<i64>::half(), Ratio::new(1, 2));
        assert_eq!(f64::half(), 0.5);
    }

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin_by([3.0, 1.0, 1.0]), Some(1));
        assert_eq!(argmin_by([2.0, 2.0]), Some(0));
        assert_eq!(argmin_by(Vec::<f64>::new()), None);
    }
}
