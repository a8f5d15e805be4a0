//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the model code is generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Conversion from a count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Standard normal cumulative distribution function.
    fn norm_cdf(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn norm_cdf(self) -> Self {
        0.5 * libm::erfc(-self * std::f64::consts::FRAC_1_SQRT_2)
    }
}

impl Real for f32 {
    #[inline]
    fn norm_cdf(self) -> Self {
        0.5 * libm::erfcf(-self * std::f32::consts::FRAC_1_SQRT_2)
    }
}

/// `ln(n!)`, exact summation for small `n` and a Stirling series above.
pub fn ln_factorial<F: Real>(n: u64) -> F {
    if n < 32 {
        let mut acc = F::zero();
        for k in 2..=n {
            acc = acc + F::from_u64(k).unwrap().ln();
        }
        return acc;
    }
    let x = F::from_u64(n).unwrap();
    let inv = x.recip();
    let inv2 = inv * inv;
    // 1/(12n) - 1/(360n^3) + 1/(1260n^5) - 1/(1680n^7)
    let corr = inv
        * (F::lit(1.0 / 12.0)
            - inv2 * (F::lit(1.0 / 360.0) - inv2 * (F::lit(1.0 / 1260.0) - inv2 * F::lit(1.0 / 1680.0))));
    x * x.ln() - x + F::lit(0.5) * (F::TAU() * x).ln() + corr
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_factorial_matches_direct_sum_across_switch() {
        for n in [0u64, 1, 5, 31, 32, 33, 100, 1000] {
            let direct: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
            let got: f64 = ln_factorial(n);
            assert!((got - direct).abs() <= 1e-12 * direct.max(1.0), "n={n}");
        }
    }

    #[test]
    fn norm_cdf_reference_points() {
        assert_eq!(0.0f64.norm_cdf(), 0.5);
        // Phi(1.959963984540054) = 0.975
        assert!((1.959_963_984_540_054f64.norm_cdf() - 0.975).abs() < 1e-15);
        // far tail keeps relative accuracy
        let v = (-10.0f64).norm_cdf();
        assert!((v / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
        assert!(((1.0f32).norm_cdf() - 0.841_344_7).abs() < 1e-6);
    }
}
