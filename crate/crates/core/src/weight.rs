//! Arithmetic modes for exact evolution: arbitrary-precision rationals or
//! 64-bit floats.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

/// A probability weight. Kernel probabilities enter through [`Weight::from_prob`].
pub trait Weight: Clone + Debug + PartialEq + Send + Sync + 'static {
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_prob(p: Rational64) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn to_f64(&self) -> f64;

    /// `dst[i] += c * src[i]`.
    #[inline]
    fn axpy(dst: &mut [Self], c: &Self, src: &[Self]) {
        for (d, s) in dst.iter_mut().zip(src) {
            if !s.is_zero() {
                d.add_assign(&c.mul(s));
            }
        }
    }

    /// Whether the weight may be dropped into the mass deficit. Never true in
    /// exact mode.
    #[inline]
    fn negligible(&self, _threshold: f64) -> bool {
        false
    }
}

impl Weight for f64 {
    const MODE: Mode = Mode::Float;

    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    fn from_prob(p: Rational64) -> Self {
        *p.numer() as f64 / *p.denom() as f64
    }
    #[inline]
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
    #[inline]
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
    #[inline]
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    #[inline]
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn axpy(dst: &mut [Self], c: &Self, src: &[Self]) {
        let c = *c;
        for (d, s) in dst.iter_mut().zip(src) {
            *d += c * s;
        }
    }
    #[inline]
    fn negligible(&self, threshold: f64) -> bool {
        self.abs() < threshold
    }
}

impl Weight for BigRational {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_prob(p: Rational64) -> Self {
        BigRational::new(BigInt::from(*p.numer()), BigInt::from(*p.denom()))
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        num_traits::Signed::is_positive(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn to_f64(&self) -> f64 {
        // numerator and denominator may individually overflow f64
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                let shift = self.denom().bits().max(self.numer().bits()).saturating_sub(1000);
                let n = (self.numer() >> shift).to_f64().unwrap_or(0.0);
                let d = (self.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
                n / d
            }
        }
    }
}

/// `num/den` as an exact rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_rational_to_f64_survives_huge_parts() {
        let big = BigInt::from(3).pow(2000);
        let x = BigRational::new(big.clone(), big * BigInt::from(4));
        assert_eq!(Weight::to_f64(&x), 0.25);
        assert_eq!(Weight::to_f64(&ratio(1, 3)), 1.0 / 3.0);
    }

    #[test]
    fn float_negligible_only_below_threshold() {
        assert!(1e-30f64.negligible(1e-20));
        assert!(!1e-10f64.negligible(1e-20));
        assert!(!ratio(1, 1 << 60).negligible(1.0));
    }
}
