//! Scalar types the numerical kernels are generic over.
//!
//! Everything in [`crate::spectral`] and [`crate::measures`] is written against
//! [`Scalar`], so the same code runs in `f32`, `f64` or an MPFR-backed
//! [`Hp`] float of any fixed precision. Exact quantities (angles, residues,
//! distance sums) never go through a `Scalar`; they stay in `rug` integers
//! and rationals.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Num, One, Zero};
use rug::float::Constant;
use rug::{Float, Integer, Rational};

/// A real scalar with a known unit roundoff and the handful of transcendental
/// operations needed on the circle.
pub trait Scalar:
    Num + Neg<Output = Self> + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Significand width in bits, including the implicit bit.
    const MANTISSA_BITS: u32;

    /// Bound on the relative error of one correctly rounded operation.
    fn unit_roundoff() -> f64 {
        (-(Self::MANTISSA_BITS as f64)).exp2()
    }

    fn from_f64(x: f64) -> Self;
    fn from_integer(n: &Integer) -> Self;
    fn from_rational(q: &Rational) -> Self;
    /// `mantissa / 2^bits`.
    fn from_dyadic(mantissa: &Integer, bits: u32) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn pi() -> Self;
    fn sin_cos(&self) -> (Self, Self);

    fn from_u64(n: u64) -> Self {
        Self::from_integer(&Integer::from(n))
    }
}

macro_rules! impl_primitive_scalar {
    ($t:ty, $bits:expr, $pi:expr) => {
        impl Scalar for $t {
            const MANTISSA_BITS: u32 = $bits;

            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn from_integer(n: &Integer) -> Self {
                n.to_f64() as $t
            }
            fn from_rational(q: &Rational) -> Self {
                q.to_f64() as $t
            }
            fn from_dyadic(mantissa: &Integer, bits: u32) -> Self {
                let (m, e) = mantissa.to_f64_exp();
                (m * ((e as f64) - bits as f64).exp2()) as $t
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            fn pi() -> Self {
                $pi
            }
            fn sin_cos(&self) -> (Self, Self) {
                <$t>::sin_cos(*self)
            }
        }
    };
}

impl_primitive_scalar!(f32, 24, std::f32::consts::PI);
impl_primitive_scalar!(f64, 53, std::f64::consts::PI);

/// MPFR float with a compile-time precision of `BITS` bits.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Hp<const BITS: u32>(Float);

impl<const BITS: u32> Hp<BITS> {
    pub fn new(value: Float) -> Self {
        if value.prec() == BITS {
            Hp(value)
        } else {
            Hp(Float::with_val(BITS, value))
        }
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }
}

impl<const BITS: u32> fmt::Debug for Hp<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hp<{}>({})", BITS, self.0)
    }
}

impl<const BITS: u32> fmt::Display for Hp<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

macro_rules! hp_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<const BITS: u32> $trait for Hp<BITS> {
            type Output = Self;
            fn $method(self, rhs: Self) -> Self {
                Hp(self.0 $op rhs.0)
            }
        }
    };
}

hp_binop!(Add, add, +);
hp_binop!(Sub, sub, -);
hp_binop!(Mul, mul, *);
hp_binop!(Div, div, /);
hp_binop!(Rem, rem, %);

impl<const BITS: u32> Neg for Hp<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        Hp(-self.0)
    }
}

impl<const BITS: u32> Zero for Hp<BITS> {
    fn zero() -> Self {
        Hp(Float::with_val(BITS, 0))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl<const BITS: u32> One for Hp<BITS> {
    fn one() -> Self {
        Hp(Float::with_val(BITS, 1))
    }
}

impl<const BITS: u32> Num for Hp<BITS> {
    type FromStrRadixErr = rug::float::ParseFloatError;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        let parsed = Float::parse_radix(s, radix as i32)?;
        Ok(Hp(Float::with_val(BITS, parsed)))
    }
}

impl<const BITS: u32> Scalar for Hp<BITS> {
    const MANTISSA_BITS: u32 = BITS;

    fn from_f64(x: f64) -> Self {
        Hp(Float::with_val(BITS, x))
    }
    fn from_integer(n: &Integer) -> Self {
        Hp(Float::with_val(BITS, n))
    }
    fn from_rational(q: &Rational) -> Self {
        Hp(Float::with_val(BITS, q))
    }
    fn from_dyadic(mantissa: &Integer, bits: u32) -> Self {
        Hp(Float::with_val(BITS, mantissa) >> bits)
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn abs(&self) -> Self {
        Hp(self.0.clone().abs())
    }
    fn sqrt(&self) -> Self {
        Hp(self.0.clone().sqrt())
    }
    fn pi() -> Self {
        Hp(Float::with_val(BITS, Constant::Pi))
    }
    fn sin_cos(&self) -> (Self, Self) {
        let (s, c) = self.0.clone().sin_cos(Float::new(BITS));
        (Hp(s), Hp(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundoff_matches_width() {
        assert_eq!(f64::unit_roundoff(), f64::EPSILON / 2.0);
        assert_eq!(<Hp<256>>::unit_roundoff(), 2f64.powi(-256));
    }

    #[test]
    fn hp_pi_agrees_with_f64() {
        let pi = <Hp<256>>::pi();
        assert_eq!(pi.to_f64(), std::f64::consts::PI);
        assert_eq!(pi.as_float().prec(), 256);
    }

    #[test]
    fn dyadic_conversion_is_exact_when_it_fits() {
        let m = Integer::from(3);
        assert_eq!(<Hp<128>>::from_dyadic(&m, 2).to_f64(), 0.75);
        assert_eq!(f64::from_dyadic(&m, 2), 0.75);
        let big = Integer::from(1) << 300u32;
        assert_eq!(f64::from_dyadic(&big, 301), 0.5);
    }

    #[test]
    fn hp_arithmetic_keeps_precision() {
        let third = <Hp<200>>::from_rational(&Rational::from((1, 3)));
        let sum = third.clone() + third.clone() + third;
        assert!((sum - <Hp<200>>::one()).abs().to_f64() < 1e-59);
    }

    #[test]
    fn from_str_radix_parses() {
        let x = <Hp<64> as Num>::from_str_radix("0.8", 16).unwrap();
        assert_eq!(x.to_f64(), 0.5);
    }
}
