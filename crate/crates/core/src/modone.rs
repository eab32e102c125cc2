//! Arithmetic on the circle ℝ/ℤ.
//!
//! Angles are measured in turns, so `t` stands for the point `e^{2iπt}`.
//! A [`Angle::Rational`] is exact and stays exact under multiplication by
//! integers. A [`Angle::Dyadic`] is a fixed-point approximation of a real
//! angle: it carries a working precision and a count of bits already spent
//! by earlier multiplications, which together bound its uncertainty.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex;
use rug::ops::RemRounding;
use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Guard bits that must remain after a dyadic multiplication.
pub const GUARD_BITS: u32 = 64;

/// Minimum working precision of a dyadic angle.
pub const MIN_DYADIC_BITS: u32 = 64;

/// Multiple of the unit roundoff bounding one `e^{2iπt}` evaluation:
/// argument reduction and scaling by 2π cost at most ~3π·u, the final
/// sine/cosine one more u.
const UNIT_EXP_ROUNDOFF_FACTOR: f64 = 16.0;

/// Fixed-point angle `mantissa / 2^bits`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: Integer,
    bits: u32,
    lost_bits: u32,
}

impl Dyadic {
    pub fn mantissa(&self) -> &Integer {
        &self.mantissa
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Bits consumed by multiplications since the angle was built.
    pub fn lost_bits(&self) -> u32 {
        self.lost_bits
    }

    /// Bits still meaningful relative to the real angle this approximates.
    pub fn effective_bits(&self) -> u32 {
        self.bits - self.lost_bits
    }

    /// Upper bound on the distance to the real angle being approximated.
    pub fn uncertainty(&self) -> f64 {
        (-(self.effective_bits() as f64)).exp2()
    }
}

/// A point of ℝ/ℤ, always normalised into `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Angle {
    /// Exact rational `p/q` with `0 ≤ p < q`, in lowest terms.
    Rational(Rational),
    Dyadic(Dyadic),
}

impl Angle {
    pub fn zero() -> Self {
        Angle::Rational(Rational::new())
    }

    /// `p/q` reduced modulo one.
    pub fn rational(p: impl Into<Integer>, q: impl Into<Integer>) -> Result<Self> {
        let q = q.into();
        if q == 0 {
            return Err(Error::InvalidAngle("zero denominator".into()));
        }
        Ok(Self::from_rational(&Rational::from((p.into(), q))))
    }

    pub fn from_rational(value: &Rational) -> Self {
        let mut frac = value.clone();
        frac.rem_floor_mut();
        Angle::Rational(frac)
    }

    /// `mantissa / 2^bits` reduced modulo one.
    pub fn dyadic(mantissa: impl Into<Integer>, bits: u32) -> Result<Self> {
        if bits < MIN_DYADIC_BITS {
            return Err(Error::InvalidAngle(format!(
                "dyadic precision {bits} below the minimum of {MIN_DYADIC_BITS} bits"
            )));
        }
        let mut mantissa = mantissa.into();
        mantissa.keep_bits_mut(bits);
        Ok(Angle::Dyadic(Dyadic {
            mantissa,
            bits,
            lost_bits: 0,
        }))
    }

    /// Nearest `bits`-bit dyadic to a rational value (mod 1).
    pub fn dyadic_from_rational(value: &Rational, bits: u32) -> Result<Self> {
        let scaled = Rational::from(value << bits);
        let (rounded, _) = scaled.round().into_numer_denom();
        Self::dyadic(rounded, bits)
    }

    /// Fractional part of `x`, exactly, padded to `bits` bits.
    pub fn dyadic_from_f64(x: f64, bits: u32) -> Result<Self> {
        let value = Rational::from_f64(x)
            .ok_or_else(|| Error::InvalidAngle(format!("{x} is not finite")))?;
        let mut frac = value;
        frac.rem_floor_mut();
        let scaled = Rational::from(&frac << bits);
        if *scaled.denom() != 1 {
            return Err(Error::InvalidAngle(format!(
                "{x} needs more than {bits} fractional bits"
            )));
        }
        Self::dyadic(scaled.into_numer_denom().0, bits)
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Angle::Rational(_))
    }

    /// The exact dyadic or rational value as a rational number.
    pub fn to_rational(&self) -> Rational {
        match self {
            Angle::Rational(r) => r.clone(),
            Angle::Dyadic(d) => Rational::from((d.mantissa.clone(), Integer::from(1) << d.bits)),
        }
    }

    /// Bound on the distance to the intended real angle: zero for exact
    /// rationals.
    pub fn uncertainty(&self) -> f64 {
        match self {
            Angle::Rational(_) => 0.0,
            Angle::Dyadic(d) => d.uncertainty(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Angle::Rational(r) => *r == 0,
            Angle::Dyadic(d) => d.mantissa == 0,
        }
    }

    /// `s·θ mod 1`.
    ///
    /// Exact for rationals. For dyadics the result keeps the same working
    /// precision and records `bitlength(s)` lost bits; the call fails when
    /// fewer than [`GUARD_BITS`] would remain.
    pub fn times_int_mod1(&self, s: &Integer) -> Result<Angle> {
        match self {
            Angle::Rational(r) => {
                let (p, q) = (r.numer(), r.denom());
                let reduced = Integer::from(p * s).rem_euc(q);
                Ok(Angle::Rational(Rational::from((reduced, q.clone()))))
            }
            Angle::Dyadic(d) => {
                let spent = s.significant_bits();
                let needed = spent as u64 + d.lost_bits as u64 + GUARD_BITS as u64;
                if needed > d.bits as u64 {
                    return Err(Error::InsufficientPrecision {
                        needed,
                        available: d.bits as u64,
                    });
                }
                let mut mantissa = Integer::from(&d.mantissa * s);
                if mantissa < 0 {
                    let modulus = Integer::from(1) << d.bits;
                    mantissa = mantissa.rem_euc(modulus);
                } else {
                    mantissa.keep_bits_mut(d.bits);
                }
                Ok(Angle::Dyadic(Dyadic {
                    mantissa,
                    bits: d.bits,
                    lost_bits: d.lost_bits + spent,
                }))
            }
        }
    }

    /// `‖t‖`, the distance to the nearest integer, as an angle in `[0, 1/2]`.
    pub fn dist_nearest_int(&self) -> Angle {
        match self {
            Angle::Rational(r) => {
                let complement = Rational::from(1 - r);
                Angle::Rational(if complement < *r {
                    complement
                } else {
                    r.clone()
                })
            }
            Angle::Dyadic(d) => {
                let complement = (Integer::from(1) << d.bits) - &d.mantissa;
                let mantissa = if complement < d.mantissa {
                    complement
                } else {
                    d.mantissa.clone()
                };
                Angle::Dyadic(Dyadic {
                    mantissa,
                    bits: d.bits,
                    lost_bits: d.lost_bits,
                })
            }
        }
    }

    /// Compare the exact stored value with a rational.
    pub fn cmp_rational(&self, other: &Rational) -> Ordering {
        match self {
            Angle::Rational(r) => r.cmp(other),
            Angle::Dyadic(d) => {
                let lhs = Integer::from(&d.mantissa * other.denom());
                let rhs = Integer::from(other.numer() << d.bits);
                lhs.cmp(&rhs)
            }
        }
    }

    /// The stored value minus one when it exceeds one half, so the result
    /// lies in `(-1/2, 1/2]`.
    fn centered<T: Scalar>(&self) -> T {
        let half = Rational::from((1, 2));
        let shift = self.cmp_rational(&half) == Ordering::Greater;
        let value = match self {
            Angle::Rational(r) => T::from_rational(r),
            Angle::Dyadic(d) => T::from_dyadic(&d.mantissa, d.bits),
        };
        if shift {
            value - T::one()
        } else {
            value
        }
    }

    /// Short textual form: `p/q` or `dyadic:<hex>/2^<bits>`.
    pub fn repr(&self) -> String {
        match self {
            Angle::Rational(r) => {
                if *r.denom() == 1 {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            Angle::Dyadic(d) => format!("dyadic:{:x}/2^{}", d.mantissa, d.bits),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr())
    }
}

/// Exact values of `cos(2πt)` at the rationals where it is rational.
fn rational_cos(t: &Rational) -> Option<Rational> {
    let q = t.denom().to_u32()?;
    let p = t.numer().to_u32()?;
    let value = match (p, q) {
        (0, 1) => (1, 1),
        (1, 2) => (-1, 1),
        (1, 3) | (2, 3) => (-1, 2),
        (1, 4) | (3, 4) => (0, 1),
        (1, 6) | (5, 6) => (1, 2),
        _ => return None,
    };
    Some(Rational::from(value))
}

fn rational_sin(t: &Rational) -> Option<Rational> {
    let q = t.denom().to_u32()?;
    let p = t.numer().to_u32()?;
    let value = match (p, q) {
        (0, 1) | (1, 2) => (0, 1),
        (1, 4) => (1, 1),
        (3, 4) => (-1, 1),
        _ => return None,
    };
    Some(Rational::from(value))
}

/// A complex value with an absolute error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedComplex<T> {
    pub re: T,
    pub im: T,
    pub err: f64,
}

impl<T: Scalar> BoundedComplex<T> {
    pub fn one() -> Self {
        BoundedComplex {
            re: T::one(),
            im: T::zero(),
            err: 0.0,
        }
    }

    pub fn to_complex(&self) -> Complex<T> {
        Complex::new(self.re.clone(), self.im.clone())
    }

    pub fn norm(&self) -> T {
        (self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()).sqrt()
    }
}

/// Error bound on one evaluation of `cos(2πt)` or `sin(2πt)` in `T`,
/// including the angle's own uncertainty.
pub fn unit_exp_err<T: Scalar>(t: &Angle) -> f64 {
    let roundoff = UNIT_EXP_ROUNDOFF_FACTOR * T::unit_roundoff();
    roundoff + 2.0 * std::f64::consts::PI * t.uncertainty()
}

/// `cos(2πt)` with its error bound; exact where the value is rational.
pub fn cos_turns<T: Scalar>(t: &Angle) -> (T, f64) {
    if let Angle::Rational(r) = t {
        if let Some(c) = rational_cos(r) {
            return (T::from_rational(&c), 0.0);
        }
    }
    let two_pi = T::from_u64(2) * T::pi();
    let (_, c) = (two_pi * t.centered::<T>()).sin_cos();
    (c, unit_exp_err::<T>(t))
}

/// `e^{2iπt}` with an absolute error bound.
pub fn unit_exp<T: Scalar>(t: &Angle) -> BoundedComplex<T> {
    if let Angle::Rational(r) = t {
        if let (Some(c), Some(s)) = (rational_cos(r), rational_sin(r)) {
            return BoundedComplex {
                re: T::from_rational(&c),
                im: T::from_rational(&s),
                err: 0.0,
            };
        }
    }
    let two_pi = T::from_u64(2) * T::pi();
    let (s, c) = (two_pi * t.centered::<T>()).sin_cos();
    BoundedComplex {
        re: c,
        im: s,
        err: unit_exp_err::<T>(t),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AngleRepr {
    Rational([String; 2]),
    Dyadic(DyadicRepr),
}

#[derive(Serialize, Deserialize)]
struct DyadicRepr {
    mantissa_hex: String,
    bits: u32,
    #[serde(default, skip_serializing_if = "is_zero_u32")]
    lost_bits: u32,
}

fn is_zero_u32(x: &u32) -> bool {
    *x == 0
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            Angle::Rational(r) => {
                AngleRepr::Rational([r.numer().to_string(), r.denom().to_string()])
            }
            Angle::Dyadic(d) => AngleRepr::Dyadic(DyadicRepr {
                mantissa_hex: d.mantissa.to_string_radix(16),
                bits: d.bits,
                lost_bits: d.lost_bits,
            }),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match AngleRepr::deserialize(deserializer)? {
            AngleRepr::Rational([p, q]) => {
                let p: Integer = p.parse().map_err(D::Error::custom)?;
                let q: Integer = q.parse().map_err(D::Error::custom)?;
                Angle::rational(p, q).map_err(D::Error::custom)
            }
            AngleRepr::Dyadic(d) => {
                let mantissa =
                    Integer::from_str_radix(&d.mantissa_hex, 16).map_err(D::Error::custom)?;
                match Angle::dyadic(mantissa, d.bits).map_err(D::Error::custom)? {
                    Angle::Dyadic(mut inner) => {
                        if d.lost_bits > d.bits {
                            return Err(D::Error::custom("lost_bits exceeds bits"));
                        }
                        inner.lost_bits = d.lost_bits;
                        Ok(Angle::Dyadic(inner))
                    }
                    other => Ok(other),
                }
            }
        }
    }
}

impl std::str::FromStr for Angle {
    type Err = Error;

    /// Accepts `p/q`, an integer, a finite decimal such as `0.25`, or
    /// `dyadic:<hex>/2^<bits>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("dyadic:") {
            let (hex, bits) = rest
                .split_once("/2^")
                .ok_or_else(|| Error::InvalidAngle(format!("malformed dyadic angle `{s}`")))?;
            let mantissa = Integer::from_str_radix(hex, 16)
                .map_err(|e| Error::InvalidAngle(format!("{s}: {e}")))?;
            let bits: u32 = bits
                .parse()
                .map_err(|e| Error::InvalidAngle(format!("{s}: {e}")))?;
            return Angle::dyadic(mantissa, bits);
        }
        if let Some((p, q)) = s.split_once('/') {
            let p: Integer = p
                .trim()
                .parse()
                .map_err(|e| Error::InvalidAngle(format!("{s}: {e}")))?;
            let q: Integer = q
                .trim()
                .parse()
                .map_err(|e| Error::InvalidAngle(format!("{s}: {e}")))?;
            return Angle::rational(p, q);
        }
        if let Some((whole, frac)) = s.split_once('.') {
            let digits = format!("{whole}{frac}");
            let p: Integer = digits
                .parse()
                .map_err(|e| Error::InvalidAngle(format!("{s}: {e}")))?;
            let q = Integer::from(Integer::u_pow_u(10, frac.len() as u32));
            return Angle::rational(p, q);
        }
        let p: Integer = s
            .parse()
            .map_err(|e| Error::InvalidAngle(format!("{s}: {e}")))?;
        Angle::rational(p, 1)
    }
}
