//! The limit function `L(θ) = Π_j (1 + 2cos 2π m_j θ)/3`, Cesàro averages of
//! `e^{2iπ s_n θ}` and square-distance diagnostics.
//!
//! Each factor lies in `[−1/3, 1]`. The product tends to zero when factors
//! are non-positive infinitely often; otherwise it converges, and the limit
//! is nonzero exactly when `Σ ‖m_j θ‖² < ∞`. Finite computations can only
//! certify a limit when the tail is controlled, either exactly (every later
//! `m_j θ` is an integer) or through a caller-supplied summable majorant.

mod cesaro;
mod h2;
mod scan;

pub use cesaro::{
    block_average, block_average_exact, direct_average, AverageMethod, CesaroEstimate, ExactSum,
};
pub use h2::{h2_diagnostic, h2_diagnostic_with_tol, GrowthFlag, H2Report, DEFAULT_GROWTH_TOL};
pub(crate) use scan::fmt_num;
pub use scan::{
    scan_rows_to_csv, scan_rows_to_json, spectrum_scan, ScanOptions, ScanRow, SCAN_CSV_HEADER,
};

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lacunary::ModulusSequence;
use crate::modone::{cos_turns, Angle};
use crate::scalar::Scalar;

/// `4π²/3`: `1 − (1 + 2cos 2πt)/3 ≤ (4π²/3)‖t‖²`.
pub const FACTOR_LOSS_CONSTANT: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI / 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPolicy {
    /// Largest `k` for which `L_k` (factors `j < k`) is formed.
    pub k_max: usize,
    /// Certification threshold for tail changes and for vanishing products.
    pub tail_tol: f64,
}

impl Default for LimitPolicy {
    fn default() -> Self {
        LimitPolicy {
            k_max: 64,
            tail_tol: 1e-12,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    /// Some factor is exactly zero.
    ZeroExact,
    /// Non-positive factors keep appearing and `|L_k|` has fallen below the
    /// tolerance.
    ZeroByNonpositiveFactors,
    /// Every factor past some index is positive and the remaining product is
    /// certified within `tail_bound`. Finitely many earlier factors may be
    /// negative, in which case the value is negative.
    PositiveConverged,
    /// The horizon was reached without certification.
    Truncated,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::ZeroExact => "ZeroExact",
            Classification::ZeroByNonpositiveFactors => "ZeroByNonpositiveFactors",
            Classification::PositiveConverged => "PositiveConverged",
            Classification::Truncated => "Truncated",
        }
    }
}

/// An evaluation of `L(θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralValue<T> {
    /// `L_k(θ)` at `k = truncation_k`.
    pub value: T,
    pub classification: Classification,
    pub truncation_k: usize,
    /// Bound on `|L(θ) − L_k(θ)|`; infinite when nothing is certified.
    pub tail_bound: f64,
    /// Rounding error of `value` as a representation of `L_k(θ)`.
    pub err: f64,
}

/// A certified upper bound on `Σ_{j ≥ from} ‖m_j θ‖²`.
pub trait TailMajorant: Sync {
    fn tail_sq_bound(&self, from: usize) -> Option<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum FactorSign {
    Positive,
    Zero,
    Negative,
    /// Too close to the sign change for the angle's uncertainty.
    Ambiguous,
}

pub(crate) struct Factor<T> {
    pub value: T,
    pub err: f64,
    pub sign: FactorSign,
}

/// `(1 + 2cos 2πt)/3`, with its sign decided exactly from `‖t‖` vs `1/3`.
pub(crate) fn factor<T: Scalar>(t: &Angle) -> Factor<T> {
    let dist = t.dist_nearest_int();
    let third = Rational::from((1, 3));
    let mut sign = match dist.cmp_rational(&third) {
        std::cmp::Ordering::Less => FactorSign::Positive,
        std::cmp::Ordering::Equal => FactorSign::Zero,
        std::cmp::Ordering::Greater => FactorSign::Negative,
    };
    if !t.is_rational() {
        let gap = (dist.to_rational() - &third).abs().to_f64();
        if gap <= t.uncertainty() {
            sign = FactorSign::Ambiguous;
        }
    }
    if sign == FactorSign::Zero {
        return Factor {
            value: T::zero(),
            err: 0.0,
            sign,
        };
    }
    let (c, cos_err) = cos_turns::<T>(t);
    let three = T::from_u64(3);
    let value = (T::one() + T::from_u64(2) * c) / three;
    Factor {
        value,
        err: 2.0 / 3.0 * cos_err + 3.0 * T::unit_roundoff(),
        sign,
    }
}

/// `L_1, …, L_K` together with rounding-error bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialProducts<T> {
    pub values: Vec<T>,
    pub err: Vec<f64>,
}

/// `L_1 = 1`, `L_{k+1} = L_k · (1 + 2cos 2π m_k θ)/3`.
pub fn partial_products<T: Scalar>(
    m: &ModulusSequence,
    theta: &Angle,
    k: usize,
) -> Result<PartialProducts<T>> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    let moduli = m.prefix(k - 1)?;
    let mut values = Vec::with_capacity(k);
    let mut err = Vec::with_capacity(k);
    let mut current = T::one();
    let mut current_err = 0.0;
    values.push(current.clone());
    err.push(0.0);
    for mj in &moduli {
        let f = factor::<T>(&theta.times_int_mod1(mj)?);
        current = current * f.value;
        current_err += f.err + T::unit_roundoff();
        values.push(current.clone());
        err.push(current_err);
    }
    Ok(PartialProducts { values, err })
}

/// Evaluate `L(θ)` under `policy`.
pub fn limit_l<T: Scalar>(
    m: &ModulusSequence,
    theta: &Angle,
    policy: &LimitPolicy,
) -> Result<SpectralValue<T>> {
    limit_l_with_majorant(m, theta, policy, None)
}

/// [`limit_l`] with an optional summable majorant for the square distances.
///
/// Once the majorant bounds the remaining `Σ ‖m_j θ‖²` by `R < 1/9`, every
/// later factor is positive and the remaining product lies in
/// `[1 − (4π²/3)R, 1]`, which certifies `L` within `|L_k|·(4π²/3)R`.
pub fn limit_l_with_majorant<T: Scalar>(
    m: &ModulusSequence,
    theta: &Angle,
    policy: &LimitPolicy,
    majorant: Option<&dyn TailMajorant>,
) -> Result<SpectralValue<T>> {
    if policy.k_max < 2 {
        return Err(Error::InvalidArgument("k_max must be >= 2".into()));
    }
    if policy.tail_tol.is_nan() || policy.tail_tol <= 0.0 {
        return Err(Error::InvalidArgument("tail_tol must be positive".into()));
    }
    let exact_tail = theta.is_rational() && m.is_divisibility_chain();
    let mut value = T::one();
    let mut err = 0.0;
    let mut nonpositive = 0usize;
    let mut last_nonpositive = 0usize;

    let certified = |value: T, err: f64, k: usize, tail_bound: f64| SpectralValue {
        value,
        classification: Classification::PositiveConverged,
        truncation_k: k,
        tail_bound,
        err,
    };

    // A zero angle is fixed by every multiplication.
    if theta.is_zero() && exact_tail {
        return Ok(certified(value, err, 1, 0.0));
    }

    let mut k = 1;
    while k < policy.k_max {
        let j = k;
        if let Some(len) = m.available() {
            if j > len {
                break;
            }
        }
        let t = theta.times_int_mod1(&m.get(j)?)?;
        let f = factor::<T>(&t);
        match f.sign {
            FactorSign::Zero => {
                return Ok(SpectralValue {
                    value: T::zero(),
                    classification: Classification::ZeroExact,
                    truncation_k: j + 1,
                    tail_bound: 0.0,
                    err: 0.0,
                })
            }
            FactorSign::Negative | FactorSign::Ambiguous => {
                nonpositive += 1;
                last_nonpositive = j;
            }
            FactorSign::Positive => {}
        }
        value = value * f.value;
        err += f.err + T::unit_roundoff();
        k = j + 1;

        // In a divisibility chain an integral m_j θ stays integral.
        if exact_tail && t.is_zero() {
            return Ok(certified(value, err, k, 0.0));
        }
        if let Some(bound) = majorant.and_then(|maj| maj.tail_sq_bound(k)) {
            let loss = value.abs().to_f64() * FACTOR_LOSS_CONSTANT * bound;
            if bound < 1.0 / 9.0 && loss <= policy.tail_tol {
                return Ok(certified(value, err, k, loss));
            }
        }
    }

    let magnitude = value.abs().to_f64();
    let recurring = nonpositive > 0 && 2 * last_nonpositive >= k;
    if recurring && magnitude + err < policy.tail_tol {
        return Ok(SpectralValue {
            value,
            classification: Classification::ZeroByNonpositiveFactors,
            truncation_k: k,
            tail_bound: magnitude,
            err,
        });
    }
    Ok(SpectralValue {
        value,
        classification: Classification::Truncated,
        truncation_k: k,
        tail_bound: f64::INFINITY,
        err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lacunary::{ModulusFamily, RatioRule};
    use crate::scalar::Hp;
    use rug::Integer;

    type H = Hp<256>;

    fn geometric3() -> ModulusSequence {
        ModulusSequence::new(ModulusFamily::Geometric { base: 3 }).unwrap()
    }

    fn r(p: i64, q: i64) -> Angle {
        Angle::rational(p, q).unwrap()
    }

    #[test]
    fn zero_angle_gives_ones() {
        let pp = partial_products::<f64>(&geometric3(), &Angle::zero(), 6).unwrap();
        assert_eq!(pp.values, vec![1.0; 6]);
    }

    #[test]
    fn exact_zero_factor() {
        let pp = partial_products::<f64>(&geometric3(), &r(1, 9), 5).unwrap();
        assert_eq!(pp.values, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let pp = partial_products::<H>(&geometric3(), &r(1, 27), 3).unwrap();
        let expected = (1.0 + 2.0 * (2.0 * std::f64::consts::PI / 9.0).cos()) / 3.0;
        assert!((pp.values[1].to_f64() - expected).abs() < 1e-15);
        assert!((pp.values[1].to_f64() - 0.844030).abs() < 1e-6);
        assert_eq!(pp.values[2].to_f64(), 0.0);
    }

    #[test]
    fn partial_product_ratio_is_the_factor() {
        let m = ModulusSequence::new(ModulusFamily::FactorialShift { offset: 1 }).unwrap();
        let theta = r(7, 1001);
        let pp = partial_products::<H>(&m, &theta, 8).unwrap();
        for k in 1..8 {
            let t = theta.times_int_mod1(&m.get(k).unwrap()).unwrap();
            let f = factor::<H>(&t).value;
            if pp.values[k - 1].to_f64() != 0.0 {
                let ratio = pp.values[k].clone() / pp.values[k - 1].clone();
                assert!((ratio - f).abs().to_f64() < 1e-60);
            }
            assert!(pp.values[k].to_f64().abs() <= 1.0);
        }
    }

    #[test]
    fn limit_classifications() {
        let g = geometric3();
        let policy = LimitPolicy::default();
        let one = limit_l::<f64>(&g, &Angle::zero(), &policy).unwrap();
        assert_eq!(
            (one.value, one.classification),
            (1.0, Classification::PositiveConverged)
        );
        let zero = limit_l::<f64>(&g, &r(1, 9), &policy).unwrap();
        assert_eq!(
            (zero.value, zero.classification),
            (0.0, Classification::ZeroExact)
        );
        let third = limit_l::<f64>(&g, &r(1, 3), &policy).unwrap();
        assert_eq!(
            (third.value, third.classification),
            (1.0, Classification::PositiveConverged)
        );
        let half = limit_l::<H>(&g, &r(1, 2), &policy).unwrap();
        assert_eq!(
            half.classification,
            Classification::ZeroByNonpositiveFactors
        );
        // Factors stay at 1/3: positive but the product dies; nothing certifies it.
        let quarter = limit_l::<H>(&g, &r(1, 4), &policy).unwrap();
        assert_eq!(quarter.classification, Classification::Truncated);
    }

    #[test]
    fn finitely_many_negative_factors_keep_a_negative_limit() {
        // 2^{j²} with θ = 1/4: m_1 θ = 1/2, then integral.
        let fam = ModulusFamily::Custom {
            first: Integer::from(2),
            ratio: RatioRule::Exponential {
                base: 2,
                scale: 2,
                shift: 1,
            },
        };
        let m = ModulusSequence::new(fam).unwrap();
        let v = limit_l::<f64>(&m, &r(1, 4), &LimitPolicy::default()).unwrap();
        assert_eq!(v.classification, Classification::PositiveConverged);
        assert!((v.value + 1.0 / 3.0).abs() < 1e-15);
    }

    struct Geometric(f64);
    impl TailMajorant for Geometric {
        fn tail_sq_bound(&self, from: usize) -> Option<f64> {
            Some(self.0.powi(from as i32))
        }
    }

    #[test]
    fn majorant_certifies_dyadic_angles() {
        let m = ModulusSequence::new(ModulusFamily::FactorialShift { offset: 2 }).unwrap();
        let theta = Angle::dyadic_from_rational(&Rational::from((1, 362880)), 256).unwrap();
        let policy = LimitPolicy {
            k_max: 30,
            tail_tol: 1e-12,
        };
        let plain = limit_l::<H>(&m, &theta, &policy).unwrap();
        assert_eq!(plain.classification, Classification::Truncated);
        let maj = Geometric(0.25);
        let v = limit_l_with_majorant::<H>(&m, &theta, &policy, Some(&maj)).unwrap();
        assert_eq!(v.classification, Classification::PositiveConverged);
        assert!(v.tail_bound <= 1e-12);
    }

    #[test]
    fn policy_validation() {
        let g = geometric3();
        assert!(limit_l::<f64>(
            &g,
            &Angle::zero(),
            &LimitPolicy {
                k_max: 1,
                tail_tol: 1.0
            }
        )
        .is_err());
        assert!(limit_l::<f64>(
            &g,
            &Angle::zero(),
            &LimitPolicy {
                k_max: 8,
                tail_tol: 0.0
            }
        )
        .is_err());
    }
}
