use rug::Rational;
use serde::Serialize;

use super::ModulusSequence;

/// Finite-horizon reading of the growth conditions. A verdict only describes
/// the inspected window `m_1, …, m_K`; neither condition is an assertion
/// about the infinite tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConditionVerdict {
    /// Square-ratio terms are summable-looking over the window.
    A1Plausible,
    /// Divisibility and increasing ratios hold up to the horizon.
    A2Holds,
    Both,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    /// Number of moduli inspected.
    pub horizon: usize,
    /// `Σ_{j<K} (m_j/m_{j+1})²`, exact.
    #[serde(serialize_with = "serialize_rational_f64")]
    pub a1_partial_sum: Rational,
    /// Square-ratio terms strictly decrease across the window.
    pub a1_terms_summable_hint: bool,
    /// `m_j | m_{j+1}` for every `j < K`.
    pub a2_divisible: bool,
    /// `m_{j+1}/m_j` strictly increases across the window.
    pub a2_ratio_increasing: bool,
    pub verdict: ConditionVerdict,
}

fn serialize_rational_f64<S: serde::Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(q.to_f64())
}

/// Inspect `m_1, …, m_K` (clamped to the available moduli). Never fails:
/// a horizon below 2 or a failure to produce moduli yields an empty window.
pub fn check_conditions(m: &ModulusSequence, k: usize) -> ConditionReport {
    let mut horizon = k;
    if let Some(len) = m.available() {
        horizon = horizon.min(len);
    }
    let moduli = loop {
        match m.prefix(horizon) {
            Ok(v) => break v,
            Err(_) if horizon > 0 => horizon -= 1,
            Err(_) => break Vec::new(),
        }
    };

    let ratios: Vec<Rational> = moduli
        .windows(2)
        .map(|w| Rational::from((w[1].clone(), w[0].clone())))
        .collect();
    let terms: Vec<Rational> = ratios
        .iter()
        .map(|r| Rational::from(r.recip_ref()).square())
        .collect();

    let a1_partial_sum: Rational = terms.iter().sum();
    let a1_terms_summable_hint = terms.len() >= 2 && terms.windows(2).all(|w| w[1] < w[0]);
    let a2_divisible = moduli.windows(2).all(|w| w[1].is_divisible(&w[0]));
    let a2_ratio_increasing = ratios.len() >= 2 && ratios.windows(2).all(|w| w[1] > w[0]);

    let a2 = a2_divisible && a2_ratio_increasing;
    let verdict = match (a1_terms_summable_hint, a2) {
        (true, true) => ConditionVerdict::Both,
        (true, false) => ConditionVerdict::A1Plausible,
        (false, true) => ConditionVerdict::A2Holds,
        (false, false) => ConditionVerdict::Neither,
    };

    ConditionReport {
        horizon: moduli.len(),
        a1_partial_sum,
        a1_terms_summable_hint,
        a2_divisible,
        a2_ratio_increasing,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lacunary::{ModulusFamily, RatioRule};
    use rug::Integer;

    #[test]
    fn geometric_three() {
        let m = ModulusSequence::new(ModulusFamily::Geometric { base: 3 }).unwrap();
        let r = check_conditions(&m, 10);
        assert_eq!(r.horizon, 10);
        assert_eq!(r.a1_partial_sum, 1);
        assert!(r.a2_divisible);
        assert!(!r.a2_ratio_increasing);
        assert!(!r.a1_terms_summable_hint);
        assert_eq!(r.verdict, ConditionVerdict::Neither);
    }

    #[test]
    fn factorial_satisfies_divisibility_window() {
        let m = ModulusSequence::new(ModulusFamily::FactorialShift { offset: 2 }).unwrap();
        let r = check_conditions(&m, 10);
        assert!(r.a2_divisible && r.a2_ratio_increasing);
        assert!(matches!(
            r.verdict,
            ConditionVerdict::A2Holds | ConditionVerdict::Both
        ));
    }

    #[test]
    fn square_exponent_partial_sum() {
        let fam = ModulusFamily::Custom {
            first: Integer::from(2),
            ratio: RatioRule::Exponential {
                base: 2,
                scale: 2,
                shift: 1,
            },
        };
        let m = ModulusSequence::new(fam).unwrap();
        let r = check_conditions(&m, 6);
        // Σ_{j=1}^{5} 2^{-2(2j+1)}
        let expected: Rational = (1..=5u32)
            .map(|j| Rational::from((1, Integer::from(1) << (2 * (2 * j + 1)))))
            .sum();
        assert_eq!(r.a1_partial_sum, expected);
        assert!((r.a1_partial_sum.to_f64() - 0.016666).abs() < 1e-6);
    }

    #[test]
    fn explicit_window_is_clamped() {
        let values = vec![Integer::from(3), Integer::from(10), Integer::from(40)];
        let m = ModulusSequence::new(ModulusFamily::Explicit { values }).unwrap();
        let r = check_conditions(&m, 10);
        assert_eq!(r.horizon, 3);
        assert!(!r.a2_divisible);
        assert!(r.a2_ratio_increasing);
    }
}
