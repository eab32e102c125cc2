use rug::Rational;
use serde::{Serialize, Serializer};

use crate::lacunary::ModulusSequence;
use crate::modone::Angle;

/// Last-quarter increments at or below this count as flat.
pub const DEFAULT_GROWTH_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GrowthFlag {
    ApparentlyBounded { bound: f64 },
    ApparentlyDivergent { slope: f64 },
}

/// Partial sums of `‖m_j θ‖²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct H2Report {
    /// Number of terms actually summed; smaller than requested when the
    /// moduli or the angle's precision run out.
    #[serde(rename = "K")]
    pub k: usize,
    /// `Σ_{j≤k} ‖m_j θ‖²` for `k = 1..K`, exact.
    #[serde(serialize_with = "rationals_as_f64")]
    pub partial_sums: Vec<Rational>,
    pub growth_flag: GrowthFlag,
}

impl H2Report {
    pub fn total(&self) -> Rational {
        self.partial_sums.last().cloned().unwrap_or_default()
    }
}

fn rationals_as_f64<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_f64()))
}

pub fn h2_diagnostic(m: &ModulusSequence, theta: &Angle, k: usize) -> H2Report {
    h2_diagnostic_with_tol(m, theta, k, DEFAULT_GROWTH_TOL)
}

/// Like [`h2_diagnostic`], flagging growth when the sum over the last
/// quarter of the window exceeds `tol`.
pub fn h2_diagnostic_with_tol(m: &ModulusSequence, theta: &Angle, k: usize, tol: f64) -> H2Report {
    let mut partial_sums = Vec::with_capacity(k);
    let mut acc = Rational::new();
    for j in 1..=k {
        let Ok(mj) = m.get(j) else { break };
        let Ok(t) = theta.times_int_mod1(&mj) else {
            break;
        };
        acc += t.dist_nearest_int().to_rational().square();
        partial_sums.push(acc.clone());
    }
    let len = partial_sums.len();
    let growth_flag = if len == 0 {
        GrowthFlag::ApparentlyBounded { bound: 0.0 }
    } else {
        let window = (len / 4).max(1);
        let before = if len > window {
            partial_sums[len - window - 1].clone()
        } else {
            Rational::new()
        };
        let increment = Rational::from(&partial_sums[len - 1] - &before).to_f64();
        if increment <= tol {
            GrowthFlag::ApparentlyBounded {
                bound: partial_sums[len - 1].to_f64(),
            }
        } else {
            GrowthFlag::ApparentlyDivergent {
                slope: increment / window as f64,
            }
        }
    };
    H2Report {
        k: len,
        partial_sums,
        growth_flag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lacunary::ModulusFamily;

    fn geometric3() -> ModulusSequence {
        ModulusSequence::new(ModulusFamily::Geometric { base: 3 }).unwrap()
    }

    #[test]
    fn integral_multiples_sum_to_zero() {
        let r = h2_diagnostic(&geometric3(), &Angle::rational(1, 3).unwrap(), 12);
        assert_eq!(r.k, 12);
        assert!(r.partial_sums.iter().all(|s| *s == 0));
        assert_eq!(r.growth_flag, GrowthFlag::ApparentlyBounded { bound: 0.0 });
    }

    #[test]
    fn half_grows_linearly() {
        let r = h2_diagnostic(&geometric3(), &Angle::rational(1, 2).unwrap(), 20);
        assert_eq!(r.total(), Rational::from((20, 4)));
        assert_eq!(
            r.growth_flag,
            GrowthFlag::ApparentlyDivergent { slope: 0.25 }
        );
    }

    #[test]
    fn dyadic_precision_truncates_the_window() {
        let theta = Angle::dyadic_from_f64(0.3, 128).unwrap();
        let r = h2_diagnostic(&geometric3(), &theta, 200);
        assert!(r.k > 0 && r.k < 200);
        assert_eq!(r.partial_sums.len(), r.k);
    }
}
