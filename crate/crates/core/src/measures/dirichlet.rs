use rug::Rational;
use serde_json::{json, Value};

use super::{EtaPoint, Mode};
use crate::error::{Error, Result};
use crate::lacunary::ModulusSequence;
use crate::modone::Angle;
use crate::scalar::Scalar;
use crate::spectral::{fmt_num, LimitPolicy, SpectralValue, FACTOR_LOSS_CONSTANT};

use super::nu_hat;

pub const DIRICHLET_CSV_HEADER: &str = "n,L_lower,L_value,tail_sum,tail_bound";

#[derive(Clone, Debug, PartialEq)]
pub struct DirichletRow<T> {
    pub n: usize,
    /// `1 − (4π²/3)·tail_sum`.
    pub l_lower: f64,
    /// `L(m_{j_n} θ)`.
    pub l_value: SpectralValue<T>,
    /// `Σ_j ‖m_{j_n} m_j θ‖²`, exact.
    pub tail_sum: Rational,
    /// `(4/3)·4^{−n}`.
    pub tail_bound: Rational,
}

impl<T: Scalar> DirichletRow<T> {
    /// The tail stays below its bound and the computed value respects the
    /// certified lower bound.
    pub fn bound_holds(&self) -> bool {
        self.tail_sum < self.tail_bound
            && self.l_value.value.to_f64() + self.l_value.err + self.l_value.tail_bound
                >= self.l_lower
    }
}

/// `Σ_j ‖m_j t‖²` over every `j` at which it can be nonzero: a divisibility
/// chain makes `m_j t` integral from the first integral term on, and a finite
/// list has nothing past its end.
fn exact_square_sum(m: &ModulusSequence, t: &Angle) -> Result<Rational> {
    let mut sum = Rational::new();
    if t.is_zero() {
        return Ok(sum);
    }
    if !t.is_rational() {
        return Err(Error::InvalidAngle(
            "exact square sums need a rational angle".into(),
        ));
    }
    let chain = m.is_divisibility_chain();
    for j in 1.. {
        if m.available().is_some_and(|len| j > len) {
            break;
        }
        let tj = t.times_int_mod1(&m.get(j)?)?;
        if chain && tj.is_zero() {
            break;
        }
        sum += tj.dist_nearest_int().to_rational().square();
    }
    Ok(sum)
}

/// Rows `n = 1..n_max` for a point built from a Thm6 selection.
pub fn dirichlet_check<T: Scalar>(
    m: &ModulusSequence,
    point: &EtaPoint,
    n_max: usize,
    policy: &LimitPolicy,
) -> Result<Vec<DirichletRow<T>>> {
    if point.selection.mode != Mode::Thm6 {
        return Err(Error::InvalidArgument(
            "dirichlet_check needs a thm6 selection".into(),
        ));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let available = point.selection.indices.len();
    if n_max > available {
        return Err(Error::SelectionTooShallow {
            needed: n_max,
            available,
        });
    }
    (1..=n_max)
        .map(|n| {
            let t = m.get(point.selection.indices[n - 1])?;
            let shifted = point.theta.times_int_mod1(&t)?;
            let tail_sum = exact_square_sum(m, &shifted)?;
            let l_value = nu_hat::<T>(m, &point.theta, &t, policy)?;
            let tail_bound = Rational::from((4, 3 * (1u64 << (2 * n as u32).min(62))));
            Ok(DirichletRow {
                n,
                l_lower: 1.0 - FACTOR_LOSS_CONSTANT * tail_sum.to_f64(),
                l_value,
                tail_sum,
                tail_bound,
            })
        })
        .collect()
}

pub fn dirichlet_rows_to_csv<T: Scalar>(rows: &[DirichletRow<T>]) -> String {
    let mut out = format!("{DIRICHLET_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            fmt_num(r.l_lower),
            fmt_num(r.l_value.value.to_f64()),
            fmt_num(r.tail_sum.to_f64()),
            fmt_num(r.tail_bound.to_f64())
        ));
    }
    out
}

pub fn dirichlet_rows_to_json<T: Scalar>(rows: &[DirichletRow<T>]) -> Value {
    rows.iter()
        .map(|r| {
            json!({
                "n": r.n,
                "L_lower": fmt_num(r.l_lower),
                "L_value": fmt_num(r.l_value.value.to_f64()),
                "tail_sum": fmt_num(r.tail_sum.to_f64()),
                "tail_bound": fmt_num(r.tail_bound.to_f64()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lacunary::{ModulusFamily, RatioRule};
    use crate::measures::{select_subsequence, theta_of_eta};
    use rug::Integer;

    fn self_multiple() -> ModulusSequence {
        ModulusSequence::new(ModulusFamily::Custom {
            first: Integer::from(3),
            ratio: RatioRule::SelfMultiple { factor: 3 },
        })
        .unwrap()
    }

    #[test]
    fn rows_satisfy_the_tail_bound() {
        let m = self_multiple();
        let sel = select_subsequence(&m, Mode::Thm6, 4, 4).unwrap();
        let p = theta_of_eta(&m, &[true; 4], &sel).unwrap();
        let rows = dirichlet_check::<f64>(&m, &p, 3, &LimitPolicy::default()).unwrap();
        assert_eq!(rows.len(), 3);
        let pi2 = std::f64::consts::PI.powi(2);
        for r in &rows {
            assert!(r.bound_holds(), "{r:?}");
            assert!(r.tail_sum < Rational::from((1, 3)));
            assert!(r.l_lower >= 1.0 - 16.0 * pi2 / 9.0 * 4f64.powi(-(r.n as i32)));
        }
        assert!(rows.windows(2).all(|w| w[1].l_lower > w[0].l_lower));
        let csv = dirichlet_rows_to_csv(&rows);
        assert!(csv.starts_with("n,L_lower,L_value,tail_sum,tail_bound\n1,"));
    }

    #[test]
    fn zero_word_gives_ones() {
        let m = self_multiple();
        let sel = select_subsequence(&m, Mode::Thm6, 3, 4).unwrap();
        let p = theta_of_eta(&m, &[false; 3], &sel).unwrap();
        for r in dirichlet_check::<f64>(&m, &p, 3, &LimitPolicy::default()).unwrap() {
            assert_eq!(r.l_value.value, 1.0);
            assert_eq!(r.tail_sum, 0);
        }
    }

    #[test]
    fn preconditions() {
        let m = self_multiple();
        let sel = select_subsequence(&m, Mode::Thm6, 2, 4).unwrap();
        let p = theta_of_eta(&m, &[true, true], &sel).unwrap();
        assert!(matches!(
            dirichlet_check::<f64>(&m, &p, 3, &LimitPolicy::default()),
            Err(Error::SelectionTooShallow {
                needed: 3,
                available: 2
            })
        ));
        let prop5 = select_subsequence(&m, Mode::Prop5, 2, 4).unwrap();
        let q = theta_of_eta(&m, &[true, true], &prop5).unwrap();
        assert!(dirichlet_check::<f64>(&m, &q, 1, &LimitPolicy::default()).is_err());
    }
}
