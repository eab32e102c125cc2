use rug::{Integer, Rational};
use serde::{Serialize, Serializer};

use super::SubsequenceSelection;
use crate::error::{Error, Result};
use crate::lacunary::ModulusSequence;
use crate::modone::Angle;

/// `θ(η) = Σ_{k≤K} η_k / m_{j_k}` for a finite word `η`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtaPoint {
    #[serde(serialize_with = "bits_as_string")]
    pub eta: Vec<bool>,
    pub selection: SubsequenceSelection,
    pub theta: Angle,
    /// Bound on the distance from `θ(η)` to any infinite extension of `η`;
    /// `None` when the moduli needed for it cannot be formed.
    #[serde(serialize_with = "rational_as_f64")]
    pub truncation_err: Option<Rational>,
}

fn bits_as_string<S: Serializer>(eta: &[bool], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&eta_to_string(eta))
}

fn rational_as_f64<S: Serializer>(
    q: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_f64(q.to_f64()),
        None => s.serialize_none(),
    }
}

pub fn eta_to_string(eta: &[bool]) -> String {
    eta.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parse a word such as `1011`.
pub fn parse_eta(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::InvalidArgument(format!(
                "eta word {s:?} must consist of 0 and 1"
            ))),
        })
        .collect()
}

/// All `2^K` words in lexicographic order, `η_1` most significant.
pub fn all_eta_words(k: usize) -> Vec<Vec<bool>> {
    (0u64..1 << k)
        .map(|w| (0..k).map(|i| w >> (k - 1 - i) & 1 == 1).collect())
        .collect()
}

pub fn theta_of_eta(
    m: &ModulusSequence,
    eta: &[bool],
    sel: &SubsequenceSelection,
) -> Result<EtaPoint> {
    let k = eta.len();
    if k > sel.indices.len() {
        return Err(Error::SelectionTooShallow {
            needed: k,
            available: sel.indices.len(),
        });
    }
    let mut theta = Rational::new();
    for (&bit, &j) in eta.iter().zip(&sel.indices) {
        if bit {
            theta += Rational::from((1, m.get(j)?));
        }
    }
    // The tail Σ_{i>K} 1/m_{j_i} is below 2/m_{j_{K+1}}; m_{j_K + 1} ≤ m_{j_{K+1}}
    // stands in when j_{K+1} is unknown or too large to form.
    let mut candidates = Vec::new();
    if let Some(&j) = sel.indices.get(k) {
        candidates.push(j);
    }
    candidates.push(if k == 0 {
        sel.indices.first().copied().unwrap_or(2)
    } else {
        sel.indices[k - 1] + 1
    });
    let truncation_err = candidates
        .into_iter()
        .find_map(|j| m.get(j).ok())
        .map(|mj| Rational::from((2, mj)));
    Ok(EtaPoint {
        eta: eta.to_vec(),
        selection: sel.clone(),
        theta: Angle::from_rational(&theta),
        truncation_err,
    })
}

/// `2·m_j / m_{j_k}` with `j_k` the least selected index above `j`: a bound
/// on `‖m_j θ(η)‖` valid for every word. `None` when no selected index
/// exceeds `j`.
pub fn mtheta_bound(
    m: &ModulusSequence,
    sel: &SubsequenceSelection,
    j: usize,
) -> Result<Option<Rational>> {
    if j == 0 {
        return Err(Error::InvalidArgument("moduli are indexed from 1".into()));
    }
    let Some(&jk) = sel.indices.iter().find(|&&i| i > j) else {
        return Ok(None);
    };
    Ok(Some(Rational::from((
        Integer::from(2) * m.get(j)?,
        m.get(jk)?,
    ))))
}
