use std::fmt;

use rug::ops::Pow;
use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lacunary::{ModulusFamily, ModulusSequence, RatioRule};

/// Extra indices past `j_K` over which "for all `j ≥ j_k`" is checked
/// numerically.
pub const DEFAULT_WINDOW: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `m_j/m_{j−1} > 2^{k+2}` for `j ≥ j_k`.
    Prop5,
    /// Additionally `m_j/m_{j−1} > 2^{k+2}·m_{j_{k−1}}` for `j ≥ j_k`, `k > 1`.
    Thm6,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Prop5 => "prop5",
            Mode::Thm6 => "thm6",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prop5" => Ok(Mode::Prop5),
            "thm6" => Ok(Mode::Thm6),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode {s:?} (expected prop5 or thm6)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsequenceSelection {
    pub mode: Mode,
    /// `j_1 < j_2 < …`, all at least 2.
    pub indices: Vec<usize>,
    /// Last index at which the ratio conditions were checked.
    pub horizon: usize,
}

impl SubsequenceSelection {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// The ratio threshold for step `k` (1-based): `2^{k+2}`, times
/// `m_{j_{k−1}}` in Thm6 mode.
fn threshold(
    m: &ModulusSequence,
    mode: Mode,
    k: usize,
    previous: Option<usize>,
) -> Result<Integer> {
    let base = Integer::from(1) << (k as u32 + 2);
    match (mode, previous) {
        (Mode::Thm6, Some(j)) => Ok(base * m.get(j)?),
        _ => Ok(base),
    }
}

fn too_slow(k: usize, reason: impl Into<String>) -> Error {
    Error::GrowthTooSlow {
        k,
        reason: reason.into(),
    }
}

fn to_index(k: usize, j: Integer) -> Result<usize> {
    j.to_usize()
        .filter(|&i| i < usize::MAX / 2)
        .ok_or(Error::IndexTooLarge {
            k,
            bits: j.significant_bits() as u64,
        })
}

fn ceil_div(a: &Integer, b: u64) -> Integer {
    Integer::from(a + (b - 1)) / b
}

/// Least `j ≥ start` with `m_j/m_{j−1} > bound`, for a family whose ratio is
/// non-decreasing in `j`, so the condition then holds for every later `j`.
fn least_monotone(m: &ModulusSequence, k: usize, start: usize, bound: &Integer) -> Result<usize> {
    let constant = |r: Integer| {
        if r > *bound {
            Ok(start)
        } else {
            Err(too_slow(
                k,
                format!("constant ratio {r} never exceeds {bound}"),
            ))
        }
    };
    match m.family() {
        ModulusFamily::Geometric { base } => constant(Integer::from(*base)),
        // m_j/m_{j−1} = j + offset.
        ModulusFamily::FactorialShift { offset } => {
            let j = Integer::from(bound - *offset) + 1u32;
            Ok(start.max(to_index(k, j.max(Integer::from(0)))?))
        }
        ModulusFamily::Custom { ratio, .. } => match *ratio {
            RatioRule::Constant { value } => constant(Integer::from(value)),
            RatioRule::Affine {
                slope: 0,
                intercept,
            } => constant(Integer::from(intercept)),
            RatioRule::Exponential {
                base,
                scale: 0,
                shift,
            } => constant(Integer::from(base).pow(shift as u32)),
            // slope·(j−1) + intercept > bound.
            RatioRule::Affine { slope, intercept } => {
                if *bound < intercept {
                    return Ok(start);
                }
                let j = Integer::from(bound - intercept) / slope + 2u32;
                Ok(start.max(to_index(k, j)?))
            }
            // base^{scale·(j−1) + shift} > bound.
            RatioRule::Exponential { base, scale, shift } => {
                let log2_base = (base as f64).log2();
                let mut e =
                    ((bound.significant_bits() as f64 / log2_base) as u64).saturating_sub(2);
                while Integer::from(base).pow(e as u32) <= *bound {
                    e += 1;
                }
                let steps = ceil_div(&Integer::from(e.saturating_sub(shift)), scale);
                Ok(start.max(to_index(k, steps + 1u32)?))
            }
            // factor·m_{j−1} grows doubly exponentially: step.
            RatioRule::SelfMultiple { .. } => {
                let mut j = start;
                loop {
                    let r = m
                        .integer_ratio(j)?
                        .expect("custom families are divisibility chains");
                    if r > *bound {
                        return Ok(j);
                    }
                    j += 1;
                }
            }
        },
        ModulusFamily::Explicit { .. } => unreachable!("explicit lists are scanned"),
    }
}

/// Least `j ≥ start` such that `m_i > bound·m_{i−1}` for every `i` from `j`
/// to the end of the list.
fn least_in_list(values: &[Integer], k: usize, start: usize, bound: &Integer) -> Result<usize> {
    let len = values.len();
    let holds = |i: usize| values[i - 1] > Integer::from(bound * &values[i - 2]);
    let mut j = len + 1;
    while j > start.max(2) && holds(j - 1) {
        j -= 1;
    }
    if j > len {
        return Err(too_slow(
            k,
            format!("no index in {start}..={len} keeps every later ratio above {bound}"),
        ));
    }
    Ok(j)
}

/// Greedy minimal indices `j_1 < … < j_K`.
///
/// Families with a non-decreasing ratio formula are handled symbolically, so
/// the condition is certified for every `j ≥ j_k`. Explicit lists are
/// checked up to their last element.
pub fn select_subsequence(
    m: &ModulusSequence,
    mode: Mode,
    k: usize,
    window: usize,
) -> Result<SubsequenceSelection> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    let mut indices: Vec<usize> = Vec::with_capacity(k);
    for step in 1..=k {
        let previous = indices.last().copied();
        let start = previous.map_or(2, |j| j + 1);
        let bound = threshold(m, mode, step, previous)?;
        let j = match m.family() {
            ModulusFamily::Explicit { values } => least_in_list(values, step, start, &bound)?,
            _ => least_monotone(m, step, start, &bound)?,
        };
        indices.push(j);
    }
    let last = *indices.last().unwrap();
    let horizon = match m.available() {
        Some(len) => len,
        None => last + window,
    };
    Ok(SubsequenceSelection {
        mode,
        indices,
        horizon,
    })
}

/// Recheck the selection's ratio conditions at every `j` up to its horizon.
pub fn verify_selection(m: &ModulusSequence, sel: &SubsequenceSelection) -> Result<bool> {
    if sel.indices.first().is_some_and(|&j| j < 2) || sel.indices.windows(2).any(|w| w[0] >= w[1]) {
        return Ok(false);
    }
    for (step, &jk) in sel.indices.iter().enumerate() {
        let previous = step.checked_sub(1).map(|i| sel.indices[i]);
        let bound = threshold(m, sel.mode, step + 1, previous)?;
        for j in jk..=sel.horizon {
            let (prev, cur) = match m.integer_ratio(j)? {
                Some(r) => (Integer::from(1), r),
                None => (m.get(j - 1)?, m.get(j)?),
            };
            if cur <= Integer::from(&bound * &prev) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
