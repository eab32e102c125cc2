use std::fmt;
use std::sync::RwLock;

use rug::ops::Pow;
use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generated moduli larger than this many bits are refused.
pub const MAX_MODULUS_BITS: u64 = 1 << 24;

/// Rule producing the integer ratio `r_j = m_{j+1} / m_j` of a custom family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RatioRule {
    /// `r_j = value`.
    Constant { value: u64 },
    /// `r_j = slope·j + intercept`.
    Affine { slope: u64, intercept: u64 },
    /// `r_j = base^(scale·j + shift)`.
    Exponential { base: u64, scale: u64, shift: u64 },
    /// `r_j = factor·m_j`, so `m_{j+1} = factor·m_j²`.
    SelfMultiple { factor: u64 },
}

impl RatioRule {
    fn ratio(&self, j: usize, m_j: &Integer) -> Integer {
        let j = j as u64;
        match *self {
            RatioRule::Constant { value } => Integer::from(value),
            RatioRule::Affine { slope, intercept } => Integer::from(slope) * j + intercept,
            RatioRule::Exponential { base, scale, shift } => {
                let exponent = scale * j + shift;
                Integer::from(base).pow(exponent as u32)
            }
            RatioRule::SelfMultiple { factor } => Integer::from(factor) * m_j,
        }
    }

    fn log2_ratio(&self, j: usize, log2_m_j: f64) -> f64 {
        let j = j as f64;
        match *self {
            RatioRule::Constant { value } => (value as f64).log2(),
            RatioRule::Affine { slope, intercept } => (slope as f64 * j + intercept as f64).log2(),
            RatioRule::Exponential { base, scale, shift } => {
                (scale as f64 * j + shift as f64) * (base as f64).log2()
            }
            RatioRule::SelfMultiple { factor } => (factor as f64).log2() + log2_m_j,
        }
    }
}

/// Descriptor of a lacunary moduli family. Serialises as a JSON object
/// tagged by `"family"`; big integers are decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModulusFamily {
    /// A finite list `m_1, …, m_L`.
    Explicit {
        #[serde(with = "crate::decimal::vec")]
        values: Vec<Integer>,
    },
    /// `m_j = base^j`.
    Geometric { base: u64 },
    /// `m_j = (j + offset)!`.
    FactorialShift { offset: u64 },
    /// `m_1 = first`, `m_{j+1} = m_j · r_j`.
    Custom {
        #[serde(with = "crate::decimal")]
        first: Integer,
        ratio: RatioRule,
    },
}

impl fmt::Display for ModulusFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModulusFamily::Explicit { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "explicit:{}", parts.join(","))
            }
            ModulusFamily::Geometric { base } => write!(f, "geometric:{base}"),
            ModulusFamily::FactorialShift { offset } => write!(f, "factorial:{offset}"),
            ModulusFamily::Custom { .. } => {
                f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
            }
        }
    }
}

impl std::str::FromStr for ModulusFamily {
    type Err = Error;

    /// `geometric:B`, `factorial:OFFSET`, `explicit:a,b,c`, or a JSON object.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s)
                .map_err(|e| Error::InvalidArgument(format!("family descriptor: {e}")));
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("family descriptor `{s}`")))?;
        let bad = |e: &dyn fmt::Display| Error::InvalidArgument(format!("family `{s}`: {e}"));
        match kind {
            "geometric" => Ok(ModulusFamily::Geometric {
                base: arg.parse().map_err(|e| bad(&e))?,
            }),
            "factorial" | "factorial_shift" => Ok(ModulusFamily::FactorialShift {
                offset: arg.parse().map_err(|e| bad(&e))?,
            }),
            "explicit" => {
                let values = arg
                    .split(',')
                    .map(|v| v.trim().parse::<Integer>().map_err(|e| bad(&e)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ModulusFamily::Explicit { values })
            }
            _ => Err(Error::InvalidArgument(format!("unknown family `{kind}`"))),
        }
    }
}

/// Lacunary moduli `m_1 < m_2 < …` with `m_{j+1} ≥ 3 m_j`, computed on
/// demand and memoised.
pub struct ModulusSequence {
    family: ModulusFamily,
    cache: RwLock<Vec<Integer>>,
}

impl Clone for ModulusSequence {
    fn clone(&self) -> Self {
        let cache = self.cache.read().expect("modulus cache poisoned").clone();
        ModulusSequence {
            family: self.family.clone(),
            cache: RwLock::new(cache),
        }
    }
}

impl fmt::Debug for ModulusSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cached = self.cache.read().map(|c| c.len()).unwrap_or(0);
        f.debug_struct("ModulusSequence")
            .field("family", &self.family)
            .field("cached", &cached)
            .finish()
    }
}

impl ModulusSequence {
    /// Validate a family descriptor. Explicit lists are checked eagerly;
    /// generated families are checked through their parameters, which
    /// bound every ratio from below.
    pub fn new(family: ModulusFamily) -> Result<Self> {
        let mut cache = Vec::new();
        match &family {
            ModulusFamily::Explicit { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidArgument(
                        "explicit moduli list is empty".into(),
                    ));
                }
                for (i, v) in values.iter().enumerate() {
                    if *v <= 0 {
                        return Err(Error::NonPositive { index: i + 1 });
                    }
                    if i > 0 {
                        let prev = &values[i - 1];
                        if v <= prev {
                            return Err(Error::NotIncreasing { index: i + 1 });
                        }
                        if Integer::from(prev * 3u32) > *v {
                            return Err(Error::RatioTooSmall {
                                index: i,
                                next: i + 1,
                            });
                        }
                    }
                }
                cache = values.clone();
            }
            ModulusFamily::Geometric { base } => {
                if *base < 3 {
                    return Err(Error::RatioTooSmall { index: 1, next: 2 });
                }
            }
            ModulusFamily::FactorialShift { offset } => {
                if *offset < 1 {
                    return Err(Error::RatioTooSmall { index: 1, next: 2 });
                }
            }
            ModulusFamily::Custom { first, ratio } => {
                if *first <= 0 {
                    return Err(Error::NonPositive { index: 1 });
                }
                // Every rule is non-decreasing in j, so r_1 ≥ 3 suffices.
                if ratio.ratio(1, first) < 3 {
                    return Err(Error::RatioTooSmall { index: 1, next: 2 });
                }
            }
        }
        Ok(ModulusSequence {
            family,
            cache: RwLock::new(cache),
        })
    }

    pub fn family(&self) -> &ModulusFamily {
        &self.family
    }

    /// Number of moduli defined, or `None` for infinite families.
    pub fn available(&self) -> Option<usize> {
        match &self.family {
            ModulusFamily::Explicit { values } => Some(values.len()),
            _ => None,
        }
    }

    /// Whether `m_j | m_{j+1}` holds for every `j`, including indices not
    /// yet computed. Finite lists never qualify: nothing is known past
    /// their end.
    pub fn is_divisibility_chain(&self) -> bool {
        !matches!(self.family, ModulusFamily::Explicit { .. })
    }

    /// Whether `m_{j+1}/m_j` is non-decreasing in `j` for the whole family.
    pub fn has_monotone_ratio(&self) -> bool {
        !matches!(self.family, ModulusFamily::Explicit { .. })
    }

    /// `m_j` (1-based).
    pub fn get(&self, j: usize) -> Result<Integer> {
        if j == 0 {
            return Err(Error::InvalidArgument("moduli are indexed from 1".into()));
        }
        {
            let cache = self.cache.read().expect("modulus cache poisoned");
            if let Some(v) = cache.get(j - 1) {
                return Ok(v.clone());
            }
        }
        self.extend_to(j)?;
        let cache = self.cache.read().expect("modulus cache poisoned");
        Ok(cache[j - 1].clone())
    }

    /// `m_1, …, m_k`.
    pub fn prefix(&self, k: usize) -> Result<Vec<Integer>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        self.extend_to(k)?;
        let cache = self.cache.read().expect("modulus cache poisoned");
        Ok(cache[..k].to_vec())
    }

    /// Ratio `m_j / m_{j-1}` for `j ≥ 2` as an integer, when the family
    /// guarantees divisibility. Does not materialise `m_j` unless the rule
    /// depends on it.
    pub fn integer_ratio(&self, j: usize) -> Result<Option<Integer>> {
        if j < 2 {
            return Err(Error::InvalidArgument(
                "ratio m_j/m_(j-1) needs j >= 2".into(),
            ));
        }
        Ok(match &self.family {
            ModulusFamily::Explicit { .. } => {
                let (a, b) = (self.get(j - 1)?, self.get(j)?);
                if b.is_divisible(&a) {
                    Some(b / a)
                } else {
                    None
                }
            }
            ModulusFamily::Geometric { base } => Some(Integer::from(*base)),
            ModulusFamily::FactorialShift { offset } => Some(Integer::from(j as u64 + offset)),
            ModulusFamily::Custom { ratio, .. } => match ratio {
                RatioRule::SelfMultiple { .. } => Some(ratio.ratio(j - 1, &self.get(j - 1)?)),
                _ => Some(ratio.ratio(j - 1, &Integer::new())),
            },
        })
    }

    /// Cheap estimate of `log2 m_j`, computed without building `m_j`.
    pub fn log2_estimate(&self, j: usize) -> f64 {
        match &self.family {
            ModulusFamily::Explicit { values } => match values.get(j.wrapping_sub(1)) {
                Some(v) => v.to_f64().log2(),
                None => f64::INFINITY,
            },
            ModulusFamily::Geometric { base } => j as f64 * (*base as f64).log2(),
            ModulusFamily::FactorialShift { offset } => log2_factorial(j as f64 + *offset as f64),
            ModulusFamily::Custom { first, ratio } => {
                let mut log2_m = first.to_f64().log2();
                if let RatioRule::Exponential { base, scale, shift } = *ratio {
                    // Σ_{i<j} (scale·i + shift) in closed form.
                    let n = (j - 1) as f64;
                    let exps = scale as f64 * n * (n + 1.0) / 2.0 + shift as f64 * n;
                    return log2_m + exps * (base as f64).log2();
                }
                for i in 1..j {
                    log2_m += ratio.log2_ratio(i, log2_m);
                    if !log2_m.is_finite() || log2_m > 1e18 {
                        return f64::INFINITY;
                    }
                }
                log2_m
            }
        }
    }

    fn check_size(&self, j: usize) -> Result<()> {
        let estimate = self.log2_estimate(j);
        if estimate > MAX_MODULUS_BITS as f64 {
            return Err(Error::ModulusTooLarge {
                index: j,
                estimated_bits: if estimate.is_finite() {
                    estimate as u64
                } else {
                    u64::MAX
                },
                limit: MAX_MODULUS_BITS,
            });
        }
        Ok(())
    }

    fn extend_to(&self, k: usize) -> Result<()> {
        if let Some(len) = self.available() {
            if k > len {
                return Err(Error::ModulusOutOfRange {
                    index: k,
                    available: len,
                });
            }
            return Ok(());
        }
        if self.cache.read().expect("modulus cache poisoned").len() >= k {
            return Ok(());
        }
        self.check_size(k)?;
        let mut cache = self.cache.write().expect("modulus cache poisoned");
        while cache.len() < k {
            let j = cache.len() + 1;
            let next = match &self.family {
                ModulusFamily::Explicit { .. } => {
                    unreachable!("explicit families are fully cached")
                }
                ModulusFamily::Geometric { base } => match cache.last() {
                    Some(prev) => Integer::from(prev * *base),
                    None => Integer::from(*base),
                },
                ModulusFamily::FactorialShift { offset } => match cache.last() {
                    Some(prev) => Integer::from(prev * (j as u64 + offset)),
                    None => Integer::from(Integer::factorial(1 + *offset as u32)),
                },
                ModulusFamily::Custom { first, ratio } => match cache.last() {
                    Some(prev) => prev * ratio.ratio(j - 1, prev),
                    None => first.clone(),
                },
            };
            cache.push(next);
        }
        Ok(())
    }
}

/// `log2 Γ(n + 1)` by Stirling's series; exact enough for size guards.
fn log2_factorial(n: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    if n < 32.0 {
        return (2..=n as u64).map(|i| (i as f64).log2()).sum();
    }
    let ln = n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln() + 1.0 / (12.0 * n);
    ln / std::f64::consts::LN_2
}
