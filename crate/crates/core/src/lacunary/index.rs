use rug::ops::Pow;
use rug::Integer;
use serde::{Deserialize, Serialize};

use super::ModulusSequence;
use crate::error::{Error, Result};

/// Address of one element `m_k + Σ_{j<k} ω_j m_j` of the good sequence.
///
/// `digits[j - 1]` is `ω_j`. Within a block the elements are ordered by the
/// digits read most-significant first (`ω_{k-1}` first), which coincides
/// with numeric order because `Σ_{i<j} m_i < m_j / 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BalancedTernaryIndex {
    k: usize,
    digits: Vec<i8>,
}

impl BalancedTernaryIndex {
    pub fn new(k: usize, digits: Vec<i8>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("block index k must be >= 1".into()));
        }
        if digits.len() != k - 1 {
            return Err(Error::InvalidArgument(format!(
                "block {k} needs {} digits, got {}",
                k - 1,
                digits.len()
            )));
        }
        if digits.iter().any(|d| !(-1..=1).contains(d)) {
            return Err(Error::InvalidArgument(
                "digits must lie in {-1, 0, 1}".into(),
            ));
        }
        Ok(BalancedTernaryIndex { k, digits })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `ω_1, …, ω_{k-1}`.
    pub fn digits(&self) -> &[i8] {
        &self.digits
    }

    /// `ω_j` for `1 ≤ j < k`.
    pub fn digit(&self, j: usize) -> i8 {
        self.digits[j - 1]
    }
}

/// Number of elements in blocks `1..k`, i.e. `(3^k − 1)/2`.
pub fn cumulative_count(k: usize) -> u128 {
    (3u128.pow(k as u32) - 1) / 2
}

/// Index of the `n`-th smallest element (`n ≥ 1`).
pub fn rank_to_index(n: u64) -> Result<BalancedTernaryIndex> {
    if n == 0 {
        return Err(Error::InvalidArgument("ranks start at 1".into()));
    }
    let n = n as u128;
    let mut k = 1;
    while cumulative_count(k) < n {
        k += 1;
    }
    let mut offset = n - 1 - cumulative_count(k - 1);
    // Least significant ternary digit is ω_1.
    let mut digits = vec![0i8; k - 1];
    for d in digits.iter_mut() {
        *d = (offset % 3) as i8 - 1;
        offset /= 3;
    }
    Ok(BalancedTernaryIndex { k, digits })
}

/// Inverse of [`rank_to_index`].
pub fn index_to_rank(idx: &BalancedTernaryIndex) -> u128 {
    let offset = idx
        .digits
        .iter()
        .rev()
        .fold(0u128, |acc, &d| acc * 3 + (d + 1) as u128);
    cumulative_count(idx.k - 1) + offset + 1
}

/// `m_k + Σ_{j<k} ω_j m_j`.
pub fn index_to_element(m: &ModulusSequence, idx: &BalancedTernaryIndex) -> Result<Integer> {
    let moduli = m.prefix(idx.k)?;
    Ok(element_from_prefix(&moduli, idx))
}

pub(crate) fn element_from_prefix(moduli: &[Integer], idx: &BalancedTernaryIndex) -> Integer {
    let mut value = moduli[idx.k - 1].clone();
    for (d, mj) in idx.digits.iter().zip(moduli) {
        match d {
            1 => value += mj,
            -1 => value -= mj,
            _ => {}
        }
    }
    value
}

/// `s_n`, the `n`-th smallest element of the good sequence.
pub fn element_at(m: &ModulusSequence, n: u64) -> Result<Integer> {
    index_to_element(m, &rank_to_index(n)?)
}

/// `#{n : s_n ≤ x}` by block arithmetic and a digit-by-digit descent
/// inside the block containing `x`.
pub fn count_up_to(m: &ModulusSequence, x: &Integer) -> Result<Integer> {
    let mut lower_sum = Integer::new(); // Σ_{j<k} m_j
    let mut moduli: Vec<Integer> = Vec::new();
    for k in 1.. {
        let mk = m.get(k)?;
        let lo = Integer::from(&mk - &lower_sum);
        if *x < lo {
            return Ok(Integer::from(cumulative_count(k - 1)));
        }
        let hi = Integer::from(&mk + &lower_sum);
        if *x <= hi {
            let inner = count_in_block(&moduli, Integer::from(x - &mk));
            return Ok(Integer::from(cumulative_count(k - 1)) + inner);
        }
        lower_sum += &mk;
        moduli.push(mk);
    }
    unreachable!()
}

/// Number of digit vectors `ω ∈ {−1,0,1}^len` with `Σ ω_j m_j ≤ y`, where
/// `len = moduli.len()`.
fn count_in_block(moduli: &[Integer], mut y: Integer) -> Integer {
    // partial[j] = Σ_{i<j} m_i: the reach of the digits below level j.
    let mut partial = Vec::with_capacity(moduli.len() + 1);
    partial.push(Integer::new());
    for mj in moduli {
        let next = Integer::from(partial.last().unwrap() + mj);
        partial.push(next);
    }
    let mut count = Integer::new();
    'levels: for level in (0..moduli.len()).rev() {
        let mj = &moduli[level];
        let reach = &partial[level];
        let sub_block = Integer::from(3u32).pow(level as u32);
        for omega in [-1i32, 0, 1] {
            let center = Integer::from(mj * omega);
            if y < Integer::from(&center - reach) {
                return count;
            }
            if y >= Integer::from(&center + reach) {
                count += &sub_block;
                continue;
            }
            y -= center;
            continue 'levels;
        }
        return count;
    }
    if y >= 0 {
        count += 1;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lacunary::ModulusFamily;

    fn geometric3() -> ModulusSequence {
        ModulusSequence::new(ModulusFamily::Geometric { base: 3 }).unwrap()
    }

    fn factorial2() -> ModulusSequence {
        ModulusSequence::new(ModulusFamily::FactorialShift { offset: 2 }).unwrap()
    }

    #[test]
    fn hand_evaluated_elements() {
        let m = geometric3();
        let idx = |k, d: Vec<i8>| BalancedTernaryIndex::new(k, d).unwrap();
        assert_eq!(index_to_element(&m, &idx(1, vec![])).unwrap(), 3);
        assert_eq!(index_to_element(&m, &idx(3, vec![-1, 1])).unwrap(), 33);
        assert_eq!(index_to_element(&m, &idx(2, vec![1])).unwrap(), 12);
    }

    #[test]
    fn ranks_map_to_expected_indices() {
        let m = geometric3();
        assert_eq!(
            rank_to_index(1).unwrap(),
            BalancedTernaryIndex::new(1, vec![]).unwrap()
        );
        assert_eq!(
            rank_to_index(2).unwrap(),
            BalancedTernaryIndex::new(2, vec![-1]).unwrap()
        );
        assert_eq!(element_at(&m, 2).unwrap(), 6);
        assert_eq!(
            rank_to_index(13).unwrap(),
            BalancedTernaryIndex::new(3, vec![1, 1]).unwrap()
        );
        assert_eq!(element_at(&m, 13).unwrap(), 39);
        assert_eq!(element_at(&m, 5).unwrap(), 15);
        assert_eq!(element_at(&factorial2(), 2).unwrap(), 18);
        assert!(rank_to_index(0).is_err());
    }

    #[test]
    fn counts_on_geometric_family() {
        let m = geometric3();
        assert_eq!(count_up_to(&m, &Integer::from(2)).unwrap(), 0);
        assert_eq!(count_up_to(&m, &Integer::from(12)).unwrap(), 4);
        assert_eq!(count_up_to(&m, &Integer::from(16)).unwrap(), 5);
        assert_eq!(count_up_to(&m, &Integer::from(0)).unwrap(), 0);
    }

    #[test]
    fn malformed_indices_are_rejected() {
        assert!(BalancedTernaryIndex::new(0, vec![]).is_err());
        assert!(BalancedTernaryIndex::new(3, vec![1]).is_err());
        assert!(BalancedTernaryIndex::new(2, vec![2]).is_err());
    }

    #[test]
    fn rank_round_trip_small() {
        for n in 1..=2000u64 {
            assert_eq!(index_to_rank(&rank_to_index(n).unwrap()), n as u128);
        }
    }

    #[test]
    fn count_inverts_element_at_on_factorials() {
        let m = factorial2();
        for n in 1..=500u64 {
            let s = element_at(&m, n).unwrap();
            assert_eq!(count_up_to(&m, &s).unwrap(), n);
            assert_eq!(count_up_to(&m, &(s - 1u32)).unwrap(), n - 1);
        }
    }
}
