//! Lacunary moduli and the good sequence they generate.
//!
//! The sequence `S` consists of all integers `m_k + Σ_{j<k} ω_j m_j` with
//! `ω_j ∈ {−1, 0, 1}`, listed in increasing order. Block `k` holds `3^{k−1}`
//! elements and blocks never overlap, so ranks, elements and counts are all
//! computed by balanced-ternary arithmetic instead of sorting.

mod conditions;
mod family;
mod index;
mod stream;

pub use conditions::{check_conditions, ConditionReport, ConditionVerdict};
pub use family::{ModulusFamily, ModulusSequence, RatioRule, MAX_MODULUS_BITS};
pub use index::{
    count_up_to, cumulative_count, element_at, index_to_element, index_to_rank, rank_to_index,
    BalancedTernaryIndex,
};
pub use stream::{enumerate_stream, SequenceStream};

use crate::error::Result;

/// Validate a family descriptor and wrap it in a memoised sequence.
pub fn build_modulus(family: ModulusFamily) -> Result<ModulusSequence> {
    ModulusSequence::new(family)
}
