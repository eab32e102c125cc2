//! Integer sequences generated by lacunary moduli, with exact and
//! multi-precision tools for their exponential sums.
//!
//! Given moduli `m_1 < m_2 < …` with `m_{j+1} ≥ 3 m_j`, the integers
//! `m_k + Σ_{j<k} ω_j m_j` (`ω_j ∈ {−1,0,1}`) form an increasing sequence
//! `s_1 < s_2 < …` whose Cesàro averages `(1/N) Σ e^{2iπ s_n θ}` converge for
//! every `θ` to the infinite product
//! `L(θ) = Π_j (1 + 2 cos 2π m_j θ) / 3`.
//!
//! The crate enumerates the sequence exactly ([`lacunary`]), does exact and
//! fixed-point arithmetic on the circle ([`modone`]), evaluates `L`, the
//! averages and square-distance sums ([`spectral`]), and builds the
//! continuous measures and Dirichlet diagnostics supported on the spectrum
//! ([`measures`]). Numerical kernels are generic over [`Scalar`]; the
//! aliases below fix the common precisions.

pub mod cli;
mod decimal;
pub mod error;
pub mod lacunary;
pub mod measures;
pub mod modone;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use lacunary::{BalancedTernaryIndex, ModulusFamily, ModulusSequence, RatioRule};
pub use modone::{Angle, BoundedComplex};
pub use scalar::{Hp, Scalar};

pub type Hp128 = Hp<128>;
pub type Hp256 = Hp<256>;
pub type Hp512 = Hp<512>;

pub type SpectralValue64 = spectral::SpectralValue<f64>;
pub type SpectralValueHp = spectral::SpectralValue<Hp256>;
pub type CesaroEstimate64 = spectral::CesaroEstimate<f64>;
pub type CesaroEstimateHp = spectral::CesaroEstimate<Hp256>;
pub type WienerEstimate64 = measures::WienerEstimate<f64>;
pub type WienerEstimateHp = measures::WienerEstimate<Hp256>;
pub type DirichletRowHp = measures::DirichletRow<Hp256>;
