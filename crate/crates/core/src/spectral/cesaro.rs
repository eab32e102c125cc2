use std::collections::BTreeMap;

use num_complex::Complex;
use rug::ops::{Pow, RemRounding};
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use super::partial_products;
use crate::error::{Error, Result};
use crate::lacunary::{rank_to_index, ModulusSequence, SequenceStream};
use crate::modone::{unit_exp, Angle};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AverageMethod {
    Direct,
    Block,
}

impl AverageMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AverageMethod::Direct => "Direct",
            AverageMethod::Block => "Block",
        }
    }
}

/// `Σ e^{2iπ s_n θ}` for rational `θ = p/q`, held exactly as a histogram of
/// residues `s_n·p mod q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactSum {
    denominator: Integer,
    counts: BTreeMap<Integer, u64>,
}

impl ExactSum {
    fn new(denominator: Integer) -> Self {
        ExactSum {
            denominator,
            counts: BTreeMap::new(),
        }
    }

    fn add(&mut self, residue: Integer, count: u64) {
        *self.counts.entry(residue).or_insert(0) += count;
    }

    pub fn denominator(&self) -> &Integer {
        &self.denominator
    }

    /// `(residue, multiplicity)` pairs in increasing residue order.
    pub fn counts(&self) -> impl Iterator<Item = (&Integer, u64)> {
        self.counts.iter().map(|(r, c)| (r, *c))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Evaluate in `T`, returning the sum and an absolute error bound.
    pub fn evaluate<T: Scalar>(&self) -> (Complex<T>, f64) {
        let u = T::unit_roundoff();
        let total = self.total() as f64;
        let mut sum = Complex::new(T::zero(), T::zero());
        let mut err = 0.0;
        for (r, &c) in &self.counts {
            let e = unit_exp::<T>(&Angle::from_rational(&Rational::from((
                r.clone(),
                self.denominator.clone(),
            ))));
            let w = T::from_u64(c);
            sum = sum + e.to_complex() * w;
            err += c as f64 * (e.err + 2.0 * u);
        }
        err += 2.0 * self.counts.len() as f64 * u * total;
        (sum, err)
    }
}

/// A finite-`N` Cesàro average of `e^{2iπ s_n θ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CesaroEstimate<T> {
    pub n: u64,
    pub sum: Complex<T>,
    pub average: Complex<T>,
    pub method: AverageMethod,
    /// Absolute error bound on `average`.
    pub err: f64,
    /// The exact residue histogram, when it was formed.
    pub exact: Option<ExactSum>,
}

impl<T: Scalar> CesaroEstimate<T> {
    fn from_sum(
        n: u64,
        sum: Complex<T>,
        sum_err: f64,
        method: AverageMethod,
        exact: Option<ExactSum>,
    ) -> Self {
        let nt = T::from_u64(n);
        let average = Complex::new(sum.re.clone() / nt.clone(), sum.im.clone() / nt);
        CesaroEstimate {
            n,
            sum,
            average,
            method,
            err: sum_err / n as f64 + 2.0 * T::unit_roundoff(),
            exact,
        }
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    Ok(())
}

fn take_exact(m: &ModulusSequence, n: u64) -> impl Iterator<Item = Integer> + '_ {
    SequenceStream::new(m).take(n as usize)
}

fn short_stream(m: &ModulusSequence) -> Error {
    let available = m.available().unwrap_or(0);
    Error::ModulusOutOfRange {
        index: available + 1,
        available,
    }
}

/// Term-by-term `Σ_{n≤N} e^{2iπ s_n θ}`. Rational angles are reduced to an
/// exact residue histogram first, so the floating-point work is one
/// exponential per distinct residue.
pub fn direct_average<T: Scalar>(
    m: &ModulusSequence,
    theta: &Angle,
    n: u64,
) -> Result<CesaroEstimate<T>> {
    check_n(n)?;
    match theta {
        Angle::Rational(r) => {
            let (p, q) = (r.numer(), r.denom());
            let mut exact = ExactSum::new(q.clone());
            let mut seen = 0u64;
            for s in take_exact(m, n) {
                exact.add(Integer::from(&s * p).rem_euc(q), 1);
                seen += 1;
            }
            if seen < n {
                return Err(short_stream(m));
            }
            let (sum, err) = exact.evaluate::<T>();
            Ok(CesaroEstimate::from_sum(
                n,
                sum,
                err,
                AverageMethod::Direct,
                Some(exact),
            ))
        }
        Angle::Dyadic(_) => {
            let mut sum = Complex::new(T::zero(), T::zero());
            let mut err = 0.0;
            let mut seen = 0u64;
            for s in take_exact(m, n) {
                let e = unit_exp::<T>(&theta.times_int_mod1(&s)?);
                err += e.err;
                sum = sum + e.to_complex();
                seen += 1;
            }
            if seen < n {
                return Err(short_stream(m));
            }
            let nf = n as f64;
            err += 2.0 * nf * nf * T::unit_roundoff();
            Ok(CesaroEstimate::from_sum(
                n,
                sum,
                err,
                AverageMethod::Direct,
                None,
            ))
        }
    }
}

/// `m_1, …, m_k` for the block of `s_{N+1}`, omitting `m_k` when the first
/// `N` elements fill whole blocks (so finite lists can be summed to the end).
fn block_moduli(
    m: &ModulusSequence,
    idx: &crate::lacunary::BalancedTernaryIndex,
) -> Result<Vec<Integer>> {
    let k = idx.k();
    if idx.digits().iter().all(|&d| d == -1) {
        m.prefix(k - 1)
    } else {
        m.prefix(k)
    }
}

/// The sum of the first `N` terms assembled from whole blocks and translated
/// sub-blocks: with `k = k_N` and `ω(N)` the digits of `s_{N+1}`,
///
/// `Σ = Σ_{j<k} 3^{j−1} e(m_j θ) L_j + Σ_{j<k} Σ_{ω<ω_j(N)} 3^{j−1} e(u_j(ω) θ) L_j`,
///
/// `u_j(ω) = m_k + Σ_{j<ℓ<k} ω_ℓ(N) m_ℓ + ω m_j`. Costs `O(k²)` exponentials.
pub fn block_average<T: Scalar>(
    m: &ModulusSequence,
    theta: &Angle,
    n: u64,
) -> Result<CesaroEstimate<T>> {
    check_n(n)?;
    let idx = rank_to_index(n + 1)?;
    let k = idx.k();
    let moduli = block_moduli(m, &idx)?;
    let pp = partial_products::<T>(m, theta, k)?;
    let u = T::unit_roundoff();

    let mut sum = Complex::new(T::zero(), T::zero());
    let mut err = 0.0;
    let mut terms = 0usize;
    let mut add = |sum: &mut Complex<T>, j: usize, shift: &Integer| -> Result<()> {
        let weight = 3f64.powi(j as i32 - 1);
        let e = unit_exp::<T>(&theta.times_int_mod1(shift)?);
        let w =
            T::from_integer(&Integer::from(3u32).pow((j - 1) as u32)) * pp.values[j - 1].clone();
        *sum = sum.clone() + e.to_complex() * w;
        err += weight * (e.err + pp.err[j - 1] + 4.0 * u);
        terms += 1;
        Ok(())
    };

    for j in 1..k {
        add(&mut sum, j, &moduli[j - 1])?;
    }
    let mut running = moduli.get(k - 1).cloned().unwrap_or_default();
    for j in (1..k).rev() {
        let top = idx.digit(j);
        for omega in -1..top {
            let shift = &running + Integer::from(&moduli[j - 1] * omega as i32);
            add(&mut sum, j, &shift)?;
        }
        running += Integer::from(&moduli[j - 1] * top as i32);
    }
    err += 2.0 * terms as f64 * n as f64 * u;
    Ok(CesaroEstimate::from_sum(
        n,
        sum,
        err,
        AverageMethod::Block,
        None,
    ))
}

/// The block decomposition carried out on exact residue histograms for a
/// rational angle; equal to [`direct_average`]'s histogram by construction
/// of the sequence.
pub fn block_average_exact(m: &ModulusSequence, theta: &Angle, n: u64) -> Result<ExactSum> {
    check_n(n)?;
    let r = match theta {
        Angle::Rational(r) => r.clone(),
        Angle::Dyadic(_) => {
            return Err(Error::InvalidArgument(
                "exact block sums need a rational angle".into(),
            ))
        }
    };
    let (p, q) = (r.numer().clone(), r.denom().clone());
    let residue = |x: &Integer| Integer::from(x * &p).rem_euc(&q);
    let idx = rank_to_index(n + 1)?;
    let k = idx.k();
    let moduli = block_moduli(m, &idx)?;

    // hist[j-1]: residues of Σ_{i<j} ω_i m_i θ over all lower digit choices.
    let mut hist: Vec<BTreeMap<Integer, u64>> = Vec::with_capacity(k);
    hist.push(BTreeMap::from([(Integer::new(), 1u64)]));
    for j in 1..k.saturating_sub(1) {
        let t = residue(&moduli[j - 1]);
        let prev = &hist[j - 1];
        let mut next = BTreeMap::new();
        for (x, &c) in prev {
            for shift in [Integer::from(x - &t), x.clone(), Integer::from(x + &t)] {
                *next.entry(shift.rem_euc(&q)).or_insert(0u64) += c;
            }
        }
        hist.push(next);
    }

    let mut exact = ExactSum::new(q.clone());
    let mut add_shifted = |j: usize, shift: &Integer| {
        let base = residue(shift);
        for (x, &c) in &hist[j - 1] {
            exact.add(Integer::from(x + &base).rem_euc(&q), c);
        }
    };
    for j in 1..k {
        add_shifted(j, &moduli[j - 1]);
    }
    let mut running = moduli.get(k - 1).cloned().unwrap_or_default();
    for j in (1..k).rev() {
        let top = idx.digit(j);
        for omega in -1..top {
            add_shifted(
                j,
                &(&running + Integer::from(&moduli[j - 1] * omega as i32)),
            );
        }
        running += Integer::from(&moduli[j - 1] * top as i32);
    }
    debug_assert_eq!(exact.total(), n);
    Ok(exact)
}
