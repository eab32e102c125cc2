use std::collections::BTreeMap;

use num_complex::Complex;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use super::SubsequenceSelection;
use crate::error::{Error, Result};
use crate::lacunary::ModulusSequence;
use crate::modone::{unit_exp, Angle, BoundedComplex};
use crate::scalar::Scalar;
use crate::spectral::{fmt_num, limit_l, LimitPolicy, SpectralValue};

/// Samples drawn per RNG stream. Stream `c` covers samples
/// `c·CHUNK .. (c+1)·CHUNK`, so tallies do not depend on the thread count.
pub const MC_CHUNK: u64 = 4096;

/// `μ̂(s) = Π_{k≤K} (1 + e^{2iπ s/m_{j_k}})/2`.
pub fn mu_hat<T: Scalar>(
    m: &ModulusSequence,
    sel: &SubsequenceSelection,
    s: &Integer,
    k: usize,
) -> Result<BoundedComplex<T>> {
    let moduli = selected_moduli(m, sel, k)?;
    Ok(mu_hat_from(&moduli, s))
}

fn selected_moduli(
    m: &ModulusSequence,
    sel: &SubsequenceSelection,
    k: usize,
) -> Result<Vec<Integer>> {
    if k > sel.indices.len() {
        return Err(Error::SelectionTooShallow {
            needed: k,
            available: sel.indices.len(),
        });
    }
    sel.indices[..k].iter().map(|&j| m.get(j)).collect()
}

fn mu_hat_from<T: Scalar>(moduli: &[Integer], s: &Integer) -> BoundedComplex<T> {
    let half = T::one() / T::from_u64(2);
    let u = T::unit_roundoff();
    let mut acc = Complex::new(T::one(), T::zero());
    let mut err = 0.0;
    for mk in moduli {
        let e = unit_exp::<T>(&Angle::from_rational(&Rational::from((
            s.clone(),
            mk.clone(),
        ))));
        let factor = Complex::new((T::one() + e.re) * half.clone(), e.im * half.clone());
        acc = acc * factor;
        err += e.err / 2.0 + 6.0 * u;
    }
    BoundedComplex {
        re: acc.re,
        im: acc.im,
        err,
    }
}

/// Counts of sampled words `η ∈ {0,1}^K`, bit `K−k` of the key holding `η_k`.
type Tally = BTreeMap<u64, u64>;

fn sample_tally(k: usize, samples: u64, seed: u64) -> Result<Tally> {
    if k > 64 {
        return Err(Error::InvalidArgument(
            "Monte Carlo words are limited to K <= 64".into(),
        ));
    }
    let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut t = Tally::new();
            for _ in 0..n {
                *t.entry(rng.next_u64() & mask).or_insert(0) += 1;
            }
            t
        })
        .collect();
    let mut tally = Tally::new();
    for t in partial {
        for (w, c) in t {
            *tally.entry(w).or_insert(0) += c;
        }
    }
    Ok(tally)
}

fn word_theta(moduli: &[Integer], word: u64) -> Rational {
    let k = moduli.len();
    let mut theta = Rational::new();
    for (i, mk) in moduli.iter().enumerate() {
        if word >> (k - 1 - i) & 1 == 1 {
            theta += Rational::from((1, mk.clone()));
        }
    }
    theta
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate<T> {
    pub mean: Complex<T>,
    pub std_err: f64,
    pub samples: u64,
    pub seed: u64,
    /// Rounding error of `mean`.
    pub err: f64,
}

/// Mean and standard error of unit-modulus draws summarised by `(value, count)`.
fn mc_summary<T: Scalar>(
    values: &[(BoundedComplex<T>, u64)],
    samples: u64,
    seed: u64,
) -> McEstimate<T> {
    let mt = T::from_u64(samples);
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut sq = 0.0;
    let mut err = 0.0;
    for (v, c) in values {
        sum = sum + v.to_complex() * T::from_u64(*c);
        sq += *c as f64 * v.norm().to_f64().powi(2);
        err += *c as f64 * v.err;
    }
    let mean = Complex::new(sum.re / mt.clone(), sum.im / mt);
    let m = samples as f64;
    let std_err = if samples < 2 {
        f64::INFINITY
    } else {
        let mean_sq_norm = mean.re.to_f64().powi(2) + mean.im.to_f64().powi(2);
        let var = ((sq - m * mean_sq_norm) / (m - 1.0)).max(0.0);
        (var / m).sqrt()
    };
    McEstimate {
        mean,
        std_err,
        samples,
        seed,
        err: err / m + 2.0 * values.len() as f64 * T::unit_roundoff(),
    }
}

/// Empirical mean of `e^{2iπ s θ(η)}` over `samples` seeded draws of `η`.
pub fn mu_hat_mc<T: Scalar>(
    m: &ModulusSequence,
    sel: &SubsequenceSelection,
    s: &Integer,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate<T>> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "Monte Carlo needs at least one sample".into(),
        ));
    }
    let moduli = selected_moduli(m, sel, k)?;
    let tally = sample_tally(k, samples, seed)?;
    let values: Vec<(BoundedComplex<T>, u64)> = tally
        .iter()
        .map(|(&w, &c)| {
            let t = Angle::from_rational(&(word_theta(&moduli, w) * Rational::from(s)));
            (unit_exp::<T>(&t), c)
        })
        .collect();
    Ok(mc_summary(&values, samples, seed))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum WienerMethod {
    ExactProduct,
    MonteCarlo { samples: u64, seed: u64 },
}

impl WienerMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            WienerMethod::ExactProduct => "ExactProduct",
            WienerMethod::MonteCarlo { .. } => "MonteCarlo",
        }
    }
}

/// `(1/N) Σ μ̂(s_n)` and `(1/N) Σ |μ̂(s_n)|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerEstimate<T> {
    pub n: u64,
    pub mean_coeff: Complex<T>,
    pub mean_sq: T,
    pub method: WienerMethod,
    /// Standard error of `mean_coeff`; zero for the exact product.
    pub std_err: f64,
    /// Rounding error bound on `mean_coeff` and `mean_sq`.
    pub err: f64,
}

fn check_cauchy_schwarz<T: Scalar>(w: &WienerEstimate<T>) -> Result<()> {
    let coeff_sq = (w.mean_coeff.re.clone() * w.mean_coeff.re.clone()
        + w.mean_coeff.im.clone() * w.mean_coeff.im.clone())
    .to_f64();
    if w.mean_sq.to_f64() + 3.0 * w.err < coeff_sq {
        return Err(Error::InvariantViolated(format!(
            "mean_sq {} < |mean_coeff|^2 {coeff_sq}",
            w.mean_sq
        )));
    }
    Ok(())
}

fn stream_prefix(m: &ModulusSequence, n: u64) -> Result<Vec<Integer>> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    crate::lacunary::enumerate_stream(m, n)
}

/// Wiener averages with the exact product `μ̂`.
pub fn wiener_average<T: Scalar>(
    m: &ModulusSequence,
    sel: &SubsequenceSelection,
    n: u64,
    k: usize,
) -> Result<WienerEstimate<T>> {
    let moduli = selected_moduli(m, sel, k)?;
    let terms = stream_prefix(m, n)?;
    let values: Vec<BoundedComplex<T>> =
        terms.par_iter().map(|s| mu_hat_from(&moduli, s)).collect();
    let nt = T::from_u64(n);
    let mut coeff = Complex::new(T::zero(), T::zero());
    let mut sq = T::zero();
    let mut err = 0.0;
    for v in &values {
        coeff = coeff + v.to_complex();
        sq = sq + v.re.clone() * v.re.clone() + v.im.clone() * v.im.clone();
        err += 3.0 * v.err;
    }
    let w = WienerEstimate {
        n,
        mean_coeff: Complex::new(coeff.re / nt.clone(), coeff.im / nt.clone()),
        mean_sq: sq / nt,
        method: WienerMethod::ExactProduct,
        std_err: 0.0,
        err: err / n as f64 + 4.0 * n as f64 * T::unit_roundoff(),
    };
    check_cauchy_schwarz(&w)?;
    Ok(w)
}

/// Wiener averages with `μ̂` replaced by its Monte Carlo estimate; the same
/// sampled words serve every `s_n`.
pub fn wiener_average_mc<T: Scalar>(
    m: &ModulusSequence,
    sel: &SubsequenceSelection,
    n: u64,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<WienerEstimate<T>> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "Monte Carlo needs at least one sample".into(),
        ));
    }
    let moduli = selected_moduli(m, sel, k)?;
    let terms = stream_prefix(m, n)?;
    let tally = sample_tally(k, samples, seed)?;
    let words: Vec<(Rational, u64)> = tally
        .iter()
        .map(|(&w, &c)| (word_theta(&moduli, w), c))
        .collect();

    // e(s_n θ(η)) for every (n, word); per-word Cesàro averages feed the
    // standard error of mean_coeff.
    let rows: Vec<Vec<BoundedComplex<T>>> = terms
        .par_iter()
        .map(|s| {
            words
                .iter()
                .map(|(theta, _)| {
                    unit_exp::<T>(&Angle::from_rational(theta).times_int_mod1(s).unwrap())
                })
                .collect()
        })
        .collect();

    let mt = T::from_u64(samples);
    let nt = T::from_u64(n);
    let mut coeff = Complex::new(T::zero(), T::zero());
    let mut sq = T::zero();
    let mut err = 0.0;
    for row in &rows {
        let mut est = Complex::new(T::zero(), T::zero());
        for (v, (_, c)) in row.iter().zip(&words) {
            est = est + v.to_complex() * T::from_u64(*c);
            err += *c as f64 * v.err;
        }
        let est = Complex::new(est.re / mt.clone(), est.im / mt.clone());
        sq = sq + est.re.clone() * est.re.clone() + est.im.clone() * est.im.clone();
        coeff = coeff + est;
    }
    let per_word: Vec<(BoundedComplex<T>, u64)> = (0..words.len())
        .map(|i| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for row in &rows {
                acc = acc + row[i].to_complex();
            }
            let v = BoundedComplex {
                re: acc.re / nt.clone(),
                im: acc.im / nt.clone(),
                err: 0.0,
            };
            (v, words[i].1)
        })
        .collect();
    let summary = mc_summary(&per_word, samples, seed);

    let w = WienerEstimate {
        n,
        mean_coeff: Complex::new(coeff.re / nt.clone(), coeff.im / nt.clone()),
        mean_sq: sq / nt,
        method: WienerMethod::MonteCarlo { samples, seed },
        std_err: summary.std_err,
        err: 3.0 * err / (n as f64 * samples as f64)
            + 4.0 * (n + words.len() as u64) as f64 * T::unit_roundoff(),
    };
    check_cauchy_schwarz(&w)?;
    Ok(w)
}

pub const WIENER_CSV_HEADER: &str = "N,mean_re,mean_im,mean_sq,method,std_err";

pub fn wiener_rows_to_csv<T: Scalar>(rows: &[WienerEstimate<T>]) -> String {
    let mut out = format!("{WIENER_CSV_HEADER}\n");
    for w in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            w.n,
            fmt_num(w.mean_coeff.re.to_f64()),
            fmt_num(w.mean_coeff.im.to_f64()),
            fmt_num(w.mean_sq.to_f64()),
            w.method.as_str(),
            fmt_num(w.std_err)
        ));
    }
    out
}

pub fn wiener_rows_to_json<T: Scalar>(rows: &[WienerEstimate<T>]) -> serde_json::Value {
    rows.iter()
        .map(|w| {
            serde_json::json!({
                "N": w.n,
                "mean_re": fmt_num(w.mean_coeff.re.to_f64()),
                "mean_im": fmt_num(w.mean_coeff.im.to_f64()),
                "mean_sq": fmt_num(w.mean_sq.to_f64()),
                "method": w.method.as_str(),
                "std_err": fmt_num(w.std_err),
            })
        })
        .collect()
}

/// `ν̂(t) = L(tθ)`.
pub fn nu_hat<T: Scalar>(
    m: &ModulusSequence,
    theta: &Angle,
    t: &Integer,
    policy: &LimitPolicy,
) -> Result<SpectralValue<T>> {
    if *t < 0 {
        return Err(Error::InvalidArgument("nu_hat needs t >= 0".into()));
    }
    limit_l::<T>(m, &theta.times_int_mod1(t)?, policy)
}

/// `(1/2^K) Σ_η L(θ(η))` over every word of length `K`.
pub fn eta_average_of_l<T: Scalar>(
    m: &ModulusSequence,
    sel: &SubsequenceSelection,
    k: usize,
    policy: &LimitPolicy,
) -> Result<(T, f64)> {
    let words = super::all_eta_words(k);
    let values: Vec<SpectralValue<T>> = words
        .par_iter()
        .map(|w| limit_l::<T>(m, &super::theta_of_eta(m, w, sel)?.theta, policy))
        .collect::<Result<_>>()?;
    let mut sum = T::zero();
    let mut err = 0.0;
    for v in &values {
        sum = sum + v.value.clone();
        err += v.err + v.tail_bound;
    }
    let count = values.len() as f64;
    Ok((sum / T::from_u64(values.len() as u64), err / count))
}
