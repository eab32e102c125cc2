use rug::Integer;

use super::ModulusSequence;
use crate::error::{Error, Result};

/// Streams `s_1, s_2, …` in increasing order with amortised O(1) big-integer
/// additions per element: the digits are advanced like an odometer, `ω_1`
/// fastest.
pub struct SequenceStream<'a> {
    moduli: &'a ModulusSequence,
    prefix: Vec<Integer>,
    digits: Vec<i8>,
    current: Option<Integer>,
    exhausted: bool,
}

impl<'a> SequenceStream<'a> {
    pub fn new(moduli: &'a ModulusSequence) -> Self {
        SequenceStream {
            moduli,
            prefix: Vec::new(),
            digits: Vec::new(),
            current: None,
            exhausted: false,
        }
    }

    fn modulus(&mut self, j: usize) -> Option<Integer> {
        while self.prefix.len() < j {
            let next = self.moduli.get(self.prefix.len() + 1).ok()?;
            self.prefix.push(next);
        }
        Some(self.prefix[j - 1].clone())
    }

    fn advance(&mut self) -> Option<Integer> {
        let Some(mut value) = self.current.take() else {
            return self.modulus(1);
        };
        for j in 0..self.digits.len() {
            if self.digits[j] < 1 {
                self.digits[j] += 1;
                value += &self.prefix[j];
                return Some(value);
            }
            self.digits[j] = -1;
            value -= Integer::from(&self.prefix[j] * 2u32);
        }
        // Block k is finished; block k+1 starts at m_{k+1} − Σ_{j≤k} m_j.
        let k = self.digits.len() + 1;
        let next = self.modulus(k + 1)?;
        self.digits.push(-1);
        let lower: Integer = self.prefix[..k].iter().sum();
        Some(next - lower)
    }
}

impl Iterator for SequenceStream<'_> {
    type Item = Integer;

    fn next(&mut self) -> Option<Integer> {
        if self.exhausted {
            return None;
        }
        match self.advance() {
            Some(v) => {
                self.current = Some(v.clone());
                Some(v)
            }
            None => {
                self.exhausted = true;
                None
            }
        }
    }
}

/// `s_1, …, s_N`.
pub fn enumerate_stream(m: &ModulusSequence, n: u64) -> Result<Vec<Integer>> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be >= 1".into()));
    }
    let values: Vec<Integer> = SequenceStream::new(m).take(n as usize).collect();
    if (values.len() as u64) < n {
        // Only finite lists run dry; report the modulus that was missing.
        let available = m.available().unwrap_or(0);
        return Err(Error::ModulusOutOfRange {
            index: available + 1,
            available,
        });
    }
    Ok(values)
}
