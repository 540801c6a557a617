use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Fixed-length bit vector; bit `i` set means feature `i` is selected.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome {
    len: usize,
    words: Vec<u64>,
}

impl Chromosome {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut c = Self::zeros(len);
        for w in &mut c.words {
            *w = u64::MAX;
        }
        c.clear_tail();
        c
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut c = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            c.set(i, b);
        }
        c
    }

    /// Builds from a string of `0`/`1` characters, feature 0 first.
    pub fn from_bit_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Dataset(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_bools(&bits))
    }

    pub fn from_indices(len: usize, active: &[usize]) -> Self {
        let mut c = Self::zeros(len);
        for &i in active {
            c.set(i, true);
        }
        c
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    /// Active positions in ascending order.
    pub fn active_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count_ones());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let tz = w.trailing_zeros() as usize;
                out.push(wi * 64 + tz);
                w &= w - 1;
            }
        }
        out
    }

    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "chromosome lengths differ");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn and(&self, other: &Self) -> Self {
        assert_eq!(self.len, other.len, "chromosome lengths differ");
        Self {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    /// True when every active bit of `self` is also active in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.len == other.len
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// Sets one uniformly random bit if none is active.
    pub fn repair<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        if self.len > 0 && !self.any() {
            let i = rng.random_range(0..self.len);
            self.set(i, true);
        }
    }

    /// Content hash used to derive per-chromosome evaluation seeds.
    pub fn fingerprint(&self) -> u64 {
        let mut parts = Vec::with_capacity(self.words.len() + 1);
        parts.push(self.len as u64);
        parts.extend_from_slice(&self.words);
        crate::seed::derive_seed(0x4348_524f, &parts)
    }

    /// Hex encoding, four features per digit, feature 0 in the most
    /// significant bit of the first digit.
    pub fn to_hex(&self) -> String {
        const DIGITS: &[u8; 16] = b"0123456789abcdef";
        let n = self.len.div_ceil(4);
        let mut s = String::with_capacity(n);
        for d in 0..n {
            let mut v = 0usize;
            for k in 0..4 {
                let i = d * 4 + k;
                if i < self.len && self.get(i) {
                    v |= 8 >> k;
                }
            }
            s.push(DIGITS[v] as char);
        }
        s
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        if hex.len() != len.div_ceil(4) {
            return Err(Error::FrontFormat(format!(
                "bitmask has {} hex digits, expected {} for {len} features",
                hex.len(),
                len.div_ceil(4)
            )));
        }
        let mut c = Self::zeros(len);
        for (d, ch) in hex.chars().enumerate() {
            let v = ch
                .to_digit(16)
                .ok_or_else(|| Error::FrontFormat(format!("invalid hex digit {ch:?}")))?;
            for k in 0..4 {
                if v & (8 >> k) != 0 {
                    let i = d * 4 + k;
                    if i >= len {
                        return Err(Error::FrontFormat("bitmask has bits past its length".into()));
                    }
                    c.set(i, true);
                }
            }
        }
        Ok(c)
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Chromosome(")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}
