//! GF(2) vectors and matrices with the prefix-parity map and its inverse.
//!
//! Position 0 is the leftmost character of the textual form ("1000" has only
//! bit 0 set). Bits are packed into `u64` words with position `i` at bit
//! `i % 64` of word `i / 64`; no public contract depends on the packing.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("operation needs a non-empty vector")]
    Empty,
    #[error("invalid bit character {0:?}")]
    InvalidChar(char),
    #[error("vector of length {len} does not fit in {target} bits")]
    TooLong { len: usize, target: usize },
    #[error("matrix rows have inconsistent lengths")]
    Ragged,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Zero-pads `bits` on the right up to `len` positions.
    pub fn from_bits_padded(bits: &[bool], len: usize) -> Result<Self, BitError> {
        if bits.len() > len {
            return Err(BitError::TooLong {
                len: bits.len(),
                target: len,
            });
        }
        let mut v = Self::zeros(len);
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        Ok(v)
    }

    /// The vector whose position `i` holds bit `i` of `index`. Used to
    /// enumerate `{0,1}^len` for `len <= 64`.
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= 64, "from_index supports at most 64 positions");
        let mut v = Self::zeros(len);
        if len > 0 {
            v.words[0] = index & tail_mask(len);
        }
        v
    }

    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "to_index supports at most 64 positions");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = Self::zeros(len);
        for w in &mut v.words {
            *w = rng.gen();
        }
        v.clear_tail();
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    fn clear_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.len);
        }
    }
}

fn tail_mask(len: usize) -> u64 {
    match len % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Within-word prefix XOR toward higher positions.
fn prefix_xor_word(mut w: u64) -> u64 {
    w ^= w << 1;
    w ^= w << 2;
    w ^= w << 4;
    w ^= w << 8;
    w ^= w << 16;
    w ^= w << 32;
    w
}

/// Prefix parity: `X(i) = Y(0) ^ ... ^ Y(i)`.
pub fn par(y: &BitVec) -> BitVec {
    let mut out = y.clone();
    let mut carry = false;
    for w in &mut out.words {
        let mut p = prefix_xor_word(*w);
        if carry {
            p = !p;
        }
        carry = p >> 63 == 1;
        *w = p;
    }
    out.clear_tail();
    out
}

/// Inverse of [`par`]: `Y(0) = X(0)`, `Y(i) = X(i-1) ^ X(i)`.
pub fn unpar(x: &BitVec) -> BitVec {
    let mut out = x.clone();
    let mut prev_top = 0u64;
    for w in &mut out.words {
        let cur = *w;
        *w = cur ^ ((cur << 1) | prev_top);
        prev_top = cur >> 63;
    }
    out.clear_tail();
    out
}

pub fn xor(a: &BitVec, b: &BitVec) -> Result<BitVec, BitError> {
    if a.len != b.len {
        return Err(BitError::LengthMismatch {
            left: a.len,
            right: b.len,
        });
    }
    Ok(BitVec {
        len: a.len,
        words: a.words.iter().zip(&b.words).map(|(x, y)| x ^ y).collect(),
    })
}

/// Last bit of the prefix parity, i.e. the parity of the weight.
pub fn parity_bit(v: &BitVec) -> Result<bool, BitError> {
    if v.is_empty() {
        return Err(BitError::Empty);
    }
    Ok(par(v).get(v.len - 1))
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = BitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(BitError::InvalidChar(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_bits(&bits))
    }
}

impl Serialize for BitVec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Row-major bit matrix; row `i` is `Y^[i]`.
///
/// The parity blinding uses square matrices. Rectangular shapes (more rows
/// than the row length, or fewer) appear in the row-budget generalization.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn from_rows(rows: Vec<BitVec>) -> Result<Self, BitError> {
        let cols = rows.first().map_or(0, BitVec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(BitError::Ragged);
        }
        Ok(Self { cols, rows })
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows.len() == self.cols
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{row}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| r.to_string())).finish()
    }
}
