//! Packed bit strings.
//!
//! Bits are stored least-significant-bit first inside little-endian `u64`
//! words, so bit `i` lives in word `i / 64` at position `i % 64`. Serialising
//! the words as little-endian bytes therefore yields the LSB-first byte
//! packing used by every file format in this crate.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// A sequence of bits with an explicit length.
///
/// Storage past `len` is always zero, so equality, hashing and popcounts
/// never see padding.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        BitString {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = BitString {
            words: vec![u64::MAX; words_for(len)],
            len,
        };
        s.clear_tail();
        s
    }

    pub fn with_capacity(bits: usize) -> Self {
        BitString {
            words: Vec::with_capacity(words_for(bits)),
            len: 0,
        }
    }

    /// Builds a bit string from words, truncating storage to `len` bits.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() < words_for(len) {
            return Err(Error::LengthMismatch {
                what: "word storage",
                expected: words_for(len) as u64,
                actual: words.len() as u64,
            });
        }
        words.truncate(words_for(len));
        let mut s = BitString { words, len };
        s.clear_tail();
        Ok(s)
    }

    /// Unpacks `len` bits from LSB-first bytes.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() < len.div_ceil(8) {
            return Err(Error::LengthMismatch {
                what: "packed byte buffer",
                expected: len.div_ceil(8) as u64,
                actual: bytes.len() as u64,
            });
        }
        let mut words = vec![0u64; words_for(len)];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *w = u64::from_le_bytes(buf);
        }
        let mut s = BitString { words, len };
        s.clear_tail();
        Ok(s)
    }

    /// Packs into LSB-first bytes; the final partial byte is zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(self.words.len() * 8);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(n);
        out
    }

    /// One element per bit, each 0 or 1.
    pub fn to_bit_vec(&self) -> Vec<u8> {
        self.iter().map(u8::from).collect()
    }

    pub fn from_bit_slice(bits: &[u8]) -> Self {
        bits.iter().map(|&b| b != 0).collect()
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
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if bit {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        if self.len % WORD_BITS == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / WORD_BITS] |= 1 << (self.len % WORD_BITS);
        }
        self.len += 1;
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter { bits: self, pos: 0 }
    }

    /// Copies `len` bits starting at `start` into a new string.
    pub fn slice(&self, start: usize, len: usize) -> BitString {
        assert!(
            start.checked_add(len).is_some_and(|end| end <= self.len),
            "slice {start}+{len} out of range for length {}",
            self.len
        );
        let mut words = Vec::with_capacity(words_for(len));
        for k in 0..words_for(len) {
            words.push(self.word_at(start + k * WORD_BITS));
        }
        let mut s = BitString { words, len };
        s.clear_tail();
        s
    }

    /// The 64 bits starting at bit offset `pos`; bits past the end read as 0.
    #[inline]
    pub(crate) fn word_at(&self, pos: usize) -> u64 {
        let w = pos / WORD_BITS;
        let sh = pos % WORD_BITS;
        let lo = self.words.get(w).copied().unwrap_or(0);
        if sh == 0 {
            lo
        } else {
            let hi = self.words.get(w + 1).copied().unwrap_or(0);
            (lo >> sh) | (hi << (WORD_BITS - sh))
        }
    }

    /// Splits into consecutive blocks of `block_len` bits, dropping the remainder.
    pub fn blocks(&self, block_len: usize) -> impl Iterator<Item = BitString> + '_ {
        assert!(block_len > 0, "block length must be positive");
        (0..self.len / block_len).map(move |b| self.slice(b * block_len, block_len))
    }

    /// Bits in reverse order.
    pub fn reversed(&self) -> BitString {
        let mut out = BitString::zeros(self.len);
        for (i, b) in self.iter().enumerate() {
            if b {
                out.set(self.len - 1 - i, true);
            }
        }
        out
    }

    pub fn to_ascii(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

/// Bitwise exclusive-or of two equal-length strings.
pub fn xor(a: &BitString, b: &BitString) -> Result<BitString> {
    if a.len != b.len {
        return Err(Error::LengthMismatch {
            what: "xor operands",
            expected: a.len as u64,
            actual: b.len as u64,
        });
    }
    let words = a.words.iter().zip(&b.words).map(|(x, y)| x ^ y).collect();
    Ok(BitString { words, len: a.len })
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 64;
        if self.len <= SHOWN {
            write!(f, "BitString({:?})", self.to_ascii())
        } else {
            let head: String = self.slice(0, SHOWN).to_ascii();
            write!(f, "BitString({head}... len={})", self.len)
        }
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses a string of ASCII `0`/`1`; whitespace is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = BitString::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                c if c.is_whitespace() => {}
                c => return Err(Error::param(format!("invalid bit character {c:?}"))),
            }
        }
        Ok(out)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let iter = iter.into_iter();
        let mut out = BitString::with_capacity(iter.size_hint().0);
        for b in iter {
            out.push(b);
        }
        out
    }
}

impl<'a> IntoIterator for &'a BitString {
    type Item = bool;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

pub struct Iter<'a> {
    bits: &'a BitString,
    pos: usize,
}

impl Iterator for Iter<'_> {
    type Item = bool;

    #[inline]
    fn next(&mut self) -> Option<bool> {
        if self.pos < self.bits.len {
            let b = (self.bits.words[self.pos / WORD_BITS] >> (self.pos % WORD_BITS)) & 1 == 1;
            self.pos += 1;
            Some(b)
        } else {
            None
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.bits.len - self.pos;
        (rem, Some(rem))
    }
}

impl ExactSizeIterator for Iter<'_> {}
