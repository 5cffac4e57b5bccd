//! Toeplitz hashing.
//!
//! For an `n`-bit input `x` and an `(n + m - 1)`-bit seed `s`, the output bit
//! `z_i` (0-based) is
//!
//! ```text
//! z_i = XOR_j  s[n - 1 + i - j] & x[j]
//! ```
//!
//! which is row `i` of the `m x n` diagonal-constant matrix whose top-left
//! entry is `s[n-1]`, top-right `s[0]` and bottom-left `s[n+m-2]`. The same
//! sum is coefficient `n - 1 + i` of the integer convolution `s * x`, so the
//! fast path embeds the matrix in a circulant of power-of-two length
//! `L >= n + m - 1`, convolves with an exact number-theoretic transform, and
//! reads the window `[n-1, n+m-1)` mod 2. Wrapped-around terms land below
//! index `n - 1` and never touch the window.

use crate::bitcore::BitString;
use crate::error::{Error, Result};

use super::ntt;

/// An `(n + m - 1)`-bit seed selecting one `m x n` Toeplitz matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzSeed {
    bits: BitString,
    n: usize,
    m: usize,
}

impl ToeplitzSeed {
    pub fn new(bits: BitString, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::param(format!("matrix shape {m} x {n} is empty")));
        }
        let need = n + m - 1;
        if bits.len() != need {
            return Err(Error::LengthMismatch {
                what: "Toeplitz seed (n + m - 1 bits)",
                expected: need as u64,
                actual: bits.len() as u64,
            });
        }
        Ok(ToeplitzSeed { bits, n, m })
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.m
    }

    /// Materialises the matrix row by row. Only sensible for small shapes.
    pub fn matrix(&self) -> Vec<BitString> {
        (0..self.m)
            .map(|i| (0..self.n).map(|j| self.bits.get(self.n - 1 + i - j)).collect())
            .collect()
    }

    fn check_input(&self, x: &BitString, m: usize) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "Toeplitz input",
                expected: self.n as u64,
                actual: x.len() as u64,
            });
        }
        if m != self.m {
            return Err(Error::LengthMismatch {
                what: "Toeplitz output length",
                expected: self.m as u64,
                actual: m as u64,
            });
        }
        Ok(())
    }
}

/// Matrix-vector product over GF(2), `O(n m / 64)` word operations.
pub fn toeplitz_direct(seed: &ToeplitzSeed, x: &BitString, m: usize) -> Result<BitString> {
    seed.check_input(x, m)?;
    // row i is the seed window starting at i, matched against x reversed
    let rev = x.reversed();
    let words = rev.words();
    let mut z = BitString::with_capacity(m);
    for i in 0..m {
        let mut acc = 0u64;
        for (w, &xw) in words.iter().enumerate() {
            acc ^= seed.bits.word_at(i + 64 * w) & xw;
        }
        z.push(acc.count_ones() & 1 == 1);
    }
    Ok(z)
}

/// Smallest power of two that holds the product window without aliasing.
pub fn transform_len(n: usize, m: usize) -> usize {
    (n + m - 1).next_power_of_two().max(2)
}

/// Toeplitz product through circulant embedding and an exact transform.
pub fn toeplitz_fft(seed: &ToeplitzSeed, x: &BitString, m: usize) -> Result<BitString> {
    seed.check_input(x, m)?;
    let n = seed.n;
    let len = transform_len(n, m);
    if len.trailing_zeros() > ntt::MAX_LOG_LEN {
        return Err(Error::ConvolutionPrecision(format!(
            "transform length {len} exceeds 2^{}",
            ntt::MAX_LOG_LEN
        )));
    }
    // coefficients are at most min(n, n + m - 1) and must stay below p
    if n as u128 >= u128::from(ntt::P) {
        return Err(Error::ConvolutionPrecision(format!("input length {n} exceeds the field")));
    }

    let mut a = spread(&seed.bits, len);
    let mut b = spread(x, len);
    ntt::cyclic_convolve(&mut a, &mut b);
    drop(b);
    Ok(a[n - 1..n - 1 + m].iter().map(|&c| c & 1 == 1).collect())
}

fn spread(bits: &BitString, len: usize) -> Vec<u64> {
    let mut out = vec![0u64; len];
    for (w, &word) in bits.words().iter().enumerate() {
        let mut word = word;
        while word != 0 {
            let t = word.trailing_zeros() as usize;
            out[64 * w + t] = 1;
            word &= word - 1;
        }
    }
    out
}
