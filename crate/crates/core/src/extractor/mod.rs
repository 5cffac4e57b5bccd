//! Strong seeded extraction by Toeplitz hashing.
//!
//! Toeplitz matrices form a universal hash family, so by the leftover hash
//! lemma hashing a source with min-entropy at least `k` down to
//! `m = floor(k - 2 log2(1/eps) + 2)` bits gives output within statistical
//! distance `eps` of uniform, jointly with the seed. The seed may therefore be
//! published or reused alongside the output.

pub mod ntt;
mod params;
mod toeplitz;

use rand::{RngCore, SeedableRng, TryRngCore};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub use params::{output_length, Epsilon, ExtractorParams};
pub use toeplitz::{toeplitz_direct, toeplitz_fft, transform_len, ToeplitzSeed};

use crate::bitcore::BitString;
use crate::entropy::extractable_bits;
use crate::error::{Error, Result};

/// Extracted bits together with the parameters and digests that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub params: ExtractorParams,
    /// SHA-256 of the packed input, hex.
    pub input_digest: String,
    /// SHA-256 of the packed seed, hex.
    pub seed_digest: String,
    pub output: BitString,
}

/// SHA-256 over the bit length (little-endian u64) followed by the packed bytes.
pub fn bit_digest(bits: &BitString) -> String {
    let mut h = Sha256::new();
    h.update((bits.len() as u64).to_le_bytes());
    h.update(bits.to_bytes());
    hex::encode(h.finalize())
}

/// Hashes `x` with the Toeplitz matrix selected by `seed`.
pub fn extract(x: &BitString, seed: &BitString, params: &ExtractorParams) -> Result<Extraction> {
    params.validate()?;
    if x.len() as u64 != params.n {
        return Err(Error::LengthMismatch {
            what: "extractor input",
            expected: params.n,
            actual: x.len() as u64,
        });
    }
    if (seed.len() as u64) < params.r {
        return Err(Error::LengthMismatch {
            what: "extractor seed (n + m - 1 bits)",
            expected: params.r,
            actual: seed.len() as u64,
        });
    }
    let seed = if seed.len() as u64 == params.r {
        seed.clone()
    } else {
        seed.slice(0, params.r as usize)
    };
    let t = ToeplitzSeed::new(seed, params.n as usize, params.m as usize)?;
    let output = toeplitz_fft(&t, x, params.m as usize)?;
    Ok(Extraction {
        params: params.clone(),
        input_digest: bit_digest(x),
        seed_digest: bit_digest(t.bits()),
        output,
    })
}

/// Result of [`extract_chunked`].
#[derive(Debug, Clone)]
pub struct ChunkedExtraction {
    /// Parameters applied to every chunk.
    pub chunk_params: ExtractorParams,
    pub chunks: usize,
    /// Trailing input bits that did not fill a chunk and were not hashed.
    pub discarded: usize,
    pub output: BitString,
}

/// Memory-bounded extraction: splits `x` into `chunk_len`-bit chunks and hashes
/// each with the same seed, using `k = floor(chunk_len * h_per_bit)` per chunk.
///
/// Reusing one seed is covered by the strong-extractor guarantee only when the
/// chunks are independent sources each holding `k` bits of min-entropy. For
/// correlated sources the per-chunk errors do not simply add up, and single
/// pass [`extract`] should be preferred.
pub fn extract_chunked(
    x: &BitString,
    seed: &BitString,
    chunk_len: usize,
    h_per_bit: f64,
    epsilon: &Epsilon,
) -> Result<ChunkedExtraction> {
    if chunk_len == 0 || chunk_len > x.len() {
        return Err(Error::param(format!(
            "chunk length {chunk_len} must be in 1..={}",
            x.len()
        )));
    }
    let k = extractable_bits(chunk_len as u64, h_per_bit)?;
    let params = ExtractorParams::derive(chunk_len as u64, k, epsilon.clone())?;
    if (seed.len() as u64) < params.r {
        return Err(Error::LengthMismatch {
            what: "chunk seed (chunk + m - 1 bits)",
            expected: params.r,
            actual: seed.len() as u64,
        });
    }
    let t = ToeplitzSeed::new(seed.slice(0, params.r as usize), chunk_len, params.m as usize)?;
    let chunks = x.len() / chunk_len;
    let mut output = BitString::with_capacity(chunks * params.m as usize);
    for chunk in x.blocks(chunk_len) {
        for b in &toeplitz_fft(&t, &chunk, params.m as usize)? {
            output.push(b);
        }
    }
    Ok(ChunkedExtraction {
        chunk_params: params,
        chunks,
        discarded: x.len() - chunks * chunk_len,
        output,
    })
}

/// Seed drawn from the operating system's entropy source.
///
/// The extractor's guarantee then rests on the OS generator being uniform;
/// a seed file from an independent certified source is preferable.
pub fn os_seed(bits: usize) -> Result<BitString> {
    let mut bytes = vec![0u8; bits.div_ceil(8)];
    rand::rngs::OsRng
        .try_fill_bytes(&mut bytes)
        .map_err(|e| Error::param(format!("OS entropy unavailable: {e}")))?;
    BitString::from_bytes(&bytes, bits)
}

/// Deterministic pseudo-random seed, for tests and reproducible experiments only.
/// Not a uniform seed in the sense the lemma requires.
pub fn prng_seed(bits: usize, rng_seed: u64) -> BitString {
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let mut words = vec![0u64; bits.div_ceil(64)];
    for w in &mut words {
        *w = rng.next_u64();
    }
    BitString::from_words(words, bits).expect("word count matches")
}
