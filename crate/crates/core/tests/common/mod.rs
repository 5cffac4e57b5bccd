//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

/// Toeplitz product written as the textbook double loop over an explicit
/// matrix with `T[i][j] = s[n - 1 + i - j]`.
pub fn naive_toeplitz(seed: &[u8], x: &[u8], m: usize) -> Vec<u8> {
    let n = x.len();
    assert_eq!(seed.len(), n + m - 1);
    let mut t = vec![vec![0u8; n]; m];
    for (i, row) in t.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = seed[n - 1 + i - j];
        }
    }
    t.iter()
        .map(|row| row.iter().zip(x).fold(0u8, |acc, (&a, &b)| acc ^ (a & b)))
        .collect()
}

/// Probability of one specific path of the replace-with-previous source:
/// each bit is fresh Bernoulli(`p1`) with probability `1 - stick`, otherwise a
/// copy of the previous bit. The first bit is always fresh.
fn path_probability(path: u32, len: u32, p1: f64, stick: f64) -> f64 {
    let fresh = |b: u32| if b == 1 { p1 } else { 1.0 - p1 };
    let mut prev = path & 1;
    let mut prob = fresh(prev);
    for i in 1..len {
        let b = (path >> i) & 1;
        prob *= (1.0 - stick) * fresh(b) + if b == prev { stick } else { 0.0 };
        prev = b;
    }
    prob
}

/// Largest probability over all `2^len` paths, by exhaustive enumeration.
pub fn max_path_probability(len: u32, p1: f64, stick: f64) -> f64 {
    (0..1u32 << len)
        .map(|path| path_probability(path, len, p1, stick))
        .fold(0.0, f64::max)
}

/// Min-entropy rate of the source: the increment of `-log2 max P(path)` from
/// `len - 1` to `len` bits, which is exact once the optimal path settles into
/// its repeating shape.
pub fn brute_force_min_entropy_rate(p1: f64, stick: f64) -> f64 {
    let len = 20;
    let a = -max_path_probability(len, p1, stick).log2();
    let b = -max_path_probability(len - 1, p1, stick).log2();
    a - b
}

/// Lag-`k` sample autocorrelation of a 0/1 sequence.
pub fn autocorrelation(bits: &[u8], k: usize) -> f64 {
    let n = bits.len() - k;
    let mean = bits.iter().map(|&b| b as f64).sum::<f64>() / bits.len() as f64;
    let var = bits.iter().map(|&b| (b as f64 - mean).powi(2)).sum::<f64>() / bits.len() as f64;
    let cov = (0..n)
        .map(|i| (bits[i] as f64 - mean) * (bits[i + k] as f64 - mean))
        .sum::<f64>()
        / n as f64;
    cov / var
}
