//! Single-sequence tests. Each returns one P-value per sub-statistic.

use std::f64::consts::{LN_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::bitcore::BitString;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestId {
    Frequency,
    BlockFrequency,
    CumulativeSums,
    Runs,
    LongestRun,
    Spectral,
    Serial,
    ApproximateEntropy,
}

impl TestId {
    pub const ALL: [TestId; 8] = [
        TestId::Frequency,
        TestId::BlockFrequency,
        TestId::CumulativeSums,
        TestId::Runs,
        TestId::LongestRun,
        TestId::Spectral,
        TestId::Serial,
        TestId::ApproximateEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestId::Frequency => "frequency",
            TestId::BlockFrequency => "block_frequency",
            TestId::CumulativeSums => "cumulative_sums",
            TestId::Runs => "runs",
            TestId::LongestRun => "longest_run",
            TestId::Spectral => "fft",
            TestId::Serial => "serial",
            TestId::ApproximateEntropy => "approximate_entropy",
        }
    }

    /// Human-readable label used in the text table.
    pub fn label(self) -> &'static str {
        match self {
            TestId::Frequency => "Frequency",
            TestId::BlockFrequency => "Block frequency",
            TestId::CumulativeSums => "Cumulative sums",
            TestId::Runs => "Runs",
            TestId::LongestRun => "Longest run",
            TestId::Spectral => "FFT",
            TestId::Serial => "Serial",
            TestId::ApproximateEntropy => "Approximate entropy",
        }
    }

    /// Test whose suite-level failure makes this one count as failed unrun.
    pub fn prerequisite(self) -> Option<TestId> {
        match self {
            TestId::Runs => Some(TestId::Frequency),
            TestId::ApproximateEntropy => Some(TestId::Serial),
            _ => None,
        }
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestId::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::param(format!("unknown test {s:?}")))
    }
}

/// Per-test tuning knobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestParams {
    pub block_frequency_len: usize,
    pub serial_len: u32,
    pub apen_len: u32,
}

impl Default for TestParams {
    fn default() -> Self {
        TestParams {
            block_frequency_len: 128,
            serial_len: 16,
            apen_len: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    PValues(Vec<f64>),
    /// The sequence failed the test's own precondition and gets no P-value.
    NotApplicable,
}

fn too_short(what: &'static str, required: usize, actual: usize) -> Error {
    Error::InsufficientData {
        what,
        required: required as u64,
        actual: actual as u64,
    }
}

/// Smallest block each test accepts with the given parameters.
pub fn minimum_length(id: TestId, params: &TestParams) -> usize {
    match id {
        TestId::Frequency | TestId::CumulativeSums => 1,
        TestId::Runs | TestId::Spectral => 2,
        TestId::BlockFrequency => params.block_frequency_len,
        TestId::LongestRun => 128,
        // m < floor(log2 n) - 2
        TestId::Serial => 1 << (params.serial_len + 3),
        // m < floor(log2 n) - 5
        TestId::ApproximateEntropy => 1 << (params.apen_len + 6),
    }
}

pub fn run_test(id: TestId, block: &BitString, params: &TestParams) -> Result<Outcome> {
    let n = block.len();
    let min = minimum_length(id, params);
    if n < min {
        return Err(too_short(id.name(), min, n));
    }
    let p = match id {
        TestId::Frequency => vec![frequency(block)],
        TestId::BlockFrequency => vec![block_frequency(block, params.block_frequency_len)],
        TestId::CumulativeSums => cumulative_sums(block),
        TestId::Runs => match runs(block) {
            Some(p) => vec![p],
            None => return Ok(Outcome::NotApplicable),
        },
        TestId::LongestRun => vec![longest_run(block)],
        TestId::Spectral => vec![spectral(block)],
        TestId::Serial => serial(block, params.serial_len),
        TestId::ApproximateEntropy => vec![approximate_entropy(block, params.apen_len)],
    };
    Ok(Outcome::PValues(p.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()))
}

/// Upper regularised incomplete gamma, `Q(a, x)`.
pub(crate) fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn frequency(bits: &BitString) -> f64 {
    let n = bits.len() as f64;
    let s = 2.0 * bits.count_ones() as f64 - n;
    erfc(s.abs() / n.sqrt() / SQRT_2)
}

pub fn block_frequency(bits: &BitString, m: usize) -> f64 {
    let blocks = bits.len() / m;
    let mut chi = 0.0;
    for b in 0..blocks {
        let ones = bits.slice(b * m, m).count_ones();
        let pi = ones as f64 / m as f64 - 0.5;
        chi += pi * pi;
    }
    chi *= 4.0 * m as f64;
    igamc(blocks as f64 / 2.0, chi / 2.0)
}

fn cusum_pvalue(n: i64, z: i64) -> f64 {
    let nf = n as f64;
    let zf = z as f64;
    let sq = nf.sqrt();
    // integer bounds follow the reference implementation's truncating division
    let mut sum1 = 0.0;
    let mut k = (-n / z + 1) / 4;
    while k <= (n / z - 1) / 4 {
        let kf = k as f64;
        sum1 += normal_cdf((4.0 * kf + 1.0) * zf / sq) - normal_cdf((4.0 * kf - 1.0) * zf / sq);
        k += 1;
    }
    let mut sum2 = 0.0;
    let mut k = (-n / z - 3) / 4;
    while k <= (n / z - 1) / 4 {
        let kf = k as f64;
        sum2 += normal_cdf((4.0 * kf + 3.0) * zf / sq) - normal_cdf((4.0 * kf + 1.0) * zf / sq);
        k += 1;
    }
    1.0 - sum1 + sum2
}

/// Forward and backward cumulative-sum P-values.
pub fn cumulative_sums(bits: &BitString) -> Vec<f64> {
    let n = bits.len() as i64;
    let mut s = 0i64;
    let (mut sup, mut inf) = (0i64, 0i64);
    for b in bits {
        s += if b { 1 } else { -1 };
        sup = sup.max(s);
        inf = inf.min(s);
    }
    let forward = sup.max(-inf);
    // the backward walk ends where the forward one started
    let backward = (sup - s).max(s - inf);
    [forward, backward]
        .into_iter()
        .map(|z| if z == 0 { 1.0 } else { cusum_pvalue(n, z) })
        .collect()
}

/// `None` when the ones proportion is too far from 1/2 for the test to apply.
pub fn runs(bits: &BitString) -> Option<f64> {
    let n = bits.len() as f64;
    let pi = bits.count_ones() as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return None;
    }
    let mut v = 1u64;
    let mut it = bits.iter();
    let mut prev = it.next()?;
    for b in it {
        if b != prev {
            v += 1;
        }
        prev = b;
    }
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    Some(erfc(num / den))
}

struct LongestRunTable {
    block: usize,
    low: u64,
    probs: &'static [f64],
}

const LONGEST_RUN_8: LongestRunTable = LongestRunTable {
    block: 8,
    low: 1,
    probs: &[0.2148, 0.3672, 0.2305, 0.1875],
};
const LONGEST_RUN_128: LongestRunTable = LongestRunTable {
    block: 128,
    low: 4,
    probs: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
};
const LONGEST_RUN_10K: LongestRunTable = LongestRunTable {
    block: 10_000,
    low: 10,
    probs: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
};

pub fn longest_run(bits: &BitString) -> f64 {
    let n = bits.len();
    let table = if n >= 750_000 {
        &LONGEST_RUN_10K
    } else if n >= 6272 {
        &LONGEST_RUN_128
    } else {
        &LONGEST_RUN_8
    };
    let k = table.probs.len() - 1;
    let blocks = n / table.block;
    let mut counts = vec![0u64; k + 1];
    for b in 0..blocks {
        let mut longest = 0u64;
        let mut run = 0u64;
        for bit in &bits.slice(b * table.block, table.block) {
            if bit {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        let class = longest.clamp(table.low, table.low + k as u64) - table.low;
        counts[class as usize] += 1;
    }
    let nb = blocks as f64;
    let chi: f64 = counts
        .iter()
        .zip(table.probs)
        .map(|(&c, &p)| {
            let d = c as f64 - nb * p;
            d * d / (nb * p)
        })
        .sum();
    igamc(k as f64 / 2.0, chi / 2.0)
}

/// Discrete Fourier transform (spectral) test.
pub fn spectral(bits: &BitString) -> f64 {
    let n = bits.len();
    let mut buf: Vec<Complex<f64>> = bits
        .iter()
        .map(|b| Complex::new(if b { 1.0 } else { -1.0 }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let nf = n as f64;
    let threshold = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let below = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let expected = 0.95 * nf / 2.0;
    let d = (below - expected) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    erfc(d.abs() / SQRT_2)
}

/// Counts of every overlapping `m`-bit pattern, wrapping around the end.
fn pattern_counts(bits: &[u8], m: u32) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        counts[0] = bits.len() as u64;
        return counts;
    }
    let mask = (1usize << m) - 1;
    let n = bits.len();
    let mut window = 0usize;
    for &b in bits.iter().chain(bits.iter()).take(m as usize - 1) {
        window = (window << 1) | b as usize;
    }
    for &b in bits.iter().cycle().skip(m as usize - 1).take(n) {
        window = ((window << 1) | b as usize) & mask;
        counts[window] += 1;
    }
    counts
}

fn psi_squared(bits: &[u8], m: u32) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum: f64 = pattern_counts(bits, m).iter().map(|&c| (c as f64) * (c as f64)).sum();
    sum * (1u64 << m) as f64 / n - n
}

pub fn serial(bits: &BitString, m: u32) -> Vec<f64> {
    let v = bits.to_bit_vec();
    let p0 = psi_squared(&v, m);
    let p1 = psi_squared(&v, m - 1);
    let p2 = psi_squared(&v, m.saturating_sub(2));
    let del1 = p0 - p1;
    let del2 = p0 - 2.0 * p1 + p2;
    vec![
        igamc(2f64.powi(m as i32 - 2), del1 / 2.0),
        igamc(2f64.powi(m as i32 - 3), del2 / 2.0),
    ]
}

pub fn approximate_entropy(bits: &BitString, m: u32) -> f64 {
    let v = bits.to_bit_vec();
    let n = v.len() as f64;
    let phi = |len: u32| -> f64 {
        pattern_counts(&v, len)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum()
    };
    let apen = phi(m) - phi(m + 1);
    let chi = 2.0 * n * (LN_2 - apen);
    igamc(2f64.powi(m as i32 - 1), chi / 2.0)
}
