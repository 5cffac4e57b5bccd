//! Independence tests used to decide whether a bit source may be treated as IID.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma_ur;

use crate::bitcore::BitString;
use crate::error::{Error, Result};

/// Default minimum length for the chi-square independence test.
pub const CHI_SQUARE_MIN_LEN: usize = 10_000;

/// Significance level of the chi-square independence test.
pub const CHI_SQUARE_ALPHA: f64 = 0.001;

/// Fraction of shuffles in each rejection tail of the permutation test.
pub const PERMUTATION_TAIL: f64 = 0.0005;

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    /// Tuple length used; 0 or 1 means the data could not support the test.
    pub tuple_len: u32,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
    pub pass: bool,
}

/// Chi-square test of independence for binary data.
///
/// Picks the largest tuple length `m <= 11` with `min(p0, p1)^m * floor(L/m) >= 5`,
/// counts non-overlapping `m`-bit tuples and compares them with the counts
/// expected from the bit marginals, on `2^m - 2` degrees of freedom. Sources
/// that cannot support `m >= 2` (including constant strings) fail.
pub fn chi_square_independence(bits: &BitString) -> Result<ChiSquareResult> {
    chi_square_independence_with_floor(bits, CHI_SQUARE_MIN_LEN)
}

pub fn chi_square_independence_with_floor(bits: &BitString, min_len: usize) -> Result<ChiSquareResult> {
    let len = bits.len();
    if len < min_len.max(2) {
        return Err(Error::InsufficientData {
            what: "chi-square independence test",
            required: min_len.max(2) as u64,
            actual: len as u64,
        });
    }
    let p1 = bits.count_ones() as f64 / len as f64;
    let p0 = 1.0 - p1;
    let p_min = p0.min(p1);

    let mut m = 0u32;
    for cand in 1..=11u32 {
        if p_min.powi(cand as i32) * (len / cand as usize) as f64 >= 5.0 {
            m = cand;
        }
    }
    if m < 2 {
        return Ok(ChiSquareResult {
            statistic: f64::INFINITY,
            tuple_len: m,
            degrees_of_freedom: 0,
            p_value: 0.0,
            pass: false,
        });
    }

    let blocks = len / m as usize;
    let mut observed = vec![0u64; 1 << m];
    for b in 0..blocks {
        let w = bits.word_at(b * m as usize) & ((1u64 << m) - 1);
        observed[w as usize] += 1;
    }
    let mut stat = 0.0;
    for (tuple, &o) in observed.iter().enumerate() {
        let weight = (tuple as u64).count_ones() as i32;
        let e = p1.powi(weight) * p0.powi(m as i32 - weight) * blocks as f64;
        let d = o as f64 - e;
        stat += d * d / e;
    }
    let dof = (1u64 << m) - 2;
    let p_value = gamma_ur(dof as f64 / 2.0, stat / 2.0);
    Ok(ChiSquareResult {
        statistic: stat,
        tuple_len: m,
        degrees_of_freedom: dof,
        p_value,
        pass: p_value >= CHI_SQUARE_ALPHA,
    })
}

/// Statistics computed on the original and on each shuffled sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    Excursion,
    DirectionalRuns,
    LongestDirectionalRun,
    IncreasesDecreases,
    MedianRuns,
    LongestMedianRun,
    AverageCollision,
    MaxCollision,
    Periodicity(usize),
    Covariance(usize),
}

impl Statistic {
    pub fn all() -> Vec<Statistic> {
        let mut v = vec![
            Statistic::Excursion,
            Statistic::DirectionalRuns,
            Statistic::LongestDirectionalRun,
            Statistic::IncreasesDecreases,
            Statistic::MedianRuns,
            Statistic::LongestMedianRun,
            Statistic::AverageCollision,
            Statistic::MaxCollision,
        ];
        for lag in [1, 2, 8, 16, 32] {
            v.push(Statistic::Periodicity(lag));
        }
        for lag in [1, 2, 8, 16, 32] {
            v.push(Statistic::Covariance(lag));
        }
        v
    }

    /// The four statistics every configuration must include.
    pub fn required() -> Vec<Statistic> {
        vec![
            Statistic::Excursion,
            Statistic::DirectionalRuns,
            Statistic::LongestDirectionalRun,
            Statistic::AverageCollision,
        ]
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistic::Excursion => write!(f, "excursion"),
            Statistic::DirectionalRuns => write!(f, "directional_runs"),
            Statistic::LongestDirectionalRun => write!(f, "longest_directional_run"),
            Statistic::IncreasesDecreases => write!(f, "increases_decreases"),
            Statistic::MedianRuns => write!(f, "median_runs"),
            Statistic::LongestMedianRun => write!(f, "longest_median_run"),
            Statistic::AverageCollision => write!(f, "average_collision"),
            Statistic::MaxCollision => write!(f, "max_collision"),
            Statistic::Periodicity(lag) => write!(f, "periodicity_lag{lag}"),
            Statistic::Covariance(lag) => write!(f, "covariance_lag{lag}"),
        }
    }
}

/// Evaluates statistics on a 0/1 sequence, caching the derived sequences.
struct Evaluator<'a> {
    bits: &'a [u8],
    weights: Option<Vec<u8>>,
    bytes: Option<Vec<u8>>,
    directional: Option<(f64, f64, f64)>,
    median: Option<(f64, f64)>,
    collision: Option<(f64, f64)>,
}

impl<'a> Evaluator<'a> {
    fn new(bits: &'a [u8]) -> Self {
        Evaluator {
            bits,
            weights: None,
            bytes: None,
            directional: None,
            median: None,
            collision: None,
        }
    }

    /// Hamming weight of each 8-bit block.
    fn weights(&mut self) -> &[u8] {
        let bits = self.bits;
        self.weights
            .get_or_insert_with(|| bits.chunks_exact(8).map(|c| c.iter().sum()).collect())
    }

    /// Each 8-bit block read as an integer, first bit most significant.
    fn bytes(&mut self) -> &[u8] {
        let bits = self.bits;
        self.bytes.get_or_insert_with(|| {
            bits.chunks_exact(8)
                .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b))
                .collect()
        })
    }

    fn directional(&mut self) -> (f64, f64, f64) {
        if self.directional.is_none() {
            self.directional = Some(directional(self.weights()));
        }
        self.directional.unwrap()
    }

    fn median(&mut self) -> (f64, f64) {
        let bits = self.bits;
        *self.median.get_or_insert_with(|| runs(bits.iter().copied()))
    }

    fn collision(&mut self) -> (f64, f64) {
        if self.collision.is_none() {
            self.collision = Some(collisions(self.bytes()));
        }
        self.collision.unwrap()
    }

    fn eval(&mut self, stat: Statistic) -> f64 {
        match stat {
            Statistic::Excursion => excursion(self.bits),
            Statistic::DirectionalRuns => self.directional().0,
            Statistic::LongestDirectionalRun => self.directional().1,
            Statistic::IncreasesDecreases => self.directional().2,
            Statistic::MedianRuns => self.median().0,
            Statistic::LongestMedianRun => self.median().1,
            Statistic::AverageCollision => self.collision().0,
            Statistic::MaxCollision => self.collision().1,
            Statistic::Periodicity(lag) => self
                .bits
                .iter()
                .zip(self.bits.iter().skip(lag))
                .filter(|(a, b)| a == b)
                .count() as f64,
            Statistic::Covariance(lag) => self
                .bits
                .iter()
                .zip(self.bits.iter().skip(lag))
                .map(|(&a, &b)| u64::from(a & b))
                .sum::<u64>() as f64,
        }
    }
}

/// Largest deviation of the running sum from its expected trajectory, scaled by L.
fn excursion(bits: &[u8]) -> f64 {
    let len = bits.len() as i64;
    let ones: i64 = bits.iter().map(|&b| i64::from(b)).sum();
    let mut prefix = 0i64;
    let mut best = 0i64;
    for (i, &b) in bits.iter().enumerate() {
        prefix += i64::from(b);
        let d = (len * prefix - (i as i64 + 1) * ones).abs();
        best = best.max(d);
    }
    best as f64
}

/// (number of runs, longest run) of a sequence.
fn runs(seq: impl Iterator<Item = u8>) -> (f64, f64) {
    let mut count = 0u64;
    let mut longest = 0u64;
    let mut current = 0u64;
    let mut prev = None;
    for v in seq {
        if prev == Some(v) {
            current += 1;
        } else {
            count += 1;
            current = 1;
            prev = Some(v);
        }
        longest = longest.max(current);
    }
    (count as f64, longest as f64)
}

/// Runs of the up/down sequence of block weights: (number of runs, longest
/// run, max(#increases, #decreases)).
fn directional(weights: &[u8]) -> (f64, f64, f64) {
    let signs = weights.windows(2).map(|w| u8::from(w[0] <= w[1]));
    let ups = weights.windows(2).filter(|w| w[0] <= w[1]).count();
    let downs = weights.len().saturating_sub(1) - ups;
    let (n, longest) = runs(signs);
    (n, longest, ups.max(downs) as f64)
}

/// (average, max) length of the segments that end at the first repeated symbol.
fn collisions(symbols: &[u8]) -> (f64, f64) {
    let mut seen = [false; 256];
    let mut touched = Vec::with_capacity(32);
    let mut total = 0u64;
    let mut segments = 0u64;
    let mut longest = 0u64;
    let mut start = 0usize;
    for (i, &s) in symbols.iter().enumerate() {
        if seen[s as usize] {
            let len = (i - start + 1) as u64;
            total += len;
            segments += 1;
            longest = longest.max(len);
            for &t in &touched {
                seen[t as usize] = false;
            }
            touched.clear();
            start = i + 1;
        } else {
            seen[s as usize] = true;
            touched.push(s);
        }
    }
    if segments == 0 {
        return (0.0, 0.0);
    }
    (total as f64 / segments as f64, longest as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticRank {
    pub statistic: Statistic,
    pub original: f64,
    /// Shuffles whose statistic exceeded the original.
    pub greater: u64,
    /// Shuffles whose statistic equalled the original.
    pub equal: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationResult {
    pub ranks: Vec<StatisticRank>,
    pub shuffles_requested: u64,
    /// May be fewer than requested when every statistic passed early.
    pub shuffles_run: u64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct PermutationConfig {
    pub n_shuffles: u64,
    pub rng_seed: u64,
    pub statistics: Vec<Statistic>,
    /// Stop once every statistic is guaranteed to pass.
    pub early_exit: bool,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig {
            n_shuffles: 10_000,
            rng_seed: 0,
            statistics: Statistic::all(),
            early_exit: true,
        }
    }
}

/// Shuffle-rank test: the original sequence fails for a statistic when its
/// value sits in either 0.05% tail of the shuffled values.
///
/// Shuffle `i` uses its own ChaCha stream derived from `rng_seed`, so the
/// result does not depend on evaluation order. Constant input fails outright.
pub fn permutation_test(bits: &BitString, config: &PermutationConfig) -> Result<PermutationResult> {
    if config.n_shuffles < 100 {
        return Err(Error::param(format!(
            "permutation test needs at least 100 shuffles, got {}",
            config.n_shuffles
        )));
    }
    if config.statistics.is_empty() {
        return Err(Error::param("no permutation statistics selected"));
    }
    let original = bits.to_bit_vec();
    let ones = bits.count_ones() as usize;
    let degenerate = ones == 0 || ones == bits.len();

    let mut eval = Evaluator::new(&original);
    let mut ranks: Vec<StatisticRank> = config
        .statistics
        .iter()
        .map(|&s| StatisticRank {
            statistic: s,
            original: eval.eval(s),
            greater: 0,
            equal: 0,
            pass: false,
        })
        .collect();
    let mut less = vec![0u64; ranks.len()];

    let n = config.n_shuffles;
    let tail = (n as f64 * PERMUTATION_TAIL).floor() as u64;
    let mut work = original.clone();
    let mut run = 0u64;
    let base = ChaCha8Rng::seed_from_u64(config.rng_seed);
    while run < n {
        work.copy_from_slice(&original);
        let mut rng = base.clone();
        rng.set_stream(run);
        work.shuffle(&mut rng);
        let mut eval = Evaluator::new(&work);
        for (rank, lt) in ranks.iter_mut().zip(less.iter_mut()) {
            let v = eval.eval(rank.statistic);
            if v > rank.original {
                rank.greater += 1;
            } else if v == rank.original {
                rank.equal += 1;
            } else {
                *lt += 1;
            }
        }
        run += 1;
        if config.early_exit
            && !degenerate
            && ranks
                .iter()
                .zip(&less)
                .all(|(r, &lt)| r.greater + r.equal > tail && lt > tail)
        {
            break;
        }
    }

    for rank in &mut ranks {
        let low_tail = rank.greater + rank.equal <= tail;
        // the upper tail cannot be reached once the loop stopped early
        let high_tail = run == n && rank.greater >= n - tail;
        rank.pass = !degenerate && !low_tail && !high_tail;
    }
    let pass = ranks.iter().all(|r| r.pass);
    Ok(PermutationResult {
        ranks,
        shuffles_requested: n,
        shuffles_run: run,
        pass,
    })
}
