//! Min-entropy lower bounds for raw bit strings.
//!
//! [`assess`] first decides whether the data may be treated as IID (chi-square
//! independence and shuffle-rank tests), then bounds min-entropy per bit with
//! the most-common-value estimator, adding the Markov estimator for non-IID
//! data and taking the minimum.

mod estimators;
mod iid;

use std::fmt::Write as _;

pub use estimators::{markov_estimate, mcv_estimate};
pub use iid::{
    chi_square_independence, chi_square_independence_with_floor, permutation_test, ChiSquareResult,
    PermutationConfig, PermutationResult, Statistic, StatisticRank, CHI_SQUARE_ALPHA,
    CHI_SQUARE_MIN_LEN, PERMUTATION_TAIL,
};

use crate::bitcore::BitString;
use crate::error::{Error, Result};

/// Below this many bits the report carries a warning.
pub const RECOMMENDED_LEN: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IidVerdict {
    Iid,
    NonIid,
}

impl IidVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            IidVerdict::Iid => "iid",
            IidVerdict::NonIid => "non_iid",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AssessOptions {
    pub n_shuffles: u64,
    pub rng_seed: u64,
    /// The independence tests look at no more than this many leading bits.
    pub iid_sample_limit: usize,
    /// Skip the shuffle test when chi-square has already rejected independence.
    pub short_circuit: bool,
}

impl Default for AssessOptions {
    fn default() -> Self {
        AssessOptions {
            n_shuffles: 10_000,
            rng_seed: 0,
            iid_sample_limit: 1_000_000,
            short_circuit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub n_bits: u64,
    pub h_min_per_bit: f64,
    pub k_extractable: u64,
    pub iid_verdict: IidVerdict,
    /// (estimator name, entropy per bit) for every estimator that ran.
    pub estimators: Vec<(String, f64)>,
    pub chi_square: Option<ChiSquareResult>,
    pub permutation: Option<PermutationResult>,
    pub warnings: Vec<String>,
}

/// `floor(n * h)`, evaluated exactly on the binary value of `h`.
pub fn extractable_bits(n_bits: u64, h_per_bit: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&h_per_bit) {
        return Err(Error::param(format!("entropy per bit {h_per_bit} outside [0, 1]")));
    }
    if h_per_bit == 0.0 {
        return Ok(0);
    }
    let raw = h_per_bit.to_bits();
    let biased_exp = ((raw >> 52) & 0x7ff) as i32;
    let fraction = raw & ((1u64 << 52) - 1);
    let (mantissa, exp) = if biased_exp == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), biased_exp - 1075)
    };
    // h <= 1 so exp <= -52
    let product = u128::from(n_bits) * u128::from(mantissa);
    let shift = (-exp) as u32;
    Ok(if shift >= 128 { 0 } else { (product >> shift) as u64 })
}

/// Estimates min-entropy per bit and the extractable bit count.
pub fn assess(bits: &BitString, opts: &AssessOptions) -> Result<EntropyReport> {
    let mut warnings = Vec::new();
    if bits.len() < RECOMMENDED_LEN {
        warnings.push(format!(
            "only {} bits; at least {RECOMMENDED_LEN} are recommended for entropy estimation",
            bits.len()
        ));
    }

    let sample = if bits.len() > opts.iid_sample_limit {
        bits.slice(0, opts.iid_sample_limit)
    } else {
        bits.clone()
    };
    let chi = chi_square_independence(&sample)?;
    let permutation = if chi.pass || !opts.short_circuit {
        let cfg = PermutationConfig {
            n_shuffles: opts.n_shuffles,
            rng_seed: opts.rng_seed,
            ..Default::default()
        };
        Some(permutation_test(&sample, &cfg)?)
    } else {
        None
    };
    let iid = chi.pass && permutation.as_ref().is_some_and(|p| p.pass);
    let verdict = if iid { IidVerdict::Iid } else { IidVerdict::NonIid };

    let mcv = mcv_estimate(bits)?;
    let mut estimators = vec![("mcv".to_string(), mcv)];
    if !iid {
        estimators.push(("markov".to_string(), markov_estimate(bits)?));
    }
    let h = estimators.iter().map(|(_, v)| *v).fold(1.0, f64::min);
    let n = bits.len() as u64;
    Ok(EntropyReport {
        n_bits: n,
        h_min_per_bit: h,
        k_extractable: extractable_bits(n, h)?,
        iid_verdict: verdict,
        estimators,
        chi_square: Some(chi),
        permutation,
        warnings,
    })
}

impl EntropyReport {
    /// Renders as `key: value` lines. Floating values use the shortest
    /// representation that round-trips.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_bits: {}", self.n_bits);
        let _ = writeln!(s, "h_min_per_bit: {:?}", self.h_min_per_bit);
        let _ = writeln!(s, "k_extractable: {}", self.k_extractable);
        let _ = writeln!(s, "iid_verdict: {}", self.iid_verdict.as_str());
        for (name, v) in &self.estimators {
            let _ = writeln!(s, "estimator.{name}: {v:?}");
        }
        if let Some(chi) = &self.chi_square {
            let _ = writeln!(s, "chi_square.statistic: {:?}", chi.statistic);
            let _ = writeln!(s, "chi_square.tuple_len: {}", chi.tuple_len);
            let _ = writeln!(s, "chi_square.dof: {}", chi.degrees_of_freedom);
            let _ = writeln!(s, "chi_square.p_value: {:?}", chi.p_value);
            let _ = writeln!(s, "chi_square.pass: {}", chi.pass);
        }
        match &self.permutation {
            Some(p) => {
                let _ = writeln!(s, "permutation.shuffles: {}/{}", p.shuffles_run, p.shuffles_requested);
                for r in &p.ranks {
                    let _ = writeln!(
                        s,
                        "permutation.{}: greater={} equal={} pass={}",
                        r.statistic, r.greater, r.equal, r.pass
                    );
                }
                let _ = writeln!(s, "permutation.pass: {}", p.pass);
            }
            None => {
                let _ = writeln!(s, "permutation.pass: skipped");
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    /// Parses the summary fields written by [`EntropyReport::to_text`].
    /// Test details are not read back.
    pub fn from_text(text: &str) -> Result<EntropyReport> {
        let mut n_bits = None;
        let mut h = None;
        let mut k = None;
        let mut verdict = None;
        let mut estimators = Vec::new();
        let mut warnings = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| Error::param(format!("report line {}: expected `key: value`", lineno + 1)))?;
            let value = value.trim();
            let bad = |what: &str| Error::param(format!("report line {}: invalid {what} {value:?}", lineno + 1));
            match key.trim() {
                "n_bits" => n_bits = Some(value.parse::<u64>().map_err(|_| bad("n_bits"))?),
                "h_min_per_bit" => h = Some(value.parse::<f64>().map_err(|_| bad("h_min_per_bit"))?),
                "k_extractable" => k = Some(value.parse::<u64>().map_err(|_| bad("k_extractable"))?),
                "iid_verdict" => {
                    verdict = Some(match value {
                        "iid" => IidVerdict::Iid,
                        "non_iid" => IidVerdict::NonIid,
                        _ => return Err(bad("iid_verdict")),
                    })
                }
                "warning" => warnings.push(value.to_string()),
                key => {
                    if let Some(name) = key.strip_prefix("estimator.") {
                        estimators.push((name.to_string(), value.parse().map_err(|_| bad("estimator"))?));
                    }
                }
            }
        }
        let missing = |f: &str| Error::param(format!("report is missing `{f}`"));
        let report = EntropyReport {
            n_bits: n_bits.ok_or_else(|| missing("n_bits"))?,
            h_min_per_bit: h.ok_or_else(|| missing("h_min_per_bit"))?,
            k_extractable: k.ok_or_else(|| missing("k_extractable"))?,
            iid_verdict: verdict.ok_or_else(|| missing("iid_verdict"))?,
            estimators,
            chi_square: None,
            permutation: None,
            warnings,
        };
        if extractable_bits(report.n_bits, report.h_min_per_bit)? != report.k_extractable {
            return Err(Error::param("report k_extractable is not floor(n_bits * h_min_per_bit)"));
        }
        Ok(report)
    }
}
