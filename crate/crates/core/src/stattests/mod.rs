//! Block-wise statistical testing with two verdicts per test: the proportion
//! of blocks passing at significance `alpha`, and the uniformity of the
//! per-block P-values.

mod battery;

use std::fmt::Write as _;

pub use battery::{
    approximate_entropy, block_frequency, cumulative_sums, frequency, longest_run, minimum_length,
    run_test, runs, serial, spectral, Outcome, TestId, TestParams,
};

use crate::bitcore::BitString;
use crate::error::{Error, Result};

/// Uniformity P-values below this reject the test.
pub const UNIFORMITY_ALPHA: f64 = 0.0001;

/// Block count below which both verdicts lose their nominal confidence.
pub const RECOMMENDED_BLOCKS: usize = 55;

/// Lower edge of the `p ± 3 sqrt(p(1-p)/k)` interval around `p = 1 - alpha`.
pub fn proportion_threshold(alpha: f64, n_blocks: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if n_blocks < 2 {
        return Err(Error::param(format!("need at least 2 blocks, got {n_blocks}")));
    }
    let p = 1.0 - alpha;
    Ok(p - 3.0 * (alpha * p / n_blocks as f64).sqrt())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("alpha {alpha} is outside (0, 1)")))
    }
}

/// Chi-square goodness of fit of P-values to uniform over ten equal bins.
pub fn pvalue_uniformity(pvalues: &[f64]) -> Result<f64> {
    if pvalues.is_empty() {
        return Err(Error::param("no P-values to assess"));
    }
    let mut bins = [0u64; 10];
    for &p in pvalues {
        bins[((p * 10.0) as usize).min(9)] += 1;
    }
    let expected = pvalues.len() as f64 / 10.0;
    let chi: f64 = bins
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    Ok(battery::igamc(4.5, chi / 2.0))
}

/// Truncates to four decimals, the way the tables are printed.
pub fn floor4(x: f64) -> f64 {
    // the nudge keeps values like 0.97 from printing as 0.9699
    (x * 1e4 + 1e-9).floor() / 1e4
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubStatistic {
    pub per_block_pvalues: Vec<f64>,
    pub proportion: f64,
    pub pvalue_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestStatus {
    Ran,
    /// Not run because its prerequisite test failed; counts as a failure.
    SkippedPrerequisite(TestId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub test: TestId,
    pub status: TestStatus,
    /// One entry per sub-statistic (two for Serial and Cumulative Sums).
    pub substatistics: Vec<SubStatistic>,
    /// Minimum over sub-statistics.
    pub proportion: f64,
    /// Minimum over sub-statistics.
    pub pvalue_t: f64,
    pub pass: bool,
}

impl TestResult {
    pub fn test_name(&self) -> &'static str {
        self.test.name()
    }

    /// P-values of the weakest sub-statistic.
    pub fn per_block_pvalues(&self) -> &[f64] {
        self.substatistics
            .iter()
            .min_by(|a, b| a.proportion.total_cmp(&b.proportion))
            .map_or(&[], |s| &s.per_block_pvalues)
    }

    pub fn skipped(&self) -> bool {
        matches!(self.status, TestStatus::SkippedPrerequisite(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub block_length: usize,
    pub n_blocks: usize,
    pub discarded_bits: usize,
    pub alpha: f64,
    pub threshold: f64,
    pub results: Vec<TestResult>,
    pub overall_pass: bool,
    pub warnings: Vec<String>,
}

impl SuiteReport {
    pub fn result(&self, id: TestId) -> Option<&TestResult> {
        self.results.iter().find(|r| r.test == id)
    }

    /// Aligned table: test, P-value_T, proportion, verdict.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} blocks of {} bits, alpha = {}, proportion threshold {:.4}",
            self.n_blocks,
            self.block_length,
            self.alpha,
            floor4(self.threshold)
        );
        let _ = writeln!(s, "{:<22} {:>9} {:>11}  {}", "Test", "P-value", "Proportion", "Result");
        for r in &self.results {
            let verdict = match r.status {
                TestStatus::Ran if r.pass => "PASS".to_string(),
                TestStatus::Ran => "FAIL".to_string(),
                TestStatus::SkippedPrerequisite(p) => format!("FAIL (skipped, {} failed)", p.name()),
            };
            if r.skipped() {
                let _ = writeln!(s, "{:<22} {:>9} {:>11}  {verdict}", r.test.label(), "-", "-");
            } else {
                let _ = writeln!(
                    s,
                    "{:<22} {:>9.4} {:>11.4}  {verdict}",
                    r.test.label(),
                    floor4(r.pvalue_t),
                    floor4(r.proportion)
                );
            }
        }
        let _ = writeln!(s, "Overall: {}", if self.overall_pass { "PASS" } else { "FAIL" });
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }

    /// `key: value` lines at full precision.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "block_length: {}", self.block_length);
        let _ = writeln!(s, "n_blocks: {}", self.n_blocks);
        let _ = writeln!(s, "discarded_bits: {}", self.discarded_bits);
        let _ = writeln!(s, "alpha: {:?}", self.alpha);
        let _ = writeln!(s, "threshold: {:?}", self.threshold);
        for r in &self.results {
            let name = r.test.name();
            match r.status {
                TestStatus::Ran => {
                    let _ = writeln!(s, "{name}.status: ran");
                    let _ = writeln!(s, "{name}.pvalue_t: {:?}", r.pvalue_t);
                    let _ = writeln!(s, "{name}.proportion: {:?}", r.proportion);
                }
                TestStatus::SkippedPrerequisite(p) => {
                    let _ = writeln!(s, "{name}.status: skipped ({} failed)", p.name());
                }
            }
            let _ = writeln!(s, "{name}.pass: {}", r.pass);
        }
        let _ = writeln!(s, "overall_pass: {}", self.overall_pass);
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub block_length: usize,
    pub alpha: f64,
    pub params: TestParams,
    pub tests: Vec<TestId>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            block_length: 1_000_000,
            alpha: 0.01,
            params: TestParams::default(),
            tests: TestId::ALL.to_vec(),
        }
    }
}

/// Runs every configured test on each full block and aggregates.
pub fn run_suite(bits: &BitString, block_length: usize, alpha: f64) -> Result<SuiteReport> {
    run_suite_with(
        bits,
        &SuiteConfig {
            block_length,
            alpha,
            ..SuiteConfig::default()
        },
    )
}

pub fn run_suite_with(bits: &BitString, cfg: &SuiteConfig) -> Result<SuiteReport> {
    check_alpha(cfg.alpha)?;
    if cfg.block_length == 0 {
        return Err(Error::param("block length must be positive"));
    }
    let n_blocks = bits.len() / cfg.block_length;
    if n_blocks < 2 {
        return Err(Error::InsufficientData {
            what: "test suite (2 blocks)",
            required: 2 * cfg.block_length as u64,
            actual: bits.len() as u64,
        });
    }
    for &id in &cfg.tests {
        let min = minimum_length(id, &cfg.params);
        if cfg.block_length < min {
            return Err(Error::InsufficientData {
                what: id.name(),
                required: min as u64,
                actual: cfg.block_length as u64,
            });
        }
    }
    let threshold = proportion_threshold(cfg.alpha, n_blocks)?;
    let mut warnings = Vec::new();
    if n_blocks < RECOMMENDED_BLOCKS {
        warnings.push(format!(
            "only {n_blocks} blocks (fewer than {RECOMMENDED_BLOCKS}); verdicts have reduced confidence"
        ));
    }

    let blocks: Vec<BitString> = bits.blocks(cfg.block_length).collect();
    let mut results: Vec<TestResult> = Vec::with_capacity(cfg.tests.len());
    // prerequisites first so the skip rule can consult them
    let mut order = cfg.tests.clone();
    order.sort();
    for id in order {
        if let Some(pre) = id.prerequisite() {
            if let Some(r) = results.iter().find(|r| r.test == pre) {
                if !r.pass {
                    results.push(TestResult {
                        test: id,
                        status: TestStatus::SkippedPrerequisite(pre),
                        substatistics: Vec::new(),
                        proportion: 0.0,
                        pvalue_t: 0.0,
                        pass: false,
                    });
                    continue;
                }
            }
        }
        results.push(run_one(id, &blocks, cfg, threshold)?);
    }
    // report in the configured order
    results.sort_by_key(|r| cfg.tests.iter().position(|&t| t == r.test));
    let overall_pass = results.iter().all(|r| r.pass);
    Ok(SuiteReport {
        block_length: cfg.block_length,
        n_blocks,
        discarded_bits: bits.len() - n_blocks * cfg.block_length,
        alpha: cfg.alpha,
        threshold,
        results,
        overall_pass,
        warnings,
    })
}

fn run_one(id: TestId, blocks: &[BitString], cfg: &SuiteConfig, threshold: f64) -> Result<TestResult> {
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for block in blocks {
        let pv = match run_test(id, block, &cfg.params)? {
            Outcome::PValues(p) => p,
            // a block that fails the test's precondition fails the test
            Outcome::NotApplicable => vec![0.0; columns.len().max(1)],
        };
        if columns.is_empty() {
            columns = vec![Vec::with_capacity(blocks.len()); pv.len()];
        }
        for (col, p) in columns.iter_mut().zip(pv) {
            col.push(p);
        }
    }
    let substatistics = columns
        .into_iter()
        .map(|pvals| {
            let passed = pvals.iter().filter(|&&p| p >= cfg.alpha).count();
            Ok(SubStatistic {
                proportion: passed as f64 / pvals.len() as f64,
                pvalue_t: pvalue_uniformity(&pvals)?,
                per_block_pvalues: pvals,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let proportion = substatistics.iter().map(|s| s.proportion).fold(1.0, f64::min);
    let pvalue_t = substatistics.iter().map(|s| s.pvalue_t).fold(1.0, f64::min);
    Ok(TestResult {
        test: id,
        status: TestStatus::Ran,
        pass: pvalue_t >= UNIFORMITY_ALPHA && proportion >= threshold,
        substatistics,
        proportion,
        pvalue_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(format!("{:.4}", floor4(proportion_threshold(0.01, 169).unwrap())), "0.9670");
        assert_eq!(format!("{:.4}", floor4(proportion_threshold(0.01, 217).unwrap())), "0.9697");
        assert!((proportion_threshold(1e-12, 100).unwrap() - 1.0).abs() < 1e-6);
        assert!(proportion_threshold(0.0, 100).is_err());
        assert!(proportion_threshold(0.01, 1).is_err());
    }

    #[test]
    fn uniformity_extremes() {
        let one_per_bin: Vec<f64> = (0..10).map(|i| i as f64 / 10.0 + 0.05).collect();
        assert_eq!(pvalue_uniformity(&one_per_bin).unwrap(), 1.0);
        assert!(pvalue_uniformity(&[0.5; 100]).unwrap() < 1e-30);
        assert!(pvalue_uniformity(&[]).is_err());
        // P = 1 falls into the last bin
        assert_eq!(pvalue_uniformity(&[1.0; 10]).unwrap(), pvalue_uniformity(&[0.95; 10]).unwrap());
    }

    #[test]
    fn floor_rounding() {
        assert_eq!(floor4(0.96709), 0.967);
        assert_eq!(floor4(0.97), 0.97);
        assert_eq!(floor4(0.99999), 0.9999);
    }

    #[test]
    fn suite_rejects_bad_shapes() {
        let bits = BitString::zeros(10_000);
        assert!(run_suite(&bits, 0, 0.01).is_err());
        assert!(run_suite(&bits, 6000, 0.01).is_err());
        assert!(run_suite(&bits, 5000, 1.5).is_err());
        // Serial needs 2^19 bits per block
        assert!(run_suite(&bits, 5000, 0.01).is_err());
    }

    #[test]
    fn runs_is_skipped_when_frequency_fails() {
        let cfg = SuiteConfig {
            block_length: 1000,
            tests: vec![TestId::Frequency, TestId::Runs],
            ..SuiteConfig::default()
        };
        let bits = BitString::ones(5000);
        let rep = run_suite_with(&bits, &cfg).unwrap();
        assert_eq!(rep.n_blocks, 5);
        assert!(!rep.result(TestId::Frequency).unwrap().pass);
        let runs = rep.result(TestId::Runs).unwrap();
        assert_eq!(runs.status, TestStatus::SkippedPrerequisite(TestId::Frequency));
        assert!(!runs.pass);
        assert!(!rep.overall_pass);
        assert_eq!(rep.warnings.len(), 1);
        assert!(rep.to_table().contains("skipped"));
    }
}
