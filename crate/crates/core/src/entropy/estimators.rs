use crate::bitcore::BitString;
use crate::error::{Error, Result};

/// z-value of the 99% upper confidence bound.
const Z_99: f64 = 2.576;

/// Markov estimator path length.
const MARKOV_STEPS: i32 = 128;

fn require_len(bits: &BitString, what: &'static str) -> Result<()> {
    if bits.len() < 2 {
        return Err(Error::InsufficientData {
            what,
            required: 2,
            actual: bits.len() as u64,
        });
    }
    Ok(())
}

/// Most-common-value estimate of min-entropy per bit.
///
/// Uses the 99% upper bound `p_u = min(1, p + 2.576 sqrt(p(1-p)/(L-1)))` on the
/// frequency of the most common bit and returns `-log2(p_u)`.
pub fn mcv_estimate(bits: &BitString) -> Result<f64> {
    require_len(bits, "mcv estimate")?;
    let len = bits.len() as f64;
    let ones = bits.count_ones() as f64;
    let p_hat = ones.max(len - ones) / len;
    let p_upper = (p_hat + Z_99 * (p_hat * (1.0 - p_hat) / (len - 1.0)).sqrt()).min(1.0);
    Ok((-p_upper.log2()).clamp(0.0, 1.0))
}

/// First-order Markov estimate of min-entropy per bit.
///
/// Fits initial and transition probabilities from the data and bounds the
/// probability of the most likely 128-bit sequence. For a two-state chain the
/// most likely path is one of six shapes: constant, alternating, or a single
/// transition into a constant run, from either starting bit.
pub fn markov_estimate(bits: &BitString) -> Result<f64> {
    require_len(bits, "markov estimate")?;
    let len = bits.len();
    let ones = bits.count_ones();
    let p1 = ones as f64 / len as f64;
    let p0 = 1.0 - p1;

    // transition counts[from][to]
    let mut counts = [[0u64; 2]; 2];
    let mut iter = bits.iter();
    let mut prev = iter.next().expect("length checked") as usize;
    for b in iter {
        let b = b as usize;
        counts[prev][b] += 1;
        prev = b;
    }
    let trans = |from: usize, to: usize| {
        let row = counts[from][0] + counts[from][1];
        if row == 0 {
            0.0
        } else {
            counts[from][to] as f64 / row as f64
        }
    };
    let (t00, t01, t10, t11) = (trans(0, 0), trans(0, 1), trans(1, 0), trans(1, 1));

    let steps = MARKOV_STEPS - 1;
    let half = MARKOV_STEPS / 2;
    let candidates = [
        p0 * t00.powi(steps),
        p0 * t01.powi(half) * t10.powi(half - 1),
        p0 * t01 * t11.powi(steps - 1),
        p1 * t10 * t00.powi(steps - 1),
        p1 * t10.powi(half) * t01.powi(half - 1),
        p1 * t11.powi(steps),
    ];
    let p_max = candidates.into_iter().fold(0.0, f64::max);
    if p_max <= 0.0 {
        return Ok(1.0);
    }
    Ok((-p_max.log2() / f64::from(MARKOV_STEPS)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(len: usize) -> BitString {
        (0..len).map(|i| (i / 2) % 2 == 0).collect()
    }

    #[test]
    fn mcv_degenerate_source_has_no_entropy() {
        assert_eq!(mcv_estimate(&BitString::zeros(1_000_000)).unwrap(), 0.0);
        assert_eq!(mcv_estimate(&BitString::ones(10)).unwrap(), 0.0);
    }

    #[test]
    fn mcv_balanced_matches_formula() {
        let h = mcv_estimate(&balanced(1_000_000)).unwrap();
        assert!((h - 0.996_288_394_217_304_3).abs() < 1e-12, "{h}");
    }

    #[test]
    fn mcv_three_quarter_bias() {
        let bits: BitString = (0..10_000).map(|i| i % 4 != 0).collect();
        let h = mcv_estimate(&bits).unwrap();
        assert!((h - 0.393_737_890_273_174_6).abs() < 1e-12, "{h}");
    }

    #[test]
    fn short_input_is_rejected() {
        assert!(mcv_estimate(&BitString::zeros(1)).is_err());
        assert!(markov_estimate(&BitString::zeros(1)).is_err());
    }

    #[test]
    fn markov_alternating_is_near_zero() {
        let bits: BitString = (0..1_000_000).map(|i| i % 2 == 1).collect();
        let h = markov_estimate(&bits).unwrap();
        // only the initial bit is uncertain
        assert!((h - 1.0 / 128.0).abs() < 1e-9, "{h}");
    }

    #[test]
    fn markov_constant_is_zero() {
        assert_eq!(markov_estimate(&BitString::ones(1000)).unwrap(), 0.0);
    }
}
