use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A finite probability mass function over integer-labelled symbols.
///
/// Multi-bit outcomes are labelled by their integer value, so an `m`-bit
/// string distribution has support within `0..2^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    mass: BTreeMap<u64, f64>,
}

impl Distribution {
    /// Builds a distribution from `(symbol, mass)` pairs. Repeated symbols
    /// accumulate.
    pub fn new(pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut mass = BTreeMap::new();
        for (sym, p) in pairs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "symbol {sym} has mass {p}"
                )));
            }
            *mass.entry(sym).or_insert(0.0) += p;
        }
        let total: f64 = mass.values().sum();
        if mass.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        Ok(Distribution { mass })
    }

    pub fn uniform(symbols: u64) -> Result<Self> {
        if symbols == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let p = 1.0 / symbols as f64;
        Self::new((0..symbols).map(|s| (s, p)))
    }

    pub fn point(symbol: u64) -> Self {
        Distribution {
            mass: BTreeMap::from([(symbol, 1.0)]),
        }
    }

    /// Bernoulli distribution on {0, 1} with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new([(0, 1.0 - p), (1, p)])
    }

    /// Empirical distribution of the given observations.
    pub fn empirical(samples: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        let mut total = 0u64;
        for s in samples {
            *counts.entry(s).or_insert(0) += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::InvalidDistribution("no samples".into()));
        }
        Self::new(counts.into_iter().map(|(s, c)| (s, c as f64 / total as f64)))
    }

    pub fn mass(&self, symbol: u64) -> f64 {
        self.mass.get(&symbol).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.mass.keys().copied()
    }

    pub fn support_size(&self) -> usize {
        self.mass.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.mass.iter().map(|(&s, &p)| (s, p))
    }

    pub fn shannon_entropy(&self) -> f64 {
        self.mass
            .values()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }
}

/// Half the L1 distance between two distributions over their joint support.
pub fn statistical_distance(p: &Distribution, q: &Distribution) -> f64 {
    let mut sum = 0.0;
    for (sym, pm) in p.iter() {
        sum += (pm - q.mass(sym)).abs();
    }
    for (sym, qm) in q.iter() {
        if !p.mass.contains_key(&sym) {
            sum += qm;
        }
    }
    (0.5 * sum).clamp(0.0, 1.0)
}

/// `-log2` of the largest point mass.
pub fn min_entropy(p: &Distribution) -> f64 {
    let max = p.mass.values().copied().fold(0.0, f64::max);
    // -log2(1) is -0.0
    (-max.log2()).max(0.0)
}
