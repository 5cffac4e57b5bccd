mod common;

use trng_extract::bitcore::BitString;
use trng_extract::entropy::*;
use trng_extract::mtj_sim::{calibrate_to, generate_raw, CycleConfig, DeviceParams, NoiseModel};

fn source(p1: f64, noise: NoiseModel, n: usize, seed: u64) -> BitString {
    let cfg = CycleConfig::default();
    let dev = calibrate_to(&DeviceParams::default(), &cfg, p1).unwrap();
    generate_raw(n, &cfg, &dev, &noise, seed).unwrap()
}

fn flip(f: f64) -> NoiseModel {
    NoiseModel { markov_flip: f, ..NoiseModel::default() }
}

fn mcv_formula(p: f64, len: f64) -> f64 {
    -(p + 2.576 * (p * (1.0 - p) / (len - 1.0)).sqrt()).min(1.0).log2()
}

#[test]
fn mcv_tracks_bias() {
    let mut last = f64::INFINITY;
    for (i, p) in [0.5, 0.6, 0.7, 0.8].into_iter().enumerate() {
        let bits = source(p, NoiseModel::default(), 1_000_000, 20 + i as u64);
        let h = mcv_estimate(&bits).unwrap();
        assert!(h < last, "not decreasing at p = {p}");
        assert!((h - mcv_formula(p, 1e6)).abs() <= 0.02, "p = {p}: {h}");
        last = h;
    }
}

#[test]
fn estimators_stay_in_unit_interval() {
    for bits in [
        BitString::zeros(1000),
        BitString::ones(1000),
        (0..1000).map(|i| i % 2 == 0).collect(),
        source(0.5, flip(0.5), 10_000, 4),
    ] {
        for h in [mcv_estimate(&bits).unwrap(), markov_estimate(&bits).unwrap()] {
            assert!((0.0..=1.0).contains(&h), "{h}");
        }
    }
}

#[test]
fn assess_does_not_overestimate() {
    let opts = AssessOptions { n_shuffles: 1000, rng_seed: 1, ..AssessOptions::default() };
    for (p1, f, seed) in [(0.55, 0.2, 1), (0.7, 0.0, 2), (0.5, 0.0, 3), (0.6, 0.4, 4)] {
        let truth = common::brute_force_min_entropy_rate(p1, f);
        let rep = assess(&source(p1, flip(f), 1_000_000, seed), &opts).unwrap();
        assert!(
            rep.h_min_per_bit <= truth + 0.02,
            "p1 {p1} f {f}: {} > {truth}",
            rep.h_min_per_bit
        );
        assert_eq!(rep.k_extractable, extractable_bits(rep.n_bits, rep.h_min_per_bit).unwrap());
        let min = rep.estimators.iter().map(|e| e.1).fold(1.0, f64::min);
        assert_eq!(rep.h_min_per_bit, min);
    }
}

#[test]
fn assess_is_deterministic() {
    let bits = source(0.5, NoiseModel::default(), 200_000, 5);
    let opts = AssessOptions { n_shuffles: 500, rng_seed: 77, ..AssessOptions::default() };
    assert_eq!(assess(&bits, &opts).unwrap(), assess(&bits, &opts).unwrap());
}

#[test]
fn iid_source_keeps_markov_estimate_high() {
    let bits = source(0.5, NoiseModel::default(), 10_000_000, 6);
    let h = markov_estimate(&bits).unwrap();
    assert!(h >= 0.99, "{h}");
}

#[test]
fn correlation_pulls_markov_below_mcv() {
    let bits = source(0.55, flip(0.2), 1_000_000, 7);
    assert!(markov_estimate(&bits).unwrap() < mcv_estimate(&bits).unwrap());
}

#[test]
fn chi_square_separates_correlated_source() {
    let iid = chi_square_independence(&source(0.5, NoiseModel::default(), 1_000_000, 8)).unwrap();
    assert!(iid.pass, "{iid:?}");
    let corr = chi_square_independence(&source(0.5, flip(0.3), 1_000_000, 9)).unwrap();
    assert!(!corr.pass, "{corr:?}");
    assert!(!chi_square_independence(&BitString::zeros(100_000)).unwrap().pass);
}

#[test]
fn drift_fails_the_shuffle_test() {
    let noise = NoiseModel { drift_amplitude: 10.0, drift_period: 20_000.0, ..NoiseModel::default() };
    let bits = source(0.5, noise, 100_000, 10);
    let cfg = PermutationConfig { n_shuffles: 200, rng_seed: 3, ..PermutationConfig::default() };
    let res = permutation_test(&bits, &cfg).unwrap();
    assert!(!res.pass);
    let exc = res.ranks.iter().find(|r| r.statistic == Statistic::Excursion).unwrap();
    assert!(!exc.pass, "{exc:?}");
}

#[test]
fn shuffle_test_false_rejections_on_iid_data() {
    // With 100 shuffles no tail is excluded, so a statistic is rejected
    // whenever the original beats (or is beaten by) every shuffle, which
    // happens with probability about 2/101.
    let cfg = PermutationConfig { n_shuffles: 100, ..PermutationConfig::default() };
    let stats = Statistic::all();
    let mut failures = vec![0u32; stats.len()];
    for s in 0..100u64 {
        let bits = source(0.5, NoiseModel::default(), 10_000, 1000 + s);
        let res = permutation_test(&bits, &PermutationConfig { rng_seed: s, ..cfg.clone() }).unwrap();
        for (i, r) in res.ranks.iter().enumerate() {
            failures[i] += u32::from(!r.pass);
        }
    }
    for (stat, &f) in stats.iter().zip(&failures) {
        // mean 2, so 8 is beyond four standard deviations
        assert!(f <= 8, "{stat}: {f} of 100 rejected");
    }
}
