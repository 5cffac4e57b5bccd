use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use trng_extract::bitcore::BitString;
use trng_extract::mtj_sim::{calibrate_to, generate_raw, CycleConfig, DeviceParams, NoiseModel};
use trng_extract::stattests::*;

fn uniform_bits(n: usize, seed: u64) -> BitString {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let words = (0..n.div_ceil(64)).map(|_| rng.next_u64()).collect();
    BitString::from_words(words, n).unwrap()
}

#[test]
fn uniform_pvalues_look_uniform() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let p: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
    assert!(pvalue_uniformity(&p).unwrap() >= UNIFORMITY_ALPHA);
}

#[test]
fn pvalue_uniformity_matches_direct_chi_square() {
    // 20 values, bins hold 5,3,2,0,0,0,0,0,0,10; expected 2 each
    let mut p = vec![0.01; 5];
    p.extend([0.15; 3]);
    p.extend([0.25; 2]);
    p.extend([0.999; 10]);
    let chi: f64 = [5.0f64, 3.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0]
        .iter()
        .map(|c| (c - 2.0) * (c - 2.0) / 2.0)
        .sum();
    assert_eq!(chi, 49.0);
    // Q(4.5, 24.5) from the series of the lower function, computed independently
    let q = 1.0 - lower_regularised_gamma(4.5, chi / 2.0);
    assert!((pvalue_uniformity(&p).unwrap() - q).abs() < 1e-12);
}

fn lower_regularised_gamma(a: f64, x: f64) -> f64 {
    // x^a e^-x / Gamma(a+1) * sum x^n / ((a+1)...(a+n))
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..500 {
        term *= x / (a + n as f64);
        sum += term;
    }
    // Gamma(5.5) = 52.34277778455352
    x.powf(a) * (-x).exp() / 52.342_777_784_553_52 * sum
}

#[test]
fn uniform_input_passes_every_test() {
    let bits = uniform_bits(100_000_000, 2024);
    let rep = run_suite(&bits, 1_000_000, 0.01).unwrap();
    assert_eq!(rep.n_blocks, 100);
    assert!(rep.warnings.is_empty());
    for r in &rep.results {
        assert!(r.pass, "{}: proportion {} pvalue_t {}", r.test_name(), r.proportion, r.pvalue_t);
        assert_eq!(r.per_block_pvalues().len(), 100);
        assert!(r.per_block_pvalues().iter().all(|p| (0.0..=1.0).contains(p)));
        assert!((0.0..=1.0).contains(&r.proportion));
    }
    assert!(rep.overall_pass);
    let serial = rep.result(TestId::Serial).unwrap();
    assert_eq!(serial.substatistics.len(), 2);
    assert_eq!(serial.proportion, serial.substatistics.iter().map(|s| s.proportion).fold(1.0, f64::min));
}

#[test]
fn biased_correlated_source_fails_frequency_and_serial() {
    let cfg = CycleConfig::default();
    let dev = calibrate_to(&DeviceParams::default(), &cfg, 0.55).unwrap();
    let noise = NoiseModel { markov_flip: 0.2, ..NoiseModel::default() };
    let raw = generate_raw(3_000_000, &cfg, &dev, &noise, 5).unwrap();
    let rep = run_suite(&raw, 1_000_000, 0.01).unwrap();
    assert!(!rep.result(TestId::Frequency).unwrap().pass);
    assert!(!rep.result(TestId::Serial).unwrap().pass);
    let runs = rep.result(TestId::Runs).unwrap();
    assert_eq!(runs.status, TestStatus::SkippedPrerequisite(TestId::Frequency));
    let apen = rep.result(TestId::ApproximateEntropy).unwrap();
    assert_eq!(apen.status, TestStatus::SkippedPrerequisite(TestId::Serial));
    assert!(!rep.overall_pass);
    assert_eq!(rep.warnings.len(), 1);
}

#[test]
fn block_partition_drops_the_tail() {
    let bits = uniform_bits(2_700_000, 3);
    let rep = run_suite(&bits, 1_000_000, 0.01).unwrap();
    assert_eq!(rep.n_blocks, 2);
    assert_eq!(rep.discarded_bits, 700_000);
    assert!(run_suite(&bits.slice(0, 1_999_999), 1_000_000, 0.01).is_err());
}

#[test]
fn reports_are_deterministic_and_render() {
    let bits = uniform_bits(3_000_000, 4);
    let a = run_suite(&bits, 1_000_000, 0.01).unwrap();
    let b = run_suite(&bits, 1_000_000, 0.01).unwrap();
    assert_eq!(a, b);
    let table = a.to_table();
    for id in TestId::ALL {
        assert!(table.contains(id.label()), "{table}");
    }
    assert!(a.to_text().contains("serial.pvalue_t: "));
}

#[test]
fn block_counts_at_reference_lengths() {
    // only the partition matters here, so skip the heavy tests
    let cfg = SuiteConfig { tests: vec![TestId::Frequency], ..SuiteConfig::default() };
    for (len, blocks) in [(217_504_350usize, 217usize), (169_345_341, 169)] {
        let rep = run_suite_with(&BitString::zeros(len), &cfg).unwrap();
        assert_eq!(rep.n_blocks, blocks);
        assert_eq!(rep.discarded_bits, len % 1_000_000);
    }
}

#[test]
fn thresholds_at_reference_block_counts() {
    assert_eq!(format!("{:.4}", floor4(proportion_threshold(0.01, 169).unwrap())), "0.9670");
    assert_eq!(format!("{:.4}", floor4(proportion_threshold(0.01, 217).unwrap())), "0.9697");
    let mut last = 0.0;
    for k in [2, 10, 55, 100, 1000, 100_000] {
        let t = proportion_threshold(0.01, k).unwrap();
        assert!(t > last && t < 0.99);
        last = t;
    }
}
