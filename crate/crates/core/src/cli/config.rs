//! Flat `key = value` pipeline configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::TryRngCore;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extractor::Epsilon;
use crate::mtj_sim::{CycleConfig, DeviceParams, NoiseModel};

use super::io::BitFormat;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Raw bits to simulate.
    pub bits: usize,
    /// Seeds the simulator and the shuffle test. Drawn from the OS when unset.
    pub rng_seed: Option<u64>,
    /// Fit `v_critical` so the perturb pulse switches with `switch_probability`.
    pub calibrate: bool,
    pub switch_probability: f64,
    pub device: DeviceParams,
    pub cycle: CycleConfig,
    pub noise: NoiseModel,
    pub n_shuffles: u64,
    pub epsilon: Epsilon,
    /// Toeplitz seed source. OS entropy when unset.
    pub seed_file: Option<PathBuf>,
    /// Extract in chunks of this many bits; 0 hashes the whole input at once.
    pub chunk_bits: usize,
    pub block_length: usize,
    pub alpha: f64,
    pub format: BitFormat,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    /// Desk-scale source: biased towards 1 and correlated with the previous bit.
    fn default() -> Self {
        PipelineConfig {
            bits: 10_000_000,
            rng_seed: None,
            calibrate: true,
            switch_probability: 0.55,
            device: DeviceParams::default(),
            cycle: CycleConfig::default(),
            noise: NoiseModel {
                markov_flip: 0.2,
                ..NoiseModel::default()
            },
            n_shuffles: 10_000,
            epsilon: "1e-10".parse().expect("valid literal"),
            seed_file: None,
            chunk_bits: 0,
            block_length: 1_000_000,
            alpha: 0.01,
            format: BitFormat::Packed,
            out_dir: PathBuf::from("trng-out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::param(format!("{key}: expected true or false, got {value:?}"))),
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Applies every `key = value` line on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::param(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = |v: &str| parse_num::<f64>(key, v);
        match key {
            "bits" => self.bits = parse_num(key, value)?,
            "rng_seed" => {
                self.rng_seed = if value == "auto" { None } else { Some(parse_num(key, value)?) }
            }
            "calibrate" => self.calibrate = parse_bool(key, value)?,
            "switch_probability" => self.switch_probability = f(value)?,
            "r_parallel" => self.device.r_parallel = f(value)?,
            "r_antiparallel" => self.device.r_antiparallel = f(value)?,
            "v_critical" => self.device.v_critical = f(value)?,
            "delta" => self.device.delta = f(value)?,
            "tau0" => self.device.tau0 = f(value)?,
            "v_reset" => self.cycle.v_reset = f(value)?,
            "w_reset" => self.cycle.w_reset = f(value)?,
            "v_perturb" => self.cycle.v_perturb = f(value)?,
            "w_perturb" => self.cycle.w_perturb = f(value)?,
            "cycle_period" => self.cycle.cycle_period = f(value)?,
            "sample_rate" => self.cycle.sample_rate = f(value)?,
            "v_offset" => self.cycle.v_offset = f(value)?,
            "r_series" => self.cycle.r_series = f(value)?,
            "r_threshold" => self.cycle.r_threshold = f(value)?,
            "read_noise_sd" => self.noise.read_noise_sd = f(value)?,
            "drift_amplitude" => self.noise.drift_amplitude = f(value)?,
            "drift_period" => self.noise.drift_period = f(value)?,
            "markov_flip" => self.noise.markov_flip = f(value)?,
            "n_shuffles" => self.n_shuffles = parse_num(key, value)?,
            "epsilon" => self.epsilon = value.parse()?,
            "seed_file" => {
                self.seed_file = if value.is_empty() || value == "os" { None } else { Some(value.into()) }
            }
            "chunk_bits" => self.chunk_bits = parse_num(key, value)?,
            "block_length" => self.block_length = parse_num(key, value)?,
            "alpha" => self.alpha = f(value)?,
            "format" => self.format = value.parse()?,
            "out_dir" => self.out_dir = value.into(),
            _ => return Err(Error::param(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 {
            return Err(Error::param("bits must be at least 1"));
        }
        if !(self.switch_probability > 0.0 && self.switch_probability < 1.0) {
            return Err(Error::param(format!(
                "switch_probability must be in (0, 1), got {}",
                self.switch_probability
            )));
        }
        self.device.validate()?;
        self.cycle.validate()?;
        self.noise.validate()?;
        if self.n_shuffles < 100 {
            return Err(Error::param("n_shuffles must be at least 100"));
        }
        if self.block_length == 0 {
            return Err(Error::param("block_length must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// Fills in an unset RNG seed from the OS. Returns true if one was drawn.
    pub fn resolve_seed(&mut self) -> Result<bool> {
        if self.rng_seed.is_some() {
            return Ok(false);
        }
        let seed = rand::rngs::OsRng
            .try_next_u64()
            .map_err(|e| Error::param(format!("OS entropy unavailable: {e}")))?;
        self.rng_seed = Some(seed);
        Ok(true)
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed.unwrap_or(0)
    }

    /// Renders every key, so the output reloads to an identical configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("bits", self.bits.to_string());
        kv("rng_seed", self.rng_seed.map_or("auto".into(), |v| v.to_string()));
        kv("calibrate", self.calibrate.to_string());
        kv("switch_probability", format!("{:?}", self.switch_probability));
        kv("r_parallel", format!("{:?}", self.device.r_parallel));
        kv("r_antiparallel", format!("{:?}", self.device.r_antiparallel));
        kv("v_critical", format!("{:?}", self.device.v_critical));
        kv("delta", format!("{:?}", self.device.delta));
        kv("tau0", format!("{:?}", self.device.tau0));
        kv("v_reset", format!("{:?}", self.cycle.v_reset));
        kv("w_reset", format!("{:?}", self.cycle.w_reset));
        kv("v_perturb", format!("{:?}", self.cycle.v_perturb));
        kv("w_perturb", format!("{:?}", self.cycle.w_perturb));
        kv("cycle_period", format!("{:?}", self.cycle.cycle_period));
        kv("sample_rate", format!("{:?}", self.cycle.sample_rate));
        kv("v_offset", format!("{:?}", self.cycle.v_offset));
        kv("r_series", format!("{:?}", self.cycle.r_series));
        kv("r_threshold", format!("{:?}", self.cycle.r_threshold));
        kv("read_noise_sd", format!("{:?}", self.noise.read_noise_sd));
        kv("drift_amplitude", format!("{:?}", self.noise.drift_amplitude));
        kv("drift_period", format!("{:?}", self.noise.drift_period));
        kv("markov_flip", format!("{:?}", self.noise.markov_flip));
        kv("n_shuffles", self.n_shuffles.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv(
            "seed_file",
            self.seed_file.as_ref().map_or("os".into(), |p| p.display().to_string()),
        );
        kv("chunk_bits", self.chunk_bits.to_string());
        kv("block_length", self.block_length.to_string());
        kv("alpha", format!("{:?}", self.alpha));
        kv("format", self.format.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        s
    }

    /// SHA-256 of [`PipelineConfig::to_text`], hex.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}
