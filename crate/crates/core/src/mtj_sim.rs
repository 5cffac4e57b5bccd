//! Stochastic simulator of a spin-transfer-torque MTJ random bit generator.
//!
//! Each generation cycle applies a negative reset pulse that drives the
//! junction into the parallel (low resistance) state, a positive perturb pulse
//! that switches it to the anti-parallel state with probability `P_sw`, and
//! then reads the junction through a series resistor with a DC offset. The
//! read samples are converted back to a resistance with the voltage-divider
//! relation and averaged; the bit is 1 when the average exceeds the threshold.
//!
//! Samples are positional: with the default timing (2 MHz sampling, 8 us
//! cycle, 1 us pulses) the cycle has 16 samples, of which 0..2 cover the reset
//! pulse, 2..4 the perturb pulse and 4..16 the read window.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use crate::bitcore::BitString;
use crate::error::{Error, Result};

/// Electrical and thermal constants of the junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    /// Parallel-state resistance, ohms.
    pub r_parallel: f64,
    /// Anti-parallel-state resistance, ohms.
    pub r_antiparallel: f64,
    /// Switching voltage scale, mV.
    pub v_critical: f64,
    /// Thermal stability factor.
    pub delta: f64,
    /// Attempt time, ns.
    pub tau0: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            r_parallel: 2500.0,
            r_antiparallel: 7500.0,
            // uncalibrated; `calibrate` moves this to ~797 mV for the default pulse
            v_critical: 800.0,
            delta: 40.0,
            tau0: 1.0,
        }
    }
}

impl DeviceParams {
    /// Tunnelling magneto-resistance ratio, `(R_AP - R_P) / R_P`.
    pub fn tmr(&self) -> f64 {
        (self.r_antiparallel - self.r_parallel) / self.r_parallel
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_parallel > 0.0 && self.r_antiparallel > self.r_parallel) {
            return Err(Error::param(format!(
                "need r_antiparallel > r_parallel > 0, got {} and {}",
                self.r_antiparallel, self.r_parallel
            )));
        }
        if !(self.v_critical > 0.0 && self.v_critical.is_finite()) {
            return Err(Error::param(format!("v_critical must be positive, got {}", self.v_critical)));
        }
        if !(self.delta > 0.0 && self.tau0 > 0.0) {
            return Err(Error::param("delta and tau0 must be positive"));
        }
        Ok(())
    }
}

/// Pulse timing and read-out circuit of one generation cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    /// Reset pulse amplitude, mV (negative).
    pub v_reset: f64,
    /// Reset pulse width, us.
    pub w_reset: f64,
    /// Perturb pulse amplitude, mV.
    pub v_perturb: f64,
    /// Perturb pulse width, us.
    pub w_perturb: f64,
    /// Cycle length, us.
    pub cycle_period: f64,
    /// DAQ sample rate, samples/s.
    pub sample_rate: f64,
    /// Read offset voltage, mV.
    pub v_offset: f64,
    /// Series read resistor, ohms.
    pub r_series: f64,
    /// Binarisation threshold, ohms.
    pub r_threshold: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            v_reset: -900.0,
            w_reset: 1.0,
            v_perturb: 652.0,
            w_perturb: 1.0,
            cycle_period: 8.0,
            sample_rate: 2e6,
            v_offset: 50.0,
            r_series: 3000.0,
            r_threshold: 4000.0,
        }
    }
}

fn sample_count(duration_us: f64, rate: f64, what: &str) -> Result<usize> {
    let exact = duration_us * 1e-6 * rate;
    let rounded = exact.round();
    if (exact - rounded).abs() > 1e-9 * exact.max(1.0) || rounded < 0.0 {
        return Err(Error::param(format!(
            "{what} of {duration_us} us at {rate} samples/s is not a whole number of samples"
        )));
    }
    Ok(rounded as usize)
}

impl CycleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_reset > 0.0 && self.w_perturb > 0.0 && self.cycle_period > 0.0) {
            return Err(Error::param("pulse widths and cycle period must be positive"));
        }
        if self.w_reset + self.w_perturb >= self.cycle_period {
            return Err(Error::param(format!(
                "pulses ({} + {} us) leave no read window in a {} us cycle",
                self.w_reset, self.w_perturb, self.cycle_period
            )));
        }
        if !(self.sample_rate > 0.0 && self.v_offset > 0.0 && self.r_series > 0.0) {
            return Err(Error::param("sample_rate, v_offset and r_series must be positive"));
        }
        if self.r_threshold <= 0.0 {
            return Err(Error::param("r_threshold must be positive"));
        }
        let total = sample_count(self.cycle_period, self.sample_rate, "cycle period")?;
        let reset = sample_count(self.w_reset, self.sample_rate, "reset pulse")?;
        let perturb = sample_count(self.w_perturb, self.sample_rate, "perturb pulse")?;
        if reset + perturb >= total {
            return Err(Error::param("read window contains no samples"));
        }
        Ok(())
    }

    pub fn samples_per_cycle(&self) -> usize {
        (self.cycle_period * 1e-6 * self.sample_rate).round() as usize
    }

    /// Sample index ranges of the reset, perturb and read sequences.
    pub fn sequences(&self) -> [std::ops::Range<usize>; 3] {
        let reset = (self.w_reset * 1e-6 * self.sample_rate).round() as usize;
        let perturb = (self.w_perturb * 1e-6 * self.sample_rate).round() as usize;
        let total = self.samples_per_cycle();
        [0..reset, reset..reset + perturb, reset + perturb..total]
    }
}

/// Injected non-idealities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseModel {
    /// Standard deviation of additive noise on each read voltage, mV.
    pub read_noise_sd: f64,
    /// Amplitude of the sinusoidal drift of the perturb voltage, mV.
    pub drift_amplitude: f64,
    /// Drift period, in cycles.
    pub drift_period: f64,
    /// Probability that a bit is replaced by the previous output bit.
    pub markov_flip: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("read_noise_sd", self.read_noise_sd),
            ("drift_amplitude", self.drift_amplitude),
            ("drift_period", self.drift_period),
            ("markov_flip", self.markov_flip),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.markov_flip >= 1.0 {
            return Err(Error::param("markov_flip must be < 1"));
        }
        if self.drift_amplitude > 0.0 && self.drift_period <= 0.0 {
            return Err(Error::param("drift_period must be positive when drift is enabled"));
        }
        Ok(())
    }
}

/// Thermal-activation switching probability for a pulse of `v` mV lasting `t` us:
/// `1 - exp(-(t/tau0) * exp(-delta * (1 - v/v_critical)))`.
pub fn switching_probability(v: f64, t: f64, params: &DeviceParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::param(format!("pulse width must be positive, got {t}")));
    }
    Ok(switching_probability_unchecked(v, t, params))
}

fn switching_probability_unchecked(v: f64, t: f64, params: &DeviceParams) -> f64 {
    let attempts = t * 1000.0 / params.tau0;
    let rate = (-params.delta * (1.0 - v / params.v_critical)).exp();
    // -expm1(-x) keeps precision when the probability is tiny
    (-(-attempts * rate).exp_m1()).clamp(0.0, 1.0)
}

/// Adjusts `v_critical` so the configured perturb pulse switches with probability 1/2.
pub fn calibrate(params: &DeviceParams, config: &CycleConfig) -> Result<DeviceParams> {
    calibrate_to(params, config, 0.5)
}

/// Adjusts `v_critical` by bisection so that the configured perturb pulse
/// switches with probability `target`.
pub fn calibrate_to(params: &DeviceParams, config: &CycleConfig, target: f64) -> Result<DeviceParams> {
    params.validate()?;
    config.validate()?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param(format!("target probability must be in (0, 1), got {target}")));
    }
    let v = config.v_perturb;
    let t = config.w_perturb;
    let p_at = |vc: f64| {
        switching_probability_unchecked(v, t, &DeviceParams { v_critical: vc, ..*params })
    };
    // P_sw decreases in v_critical; bracket in log space
    let (mut lo, mut hi) = (1e-6_f64.ln(), 1e9_f64.ln());
    let (p_lo, p_hi) = (p_at(lo.exp()), p_at(hi.exp()));
    if !(p_lo >= target && p_hi <= target) {
        return Err(Error::Calibration(format!(
            "no v_critical in [1e-6, 1e9] mV gives P_sw = {target} for a {v} mV, {t} us pulse \
             (probability spans {p_hi:.3e}..{p_lo:.3e})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if p_at(mid.exp()) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let vc = (0.5 * (lo + hi)).exp();
    let p = p_at(vc);
    if (p - target).abs() > 1e-9 {
        return Err(Error::Calibration(format!(
            "bisection stalled at P_sw = {p} (target {target})"
        )));
    }
    Ok(DeviceParams { v_critical: vc, ..*params })
}

/// Junction resistance from the voltage across it in the read divider.
pub fn read_resistance(v_mtj: f64, v_offset: f64, r_series: f64) -> Result<f64> {
    if !(v_mtj > 0.0 && v_mtj < v_offset) {
        return Err(Error::param(format!(
            "junction voltage {v_mtj} mV outside (0, {v_offset}) mV"
        )));
    }
    Ok(v_mtj / (v_offset - v_mtj) * r_series)
}

/// Voltage across a junction of resistance `r_mtj` in the read divider.
pub fn mtj_voltage(r_mtj: f64, v_offset: f64, r_series: f64) -> Result<f64> {
    if !(r_mtj > 0.0) {
        return Err(Error::param(format!("resistance must be positive, got {r_mtj}")));
    }
    if r_mtj.is_infinite() {
        return Ok(v_offset);
    }
    Ok(v_offset * r_mtj / (r_mtj + r_series))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtjState {
    Parallel,
    AntiParallel,
}

impl MtjState {
    pub fn resistance(self, params: &DeviceParams) -> f64 {
        match self {
            MtjState::Parallel => params.r_parallel,
            MtjState::AntiParallel => params.r_antiparallel,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CycleOutput {
    /// Recorded DAQ voltages, mV.
    pub samples: Vec<f64>,
    /// Junction state after the perturb pulse.
    pub state: MtjState,
    /// Bit decided from the read window, before previous-bit replacement.
    pub read_bit: bool,
    /// Output bit.
    pub bit: bool,
}

/// Mean junction resistance over the read window.
pub fn read_window_resistance(samples: &[f64], config: &CycleConfig) -> f64 {
    let [_, _, read] = config.sequences();
    let window = &samples[read];
    // noisy samples can leave the divider's range; pin them just inside it
    let guard = 1e-9 * config.v_offset;
    let total: f64 = window
        .iter()
        .map(|&v| {
            let v = v.clamp(guard, config.v_offset - guard);
            v / (config.v_offset - v) * config.r_series
        })
        .sum();
    total / window.len() as f64
}

/// Thresholds the read-window resistance. Reset and perturb samples are ignored.
pub fn decide_bit(samples: &[f64], config: &CycleConfig) -> bool {
    read_window_resistance(samples, config) > config.r_threshold
}

/// Stateful generator: tracks the previous output bit and the drift phase.
#[derive(Debug, Clone)]
pub struct Generator {
    config: CycleConfig,
    params: DeviceParams,
    noise: NoiseModel,
    rng: ChaCha8Rng,
    read_noise: Option<Normal<f64>>,
    state: MtjState,
    prev_bit: Option<bool>,
    cycle: u64,
}

impl Generator {
    pub fn new(config: CycleConfig, params: DeviceParams, noise: NoiseModel, seed: u64) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        noise.validate()?;
        let read_noise = if noise.read_noise_sd > 0.0 {
            Some(Normal::new(0.0, noise.read_noise_sd).map_err(|e| Error::param(e.to_string()))?)
        } else {
            None
        };
        Ok(Generator {
            config,
            params,
            noise,
            rng: ChaCha8Rng::seed_from_u64(seed),
            read_noise,
            state: MtjState::Parallel,
            prev_bit: None,
            cycle: 0,
        })
    }

    pub fn state(&self) -> MtjState {
        self.state
    }

    /// Perturb voltage for the current cycle, including drift.
    pub fn effective_perturb_voltage(&self) -> f64 {
        let mut v = self.config.v_perturb;
        if self.noise.drift_amplitude > 0.0 {
            let phase = TAU * self.cycle as f64 / self.noise.drift_period;
            v += self.noise.drift_amplitude * phase.sin();
        }
        v
    }

    pub fn cycle(&mut self) -> CycleOutput {
        let v = self.effective_perturb_voltage();
        let p = switching_probability_unchecked(v, self.config.w_perturb, &self.params);
        self.cycle_with_probability(p)
    }

    /// Runs one cycle with an explicit switching probability.
    pub fn cycle_with_probability(&mut self, p_switch: f64) -> CycleOutput {
        let cfg = self.config;
        let [reset, perturb, read] = cfg.sequences();
        let mut samples = vec![0.0; cfg.samples_per_cycle()];

        self.state = MtjState::Parallel;
        samples[reset].fill(cfg.v_reset + cfg.v_offset);
        let v_perturb = self.effective_perturb_voltage();
        samples[perturb].fill(v_perturb + cfg.v_offset);
        if self.rng.random::<f64>() < p_switch {
            self.state = MtjState::AntiParallel;
        }

        let r = self.state.resistance(&self.params);
        let v_read = cfg.v_offset * r / (r + cfg.r_series);
        for s in &mut samples[read] {
            *s = v_read;
            if let Some(noise) = &self.read_noise {
                *s += noise.sample(&mut self.rng);
            }
        }

        let read_bit = decide_bit(&samples, &cfg);
        let mut bit = read_bit;
        if self.noise.markov_flip > 0.0 {
            let replace = self.rng.random::<f64>() < self.noise.markov_flip;
            if let (true, Some(prev)) = (replace, self.prev_bit) {
                bit = prev;
            }
        }
        self.prev_bit = Some(bit);
        self.cycle += 1;
        CycleOutput {
            samples,
            state: self.state,
            read_bit,
            bit,
        }
    }

    pub fn next_bit(&mut self) -> bool {
        self.cycle().bit
    }
}

/// Runs `n_bits` cycles from a fresh generator seeded with `rng_seed`.
pub fn generate_raw(
    n_bits: usize,
    config: &CycleConfig,
    params: &DeviceParams,
    noise: &NoiseModel,
    rng_seed: u64,
) -> Result<BitString> {
    if n_bits == 0 {
        return Err(Error::param("n_bits must be at least 1"));
    }
    let mut gen = Generator::new(*config, *params, *noise, rng_seed)?;
    let mut out = BitString::with_capacity(n_bits);
    for _ in 0..n_bits {
        out.push(gen.next_bit());
    }
    Ok(out)
}
