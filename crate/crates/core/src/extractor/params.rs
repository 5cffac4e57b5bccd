use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Security parameter held as an exact rational in (0, 1).
///
/// Decimal strings such as `1e-10` or `0.0000000001` are parsed without
/// rounding, as are powers of two written `2^-16`. Values built from an `f64`
/// take the float's exact binary value.
#[derive(Clone, PartialEq, Eq)]
pub struct Epsilon {
    num: BigUint,
    den: BigUint,
    text: String,
}

impl Epsilon {
    fn new(num: BigUint, den: BigUint, text: String) -> Result<Self> {
        if num == BigUint::ZERO || num >= den {
            return Err(Error::param(format!("epsilon {text} is outside (0, 1)")));
        }
        Ok(Epsilon { num, den, text })
    }

    pub fn from_f64(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::param(format!("epsilon {eps} is outside (0, 1)")));
        }
        let raw = eps.to_bits();
        let biased = ((raw >> 52) & 0x7ff) as i64;
        let fraction = raw & ((1u64 << 52) - 1);
        let (mantissa, exp) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1 << 52), biased - 1075)
        };
        // eps < 1 so exp < 0
        let den = BigUint::from(1u8) << (-exp) as u64;
        Self::new(BigUint::from(mantissa), den, format!("{eps:e}"))
    }

    /// `2^-bits`.
    pub fn pow2(bits: u32) -> Result<Self> {
        Self::new(BigUint::from(1u8), BigUint::from(1u8) << bits, format!("2^-{bits}"))
    }

    /// Approximate value, for display and logging only.
    pub fn to_f64(&self) -> f64 {
        2f64.powf(-self.log2_inverse())
    }

    /// `log2(1/eps)` in double precision.
    pub fn log2_inverse(&self) -> f64 {
        bits_log2(&self.den) - bits_log2(&self.num)
    }

    /// Exact `ceil(2 * log2(1/eps))`.
    pub fn ceil_twice_log2_inverse(&self) -> u64 {
        // 2 log2(1/eps) = log2(den^2 / num^2); find c with 2^(c-1) < den^2/num^2 <= 2^c
        let den2 = &self.den * &self.den;
        let num2 = &self.num * &self.num;
        let mut c = (2.0 * self.log2_inverse()).ceil().max(1.0) as u64;
        loop {
            if num2.clone() << c < den2 {
                c += 1;
            } else if c > 1 && num2.clone() << (c - 1) >= den2 {
                c -= 1;
            } else {
                return c;
            }
        }
    }
}

fn bits_log2(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        let v: u64 = x.try_into().expect("fits in u64");
        return (v as f64).log2();
    }
    // top 64 bits carry all the precision an f64 can hold
    let shift = bits - 64;
    let top: u64 = (x >> shift).try_into().expect("fits in u64");
    (top as f64).log2() + shift as f64
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim();
        let bad = || Error::param(format!("cannot parse epsilon {text:?}"));
        if let Some(exp) = text.strip_prefix("2^-") {
            let bits: u32 = exp.parse().map_err(|_| bad())?;
            let mut e = Self::pow2(bits)?;
            e.text = text.to_string();
            return Ok(e);
        }
        let (mantissa, exp10) = match text.find(['e', 'E']) {
            Some(i) => (&text[..i], text[i + 1..].parse::<i64>().map_err(|_| bad())?),
            None => (text, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut num = BigUint::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
        let scale = exp10 - frac_part.len() as i64;
        if scale.unsigned_abs() > 10_000 {
            return Err(bad());
        }
        let mut den = BigUint::from(1u8);
        if scale >= 0 {
            num *= BigUint::from(10u8).pow(scale as u32);
        } else {
            den = BigUint::from(10u8).pow((-scale) as u32);
        }
        Self::new(num, den, text.to_string())
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl fmt::Debug for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Epsilon({} = {}/{})", self.text, self.num, self.den)
    }
}

/// Output length permitted by the leftover hash lemma,
/// `floor(k - 2 log2(1/eps) + 2)`, evaluated exactly.
pub fn output_length(k: u64, epsilon: &Epsilon) -> Result<u64> {
    if k == 0 {
        return Err(Error::InsufficientEntropy("min-entropy bound k is 0".into()));
    }
    // k + 2 is an integer, so floor(k + 2 - t) = k + 2 - ceil(t)
    let penalty = epsilon.ceil_twice_log2_inverse();
    let m = i128::from(k) + 2 - i128::from(penalty);
    if m < 1 {
        return Err(Error::InsufficientEntropy(format!(
            "k = {k} bits cannot yield any output at epsilon = {epsilon} (needs k >= {})",
            penalty - 1
        )));
    }
    Ok(m as u64)
}

/// Sizing of one Toeplitz extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractorParams {
    /// Input length, bits.
    pub n: u64,
    /// Min-entropy lower bound of the input, bits.
    pub k: u64,
    pub epsilon: Epsilon,
    /// Output length, bits.
    pub m: u64,
    /// Seed length, `n + m - 1` bits.
    pub r: u64,
}

impl ExtractorParams {
    /// Largest output the lemma allows, capped at `k`.
    pub fn derive(n: u64, k: u64, epsilon: Epsilon) -> Result<Self> {
        let m = output_length(k, &epsilon)?.min(k);
        Self::with_output_length(n, k, epsilon, m)
    }

    /// Validates a requested output length against the lemma.
    pub fn with_output_length(n: u64, k: u64, epsilon: Epsilon, m: u64) -> Result<Self> {
        if k > n {
            return Err(Error::param(format!("min-entropy k = {k} exceeds input length n = {n}")));
        }
        if m == 0 {
            return Err(Error::param("output length must be at least 1"));
        }
        if m > k {
            return Err(Error::param(format!("output length m = {m} exceeds min-entropy k = {k}")));
        }
        let allowed = output_length(k, &epsilon)?;
        if m > allowed {
            return Err(Error::param(format!(
                "output length m = {m} exceeds the {allowed} bits allowed for k = {k}, epsilon = {epsilon}"
            )));
        }
        Ok(ExtractorParams { n, k, epsilon, m, r: n + m - 1 })
    }

    pub fn validate(&self) -> Result<()> {
        let again = Self::with_output_length(self.n, self.k, self.epsilon.clone(), self.m)?;
        if again.r != self.r {
            return Err(Error::param(format!("seed length r = {} is not n + m - 1 = {}", self.r, again.r)));
        }
        Ok(())
    }
}
