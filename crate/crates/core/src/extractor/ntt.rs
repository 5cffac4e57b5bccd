//! Number-theoretic transform over the prime field `p = 2^64 - 2^32 + 1`.
//!
//! The field has two-adicity 32, so power-of-two transforms up to length
//! 2^32 exist, and every convolution of 0/1 vectors shorter than `p` is
//! recovered exactly.

/// The field modulus.
pub const P: u64 = 0xffff_ffff_0000_0001;

/// `2^64 mod p`.
const EPS: u64 = 0xffff_ffff;

/// Generator of the multiplicative group.
const GENERATOR: u64 = 7;

/// Largest supported transform length, log2.
pub const MAX_LOG_LEN: u32 = 32;

#[inline(always)]
pub fn add(a: u64, b: u64) -> u64 {
    let (s, carry) = a.overflowing_add(b);
    if carry || s >= P {
        s.wrapping_sub(P)
    } else {
        s
    }
}

#[inline(always)]
pub fn sub(a: u64, b: u64) -> u64 {
    let (d, borrow) = a.overflowing_sub(b);
    if borrow {
        d.wrapping_add(P)
    } else {
        d
    }
}

/// Reduces a 128-bit value using `2^64 = 2^32 - 1` and `2^96 = -1 (mod p)`.
#[inline(always)]
pub fn reduce128(x: u128) -> u64 {
    let lo = x as u64;
    let hi = (x >> 64) as u64;
    let hi_hi = hi >> 32;
    let hi_lo = hi & EPS;

    let (mut t0, borrow) = lo.overflowing_sub(hi_hi);
    if borrow {
        t0 = t0.wrapping_sub(EPS);
    }
    let t1 = hi_lo * EPS;
    let (mut res, carry) = t0.overflowing_add(t1);
    if carry {
        res = res.wrapping_add(EPS);
    }
    if res >= P {
        res - P
    } else {
        res
    }
}

#[inline(always)]
pub fn mul(a: u64, b: u64) -> u64 {
    reduce128(u128::from(a) * u128::from(b))
}

pub fn pow(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        exp >>= 1;
    }
    acc
}

pub fn inv(a: u64) -> u64 {
    assert!(a != 0, "zero has no inverse");
    pow(a, P - 2)
}

/// Primitive `2^log_len`-th root of unity.
pub fn root_of_unity(log_len: u32) -> u64 {
    assert!(log_len <= MAX_LOG_LEN, "transform length 2^{log_len} too large");
    pow(GENERATOR, (P - 1) >> log_len)
}

/// Blocks at or below this length are transformed stage by stage in cache.
const LEAF_LEN: usize = 1 << 13;

/// Root powers for every stage of a length-`len` transform. The stage of
/// butterfly span `size` reads `w_size^k`, `k < size/2`, from `[size/2, size)`.
pub struct Twiddles {
    forward: Vec<u64>,
    inverse: Vec<u64>,
}

impl Twiddles {
    pub fn new(len: usize) -> Self {
        assert!(len.is_power_of_two(), "length {len} is not a power of two");
        let mut forward = vec![0u64; len.max(2)];
        let mut inverse = vec![0u64; len.max(2)];
        let mut half = 1;
        while half < len {
            let w = root_of_unity((2 * half).trailing_zeros());
            let wi = inv(w);
            let (mut t, mut ti) = (1, 1);
            for k in 0..half {
                forward[half + k] = t;
                inverse[half + k] = ti;
                t = mul(t, w);
                ti = mul(ti, wi);
            }
            half *= 2;
        }
        Twiddles { forward, inverse }
    }
}

#[inline(always)]
fn dif_stage(block: &mut [u64], tw: &[u64]) {
    let half = block.len() / 2;
    let (lo, hi) = block.split_at_mut(half);
    for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&tw[half..2 * half]) {
        let u = *x;
        let v = *y;
        *x = add(u, v);
        *y = mul(sub(u, v), w);
    }
}

#[inline(always)]
fn dit_stage(block: &mut [u64], tw: &[u64]) {
    let half = block.len() / 2;
    let (lo, hi) = block.split_at_mut(half);
    for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&tw[half..2 * half]) {
        let u = *x;
        let v = mul(*y, w);
        *x = add(u, v);
        *y = sub(u, v);
    }
}

// Depth first, so that once a block fits in cache all its remaining stages
// run there.
fn dif(a: &mut [u64], tw: &[u64]) {
    let len = a.len();
    if len <= LEAF_LEN {
        let mut size = len;
        while size >= 2 {
            for block in a.chunks_exact_mut(size) {
                dif_stage(block, tw);
            }
            size /= 2;
        }
        return;
    }
    dif_stage(a, tw);
    let (lo, hi) = a.split_at_mut(len / 2);
    dif(lo, tw);
    dif(hi, tw);
}

fn dit(a: &mut [u64], tw: &[u64]) {
    let len = a.len();
    if len <= LEAF_LEN {
        let mut size = 2;
        while size <= len {
            for block in a.chunks_exact_mut(size) {
                dit_stage(block, tw);
            }
            size *= 2;
        }
        return;
    }
    let (lo, hi) = a.split_at_mut(len / 2);
    dit(lo, tw);
    dit(hi, tw);
    dit_stage(a, tw);
}

/// Decimation-in-frequency transform. Natural-order input, bit-reversed output.
pub fn forward(a: &mut [u64]) {
    forward_with(a, &Twiddles::new(a.len()));
}

pub fn forward_with(a: &mut [u64], tw: &Twiddles) {
    assert!(a.len().is_power_of_two(), "length {} is not a power of two", a.len());
    assert!(tw.forward.len() >= a.len(), "twiddle table too short");
    dif(a, &tw.forward);
}

/// Decimation-in-time inverse transform, including the `1/len` scale.
/// Bit-reversed input, natural-order output.
pub fn inverse(a: &mut [u64]) {
    inverse_unscaled(a, &Twiddles::new(a.len()));
    let scale = inv(a.len() as u64 % P);
    for x in a.iter_mut() {
        *x = mul(*x, scale);
    }
}

/// [`inverse`] without the final `1/len` scale.
pub fn inverse_unscaled(a: &mut [u64], tw: &Twiddles) {
    assert!(a.len().is_power_of_two(), "length {} is not a power of two", a.len());
    assert!(tw.inverse.len() >= a.len(), "twiddle table too short");
    dit(a, &tw.inverse);
}

/// Cyclic convolution of two equal-length power-of-two vectors, in place in `a`.
pub fn cyclic_convolve(a: &mut [u64], b: &mut [u64]) {
    assert_eq!(a.len(), b.len());
    let tw = Twiddles::new(a.len());
    forward_with(a, &tw);
    forward_with(b, &tw);
    // fold the inverse scale into the pointwise product
    let scale = inv(a.len() as u64 % P);
    for (x, &y) in a.iter_mut().zip(b.iter()) {
        *x = mul(mul(*x, y), scale);
    }
    inverse_unscaled(a, &tw);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn roots_have_exact_order() {
        for k in [1, 2, 10, 24, 32] {
            let w = root_of_unity(k);
            assert_eq!(pow(w, 1 << k), 1);
            assert_ne!(pow(w, 1 << (k - 1)), 1);
        }
    }

    #[test]
    fn round_trip() {
        let orig: Vec<u64> = (0..1024u64).map(|i| i * i % 97).collect();
        let mut a = orig.clone();
        forward(&mut a);
        inverse(&mut a);
        assert_eq!(a, orig);
    }

    #[test]
    fn blocked_transform_round_trips_past_leaf_size() {
        let len = 4 * LEAF_LEN;
        let orig: Vec<u64> = (0..len as u64).map(|i| i.wrapping_mul(0x9e37_79b9_7f4a_7c15) % P).collect();
        let mut a = orig.clone();
        forward(&mut a);
        // the DC term lands first in bit-reversed order too
        let sum = orig.iter().fold(0, |acc, &x| add(acc, x));
        assert_eq!(a[0], sum);
        inverse(&mut a);
        assert_eq!(a, orig);
    }

    #[test]
    fn convolution_matches_schoolbook() {
        let n = 64;
        let x: Vec<u64> = (0..n as u64).map(|i| (i * 31 + 7) % 5).collect();
        let y: Vec<u64> = (0..n as u64).map(|i| (i * 17 + 3) % 7).collect();
        let mut expected = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                expected[(i + j) % n] += x[i] * y[j];
            }
        }
        let (mut a, mut b) = (x, y);
        cyclic_convolve(&mut a, &mut b);
        assert_eq!(a, expected);
    }

    proptest! {
        #[test]
        fn reduction_agrees_with_u128_remainder(a in any::<u128>()) {
            prop_assert_eq!(u128::from(reduce128(a)), a % u128::from(P));
        }

        #[test]
        fn field_ops_agree(a in 0..P, b in 0..P) {
            let p = u128::from(P);
            prop_assert_eq!(u128::from(add(a, b)), (u128::from(a) + u128::from(b)) % p);
            prop_assert_eq!(u128::from(sub(a, b)), (u128::from(a) + p - u128::from(b)) % p);
            prop_assert_eq!(u128::from(mul(a, b)), u128::from(a) * u128::from(b) % p);
        }
    }
}
