//! Bit strings, finite distributions, and the two information measures the
//! rest of the crate is built on: statistical distance and min-entropy.

mod bits;
mod dist;

pub use bits::{xor, BitString, Iter};
pub use dist::{min_entropy, statistical_distance, Distribution, MASS_TOLERANCE};
