//! Simulation, min-entropy assessment, Toeplitz extraction and statistical
//! testing for a spintronic true random number generator.

pub mod bitcore;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod extractor;
pub mod mtj_sim;
pub mod stattests;

pub use error::{Error, Result};

// Guide chapters, compiled so their examples run as doc-tests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bits.md")]
    mod bits {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/min_entropy.md")]
    mod min_entropy {}
    #[doc = include_str!("../../../book/src/extraction.md")]
    mod extraction {}
    #[doc = include_str!("../../../book/src/testing.md")]
    mod testing {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
