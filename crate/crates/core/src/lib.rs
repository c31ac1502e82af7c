//! Digital over-the-air computation with channel-aware constellations.
//!
//! Nodes map their inputs to points of a shared two-dimensional alphabet and
//! transmit simultaneously. A computation point (CP) observes the superposed
//! signal, builds the combined constellation that every input combination
//! would produce under its channel estimates, and decodes the function value
//! of the nearest combined point.
//!
//! - [`constellation`]: transmit grid and modulation alphabet.
//! - [`channel`]: large-scale fading, correlated Rayleigh draws, pilots and MMSE estimation.
//! - [`airlink`]: transmit policies, superposition and receiver gain.
//! - [`demod`]: functions, combined constellations, minimum distance and decoding.
//! - [`cellfree`]: multi-CP aggregation and voting.
//! - [`harness`]: configuration, deterministic trials, NMSE campaigns and CSV output.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airlink;
pub mod cellfree;
pub mod channel;
pub mod constellation;
pub mod demod;
pub mod error;
pub mod harness;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/constellation.md")]
    mod constellation {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/airlink.md")]
    mod airlink {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/cell-free.md")]
    mod cell_free {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
