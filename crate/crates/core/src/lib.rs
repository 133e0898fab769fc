//! Allocation-only core of the sense-disambiguation probing harness.
//!
//! Everything here is pure computation over in-memory data: dense tensors and
//! a reverse-mode tape, byte-pair encoding, the synthetic parallel corpus,
//! the Transformer and bidirectional-RNN translation models, decoding and
//! BLEU, the sense probe, and self-attention statistics. File formats, the
//! command line and caching live in the `wsd-harness` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attention;
pub mod corpus;
pub mod data;
pub mod decode;
pub mod error;
pub mod math;
pub mod models;
pub mod numerics;
pub mod probe;
pub mod rng;
pub mod subword;

pub use error::{Error, Result};
