//! Remote state estimation over a communication block characterized by its
//! message size, latency and reliability.
//!
//! The crate covers the plant model and its Jordan-coordinate support
//! ([`model`]), the sequential quantizer shared by sensor and estimator
//! ([`quantizer`]), binary erasure channels with random linear codes and
//! finite-blocklength curves ([`channel`]), closed-form stability tests,
//! error bounds and blocklength co-design ([`analysis`]), and an end-to-end
//! Monte Carlo harness ([`montecarlo`]).

pub mod analysis;
pub mod channel;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod quantizer;

pub use error::{Error, Result};
