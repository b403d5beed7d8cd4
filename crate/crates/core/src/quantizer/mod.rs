//! Sequential uniform quantization of a shared uncertainty set.
//!
//! Sensor and estimator both hold the same set (an interval for scalar
//! plants, a box in Jordan coordinates for vector plants). Each round the
//! sensor reports which of the `2^r` uniform bins contains the sample; the
//! estimator either learns that bin or, on a decoding failure, keeps the whole
//! set. The acknowledgement lets the sensor mirror the estimator exactly, and
//! both sides then push the set forward one sampling period under worst-case
//! noise.

mod scalar;
mod vector;

pub use scalar::{
    estimator_update, quantize, reconstruct, Interval, ScalarEstimator, ScalarSensor,
    ScalarUpdate,
};
pub use vector::{
    pack_bins, unpack_bins, vector_sensor_round, BitAllocation, Hyperbox, VectorEstimator,
    VectorScheme, VectorSensor, VectorUpdate,
};

use serde::{Deserialize, Serialize};

/// What the estimator learns about one transmitted message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome<B> {
    Success(B),
    Failure,
}

impl<B> Outcome<B> {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success(_))
    }
}

/// Largest number of bits a single quantized message may carry.
pub const MAX_MESSAGE_BITS: u32 = 63;
