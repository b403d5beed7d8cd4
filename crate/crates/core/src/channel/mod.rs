//! The communication block: erasure channel, random linear codes with erasure
//! decoding, and finite-blocklength reliability curves.

mod bec;
mod code;
mod error_prob;
mod normal;

pub use bec::{transmit, BecChannel, ErasedWord};
pub use code::{decode_erasures, random_code, DecodeResult, Gf2Code, MAX_CODE_DIMENSION};
pub use error_prob::{
    code_error_prob, ensemble_error_prob, full_rank_probability, simulate_code_failures,
    uncoded_error_prob, ErrorProbMode, FailureCount, EXACT_MAX_N, EXACT_MAX_R,
};
pub use normal::{normal_approx_blocklength, normal_approx_pe, q_func, q_inv};
