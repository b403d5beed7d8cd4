//! Stability tests, error bounds and blocklength co-design.

mod codesign;
mod scalar;
mod vector;

pub use codesign::{
    default_n_range, heuristic_blocklength, optimize_blocklength, optimize_blocklength_vector,
    CodesignResult,
};
pub use scalar::{
    single_shot_bound, stability_check, steady_state_bound, steady_state_bound_coded,
    steady_state_width, theta, Bound, PeModel, StabilityReport,
};
pub use vector::{
    vector_fixed_point, vector_stability, vector_steady_state_bound,
    vector_steady_state_bound_coded, ModeStability,
};
