//! Plants, timing and the linear algebra shared by the rest of the crate.

mod jordan;
mod linalg;
mod plant;

pub use jordan::{jordan_decompose, JordanForm};
pub use linalg::{abs_matrix, induced_l1_norm, inf_norm, mat_pow};
pub use plant::{
    geometric_sum, propagate_interval, step_state, CommAbstraction, ScalarPlant, VectorPlant,
};
