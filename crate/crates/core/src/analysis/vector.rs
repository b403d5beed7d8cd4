use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::codesign::check_vector_blocklength;
use super::scalar::{theta, Bound, PeModel};
use crate::channel::BecChannel;
use crate::error::{Error, Result};
use crate::model::{abs_matrix, induced_l1_norm, VectorPlant};
use crate::quantizer::{BitAllocation, VectorScheme};

/// Per-mode stability of the vector scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeStability {
    /// `p_e + (1 - p_e) 2^-r_i` for each mode.
    pub theta: Vec<f64>,
    /// `theta_i |J_ii|`, where `J_ii = lambda_i^T`.
    pub growth: Vec<f64>,
    pub stable: bool,
}

fn mode_stability(scheme: &VectorScheme, p_e: f64) -> ModeStability {
    let j = scheme.jordan().j();
    let theta: Vec<f64> = scheme.alloc().bits().iter().map(|&r| theta(p_e, r)).collect();
    let growth: Vec<f64> = theta.iter().enumerate().map(|(i, th)| th * j[(i, i)].abs()).collect();
    let stable = growth.iter().all(|&g| g < 1.0);
    ModeStability { theta, growth, stable }
}

pub fn vector_stability(plant: &VectorPlant, alloc: &BitAllocation, p_e: f64) -> Result<ModeStability> {
    let scheme = VectorScheme::new(plant, alloc.clone(), 0)?;
    Ok(mode_stability(&scheme, p_e))
}

fn fixed_point(scheme: &VectorScheme, p_e: f64) -> Result<Bound<DVector<f64>>> {
    let report = mode_stability(scheme, p_e);
    if !report.stable {
        return Ok(Bound::Unbounded);
    }
    let n = report.theta.len();
    let m = DMatrix::from_diagonal(&DVector::from_vec(report.theta));
    let lhs = DMatrix::identity(n, n) - &m * abs_matrix(scheme.jordan().j());
    let rhs = &m * scheme.noise_width();
    let delta = lhs.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(Bound::Finite(delta))
}

/// Steady state of the per-mode mean-width recursion in Jordan coordinates.
pub fn vector_fixed_point(
    plant: &VectorPlant,
    alloc: &BitAllocation,
    p_e: f64,
) -> Result<Bound<DVector<f64>>> {
    fixed_point(&VectorScheme::new(plant, alloc.clone(), 0)?, p_e)
}

/// Bound on the limiting expected l1 error when estimates are `d` steps old.
pub fn vector_steady_state_bound(
    plant: &VectorPlant,
    alloc: &BitAllocation,
    p_e: f64,
    d: u32,
) -> Result<Bound> {
    let scheme = VectorScheme::new(plant, alloc.clone(), d)?;
    let delta = match fixed_point(&scheme, p_e)? {
        Bound::Finite(delta) => delta,
        Bound::Unbounded => return Ok(Bound::Unbounded),
    };
    let mut noise = 0.0;
    let mut a_m = DMatrix::identity(plant.dim(), plant.dim());
    for _ in 0..d {
        noise += induced_l1_norm(&a_m);
        a_m = &a_m * plant.a_mat();
    }
    let w_total = plant.w_max().sum();
    Ok(Bound::Finite(
        0.5 * induced_l1_norm(scheme.estimate_map()) * delta.sum() + noise * w_total / 2.0,
    ))
}

/// Vector bound with an `(n, r)` code carrying all `alloc.total()` bits at latency `n`.
pub fn vector_steady_state_bound_coded(
    n: usize,
    plant: &VectorPlant,
    alloc: &BitAllocation,
    channel: &BecChannel,
    pe_model: &PeModel,
) -> Result<Bound> {
    check_vector_blocklength(n, alloc, plant)?;
    let p_e = pe_model.error_prob(n, alloc.total() as usize, channel)?;
    vector_steady_state_bound(plant, alloc, p_e, n as u32)
}
