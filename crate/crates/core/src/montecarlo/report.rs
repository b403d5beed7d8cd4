use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::config::{CodeMode, CommMode, PlantSpec, SimConfig};
use super::trial::TrialTrace;
use crate::analysis::{single_shot_bound, steady_state_bound, theta, vector_steady_state_bound, Bound};
use crate::channel::{ensemble_error_prob, uncoded_error_prob, BecChannel};
use crate::error::{Error, Result};
use crate::model::{abs_matrix, geometric_sum};
use crate::quantizer::VectorScheme;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub trials: usize,
    pub rounds: usize,
    pub burn_in: usize,
    pub mean_error: Vec<f64>,
    pub error_se: Vec<f64>,
    pub mean_width: Vec<f64>,
    pub width_se: Vec<f64>,
    /// Mean-width recursion from the same initial set, when failures are i.i.d. per round.
    pub expected_width: Option<Vec<f64>>,
    pub failure_rate: f64,
    /// Per-message failure probability implied by the configuration, if known.
    pub configured_pe: Option<f64>,
    /// Mean over trials of each trial's post-burn-in average error.
    pub steady_state_error: f64,
    pub steady_state_se: f64,
    pub steady_state_bound: Option<Bound>,
    /// Round-0 bound for scalar plants.
    pub single_shot_bound: Option<f64>,
    pub containment_violations: u64,
    /// Per-round half-width violations, plus one if the steady-state mean exceeds its bound.
    pub bound_violations: u64,
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Failure probability of one message when rounds fail independently.
fn configured_pe(cfg: &SimConfig) -> Result<Option<f64>> {
    let channel = BecChannel::new(cfg.zeta)?;
    let r = cfg.plant.r();
    Ok(match &cfg.comm {
        CommMode::Abstract { p_e, .. } => Some(*p_e),
        CommMode::Uncoded => Some(uncoded_error_prob(&channel, r)),
        CommMode::Coded { n, code: CodeMode::Fresh } => Some(ensemble_error_prob(r as usize, *n, &channel)?),
        CommMode::Coded { .. } => None,
    })
}

fn expected_widths(cfg: &SimConfig, p_e: f64) -> Result<Vec<f64>> {
    let rounds = cfg.rounds;
    match &cfg.plant {
        PlantSpec::Scalar { plant, r } => {
            let th = theta(p_e, *r);
            let gt = geometric_sum(plant.a(), plant.t_samp()) * plant.w_max();
            let mut width = th * plant.x0_width();
            let mut out = Vec::with_capacity(rounds);
            for _ in 0..rounds {
                out.push(width);
                width = th * (plant.a_pow_t() * width + gt);
            }
            Ok(out)
        }
        PlantSpec::Vector { plant, alloc } => {
            let scheme = VectorScheme::new(plant, alloc.clone(), 0)?;
            let m = DMatrix::from_diagonal(&DVector::from_iterator(
                alloc.dim(),
                alloc.bits().iter().map(|&r| theta(p_e, r)),
            ));
            let j = abs_matrix(scheme.jordan().j());
            let mut width = &m * scheme.initial_box().widths();
            let mut out = Vec::with_capacity(rounds);
            for _ in 0..rounds {
                out.push(width.sum());
                width = &m * (&j * &width + scheme.noise_width());
            }
            Ok(out)
        }
    }
}

/// Per-round means across trials (in trial order) and the analytic references.
pub fn aggregate(cfg: &SimConfig, traces: &[TrialTrace]) -> Result<SimReport> {
    let trials = traces.len();
    if trials == 0 {
        return Err(Error::invalid("traces", "nothing to aggregate"));
    }
    let rounds = traces[0].errors.len();
    if traces.iter().any(|t| t.errors.len() != rounds || t.widths.len() != rounds) {
        return Err(Error::invalid("traces", "traces have different lengths"));
    }
    let burn_in = cfg.burn_in().min(rounds.saturating_sub(1));

    let mut mean_error = Vec::with_capacity(rounds);
    let mut error_se = Vec::with_capacity(rounds);
    let mut mean_width = Vec::with_capacity(rounds);
    let mut width_se = Vec::with_capacity(rounds);
    for l in 0..rounds {
        let (m, se) = mean_and_se(traces.iter().map(|t| t.errors[l]), trials);
        mean_error.push(m);
        error_se.push(se);
        let (m, se) = mean_and_se(traces.iter().map(|t| t.widths[l]), trials);
        mean_width.push(m);
        width_se.push(se);
    }
    let tail = (rounds - burn_in) as f64;
    let per_trial: Vec<f64> =
        traces.iter().map(|t| t.errors[burn_in..].iter().sum::<f64>() / tail).collect();
    let (steady_state_error, steady_state_se) = mean_and_se(per_trial.iter().copied(), trials);

    let failures: usize = traces.iter().map(|t| t.delivered.iter().filter(|&&ok| !ok).count()).sum();
    let failure_rate = failures as f64 / (trials * rounds) as f64;

    let configured_pe = configured_pe(cfg)?;
    let d = cfg.latency();
    let (steady_state_bound, single_shot, expected_width) = match configured_pe {
        Some(p_e) => {
            let (steady, single) = match &cfg.plant {
                PlantSpec::Scalar { plant, r } => {
                    (steady_state_bound(p_e, *r, d, plant), Some(single_shot_bound(p_e, *r, d, plant)))
                }
                PlantSpec::Vector { plant, alloc } => {
                    (vector_steady_state_bound(plant, alloc, p_e, d)?, None)
                }
            };
            (Some(steady), single, Some(expected_widths(cfg, p_e)?))
        }
        None => (None, None, None),
    };

    let mut bound_violations: u64 = traces.iter().map(|t| t.bound_violations).sum();
    if let Some(Bound::Finite(b)) = steady_state_bound {
        if steady_state_error > b {
            bound_violations += 1;
        }
    }

    Ok(SimReport {
        trials,
        rounds,
        burn_in,
        mean_error,
        error_se,
        mean_width,
        width_se,
        expected_width,
        failure_rate,
        configured_pe,
        steady_state_error,
        steady_state_se,
        steady_state_bound,
        single_shot_bound: single_shot,
        containment_violations: traces.iter().map(|t| t.containment_violations).sum(),
        bound_violations,
    })
}
