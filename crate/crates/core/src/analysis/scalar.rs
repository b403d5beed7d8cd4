use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::{
    ensemble_error_prob, normal_approx_pe, simulate_code_failures, BecChannel,
};
use crate::error::{Error, Result};
use crate::model::{geometric_sum, ScalarPlant};

/// A steady-state quantity that is either finite or diverges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound<T = f64> {
    Finite(T),
    Unbounded,
}

impl<T> Bound<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Bound::Finite(_))
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }

    pub fn as_ref(&self) -> Bound<&T> {
        match self {
            Bound::Finite(v) => Bound::Finite(v),
            Bound::Unbounded => Bound::Unbounded,
        }
    }
}

impl Bound<f64> {
    /// Finite value, or `+inf` when unbounded.
    pub fn value(&self) -> f64 {
        match *self {
            Bound::Finite(v) => v,
            Bound::Unbounded => f64::INFINITY,
        }
    }
}

/// Per-round contraction factor of the expected uncertainty width:
/// a failed round keeps the width, a delivered one divides it by `2^r`.
pub fn theta(p_e: f64, r: u32) -> f64 {
    p_e + (1.0 - p_e) * (-(r as f64)).exp2()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub theta: f64,
    /// `theta * a^T`.
    pub growth: f64,
    pub stable: bool,
}

pub fn stability_check(p_e: f64, r: u32, plant: &ScalarPlant) -> StabilityReport {
    let theta = theta(p_e, r);
    let growth = theta * plant.a_pow_t();
    StabilityReport { theta, growth, stable: growth < 1.0 }
}

/// Worst-case error at time `d` after the first sample, on average over decoding outcomes.
pub fn single_shot_bound(p_e: f64, r: u32, d: u32, plant: &ScalarPlant) -> f64 {
    let a = plant.a();
    0.5 * (a.powi(d as i32) * theta(p_e, r) * plant.x0_width()
        + geometric_sum(a, d) * plant.w_max())
}

/// Limit `theta g_T W / (1 - theta a^T)` of the mean-width recursion at sample times.
pub fn steady_state_width(p_e: f64, r: u32, plant: &ScalarPlant) -> Bound {
    let report = stability_check(p_e, r, plant);
    if !report.stable {
        return Bound::Unbounded;
    }
    let t = plant.t_samp();
    Bound::Finite(
        report.theta * geometric_sum(plant.a(), t) * plant.w_max() / (1.0 - report.growth),
    )
}

/// Bound on the limiting expected error when estimates are `d` steps old.
pub fn steady_state_bound(p_e: f64, r: u32, d: u32, plant: &ScalarPlant) -> Bound {
    match steady_state_width(p_e, r, plant) {
        Bound::Finite(width) => {
            let a = plant.a();
            Bound::Finite(0.5 * (a.powi(d as i32) * width + geometric_sum(a, d) * plant.w_max()))
        }
        Bound::Unbounded => Bound::Unbounded,
    }
}

/// Source of the decoding-failure probability `p_e(n)` for `r` information bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeModel {
    /// `Q(sqrt(n / V) (C - r/n))`.
    NormalApprox,
    /// Exact failure probability of the random linear code ensemble.
    RandomCodeEnsemble,
    /// Tabulated values, e.g. from simulating a concrete code family.
    Curve(BTreeMap<usize, f64>),
}

impl PeModel {
    /// Monte Carlo curve of random-code failure rates for every `n` in `ns`.
    pub fn simulated_curve(
        r: usize,
        ns: impl IntoIterator<Item = usize>,
        channel: &BecChannel,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let curve = ns
            .into_iter()
            .map(|n| {
                let count = simulate_code_failures(r, n, channel, trials, seed ^ n as u64)?;
                Ok((n, count.rate()))
            })
            .collect::<Result<_>>()?;
        Ok(PeModel::Curve(curve))
    }

    pub fn error_prob(&self, n: usize, r: usize, channel: &BecChannel) -> Result<f64> {
        match self {
            PeModel::NormalApprox => normal_approx_pe(n, r, channel),
            PeModel::RandomCodeEnsemble => ensemble_error_prob(r, n, channel),
            PeModel::Curve(curve) => curve.get(&n).copied().ok_or_else(|| {
                Error::invalid("pe_model", format!("curve has no entry for n = {n}"))
            }),
        }
    }
}

pub(crate) fn check_blocklength(n: usize, r: usize, t_samp: u32) -> Result<()> {
    if r == 0 || n < r || n > t_samp as usize {
        return Err(Error::invalid(
            "n",
            format!("blocklength {n} must satisfy r = {r} <= n <= T = {t_samp}"),
        ));
    }
    Ok(())
}

/// Steady-state bound with an `(n, r)` code: latency `d = n`, failure rate from `pe_model`.
pub fn steady_state_bound_coded(
    n: usize,
    r: u32,
    plant: &ScalarPlant,
    channel: &BecChannel,
    pe_model: &PeModel,
) -> Result<Bound> {
    check_blocklength(n, r as usize, plant.t_samp())?;
    let p_e = pe_model.error_prob(n, r as usize, channel)?;
    Ok(steady_state_bound(p_e, r, n as u32, plant))
}
