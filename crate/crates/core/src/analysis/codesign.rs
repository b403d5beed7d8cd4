use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scalar::{check_blocklength, steady_state_bound_coded, Bound, PeModel};
use super::vector::vector_steady_state_bound_coded;
use crate::channel::BecChannel;
use crate::error::{Error, Result};
use crate::model::{ScalarPlant, VectorPlant};
use crate::quantizer::BitAllocation;

/// Outcome of a blocklength scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodesignResult {
    pub n_star: usize,
    /// Bound at every scanned `n`, in increasing order of `n`.
    pub curve: Vec<(usize, Bound)>,
    /// Approximate optimum from the small-growth heuristic, when it applies.
    pub n_heuristic: Option<usize>,
    /// Smallest and largest scanned `n` with a finite bound.
    pub feasible_range: (usize, usize),
}

impl CodesignResult {
    pub fn error_at(&self, n: usize) -> Option<&Bound> {
        let first = self.curve.first()?.0;
        self.curve.get(n.checked_sub(first)?).map(|(_, b)| b)
    }

    pub fn best(&self) -> f64 {
        self.error_at(self.n_star).map_or(f64::INFINITY, Bound::value)
    }
}

/// `[n_min, T]` where `n_min` is the shortest code with rate below capacity.
pub fn default_n_range(r: usize, channel: &BecChannel, t_samp: u32) -> Result<RangeInclusive<usize>> {
    let capacity = channel.capacity();
    if capacity <= 0.0 {
        return Err(Error::RateAboveCapacity { rate: f64::INFINITY, capacity });
    }
    let below = |n: usize| (r as f64 / n as f64) < capacity;
    let mut lo = ((r as f64 / capacity).floor() as usize + 1).max(r.max(1));
    while lo > r.max(1) && below(lo - 1) {
        lo -= 1;
    }
    while !below(lo) {
        lo += 1;
    }
    let hi = t_samp as usize;
    if lo > hi {
        return Err(Error::AllUnbounded { n_min: lo, n_max: hi });
    }
    Ok(lo..=hi)
}

fn scan(
    range: RangeInclusive<usize>,
    bound_at: impl Fn(usize) -> Result<Bound> + Sync,
) -> Result<(usize, Vec<(usize, Bound)>, (usize, usize))> {
    let (n_min, n_max) = (*range.start(), *range.end());
    let curve = range
        .into_par_iter()
        .map(|n| match bound_at(n) {
            Ok(b) => Ok((n, b)),
            Err(Error::RateAboveCapacity { .. }) => Ok((n, Bound::Unbounded)),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let finite: Vec<(usize, f64)> =
        curve.iter().filter_map(|(n, b)| b.as_ref().finite().map(|v| (*n, *v))).collect();
    let (Some(first), Some(last)) = (finite.first(), finite.last()) else {
        return Err(Error::AllUnbounded { n_min, n_max });
    };
    let feasible = (first.0, last.0);
    let mut best = *first;
    for &(n, v) in &finite[1..] {
        if v < best.1 {
            best = (n, v);
        }
    }
    Ok((best.0, curve, feasible))
}

fn check_range(range: &RangeInclusive<usize>, r: usize, t_samp: u32) -> Result<()> {
    if range.is_empty() {
        return Err(Error::invalid("n_range", "empty range"));
    }
    check_blocklength(*range.start(), r, t_samp)?;
    check_blocklength(*range.end(), r, t_samp)
}

/// Exhaustive search for the blocklength minimizing the steady-state bound.
/// Ties go to the shorter code; `n` with rate above capacity count as unbounded.
pub fn optimize_blocklength(
    r: u32,
    plant: &ScalarPlant,
    channel: &BecChannel,
    pe_model: &PeModel,
    n_range: Option<RangeInclusive<usize>>,
) -> Result<CodesignResult> {
    let range = match n_range {
        Some(range) => range,
        None => default_n_range(r as usize, channel, plant.t_samp())?,
    };
    check_range(&range, r as usize, plant.t_samp())?;
    let (n_star, curve, feasible_range) =
        scan(range, |n| steady_state_bound_coded(n, r, plant, channel, pe_model))?;
    let n_heuristic = heuristic_blocklength(r, plant, channel, None).ok();
    Ok(CodesignResult { n_star, curve, n_heuristic, feasible_range })
}

pub(crate) fn check_vector_blocklength(n: usize, alloc: &BitAllocation, plant: &VectorPlant) -> Result<()> {
    check_blocklength(n, alloc.total() as usize, plant.t_samp())
}

/// Vector counterpart of [`optimize_blocklength`]; one code carries every mode's bits.
pub fn optimize_blocklength_vector(
    plant: &VectorPlant,
    alloc: &BitAllocation,
    channel: &BecChannel,
    pe_model: &PeModel,
    n_range: Option<RangeInclusive<usize>>,
) -> Result<CodesignResult> {
    let r = alloc.total() as usize;
    let range = match n_range {
        Some(range) => range,
        None => default_n_range(r, channel, plant.t_samp())?,
    };
    check_range(&range, r, plant.t_samp())?;
    let (n_star, curve, feasible_range) =
        scan(range, |n| vector_steady_state_bound_coded(n, plant, alloc, channel, pe_model))?;
    Ok(CodesignResult { n_star, curve, n_heuristic: None, feasible_range })
}

fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // Caller guarantees f(lo) > 0 >= f(hi).
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Approximate optimal blocklength for `a` slightly above 1.
///
/// Solves `phi(x) / x = [2 + (a-1) T + (C - R)^2 T / (2V)]^-1` with
/// `x = sqrt(n / V) (C - R)`. With `r_fixed` the rate is held at that value and the
/// solution is explicit in `n` (and not clipped to `T`); otherwise `R = r / n` and
/// the root is bracketed in `(r / C, T]`.
pub fn heuristic_blocklength(
    r: u32,
    plant: &ScalarPlant,
    channel: &BecChannel,
    r_fixed: Option<f64>,
) -> Result<usize> {
    let growth = plant.a() - 1.0;
    if growth <= 0.0 {
        return Err(Error::invalid("a", format!("heuristic needs a > 1, got {}", plant.a())));
    }
    let (capacity, dispersion) = (channel.capacity(), channel.dispersion());
    if dispersion <= 0.0 {
        return Err(Error::invalid("zeta", "heuristic needs 0 < zeta < 1"));
    }
    let t = plant.t_samp() as f64;
    let rhs = |gap: f64| 1.0 / (2.0 + growth * t + gap * gap * t / (2.0 * dispersion));

    if let Some(rate) = r_fixed {
        if !(rate > 0.0 && rate < capacity) {
            return Err(Error::RateAboveCapacity { rate, capacity });
        }
        let gap = capacity - rate;
        let target = rhs(gap);
        // phi(x) / x falls from +inf to 0 on x > 0.
        let x = bisect(1e-12, 40.0, |x| density(x) / x - target);
        return Ok((dispersion * x * x / (gap * gap)).round().max(1.0) as usize);
    }

    let residual = |n: f64| {
        let gap = capacity - r as f64 / n;
        let x = (n / dispersion).sqrt() * gap;
        density(x) / x - rhs(gap)
    };
    let lo = r as f64 / capacity * (1.0 + 1e-9);
    if lo >= t || residual(t) > 0.0 {
        return Err(Error::NoRoot { lo, hi: t });
    }
    let n = bisect(lo, t, residual).round() as usize;
    let n_min = *default_n_range(r as usize, channel, u32::MAX)?.start();
    Ok(n.max(n_min))
}
