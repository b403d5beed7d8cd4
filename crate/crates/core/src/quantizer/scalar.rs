use serde::{Deserialize, Serialize};

use super::{Outcome, MAX_MESSAGE_BITS};
use crate::error::{Error, Result};
use crate::model::{propagate_interval, ScalarPlant};

/// A closed interval `[lo, hi]` known to contain the state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid("interval", format!("need lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Membership with the rounding slack used throughout the quantizer.
    pub fn contains(&self, x: f64) -> bool {
        let slack = slack(self.lo, self.hi);
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Self { lo: self.lo - offset, hi: self.hi - offset }
    }
}

pub(crate) fn slack(lo: f64, hi: f64) -> f64 {
    1e-12 * (1.0 + lo.abs().max(hi.abs()))
}

pub(crate) fn check_bits(r: u32) -> Result<()> {
    if r == 0 || r > MAX_MESSAGE_BITS {
        return Err(Error::invalid("r", format!("must lie in 1..={MAX_MESSAGE_BITS}, got {r}")));
    }
    Ok(())
}

/// Index of the uniform bin of `u` (out of `2^r`) containing `x`.
///
/// Bins are half-open `[lo + i w, lo + (i+1) w)` except the top one, which is closed.
pub fn quantize(u: &Interval, r: u32, x: f64) -> Result<u64> {
    check_bits(r)?;
    if !u.contains(x) {
        return Err(Error::OutOfRange { value: x, lo: u.lo, hi: u.hi });
    }
    let width = u.width();
    if width == 0.0 {
        return Ok(0);
    }
    let bins = (1u64 << r) as f64;
    let pos = ((x - u.lo) / width * bins).floor();
    Ok(pos.clamp(0.0, bins - 1.0) as u64)
}

/// Midpoint of bin `bin` and the bin itself.
pub fn reconstruct(u: &Interval, r: u32, bin: u64) -> (f64, Interval) {
    debug_assert!((1..=MAX_MESSAGE_BITS).contains(&r));
    let count = 1u64 << r;
    debug_assert!(bin < count, "bin {bin} out of range for r = {r}");
    let step = u.width() / count as f64;
    let lo = u.lo + bin as f64 * step;
    let hi = if bin + 1 == count { u.hi } else { u.lo + (bin + 1) as f64 * step };
    let refined = Interval { lo, hi };
    (refined.center(), refined)
}

/// Result of one estimator round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarUpdate {
    /// Estimate of the sampled state (center of the known set).
    pub estimate_sample: f64,
    /// Estimate propagated over the latency, `a^d` times the sample estimate.
    pub estimate_now: f64,
    /// Set known to contain the sample after this round.
    pub known: Interval,
    /// Set known to contain the next sample, one period later.
    pub next: Interval,
}

/// Estimator-side update for one round.
pub fn estimator_update(
    u: &Interval,
    outcome: &Outcome<u64>,
    r: u32,
    plant: &ScalarPlant,
    d: u32,
) -> ScalarUpdate {
    let (estimate_sample, known) = match outcome {
        Outcome::Success(bin) => reconstruct(u, r, *bin),
        Outcome::Failure => (u.center(), *u),
    };
    let (lo, hi) = propagate_interval(known.lo, known.hi, plant, plant.t_samp());
    ScalarUpdate {
        estimate_sample,
        estimate_now: plant.a().powi(d as i32) * estimate_sample,
        known,
        next: Interval { lo, hi },
    }
}

/// Sensor half of a scalar session.
#[derive(Debug, Clone)]
pub struct ScalarSensor {
    plant: ScalarPlant,
    r: u32,
    state: Interval,
    pending: Option<u64>,
}

impl ScalarSensor {
    pub fn new(plant: ScalarPlant, r: u32) -> Result<Self> {
        check_bits(r)?;
        let (lo, hi) = plant.x0();
        Ok(Self { plant, r, state: Interval { lo, hi }, pending: None })
    }

    pub fn state(&self) -> &Interval {
        &self.state
    }

    /// Quantizes the current sample; the bin is remembered until the ack arrives.
    pub fn encode(&mut self, x: f64) -> Result<u64> {
        let bin = quantize(&self.state, self.r, x)?;
        self.pending = Some(bin);
        Ok(bin)
    }

    /// Applies the acknowledgement, mirroring the estimator's set update.
    pub fn acknowledge(&mut self, delivered: bool) {
        let bin = self.pending.take().expect("acknowledge called without encode");
        let outcome = if delivered { Outcome::Success(bin) } else { Outcome::Failure };
        self.state = estimator_update(&self.state, &outcome, self.r, &self.plant, 0).next;
    }

    pub fn recenter(&mut self, offset: f64) {
        self.state = self.state.shifted(offset);
    }
}

/// Estimator half of a scalar session.
#[derive(Debug, Clone)]
pub struct ScalarEstimator {
    plant: ScalarPlant,
    r: u32,
    d: u32,
    state: Interval,
}

impl ScalarEstimator {
    pub fn new(plant: ScalarPlant, r: u32, d: u32) -> Result<Self> {
        check_bits(r)?;
        let (lo, hi) = plant.x0();
        Ok(Self { plant, r, d, state: Interval { lo, hi }, })
    }

    pub fn state(&self) -> &Interval {
        &self.state
    }

    pub fn receive(&mut self, outcome: &Outcome<u64>) -> ScalarUpdate {
        let update = estimator_update(&self.state, outcome, self.r, &self.plant, self.d);
        self.state = update.next;
        update
    }

    pub fn recenter(&mut self, offset: f64) {
        self.state = self.state.shifted(offset);
    }
}
