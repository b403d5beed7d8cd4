use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::bec::{transmit, BecChannel};
use super::code::{decode_erasures, random_code, DecodeResult, MAX_CODE_DIMENSION};
use crate::error::{Error, Result};

/// Limits for exhaustive enumeration of erasure patterns.
pub const EXACT_MAX_N: usize = 20;
pub const EXACT_MAX_R: usize = 12;

const TRIALS_PER_CHUNK: u64 = 4096;

/// Without coding a message gets through only if none of its `r` bits is erased.
pub fn uncoded_error_prob(channel: &BecChannel, r: u32) -> f64 {
    1.0 - channel.capacity().powi(r as i32)
}

/// Probability that a uniform random `r x k` binary matrix has rank `r`.
pub fn full_rank_probability(r: usize, k: usize) -> f64 {
    if k < r {
        return 0.0;
    }
    (0..r).map(|i| 1.0 - 2f64.powi(i as i32 - k as i32)).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorProbMode {
    /// Fresh random code, message and erasure pattern per trial.
    MonteCarlo { trials: u64, seed: u64 },
    /// Exhaustive sum over all `2^n` erasure patterns.
    ExactSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FailureCount {
    pub failures: u64,
    pub trials: u64,
}

impl FailureCount {
    pub fn rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }
}

/// Ensemble decoding-failure probability of random linear `(n, r)` codes on `channel`.
pub fn code_error_prob(r: usize, n: usize, channel: &BecChannel, mode: ErrorProbMode) -> Result<f64> {
    check_dims(r, n)?;
    match mode {
        ErrorProbMode::MonteCarlo { trials, seed } => {
            Ok(simulate_code_failures(r, n, channel, trials, seed)?.rate())
        }
        ErrorProbMode::ExactSmall => exact_small(r, n, channel),
    }
}

fn check_dims(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > MAX_CODE_DIMENSION {
        return Err(Error::invalid("r", format!("must lie in 1..={MAX_CODE_DIMENSION}")));
    }
    if n < r {
        return Err(Error::invalid("n", format!("blocklength {n} is shorter than r = {r}")));
    }
    Ok(())
}

fn exact_small(r: usize, n: usize, channel: &BecChannel) -> Result<f64> {
    if n > EXACT_MAX_N || r > EXACT_MAX_R {
        return Err(Error::BudgetExceeded { n, r, max_n: EXACT_MAX_N, max_r: EXACT_MAX_R });
    }
    let zeta = channel.zeta();
    let mut total = 0.0;
    for pattern in 0u32..(1 << n) {
        let kept = pattern.count_ones() as usize;
        let weight = (1.0 - zeta).powi(kept as i32) * zeta.powi((n - kept) as i32);
        total += weight * (1.0 - full_rank_probability(r, kept));
    }
    Ok(total)
}

/// Same quantity as [`ErrorProbMode::ExactSmall`], grouped by the number of surviving
/// positions so any blocklength is cheap.
pub fn ensemble_error_prob(r: usize, n: usize, channel: &BecChannel) -> Result<f64> {
    check_dims(r, n)?;
    let zeta = channel.zeta();
    if zeta == 0.0 {
        return Ok(1.0 - full_rank_probability(r, n));
    }
    if zeta == 1.0 {
        return Ok(1.0);
    }
    let (ln_keep, ln_erase) = ((1.0 - zeta).ln(), zeta.ln());
    let ln_n_fact = libm::lgamma(n as f64 + 1.0);
    let mut total = 0.0;
    for kept in 0..=n {
        let ln_binom = ln_n_fact
            - libm::lgamma(kept as f64 + 1.0)
            - libm::lgamma((n - kept) as f64 + 1.0);
        let weight = (ln_binom + kept as f64 * ln_keep + (n - kept) as f64 * ln_erase).exp();
        total += weight * (1.0 - full_rank_probability(r, kept));
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Monte Carlo failure count; trials are split into fixed chunks with their own
/// ChaCha stream so the count does not depend on the thread schedule.
pub fn simulate_code_failures(
    r: usize,
    n: usize,
    channel: &BecChannel,
    trials: u64,
    seed: u64,
) -> Result<FailureCount> {
    check_dims(r, n)?;
    if trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let mask = if r == 64 { u64::MAX } else { (1u64 << r) - 1 };
    let failures = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<u64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = TRIALS_PER_CHUNK.min(trials - chunk * TRIALS_PER_CHUNK);
            let mut failed = 0;
            for _ in 0..count {
                let code = random_code(&mut rng, r, n)?;
                let msg = rng.random::<u64>() & mask;
                let recv = transmit(&code.encode(msg), channel, &mut rng);
                match decode_erasures(&code, &recv)? {
                    DecodeResult::Failure => failed += 1,
                    DecodeResult::Decoded(m) if m != msg => {
                        return Err(Error::InvariantViolation(format!(
                            "erasure decoder returned {m:#x} for message {msg:#x}"
                        )))
                    }
                    DecodeResult::Decoded(_) => {}
                }
            }
            Ok(failed)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(FailureCount { failures, trials })
}
