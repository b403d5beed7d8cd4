use crate::channel::{Gf2Code, MAX_CODE_DIMENSION};
use crate::error::{Error, Result};
use crate::model::{ScalarPlant, VectorPlant};
use crate::quantizer::{BitAllocation, MAX_MESSAGE_BITS};

#[derive(Debug, Clone)]
pub enum PlantSpec {
    Scalar { plant: ScalarPlant, r: u32 },
    Vector { plant: VectorPlant, alloc: BitAllocation },
}

impl PlantSpec {
    pub fn t_samp(&self) -> u32 {
        match self {
            PlantSpec::Scalar { plant, .. } => plant.t_samp(),
            PlantSpec::Vector { plant, .. } => plant.t_samp(),
        }
    }

    /// Bits per message.
    pub fn r(&self) -> u32 {
        match self {
            PlantSpec::Scalar { r, .. } => *r,
            PlantSpec::Vector { alloc, .. } => alloc.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeMode {
    /// New random code for every message.
    Fresh,
    /// One random code per trial.
    PerTrial,
    /// The same code for every message of every trial.
    Given(Gf2Code),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommMode {
    /// Bernoulli delivery with failure probability `p_e`, latency `d`.
    Abstract { p_e: f64, d: u32 },
    /// Raw bits over the channel; lost if any bit is erased. Latency `r`.
    Uncoded,
    /// Length-`n` linear code with erasure decoding. Latency `n`.
    Coded { n: usize, code: CodeMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// Uniform on `[-W/2, W/2]`.
    #[default]
    Uniform,
    /// `+W/2` or `-W/2` with equal probability.
    WorstCase,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub plant: PlantSpec,
    pub comm: CommMode,
    /// Erasure probability of the channel; unused in abstract mode.
    pub zeta: f64,
    pub trials: usize,
    pub rounds: usize,
    /// Rounds excluded from steady-state averages; `None` picks `max(20, rounds / 5)`,
    /// capped at `rounds - 1`.
    pub burn_in: Option<usize>,
    pub seed: u64,
    pub noise: NoiseModel,
}

impl SimConfig {
    pub fn new(plant: PlantSpec, comm: CommMode, zeta: f64, trials: usize, rounds: usize, seed: u64) -> Self {
        Self { plant, comm, zeta, trials, rounds, burn_in: None, seed, noise: NoiseModel::Uniform }
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
            .unwrap_or_else(|| 20.max(self.rounds / 5).min(self.rounds.saturating_sub(1)))
    }

    /// Steps between sampling and delivery of the outcome.
    pub fn latency(&self) -> u32 {
        match &self.comm {
            CommMode::Abstract { d, .. } => *d,
            CommMode::Uncoded => self.plant.r(),
            CommMode::Coded { n, .. } => *n as u32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if self.rounds == 0 {
            return Err(Error::invalid("rounds", "must be >= 1"));
        }
        if self.burn_in() >= self.rounds {
            return Err(Error::invalid(
                "burn_in",
                format!("{} leaves no steady-state rounds out of {}", self.burn_in(), self.rounds),
            ));
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(Error::invalid("zeta", format!("must lie in [0, 1], got {}", self.zeta)));
        }
        let r = self.plant.r();
        if r == 0 || r > MAX_MESSAGE_BITS {
            return Err(Error::invalid("r", format!("must lie in 1..={MAX_MESSAGE_BITS}, got {r}")));
        }
        if let PlantSpec::Vector { plant, alloc } = &self.plant {
            if alloc.dim() != plant.dim() {
                return Err(Error::DimensionMismatch { expected: plant.dim(), got: alloc.dim() });
            }
        }
        let t = self.plant.t_samp();
        match &self.comm {
            CommMode::Abstract { p_e, .. } if !(0.0..=1.0).contains(p_e) => {
                return Err(Error::invalid("p_e", format!("must lie in [0, 1], got {p_e}")));
            }
            CommMode::Coded { n, code } => {
                if *n < r as usize || *n > t as usize || r as usize > MAX_CODE_DIMENSION {
                    return Err(Error::invalid("n", format!("need r = {r} <= n = {n} <= T = {t}")));
                }
                if let CodeMode::Given(c) = code {
                    if c.r() != r as usize || c.n() != *n {
                        return Err(Error::invalid(
                            "code",
                            format!("code is ({}, {}), config needs ({n}, {r})", c.n(), c.r()),
                        ));
                    }
                }
            }
            _ => {}
        }
        if self.latency() > t {
            return Err(Error::invalid(
                "d",
                format!("latency {} exceeds the sampling period {t}", self.latency()),
            ));
        }
        Ok(())
    }
}
