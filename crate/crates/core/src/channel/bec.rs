use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary erasure channel: every bit is independently erased with probability `zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BecChannel {
    zeta: f64,
}

impl BecChannel {
    pub fn new(zeta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(Error::invalid("zeta", format!("must lie in [0, 1], got {zeta}")));
        }
        Ok(Self { zeta })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// `C = 1 - zeta` bits per channel use.
    pub fn capacity(&self) -> f64 {
        1.0 - self.zeta
    }

    /// `V = zeta (1 - zeta)`.
    pub fn dispersion(&self) -> f64 {
        self.zeta * (1.0 - self.zeta)
    }
}

/// Channel output: `None` marks an erased position.
pub type ErasedWord = Vec<Option<bool>>;

pub fn transmit<R: Rng + ?Sized>(word: &[bool], channel: &BecChannel, rng: &mut R) -> ErasedWord {
    word.iter()
        .map(|&b| if rng.random_bool(channel.zeta) { None } else { Some(b) })
        .collect()
}
