//! TOML run configuration.
//!
//! ```toml
//! [plant]
//! a = 1.05            # scalar plant; use `matrix` for a vector plant
//! w_max = 1.0
//! t_samp = 200
//! x0 = [-0.5, 0.5]
//!
//! [comm]
//! mode = "coded"      # abstract | uncoded | coded
//! r = 16
//! n = 45
//!
//! [channel]
//! zeta = 0.5
//! ```

use std::path::{Path, PathBuf};

use lrr_core::analysis::PeModel;
use lrr_core::channel::BecChannel;
use lrr_core::model::{ScalarPlant, VectorPlant};
use lrr_core::montecarlo::{CodeMode, CommMode, NoiseModel, PlantSpec, SimConfig};
use lrr_core::quantizer::BitAllocation;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Scalars {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum InitialSet {
    Interval([f64; 2]),
    Box(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub a: Option<f64>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub w_max: Scalars,
    pub t_samp: u32,
    pub x0: InitialSet,
    /// Optional Jordan data for `matrix^T_samp`: `phi^-1 j phi`.
    pub phi: Option<Vec<Vec<f64>>>,
    pub j: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Abstract,
    Uncoded,
    Coded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CodeName {
    #[default]
    Fresh,
    PerTrial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PeModelName {
    #[default]
    NormalApprox,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CommSection {
    #[serde(default)]
    pub mode: ModeName,
    /// Bits per message (scalar plants).
    pub r: Option<u32>,
    /// Bits per mode (vector plants).
    pub alloc: Option<Vec<u32>>,
    pub p_e: Option<f64>,
    pub d: Option<u32>,
    pub n: Option<usize>,
    #[serde(default)]
    pub code: CodeName,
    #[serde(default)]
    pub pe_model: PeModelName,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(default)]
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseName {
    #[default]
    Uniform,
    WorstCase,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub noise: NoiseName,
}

fn default_trials() -> usize {
    1000
}

fn default_rounds() -> usize {
    100
}

impl Default for SimSection {
    fn default() -> Self {
        Self { trials: default_trials(), rounds: default_rounds(), burn_in: None, noise: NoiseName::Uniform }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n: Option<Vec<usize>>,
    /// Inclusive `[lo, hi]`, appended to `n`.
    pub n_range: Option<[usize; 2]>,
    pub p_e: Option<Vec<f64>>,
    pub d: Option<Vec<u32>>,
    pub zeta: Option<Vec<f64>>,
    /// Also simulate every point (needs `--seed`).
    #[serde(default)]
    pub empirical: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantSection,
    #[serde(default)]
    pub comm: CommSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config { field: field.to_string(), reason: reason.into() }
}

fn core(field: &str) -> impl Fn(lrr_core::Error) -> CliError + '_ {
    move |e| invalid(field, e.to_string())
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|row| row.len() != n) {
        return Err(invalid(field, "must be a non-empty square matrix"));
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.iter().flatten().copied()))
}

/// Plant with the bits it sends, built from the `[plant]` and `[comm]` sections.
#[derive(Debug, Clone)]
pub enum Plant {
    Scalar { plant: ScalarPlant, r: u32 },
    Vector { plant: VectorPlant, alloc: BitAllocation },
}

impl Plant {
    pub fn t_samp(&self) -> u32 {
        match self {
            Plant::Scalar { plant, .. } => plant.t_samp(),
            Plant::Vector { plant, .. } => plant.t_samp(),
        }
    }

    pub fn r(&self) -> u32 {
        match self {
            Plant::Scalar { r, .. } => *r,
            Plant::Vector { alloc, .. } => alloc.total(),
        }
    }

    pub fn spec(&self) -> PlantSpec {
        match self.clone() {
            Plant::Scalar { plant, r } => PlantSpec::Scalar { plant, r },
            Plant::Vector { plant, alloc } => PlantSpec::Vector { plant, alloc },
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn plant(&self) -> Result<Plant, CliError> {
        let p = &self.plant;
        match (&p.a, &p.matrix) {
            (Some(a), None) => {
                let Scalars::One(w) = p.w_max else {
                    return Err(invalid("plant.w_max", "a scalar plant takes a single number"));
                };
                let InitialSet::Interval([lo, hi]) = p.x0 else {
                    return Err(invalid("plant.x0", "a scalar plant takes [lo, hi]"));
                };
                if p.phi.is_some() || p.j.is_some() {
                    return Err(invalid("plant.phi", "Jordan data only applies to `matrix` plants"));
                }
                if self.comm.alloc.is_some() {
                    return Err(invalid("comm.alloc", "a scalar plant takes `r`"));
                }
                let r = self.comm.r.ok_or_else(|| invalid("comm.r", "missing"))?;
                let plant = ScalarPlant::new(*a, w, p.t_samp, lo, hi).map_err(core("plant"))?;
                Ok(Plant::Scalar { plant, r })
            }
            (None, Some(rows)) => {
                let a = matrix(rows, "plant.matrix")?;
                let dim = a.nrows();
                let w = match &p.w_max {
                    Scalars::One(w) => DVector::from_element(dim, *w),
                    Scalars::Many(ws) => DVector::from_column_slice(ws),
                };
                let x0 = match &p.x0 {
                    InitialSet::Interval([lo, hi]) => vec![(*lo, *hi); dim],
                    InitialSet::Box(b) => b.iter().map(|&[lo, hi]| (lo, hi)).collect(),
                };
                let jordan = match (&p.phi, &p.j) {
                    (Some(phi), Some(j)) => Some((matrix(phi, "plant.phi")?, matrix(j, "plant.j")?)),
                    (None, None) => None,
                    _ => return Err(invalid("plant.phi", "`phi` and `j` must be given together")),
                };
                let plant = VectorPlant::new(a, w, p.t_samp, x0, jordan).map_err(core("plant"))?;
                let alloc = match (&self.comm.alloc, self.comm.r) {
                    (Some(bits), None) => BitAllocation::new(bits.clone()).map_err(core("comm.alloc"))?,
                    (None, Some(r)) => BitAllocation::equal_split(r, dim).map_err(core("comm.r"))?,
                    (Some(_), Some(_)) => return Err(invalid("comm.alloc", "give `alloc` or `r`, not both")),
                    (None, None) => return Err(invalid("comm.alloc", "missing")),
                };
                if alloc.dim() != dim {
                    return Err(invalid("comm.alloc", format!("needs {dim} entries, got {}", alloc.dim())));
                }
                Ok(Plant::Vector { plant, alloc })
            }
            (Some(_), Some(_)) => Err(invalid("plant.a", "give `a` or `matrix`, not both")),
            (None, None) => Err(invalid("plant.a", "missing (or `matrix`)")),
        }
    }

    pub fn channel(&self) -> Result<BecChannel, CliError> {
        BecChannel::new(self.channel.zeta).map_err(core("channel.zeta"))
    }

    pub fn pe_model(&self) -> PeModel {
        match self.comm.pe_model {
            PeModelName::NormalApprox => PeModel::NormalApprox,
            PeModelName::Ensemble => PeModel::RandomCodeEnsemble,
        }
    }

    pub fn code_mode(&self) -> CodeMode {
        match self.comm.code {
            CodeName::Fresh => CodeMode::Fresh,
            CodeName::PerTrial => CodeMode::PerTrial,
        }
    }

    /// Communication mode from `[comm]`.
    pub fn comm_mode(&self, plant: &Plant) -> Result<CommMode, CliError> {
        let c = &self.comm;
        match c.mode {
            ModeName::Abstract => {
                let p_e = c.p_e.ok_or_else(|| invalid("comm.p_e", "required in abstract mode"))?;
                let d = c.d.ok_or_else(|| invalid("comm.d", "required in abstract mode"))?;
                if !(0.0..=1.0).contains(&p_e) {
                    return Err(invalid("comm.p_e", format!("must lie in [0, 1], got {p_e}")));
                }
                if d > plant.t_samp() {
                    return Err(invalid("comm.d", format!("latency {d} exceeds t_samp = {}", plant.t_samp())));
                }
                Ok(CommMode::Abstract { p_e, d })
            }
            ModeName::Uncoded => {
                if plant.r() > plant.t_samp() {
                    return Err(invalid("comm.r", "uncoded latency r exceeds t_samp"));
                }
                Ok(CommMode::Uncoded)
            }
            ModeName::Coded => {
                let n = c.n.ok_or_else(|| invalid("comm.n", "required in coded mode"))?;
                check_n(n, plant)?;
                Ok(CommMode::Coded { n, code: self.code_mode() })
            }
        }
    }

    pub fn sim_config(&self, plant: &Plant, comm: CommMode, zeta: f64, seed: u64) -> Result<SimConfig, CliError> {
        let mut cfg = SimConfig::new(plant.spec(), comm, zeta, self.sim.trials, self.sim.rounds, seed);
        cfg.burn_in = self.sim.burn_in;
        cfg.noise = match self.sim.noise {
            NoiseName::Uniform => NoiseModel::Uniform,
            NoiseName::WorstCase => NoiseModel::WorstCase,
        };
        cfg.validate().map_err(core("sim"))?;
        Ok(cfg)
    }

    /// The `n` sweep axis: explicit values followed by the inclusive range.
    pub fn sweep_n(&self) -> Option<Vec<usize>> {
        let mut ns = self.sweep.n.clone().unwrap_or_default();
        if let Some([lo, hi]) = self.sweep.n_range {
            ns.extend(lo..=hi);
        }
        (self.sweep.n.is_some() || self.sweep.n_range.is_some()).then_some(ns)
    }
}

pub fn check_n(n: usize, plant: &Plant) -> Result<(), CliError> {
    let r = plant.r() as usize;
    if n < r || n > plant.t_samp() as usize {
        return Err(invalid("comm.n", format!("need r = {r} <= n = {n} <= t_samp = {}", plant.t_samp())));
    }
    Ok(())
}
