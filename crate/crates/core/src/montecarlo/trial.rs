use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{CodeMode, CommMode, NoiseModel, PlantSpec, SimConfig};
use super::report::{aggregate, SimReport};
use crate::channel::{decode_erasures, random_code, transmit, BecChannel, DecodeResult, Gf2Code};
use crate::error::{Error, Result};
use crate::model::{abs_matrix, geometric_sum, induced_l1_norm, ScalarPlant, VectorPlant};
use crate::quantizer::{
    Outcome, ScalarEstimator, ScalarSensor, VectorEstimator, VectorScheme, VectorSensor,
};

/// Per-round record of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    /// `|x - x_hat|` (l1 for vector plants) when the outcome of round `l` arrives.
    pub errors: Vec<f64>,
    /// Width of the set known after round `l`, summed over modes for vector plants.
    pub widths: Vec<f64>,
    pub delivered: Vec<bool>,
    /// Rounds where the state left the set the estimator could vouch for.
    pub containment_violations: u64,
    /// Rounds where the error exceeded the half-width implied by the known set.
    pub bound_violations: u64,
}

impl TrialTrace {
    fn with_capacity(rounds: usize) -> Self {
        Self {
            errors: Vec::with_capacity(rounds),
            widths: Vec::with_capacity(rounds),
            delivered: Vec::with_capacity(rounds),
            containment_violations: 0,
            bound_violations: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Scalar {
        plant: ScalarPlant,
        r: u32,
        /// `a^d`.
        pow_d: f64,
        /// `g_d W / 2`.
        spread_d: f64,
    },
    Vector {
        plant: VectorPlant,
        scheme: VectorScheme,
        /// `sum_{m<d} |A^m| W / 2`, per coordinate.
        spread_d: DVector<f64>,
        /// `||A^d phi^-1||_1`.
        map_norm: f64,
        /// `sum_{m<d} ||A^m||_1 sum(W) / 2`.
        noise_l1: f64,
    },
}

/// A validated configuration with everything trials share precomputed.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    channel: BecChannel,
    prepared: Prepared,
}

fn tolerance(bound: f64, x: f64) -> f64 {
    1e-9 * bound + 1e-12 * (1.0 + x.abs())
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let channel = BecChannel::new(cfg.zeta)?;
        let d = cfg.latency();
        let prepared = match &cfg.plant {
            PlantSpec::Scalar { plant, r } => Prepared::Scalar {
                plant: *plant,
                r: *r,
                pow_d: plant.a().powi(d as i32),
                spread_d: geometric_sum(plant.a(), d) * plant.w_max() / 2.0,
            },
            PlantSpec::Vector { plant, alloc } => {
                let scheme = VectorScheme::new(plant, alloc.clone(), d)?;
                let n = plant.dim();
                let mut spread_d = DVector::zeros(n);
                let mut noise_norm = 0.0;
                let mut a_m = DMatrix::identity(n, n);
                for _ in 0..d {
                    spread_d += abs_matrix(&a_m) * plant.w_max() / 2.0;
                    noise_norm += induced_l1_norm(&a_m);
                    a_m = &a_m * plant.a_mat();
                }
                Prepared::Vector {
                    plant: plant.clone(),
                    map_norm: induced_l1_norm(scheme.estimate_map()),
                    noise_l1: noise_norm * plant.w_max().sum() / 2.0,
                    scheme,
                    spread_d,
                }
            }
        };
        Ok(Self { cfg, channel, prepared })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// All trials, reduced in trial order.
    pub fn run(&self) -> Result<SimReport> {
        let traces = (0..self.cfg.trials as u64)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect::<Result<Vec<_>>>()?;
        aggregate(&self.cfg, &traces)
    }

    fn streams(&self, trial_index: u64) -> (ChaCha8Rng, ChaCha8Rng) {
        let mut noise = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        noise.set_stream(2 * trial_index);
        let mut link = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        link.set_stream(2 * trial_index + 1);
        (noise, link)
    }

    pub fn run_trial(&self, trial_index: u64) -> Result<TrialTrace> {
        let (mut noise_rng, mut link_rng) = self.streams(trial_index);
        let r = self.cfg.plant.r() as usize;
        let code = match &self.cfg.comm {
            CommMode::Coded { n, code: CodeMode::PerTrial } => Some(random_code(&mut link_rng, r, *n)?),
            CommMode::Coded { code: CodeMode::Given(c), .. } => Some(c.clone()),
            _ => None,
        };
        match &self.prepared {
            Prepared::Scalar { plant, r, pow_d, spread_d } => self.scalar_trial(
                plant,
                *r,
                *pow_d,
                *spread_d,
                code.as_ref(),
                &mut noise_rng,
                &mut link_rng,
            ),
            Prepared::Vector { plant, scheme, spread_d, map_norm, noise_l1 } => self.vector_trial(
                plant,
                scheme,
                spread_d,
                *map_norm,
                *noise_l1,
                code.as_ref(),
                &mut noise_rng,
                &mut link_rng,
            ),
        }
    }

    fn noise(&self, half: f64, rng: &mut ChaCha8Rng) -> f64 {
        if half == 0.0 {
            return 0.0;
        }
        match self.cfg.noise {
            NoiseModel::Uniform => rng.random_range(-half..=half),
            NoiseModel::WorstCase => {
                if rng.random_bool(0.5) {
                    half
                } else {
                    -half
                }
            }
        }
    }

    fn initial(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
        if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        }
    }

    /// Sends `msg` and returns what the decoder recovers, if anything.
    fn deliver(&self, msg: u64, code: Option<&Gf2Code>, rng: &mut ChaCha8Rng) -> Result<Option<u64>> {
        let r = self.cfg.plant.r() as usize;
        match &self.cfg.comm {
            CommMode::Abstract { p_e, .. } => {
                Ok(if rng.random::<f64>() < *p_e { None } else { Some(msg) })
            }
            CommMode::Uncoded => {
                let bits: Vec<bool> = (0..r).map(|i| msg >> i & 1 == 1).collect();
                let recv = transmit(&bits, &self.channel, rng);
                Ok(recv.iter().enumerate().try_fold(0u64, |acc, (i, b)| b.map(|b| acc | u64::from(b) << i)))
            }
            CommMode::Coded { n, .. } => {
                let fresh;
                let code = match code {
                    Some(c) => c,
                    None => {
                        fresh = random_code(rng, r, *n)?;
                        &fresh
                    }
                };
                let recv = transmit(&code.encode(msg), &self.channel, rng);
                match decode_erasures(code, &recv)? {
                    DecodeResult::Decoded(m) if m == msg => Ok(Some(m)),
                    DecodeResult::Decoded(m) => Err(Error::InvariantViolation(format!(
                        "decoder returned {m:#x} for message {msg:#x}"
                    ))),
                    DecodeResult::Failure => Ok(None),
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn scalar_trial(
        &self,
        plant: &ScalarPlant,
        r: u32,
        pow_d: f64,
        spread_d: f64,
        code: Option<&Gf2Code>,
        noise_rng: &mut ChaCha8Rng,
        link_rng: &mut ChaCha8Rng,
    ) -> Result<TrialTrace> {
        let d = self.cfg.latency();
        let t = plant.t_samp();
        let half_w = plant.w_max() / 2.0;
        let mut sensor = ScalarSensor::new(*plant, r)?;
        let mut estimator = ScalarEstimator::new(*plant, r, d)?;
        let (lo, hi) = plant.x0();
        let mut x = Self::initial(lo, hi, noise_rng);
        let mut trace = TrialTrace::with_capacity(self.cfg.rounds);

        for round in 0..self.cfg.rounds {
            if sensor.state() != estimator.state() {
                return Err(Error::InvariantViolation(format!(
                    "sensor and estimator sets differ in round {round}"
                )));
            }
            let set = *sensor.state();
            if !set.contains(x) {
                return Err(Error::InvariantViolation(format!(
                    "sample {x} outside [{}, {}] in round {round}",
                    set.lo, set.hi
                )));
            }
            let bin = sensor.encode(x)?;
            let received = self.deliver(bin, code, link_rng)?;
            for _ in 0..d {
                x = plant.a() * x + self.noise(half_w, noise_rng);
            }
            let outcome = received.map_or(Outcome::Failure, Outcome::Success);
            let update = estimator.receive(&outcome);
            sensor.acknowledge(received.is_some());

            let error = (x - update.estimate_now).abs();
            let half_width = 0.5 * pow_d * update.known.width() + spread_d;
            let tol = tolerance(half_width, x);
            let (lo, hi) = (pow_d * update.known.lo - spread_d, pow_d * update.known.hi + spread_d);
            if x < lo - tol || x > hi + tol {
                trace.containment_violations += 1;
            }
            if error > half_width + tol {
                trace.bound_violations += 1;
            }
            trace.errors.push(error);
            trace.widths.push(update.known.width());
            trace.delivered.push(received.is_some());

            for _ in d..t {
                x = plant.a() * x + self.noise(half_w, noise_rng);
            }
            let center = estimator.state().center();
            x -= center;
            sensor.recenter(center);
            estimator.recenter(center);
        }
        Ok(trace)
    }

    #[allow(clippy::too_many_arguments)]
    fn vector_trial(
        &self,
        plant: &VectorPlant,
        scheme: &VectorScheme,
        spread_d: &DVector<f64>,
        map_norm: f64,
        noise_l1: f64,
        code: Option<&Gf2Code>,
        noise_rng: &mut ChaCha8Rng,
        link_rng: &mut ChaCha8Rng,
    ) -> Result<TrialTrace> {
        let d = self.cfg.latency();
        let t = plant.t_samp();
        let dim = plant.dim();
        let half_w = plant.w_max() / 2.0;
        let mut sensor = VectorSensor::new(scheme);
        let mut estimator = VectorEstimator::new(scheme);
        let mut x = DVector::from_iterator(
            dim,
            plant.x0_box().iter().map(|&(lo, hi)| Self::initial(lo, hi, noise_rng)),
        );
        let step = |x: &DVector<f64>, rng: &mut ChaCha8Rng| {
            let w = DVector::from_iterator(dim, half_w.iter().map(|&h| self.noise(h, rng)));
            plant.a_mat() * x + w
        };
        let mut trace = TrialTrace::with_capacity(self.cfg.rounds);

        for round in 0..self.cfg.rounds {
            if sensor.state() != estimator.state() {
                return Err(Error::InvariantViolation(format!(
                    "sensor and estimator boxes differ in round {round}"
                )));
            }
            let z = scheme.to_jordan(&x);
            if !sensor.state().contains(&z) {
                return Err(Error::InvariantViolation(format!(
                    "sample outside the shared box in round {round}"
                )));
            }
            let msg = sensor.encode(&x)?;
            let received = self.deliver(msg, code, link_rng)?;
            for _ in 0..d {
                x = step(&x, noise_rng);
            }
            let update = estimator.receive(received);
            sensor.acknowledge(received.is_some());

            let error = (&x - &update.estimate_now).lp_norm(1);
            let widths = update.known.widths();
            let half_width = 0.5 * map_norm * widths.sum() + noise_l1;
            let predicted = update.known.image(scheme.estimate_map(), spread_d);
            let outside = predicted.dims.iter().zip(x.iter()).any(|(iv, &v)| {
                let tol = tolerance(iv.width(), v);
                v < iv.lo - tol || v > iv.hi + tol
            });
            if outside {
                trace.containment_violations += 1;
            }
            if error > half_width + tolerance(half_width, x.amax()) {
                trace.bound_violations += 1;
            }
            trace.errors.push(error);
            trace.widths.push(widths.sum());
            trace.delivered.push(received.is_some());

            for _ in d..t {
                x = step(&x, noise_rng);
            }
            let center = estimator.state().centers();
            x -= scheme.to_state(&center);
            sensor.recenter(&center);
            estimator.recenter(&center);
        }
        Ok(trace)
    }
}

/// One trial of `cfg`; depends only on `cfg.seed` and `trial_index`.
pub fn run_trial(cfg: &SimConfig, trial_index: u64) -> Result<TrialTrace> {
    Simulation::new(cfg.clone())?.run_trial(trial_index)
}
