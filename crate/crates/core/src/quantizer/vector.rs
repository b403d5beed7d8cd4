use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scalar::{check_bits, quantize, reconstruct, Interval};
use super::{Outcome, MAX_MESSAGE_BITS};
use crate::error::{Error, Result};
use crate::model::{abs_matrix, jordan_decompose, JordanForm, VectorPlant};

/// Bits spent on each coordinate of the Jordan-coordinate box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitAllocation {
    bits: Vec<u32>,
}

impl BitAllocation {
    pub fn new(bits: Vec<u32>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::invalid("alloc", "needs at least one dimension"));
        }
        if bits.iter().any(|&b| b < 1) {
            return Err(Error::invalid("alloc", "every dimension needs at least one bit"));
        }
        let total: u32 = bits.iter().sum();
        check_bits(total).map_err(|_| {
            Error::invalid("alloc", format!("total of {total} bits exceeds {MAX_MESSAGE_BITS}"))
        })?;
        Ok(Self { bits })
    }

    /// `r / n` bits per dimension, remainder going to the leading dimensions.
    pub fn equal_split(r: u32, n: usize) -> Result<Self> {
        let n32 = n as u32;
        if n == 0 || r < n32 {
            return Err(Error::invalid("alloc", format!("cannot split {r} bits over {n} dimensions")));
        }
        let base = r / n32;
        let extra = (r % n32) as usize;
        Self::new((0..n).map(|i| base + u32::from(i < extra)).collect())
    }

    pub fn bits(&self) -> &[u32] {
        &self.bits
    }

    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    pub fn total(&self) -> u32 {
        self.bits.iter().sum()
    }
}

/// Axis-aligned box, one interval per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperbox {
    pub dims: Vec<Interval>,
}

impl Hyperbox {
    pub fn widths(&self) -> DVector<f64> {
        DVector::from_iterator(self.dims.len(), self.dims.iter().map(Interval::width))
    }

    pub fn centers(&self) -> DVector<f64> {
        DVector::from_iterator(self.dims.len(), self.dims.iter().map(Interval::center))
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.len() == self.dims.len() && self.dims.iter().zip(z.iter()).all(|(iv, v)| iv.contains(*v))
    }

    pub fn shifted(&self, offset: &DVector<f64>) -> Self {
        Self { dims: self.dims.iter().zip(offset.iter()).map(|(iv, o)| iv.shifted(*o)).collect() }
    }

    /// Smallest box containing `m * b` for every `b` in `self` plus a symmetric spread.
    pub(crate) fn image(&self, m: &DMatrix<f64>, half_spread: &DVector<f64>) -> Self {
        let dims = (0..m.nrows())
            .map(|i| {
                let (mut lo, mut hi) = (0.0, 0.0);
                for (j, iv) in self.dims.iter().enumerate() {
                    let c = m[(i, j)];
                    let (a, b) = (c * iv.lo, c * iv.hi);
                    lo += a.min(b);
                    hi += a.max(b);
                }
                Interval { lo: lo - half_spread[i], hi: hi + half_spread[i] }
            })
            .collect();
        Self { dims }
    }
}

/// Per-dimension bin indices of `z` in `u`.
pub fn vector_sensor_round(z: &DVector<f64>, u: &Hyperbox, alloc: &BitAllocation) -> Result<Vec<u64>> {
    if z.len() != u.dims.len() {
        return Err(Error::DimensionMismatch { expected: u.dims.len(), got: z.len() });
    }
    if alloc.dim() != u.dims.len() {
        return Err(Error::DimensionMismatch { expected: u.dims.len(), got: alloc.dim() });
    }
    u.dims
        .iter()
        .zip(z.iter())
        .zip(alloc.bits())
        .map(|((iv, &zi), &r)| quantize(iv, r, zi))
        .collect()
}

/// Packs per-dimension bins into one message, first dimension most significant.
pub fn pack_bins(bins: &[u64], alloc: &BitAllocation) -> u64 {
    bins.iter().zip(alloc.bits()).fold(0u64, |msg, (&b, &r)| (msg << r) | b)
}

pub fn unpack_bins(message: u64, alloc: &BitAllocation) -> Vec<u64> {
    let mut bins = vec![0; alloc.dim()];
    let mut rest = message;
    for (slot, &r) in bins.iter_mut().zip(alloc.bits()).rev() {
        *slot = rest & ((1u64 << r) - 1);
        rest >>= r;
    }
    bins
}

/// Everything both ends precompute for the vector scheme.
#[derive(Debug, Clone)]
pub struct VectorScheme {
    jordan: JordanForm,
    alloc: BitAllocation,
    /// `sum_{m<T} |phi A^m| W`: width added by one period of noise.
    noise_width: DVector<f64>,
    /// `A^d phi^-1`: maps a Jordan-coordinate estimate to the current state.
    estimate_map: DMatrix<f64>,
    x0_box: Vec<(f64, f64)>,
}

impl VectorScheme {
    pub fn new(plant: &VectorPlant, alloc: BitAllocation, d: u32) -> Result<Self> {
        if alloc.dim() != plant.dim() {
            return Err(Error::DimensionMismatch { expected: plant.dim(), got: alloc.dim() });
        }
        let jordan = jordan_decompose(plant)?;
        let n = plant.dim();
        let mut noise_width = DVector::zeros(n);
        let mut phi_a_m = jordan.phi().clone();
        for _ in 0..plant.t_samp() {
            noise_width += abs_matrix(&phi_a_m) * plant.w_max();
            phi_a_m = &phi_a_m * plant.a_mat();
        }
        let estimate_map = crate::model::mat_pow(plant.a_mat(), d) * jordan.phi_inv();
        Ok(Self { jordan, alloc, noise_width, estimate_map, x0_box: plant.x0_box().to_vec() })
    }

    pub fn jordan(&self) -> &JordanForm {
        &self.jordan
    }

    pub fn alloc(&self) -> &BitAllocation {
        &self.alloc
    }

    pub fn noise_width(&self) -> &DVector<f64> {
        &self.noise_width
    }

    pub fn estimate_map(&self) -> &DMatrix<f64> {
        &self.estimate_map
    }

    /// Box in Jordan coordinates enclosing `phi` applied to the initial box.
    pub fn initial_box(&self) -> Hyperbox {
        let x0 = Hyperbox {
            dims: self.x0_box.iter().map(|&(lo, hi)| Interval { lo, hi }).collect(),
        };
        x0.image(self.jordan.phi(), &DVector::zeros(self.x0_box.len()))
    }

    pub fn to_jordan(&self, x: &DVector<f64>) -> DVector<f64> {
        self.jordan.phi() * x
    }

    pub fn to_state(&self, z: &DVector<f64>) -> DVector<f64> {
        self.jordan.phi_inv() * z
    }

    /// One period forward: `j` applied to the box plus the noise spread.
    pub fn propagate(&self, known: &Hyperbox) -> Hyperbox {
        known.image(self.jordan.j(), &(&self.noise_width / 2.0))
    }

    /// Estimator-side update for one round.
    pub fn update(&self, u: &Hyperbox, outcome: &Outcome<Vec<u64>>) -> VectorUpdate {
        let known = match outcome {
            Outcome::Success(bins) => Hyperbox {
                dims: u
                    .dims
                    .iter()
                    .zip(bins)
                    .zip(self.alloc.bits())
                    .map(|((iv, &bin), &r)| reconstruct(iv, r, bin).1)
                    .collect(),
            },
            Outcome::Failure => u.clone(),
        };
        let estimate_sample = known.centers();
        let estimate_now = &self.estimate_map * &estimate_sample;
        let next = self.propagate(&known);
        VectorUpdate { estimate_sample, estimate_now, known, next }
    }
}

/// Result of one vector estimator round.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorUpdate {
    /// Jordan-coordinate estimate of the sample.
    pub estimate_sample: DVector<f64>,
    /// `A^d phi^-1` applied to the sample estimate.
    pub estimate_now: DVector<f64>,
    pub known: Hyperbox,
    pub next: Hyperbox,
}

/// Sensor half of a vector session.
#[derive(Debug, Clone)]
pub struct VectorSensor<'a> {
    scheme: &'a VectorScheme,
    state: Hyperbox,
    pending: Option<Vec<u64>>,
}

impl<'a> VectorSensor<'a> {
    pub fn new(scheme: &'a VectorScheme) -> Self {
        Self { scheme, state: scheme.initial_box(), pending: None }
    }

    pub fn state(&self) -> &Hyperbox {
        &self.state
    }

    /// Quantizes the sample `x` (original coordinates) and returns the packed message.
    pub fn encode(&mut self, x: &DVector<f64>) -> Result<u64> {
        let z = self.scheme.to_jordan(x);
        let bins = vector_sensor_round(&z, &self.state, &self.scheme.alloc)?;
        let msg = pack_bins(&bins, &self.scheme.alloc);
        self.pending = Some(bins);
        Ok(msg)
    }

    pub fn acknowledge(&mut self, delivered: bool) {
        let bins = self.pending.take().expect("acknowledge called without encode");
        let outcome = if delivered { Outcome::Success(bins) } else { Outcome::Failure };
        self.state = self.scheme.update(&self.state, &outcome).next;
    }

    pub fn recenter(&mut self, offset: &DVector<f64>) {
        self.state = self.state.shifted(offset);
    }
}

/// Estimator half of a vector session.
#[derive(Debug, Clone)]
pub struct VectorEstimator<'a> {
    scheme: &'a VectorScheme,
    state: Hyperbox,
}

impl<'a> VectorEstimator<'a> {
    pub fn new(scheme: &'a VectorScheme) -> Self {
        Self { scheme, state: scheme.initial_box() }
    }

    pub fn state(&self) -> &Hyperbox {
        &self.state
    }

    /// `message` is `None` when decoding failed.
    pub fn receive(&mut self, message: Option<u64>) -> VectorUpdate {
        let outcome = match message {
            Some(m) => Outcome::Success(unpack_bins(m, &self.scheme.alloc)),
            None => Outcome::Failure,
        };
        let update = self.scheme.update(&self.state, &outcome);
        self.state = update.next.clone();
        update
    }

    pub fn recenter(&mut self, offset: &DVector<f64>) {
        self.state = self.state.shifted(offset);
    }
}
