use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::jordan::JordanForm;
use super::linalg::mat_pow;
use crate::error::{Error, Result};

/// Below this distance from 1 the growth factor is treated as exactly 1.
const UNIT_GROWTH_TOL: f64 = 1e-12;

/// `(a^k - 1) / (a - 1)`, i.e. `1 + a + ... + a^(k-1)`, with the `a = 1` limit `k`.
pub fn geometric_sum(a: f64, k: u32) -> f64 {
    let h = a - 1.0;
    if h.abs() < UNIT_GROWTH_TOL {
        k as f64
    } else if h.abs() < 0.5 {
        (k as f64 * h.ln_1p()).exp_m1() / h
    } else {
        (a.powi(k as i32) - 1.0) / h
    }
}

/// Scalar plant `x_{k+1} = a x_k + w_k` with `|w_k| <= w_max / 2`, sampled every
/// `t_samp` steps, starting somewhere in `[x0_lo, x0_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarPlant {
    a: f64,
    w_max: f64,
    t_samp: u32,
    x0_lo: f64,
    x0_hi: f64,
}

impl ScalarPlant {
    pub fn new(a: f64, w_max: f64, t_samp: u32, x0_lo: f64, x0_hi: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::invalid("a", format!("must be finite and >= 0, got {a}")));
        }
        if !(w_max.is_finite() && w_max >= 0.0) {
            return Err(Error::invalid("w_max", format!("must be finite and >= 0, got {w_max}")));
        }
        if t_samp < 1 {
            return Err(Error::invalid("t_samp", "must be >= 1"));
        }
        if !(x0_lo.is_finite() && x0_hi.is_finite() && x0_lo <= x0_hi) {
            return Err(Error::invalid(
                "x0",
                format!("need finite x0_lo <= x0_hi, got [{x0_lo}, {x0_hi}]"),
            ));
        }
        Ok(Self { a, w_max, t_samp, x0_lo, x0_hi })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn t_samp(&self) -> u32 {
        self.t_samp
    }

    pub fn x0(&self) -> (f64, f64) {
        (self.x0_lo, self.x0_hi)
    }

    pub fn x0_width(&self) -> f64 {
        self.x0_hi - self.x0_lo
    }

    /// `a^T`, the growth of the sampled system over one period.
    pub fn a_pow_t(&self) -> f64 {
        self.a.powi(self.t_samp as i32)
    }
}

/// Propagates an interval `steps` steps forward under worst-case noise.
pub fn propagate_interval(lo: f64, hi: f64, plant: &ScalarPlant, steps: u32) -> (f64, f64) {
    debug_assert!(lo <= hi);
    let growth = plant.a.powi(steps as i32);
    let spread = geometric_sum(plant.a, steps) * plant.w_max / 2.0;
    (growth * lo - spread, growth * hi + spread)
}

/// One step of the scalar dynamics.
pub fn step_state(x: f64, plant: &ScalarPlant, w: f64) -> Result<f64> {
    let half_bound = plant.w_max / 2.0;
    if w.abs() > half_bound {
        return Err(Error::NoiseOutOfBounds { w, half_bound });
    }
    Ok(plant.a * x + w)
}

/// Vector plant `x_{k+1} = A x_k + w_k` with `|w_k(i)| <= w_max(i) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorPlant {
    a_mat: DMatrix<f64>,
    w_max: DVector<f64>,
    t_samp: u32,
    x0_box: Vec<(f64, f64)>,
    a_pow_t: DMatrix<f64>,
    jordan: Option<JordanForm>,
}

impl VectorPlant {
    /// Builds the plant. A supplied `(phi, j)` pair must satisfy `A^T = phi^-1 j phi`.
    pub fn new(
        a_mat: DMatrix<f64>,
        w_max: DVector<f64>,
        t_samp: u32,
        x0_box: Vec<(f64, f64)>,
        jordan: Option<(DMatrix<f64>, DMatrix<f64>)>,
    ) -> Result<Self> {
        let n = a_mat.nrows();
        if n == 0 {
            return Err(Error::invalid("a", "dimension must be >= 1"));
        }
        if !a_mat.is_square() {
            return Err(Error::DimensionMismatch { expected: n, got: a_mat.ncols() });
        }
        if a_mat.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("a", "entries must be finite"));
        }
        if w_max.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w_max.len() });
        }
        if w_max.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("w_max", "entries must be finite and >= 0"));
        }
        if t_samp < 1 {
            return Err(Error::invalid("t_samp", "must be >= 1"));
        }
        if x0_box.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x0_box.len() });
        }
        if x0_box.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return Err(Error::invalid("x0", "each bound pair needs finite lo <= hi"));
        }
        let a_pow_t = mat_pow(&a_mat, t_samp);
        let jordan = match jordan {
            Some((phi, j)) => Some(JordanForm::from_parts(phi, j, &a_pow_t)?),
            None => None,
        };
        Ok(Self { a_mat, w_max, t_samp, x0_box, a_pow_t, jordan })
    }

    /// One-dimensional plant with `phi = 1`.
    pub fn from_scalar(plant: &ScalarPlant) -> Self {
        let (lo, hi) = plant.x0();
        Self::new(
            DMatrix::from_element(1, 1, plant.a()),
            DVector::from_element(1, plant.w_max()),
            plant.t_samp(),
            vec![(lo, hi)],
            None,
        )
        .expect("a valid scalar plant is a valid 1-d vector plant")
    }

    pub fn dim(&self) -> usize {
        self.a_mat.nrows()
    }

    pub fn a_mat(&self) -> &DMatrix<f64> {
        &self.a_mat
    }

    pub fn w_max(&self) -> &DVector<f64> {
        &self.w_max
    }

    pub fn t_samp(&self) -> u32 {
        self.t_samp
    }

    pub fn x0_box(&self) -> &[(f64, f64)] {
        &self.x0_box
    }

    /// `A^T` (matrix power over one sampling period).
    pub fn a_pow_t(&self) -> &DMatrix<f64> {
        &self.a_pow_t
    }

    pub fn supplied_jordan(&self) -> Option<&JordanForm> {
        self.jordan.as_ref()
    }

    /// One step of the vector dynamics, checking the noise bound per component.
    pub fn step(&self, x: &DVector<f64>, w: &DVector<f64>) -> Result<DVector<f64>> {
        for (wi, bound) in w.iter().zip(self.w_max.iter()) {
            if wi.abs() > bound / 2.0 {
                return Err(Error::NoiseOutOfBounds { w: *wi, half_bound: bound / 2.0 });
            }
        }
        Ok(&self.a_mat * x + w)
    }
}

/// The `(r, d, p_e)` triple abstracting encoder, channel and decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommAbstraction {
    r_bits: u32,
    d_latency: u32,
    p_e: f64,
}

impl CommAbstraction {
    /// `t_samp` is the sampling period of the plant the link serves (`d <= T`).
    pub fn new(r_bits: u32, d_latency: u32, p_e: f64, t_samp: u32) -> Result<Self> {
        if r_bits < 1 {
            return Err(Error::invalid("r", "must be >= 1"));
        }
        if d_latency < 1 {
            return Err(Error::invalid("d", "must be >= 1"));
        }
        if d_latency > t_samp {
            return Err(Error::invalid(
                "d",
                format!("latency {d_latency} exceeds the sampling period {t_samp}"),
            ));
        }
        if !(0.0..=1.0).contains(&p_e) {
            return Err(Error::invalid("p_e", format!("must lie in [0, 1], got {p_e}")));
        }
        Ok(Self { r_bits, d_latency, p_e })
    }

    pub fn r_bits(&self) -> u32 {
        self.r_bits
    }

    pub fn d_latency(&self) -> u32 {
        self.d_latency
    }

    pub fn p_e(&self) -> f64 {
        self.p_e
    }
}
