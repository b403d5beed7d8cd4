use nalgebra::{DMatrix, DVector};

use super::linalg::inf_norm;
use super::plant::VectorPlant;
use crate::error::{Error, Result};

/// Relative tolerance on the round trip `phi^-1 j phi = A^T`.
const ROUND_TRIP_TOL: f64 = 1e-8;
/// Entries smaller than this (relative to the matrix scale) count as structural zeros.
const STRUCTURAL_ZERO: f64 = 1e-12;
/// Imaginary parts or eigenvalue gaps below this (relative) signal a repeated eigenvalue.
const REPEATED_TOL: f64 = 1e-6;

/// A real Jordan-type decomposition `A^T = phi^-1 j phi` with `j` upper triangular
/// and superdiagonal entries in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanForm {
    phi: DMatrix<f64>,
    phi_inv: DMatrix<f64>,
    j: DMatrix<f64>,
}

impl JordanForm {
    /// Validates a user-supplied pair against `a_pow_t`.
    pub fn from_parts(phi: DMatrix<f64>, j: DMatrix<f64>, a_pow_t: &DMatrix<f64>) -> Result<Self> {
        let n = a_pow_t.nrows();
        for m in [&phi, &j] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
            }
        }
        if phi.iter().chain(j.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("jordan", "entries must be finite"));
        }
        for r in 0..n {
            for c in 0..r {
                if j[(r, c)] != 0.0 {
                    return Err(Error::invalid("jordan.j", "must be upper triangular"));
                }
            }
            if r + 1 < n && j[(r, r + 1)] != 0.0 && j[(r, r + 1)] != 1.0 {
                return Err(Error::invalid("jordan.j", "superdiagonal entries must be 0 or 1"));
            }
        }
        let phi_inv = phi
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("jordan.phi", "matrix is singular"))?;
        let form = Self { phi, phi_inv, j };
        let err = form.round_trip_error(a_pow_t);
        if err > ROUND_TRIP_TOL * (1.0 + inf_norm(a_pow_t)) {
            return Err(Error::invalid(
                "jordan",
                format!("phi^-1 j phi differs from A^T by {err:e}"),
            ));
        }
        Ok(form)
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn phi_inv(&self) -> &DMatrix<f64> {
        &self.phi_inv
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// Eigenvalues of `A^T`, i.e. `lambda_i(A)^T`, read off the diagonal of `j`.
    pub fn eigenvalues(&self) -> DVector<f64> {
        self.j.diagonal()
    }

    /// `|| phi^-1 j phi - m ||_inf`.
    pub fn round_trip_error(&self, m: &DMatrix<f64>) -> f64 {
        inf_norm(&(&self.phi_inv * &self.j * &self.phi - m))
    }
}

/// Returns the decomposition of `A^T` for `plant`.
///
/// A supplied decomposition wins. Otherwise two cases are handled automatically:
/// `A^T` already upper bidiagonal (scaled into Jordan shape by a diagonal `phi`),
/// and `A^T` with distinct real eigenvalues (diagonalized). Anything else needs a
/// user-supplied `(phi, j)`.
pub fn jordan_decompose(plant: &VectorPlant) -> Result<JordanForm> {
    if let Some(form) = plant.supplied_jordan() {
        return Ok(form.clone());
    }
    let a_t = plant.a_pow_t();
    if let Some(form) = bidiagonal_form(a_t) {
        return Ok(form);
    }
    diagonalize(a_t)
}

fn bidiagonal_form(a_t: &DMatrix<f64>) -> Option<JordanForm> {
    let n = a_t.nrows();
    let zero_tol = STRUCTURAL_ZERO * (1.0 + inf_norm(a_t));
    for r in 0..n {
        for c in 0..n {
            if c != r && c != r + 1 && a_t[(r, c)].abs() > zero_tol {
                return None;
            }
        }
    }
    let mut j = DMatrix::zeros(n, n);
    let mut scale = vec![1.0; n];
    for i in 0..n {
        j[(i, i)] = a_t[(i, i)];
        if i + 1 < n {
            let mut c = a_t[(i, i + 1)];
            if (c - 1.0).abs() <= STRUCTURAL_ZERO {
                c = 1.0;
            }
            if c.abs() > zero_tol {
                j[(i, i + 1)] = 1.0;
                scale[i + 1] = scale[i] * c;
            }
        }
    }
    let phi = DMatrix::from_diagonal(&DVector::from_vec(scale));
    JordanForm::from_parts(phi, j, a_t).ok()
}

fn diagonalize(a_t: &DMatrix<f64>) -> Result<JordanForm> {
    let n = a_t.nrows();
    let scale = 1.0 + inf_norm(a_t);
    let eig = a_t.complex_eigenvalues();

    let mut lambdas = Vec::with_capacity(n);
    for z in eig.iter() {
        if z.im.abs() > REPEATED_TOL * scale {
            return Err(Error::NonRealEigenvalue { re: z.re, im: z.im });
        }
        if z.im != 0.0 {
            return Err(Error::DegenerateDecomposition(format!(
                "eigenvalue {} is (numerically) repeated",
                z.re
            )));
        }
        lambdas.push(z.re);
    }
    lambdas.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    for w in lambdas.windows(2) {
        if (w[0] - w[1]).abs() <= REPEATED_TOL * scale {
            return Err(Error::DegenerateDecomposition(format!(
                "eigenvalue {} is repeated",
                w[0]
            )));
        }
    }

    // Columns of `p` are right eigenvectors of A^T, so A^T = p diag(lambda) p^-1.
    let mut p = DMatrix::zeros(n, n);
    for (k, &lambda) in lambdas.iter().enumerate() {
        let shifted = a_t - DMatrix::identity(n, n) * lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("v_t requested");
        let idx = svd.singular_values.argmin().0;
        let v = v_t.row(idx).transpose();
        p.set_column(k, &v);
    }
    let phi = p
        .try_inverse()
        .ok_or_else(|| Error::DegenerateDecomposition("eigenvector matrix is singular".into()))?;
    let j = DMatrix::from_diagonal(&DVector::from_vec(lambdas));
    JordanForm::from_parts(phi, j, a_t)
        .map_err(|e| Error::DegenerateDecomposition(format!("eigenvector basis rejected: {e}")))
}
