//! Monotonicity-test upper bounds for the reconstruction box.
//!
//! For data `V^delta` and noise level `delta`, the bound of pixel `k` is the
//! largest `alpha` with `-alpha S_k + delta I + |V^delta| >= 0`. Factoring
//! `delta I + |V^delta| = L L^T` turns this into
//! `beta_k = 1 / lambda_max(L^-1 S_k L^-T)`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matfun::{cholesky, forward_substitute, matrix_abs, sym_eig, SymmetricMatrix};
use crate::ntd::{MeasurementMatrix, SensitivityMatrix};

/// Relative spectral floor substituted for `delta = 0`.
pub const DELTA_FLOOR_REL: f64 = 1e-12;
/// Absolute floor used when the data matrix itself vanishes.
pub const DELTA_FLOOR_ABS: f64 = 1e-200;

/// `a = 1 - 1 / (1 + gamma_min)`.
pub fn contrast_bound(gamma_min: f64) -> Result<f64> {
    if !(gamma_min > 0.0 && gamma_min.is_finite()) {
        return Err(Error::Domain(format!(
            "minimum contrast must be positive, got {gamma_min}"
        )));
    }
    Ok(1.0 - 1.0 / (1.0 + gamma_min))
}

/// The noise level actually used in the test: `delta_abs`, or the spectral
/// floor when `delta_abs` is zero.
pub fn effective_delta(v_delta: &MeasurementMatrix, delta_abs: f64) -> Result<f64> {
    if !(delta_abs >= 0.0 && delta_abs.is_finite()) {
        return Err(Error::Domain(format!(
            "noise level must be finite and >= 0, got {delta_abs}"
        )));
    }
    Ok(if delta_abs > 0.0 {
        delta_abs
    } else {
        (DELTA_FLOOR_REL * v_delta.frobenius_norm()).max(DELTA_FLOOR_ABS)
    })
}

/// Cholesky factor of `delta I + |V^delta|`, shared across pixels.
#[derive(Debug, Clone)]
pub struct MonotonicityTest {
    inverse_factor: DMatrix<f64>,
    delta: f64,
}

impl MonotonicityTest {
    pub fn new(v_delta: &MeasurementMatrix, delta_abs: f64) -> Result<Self> {
        let delta = effective_delta(v_delta, delta_abs)?;
        let v = SymmetricMatrix::symmetrize(&v_delta.entries)?;
        let n = v.dim();
        let shifted = matrix_abs(&v)?.into_matrix() + DMatrix::identity(n, n) * delta;
        let l = cholesky(&SymmetricMatrix::new(shifted)?)?;
        Ok(Self {
            inverse_factor: forward_substitute(&l, &DMatrix::identity(n, n)),
            delta,
        })
    }

    /// Noise level used in the shift.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `1 / lambda_max(L^-1 S L^-T)`.
    pub fn beta(&self, s: &DMatrix<f64>) -> Result<f64> {
        if s.nrows() != self.inverse_factor.nrows() || !s.is_square() {
            return Err(Error::Dimension(format!(
                "sensitivity matrix is {}x{}, data is {}x{}",
                s.nrows(),
                s.ncols(),
                self.inverse_factor.nrows(),
                self.inverse_factor.nrows()
            )));
        }
        let w = &self.inverse_factor * s * self.inverse_factor.transpose();
        let top = sym_eig(&SymmetricMatrix::symmetrize(&w)?)?.max();
        if !(top > 0.0) {
            return Err(Error::Domain(format!(
                "sensitivity matrix is not positive definite (top eigenvalue {top:e})"
            )));
        }
        Ok(1.0 / top)
    }
}

pub fn compute_beta(
    s_k: &SensitivityMatrix,
    v_delta: &MeasurementMatrix,
    delta_abs: f64,
) -> Result<f64> {
    MonotonicityTest::new(v_delta, delta_abs)?.beta(&s_k.entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsVector {
    pub beta: Vec<f64>,
    /// `min(a, beta_k)`.
    pub effective_upper: Vec<f64>,
    pub contrast_bound: f64,
    /// Noise level used in the test (after flooring).
    pub delta_abs: f64,
}

pub fn compute_bounds(
    s: &[SensitivityMatrix],
    v_delta: &MeasurementMatrix,
    delta_abs: f64,
    a: f64,
) -> Result<BoundsVector> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!(
            "contrast bound must lie in (0, 1), got {a}"
        )));
    }
    let test = MonotonicityTest::new(v_delta, delta_abs)?;
    let beta: Vec<f64> = s
        .par_iter()
        .map(|sk| test.beta(&sk.entries))
        .collect::<Result<_>>()?;
    let effective_upper = beta.iter().map(|&b| b.min(a)).collect();
    Ok(BoundsVector {
        beta,
        effective_upper,
        contrast_bound: a,
        delta_abs: test.delta(),
    })
}
