//! Sensitivity of the optimal basin from the final search covariance.
//!
//! The covariance is standardized to a correlation matrix `R`. The level set
//! `x^T R^-1 x = 1` is an ellipsoid; its radius along parameter axis `i` is
//! `r_i = (e_i^T R^-1 e_i)^-1/2`. Radii are reported relative to the longest
//! semi-axis `sqrt(lambda_1)`, so a sphere gives 1 everywhere and a small
//! value marks a parameter the fitness is sensitive to.

use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Row-major correlation matrix.
    pub correlation: Vec<Vec<f64>>,
    /// Eigenvalues of the correlation matrix, largest first.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues as fractions of their sum.
    pub scree: Vec<f64>,
    pub radius: Vec<f64>,
    pub normalized_radius: Vec<f64>,
}

/// Relative asymmetry tolerated before a matrix is rejected.
const SYMMETRY_TOLERANCE: f64 = 1e-9;

pub fn sensitivity(cov: &DMatrix<f64>) -> Result<SensitivityReport, AnalysisError> {
    let n = cov.nrows();
    if n == 0 || cov.ncols() != n || cov.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NotPositiveDefinite);
    }
    let scale = cov.amax();
    if (cov - cov.transpose()).amax() > SYMMETRY_TOLERANCE * scale {
        return Err(AnalysisError::NotPositiveDefinite);
    }
    let d: Vec<f64> = (0..n).map(|i| cov[(i, i)]).collect();
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(AnalysisError::NotPositiveDefinite);
    }
    let corr = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            0.5 * (cov[(i, j)] + cov[(j, i)]) / sqrt(d[i] * d[j])
        }
    });
    let chol = corr.clone().cholesky().ok_or(AnalysisError::NotPositiveDefinite)?;
    let inv = chol.inverse();

    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(corr.clone())
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = eigenvalues.iter().sum();
    let scree = eigenvalues.iter().map(|v| v / total).collect();
    let radius: Vec<f64> = (0..n).map(|i| 1.0 / sqrt(inv[(i, i)])).collect();
    let longest = sqrt(eigenvalues[0]);
    let normalized_radius = radius.iter().map(|r| r / longest).collect();

    Ok(SensitivityReport {
        correlation: (0..n).map(|i| corr.row(i).iter().copied().collect()).collect(),
        eigenvalues,
        scree,
        radius,
        normalized_radius,
    })
}
