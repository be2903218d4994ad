use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Which process the covariance describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// Brownian-bridge covariance of the empirical CDF at the bin edges.
    Bridge,
    /// Covariance of the bin proportions (increments of the bridge).
    Increment,
    /// Kaplan-Meier process at the bin edges.
    KaplanMeier,
    /// Increments of the Nelson-Aalen process.
    NelsonAalen,
}

/// A symmetric `K x K` covariance matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceK {
    pub kind: CovarianceKind,
    pub matrix: Vec<Vec<f64>>,
}

impl CovarianceK {
    pub(crate) fn from_fn(kind: CovarianceKind, k: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        CovarianceK {
            kind,
            matrix: (0..k).map(|i| (0..k).map(|j| f(i, j)).collect()).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.matrix.len()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let k = self.k();
        DMatrix::from_fn(k, k, |i, j| self.matrix[i][j])
    }
}

fn check_unit(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(domain(format!("{what} needs at least one bin")));
    }
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && (0.0..=1.0).contains(*x))) {
        return Err(domain(format!("{what} value {x} outside [0, 1]")));
    }
    Ok(())
}

/// `F(t_i) (1 - F(t_j))` for `i <= j`, completed symmetrically.
pub fn sigma_bridge(f: &[f64]) -> Result<CovarianceK> {
    check_unit(f, "CDF")?;
    if f.windows(2).any(|w| w[0] > w[1]) {
        return Err(domain("CDF values must be non-decreasing"));
    }
    Ok(CovarianceK::from_fn(CovarianceKind::Bridge, f.len(), |i, j| {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        f[lo] * (1.0 - f[hi])
    }))
}

/// `diag(dF) - dF dF^T`.
pub fn sigma_star(delta: &[f64]) -> Result<CovarianceK> {
    check_unit(delta, "bin mass")?;
    let total: f64 = delta.iter().sum();
    if total > 1.0 + 1e-12 {
        return Err(domain(format!("bin masses sum to {total} > 1")));
    }
    Ok(CovarianceK::from_fn(CovarianceKind::Increment, delta.len(), |i, j| {
        let d = if i == j { delta[i] } else { 0.0 };
        d - delta[i] * delta[j]
    }))
}

/// Lower-triangular matrix of ones: turns bin masses into CDF values.
pub fn cumulation_matrix(k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| if j <= i { 1.0 } else { 0.0 })
}

/// Inverse of [`cumulation_matrix`]: first differences.
pub fn differencing_matrix(k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else if j + 1 == i {
            -1.0
        } else {
            0.0
        }
    })
}
