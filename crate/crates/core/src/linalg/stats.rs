use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigen::{sym_eig, DEFAULT_EIG_TOL};
use crate::linalg::svd::svd_thin;
use crate::linalg::DenseMatrix;

/// Spectral quantities of `A` for a rank parameter `k` and numeric-rank order `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    pub k: usize,
    pub p: usize,
    pub sigma_sq: Vec<f64>,
    /// `(σ_k² − σ_{k+1}²) / σ₁²`
    pub separation_delta: f64,
    /// `σ₁² / σ_k²`; infinite when `σ_k = 0`.
    pub condition_kappa_k: f64,
    pub stable_rank: f64,
    pub numeric_rank_p: f64,
}

impl SpectralStats {
    pub fn frobenius_sq(&self) -> f64 {
        self.sigma_sq.iter().sum()
    }

    /// `‖A − A_k‖_F²`
    pub fn tail_mass(&self, k: usize) -> f64 {
        self.sigma_sq.iter().skip(k).sum()
    }
}

pub fn spectral_stats(a: &DenseMatrix, k: usize, p: usize) -> Result<SpectralStats> {
    let s = svd_thin(a)?;
    stats_from_sigma_sq(s.sigma_sq(), k, p)
}

/// Builds the stats from squared singular values sorted descending.
pub fn stats_from_sigma_sq(sigma_sq: Vec<f64>, k: usize, p: usize) -> Result<SpectralStats> {
    let m = sigma_sq.len();
    if k == 0 || k >= m {
        return Err(Error::InvalidArgument(format!("k = {k} must satisfy 1 <= k < {m}")));
    }
    if p == 0 || p > m {
        return Err(Error::InvalidArgument(format!("p = {p} must satisfy 1 <= p <= {m}")));
    }
    let s1 = sigma_sq[0];
    if !(s1 > 0.0) {
        return Err(Error::DegenerateSpectrum("matrix is zero".into()));
    }
    let fro: f64 = sigma_sq.iter().sum();
    let top_p: f64 = sigma_sq[..p].iter().sum();
    let sk = sigma_sq[k - 1];
    Ok(SpectralStats {
        k,
        p,
        separation_delta: ((sk - sigma_sq[k]) / s1).clamp(0.0, 1.0),
        condition_kappa_k: if sk > 0.0 { (s1 / sk).max(1.0) } else { f64::INFINITY },
        stable_rank: (fro / s1).max(1.0),
        numeric_rank_p: (fro / (top_p / p as f64)).max(1.0),
        sigma_sq,
    })
}

/// Operator norm of a symmetric matrix: largest eigenvalue magnitude.
pub fn op_norm_sym(m: &DenseMatrix) -> Result<f64> {
    Ok(sym_eig(m, DEFAULT_EIG_TOL)?.spectral_radius())
}

/// Operator norm `σ₁(A)` of a general matrix.
pub fn op_norm(a: &DenseMatrix) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let g = if a.cols() <= a.rows() { a.gram_cols() } else { a.gram_rows() };
    Ok(op_norm_sym(&g)?.sqrt())
}
