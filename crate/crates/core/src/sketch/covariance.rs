use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{add_outer_upper, mirror_upper};
use crate::linalg::DenseMatrix;

/// Running `ℓ × ℓ` covariance of projected rows `y = Rᵀa` (upper triangle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedCovariance {
    ell: usize,
    upper: Vec<f64>,
    rows_seen: u64,
}

impl ProjectedCovariance {
    pub fn new(ell: usize) -> Self {
        Self {
            ell,
            upper: vec![0.0; ell * ell],
            rows_seen: 0,
        }
    }

    pub fn from_matrix(cov: &DenseMatrix) -> Result<Self> {
        if cov.asymmetry() != Some(0.0) {
            return Err(Error::Snapshot("projected covariance must be square and symmetric".into()));
        }
        Ok(Self {
            ell: cov.rows(),
            upper: cov.as_slice().to_vec(),
            rows_seen: 0,
        })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn rows_seen(&self) -> u64 {
        self.rows_seen
    }

    pub fn update(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.ell {
            return Err(Error::WidthMismatch {
                row: self.rows_seen as usize,
                expected: self.ell,
                got: y.len(),
            });
        }
        add_outer_upper(&mut self.upper, self.ell, y, 1.0);
        self.rows_seen += 1;
        Ok(())
    }

    /// Full symmetric `ÃᵀÃ`.
    pub fn matrix(&self) -> DenseMatrix {
        let mut g = self.upper.clone();
        mirror_upper(&mut g, self.ell);
        DenseMatrix::new(self.ell, self.ell, g).expect("finite covariance")
    }
}
