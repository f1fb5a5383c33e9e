//! Frequent Directions with a `2ℓ`-row buffer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{add_outer_upper, mirror_upper};
use crate::linalg::{svd_thin_with, DenseMatrix, LeftVectors};

const SHRINK_FLOOR: f64 = 1e-14;

/// Streaming FD sketch. Rows are appended until the buffer holds `2ℓ`; the
/// buffer is then shrunk by `σ_ℓ²` to at most `ℓ − 1` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdState {
    ell: usize,
    d: usize,
    buffer: DenseMatrix,
    shrink_count: u64,
}

impl FdState {
    pub fn new(ell: usize, d: usize) -> Result<Self> {
        if ell < 2 {
            return Err(Error::InvalidArgument(format!("ell must be at least 2, got {ell}")));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("row width must be positive".into()));
        }
        Ok(Self {
            ell,
            d,
            buffer: DenseMatrix::zeros(0, d),
            shrink_count: 0,
        })
    }

    /// Rebuilds a state from persisted sketch rows.
    pub fn from_parts(ell: usize, rows: DenseMatrix, shrink_count: u64) -> Result<Self> {
        let mut s = Self::new(ell, rows.cols())?;
        if rows.rows() >= 2 * ell {
            return Err(Error::Snapshot(format!(
                "FD snapshot holds {} rows, capacity is {}",
                rows.rows(),
                2 * ell - 1
            )));
        }
        s.buffer = rows;
        s.shrink_count = shrink_count;
        Ok(s)
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn fill(&self) -> usize {
        self.buffer.rows()
    }

    pub fn shrink_count(&self) -> u64 {
        self.shrink_count
    }

    /// Appends a row, shrinking when the buffer becomes full. Returns whether
    /// a shrink happened.
    pub fn update(&mut self, row: &[f64]) -> Result<bool> {
        if row.len() != self.d {
            return Err(Error::WidthMismatch {
                row: self.fill(),
                expected: self.d,
                got: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: self.fill(), col: j });
        }
        self.buffer.push_row_unchecked(row);
        if self.fill() == 2 * self.ell {
            self.shrink()?;
            return Ok(true);
        }
        Ok(false)
    }

    fn shrink(&mut self) -> Result<()> {
        // Directions below the Gram round-off level carry no usable mass.
        let svd = svd_thin_with(&self.buffer, LeftVectors::Skip, SHRINK_FLOOR)?;
        let cut = svd.values.get(self.ell - 1).copied().unwrap_or(0.0).powi(2);
        let mut next = DenseMatrix::zeros(0, self.d);
        for i in 0..svd.num_right().min(self.ell - 1) {
            let s = (svd.values[i].powi(2) - cut).max(0.0).sqrt();
            if s <= 0.0 {
                break;
            }
            let row: Vec<f64> = svd.right(i).iter().map(|v| v * s).collect();
            next.push_row_unchecked(&row);
        }
        self.buffer = next;
        self.shrink_count += 1;
        Ok(())
    }

    /// The sketch `Ã`: current buffer rows.
    pub fn sketch(&self) -> &DenseMatrix {
        &self.buffer
    }

    /// `ÃᵀÃ` (d × d).
    pub fn covariance(&self) -> DenseMatrix {
        let mut g = vec![0.0; self.d * self.d];
        for r in self.buffer.iter_rows() {
            add_outer_upper(&mut g, self.d, r, 1.0);
        }
        mirror_upper(&mut g, self.d);
        DenseMatrix::new(self.d, self.d, g).expect("finite covariance")
    }
}

/// Convenience: FD sketch of every row of `a`.
pub fn fd_sketch(a: &DenseMatrix, ell: usize) -> Result<FdState> {
    let mut s = FdState::new(ell, a.cols())?;
    for r in a.iter_rows() {
        s.update(r)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{op_norm_sym, svd_thin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn lossless_without_shrink() {
        let a = random(9, 6, 1);
        let s = fd_sketch(&a, 5).unwrap();
        assert_eq!(s.shrink_count(), 0);
        let diff = s.covariance().sub(&a.gram_cols()).unwrap().max_abs();
        assert!(diff <= 1e-10);
    }

    #[test]
    fn bound_holds_for_every_k() {
        let (n, d, ell) = (200, 40, 15);
        let a = random(n, d, 2);
        let s = fd_sketch(&a, ell).unwrap();
        assert!(s.fill() < 2 * ell);
        let err = op_norm_sym(&a.gram_cols().sub(&s.covariance()).unwrap()).unwrap();
        let sq = svd_thin(&a).unwrap().sigma_sq();
        let fro: f64 = sq.iter().sum();
        assert!(err <= fro / ell as f64);
        for k in 0..ell {
            let tail: f64 = sq[k..].iter().sum();
            assert!(err <= tail / (ell - k) as f64 + 1e-9, "k={k}");
        }
    }

    #[test]
    fn frobenius_never_exceeds_prefix() {
        let a = random(120, 10, 3);
        let mut s = FdState::new(4, 10).unwrap();
        let mut mass = 0.0;
        for r in a.iter_rows() {
            mass += crate::linalg::norm_sq(r);
            s.update(r).unwrap();
            assert!(s.sketch().frobenius_sq() <= mass * (1.0 + 1e-12));
            assert!(s.fill() < 8);
        }
        assert!(s.shrink_count() > 0);
    }

    #[test]
    fn width_mismatch() {
        let mut s = FdState::new(3, 2).unwrap();
        assert!(matches!(s.update(&[1.0]), Err(Error::WidthMismatch { .. })));
        assert!(FdState::new(1, 2).is_err());
    }
}
