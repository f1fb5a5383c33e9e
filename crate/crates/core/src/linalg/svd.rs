use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::eigen::{apply_sign_convention, sym_eig, DEFAULT_EIG_TOL};
use crate::linalg::matrix::{axpy, dot, norm_sq, DenseMatrix};

/// Squared singular values at or below `RANK_FLOOR * σ₁²` end the usable rank.
pub const RANK_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeftVectors {
    Skip,
    Compute,
}

/// Thin SVD `A = U Σ Vᵀ`.
///
/// `values` has length `min(n, d)`. Vectors are stored as matrix rows:
/// `right_vectors.row(i)` is `vᵢ`, `left_vectors.row(i)` is `uᵢ`.
/// When `d <= n` all `d` right vectors are present; otherwise only the first
/// `rank_used`. Left vectors, when requested, cover `rank_used` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    pub values: Vec<f64>,
    pub right_vectors: DenseMatrix,
    pub left_vectors: Option<DenseMatrix>,
    pub rank_used: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.right_vectors.cols()
    }

    pub fn sigma_sq(&self) -> Vec<f64> {
        self.values.iter().map(|s| s * s).collect()
    }

    pub fn right(&self, i: usize) -> &[f64] {
        self.right_vectors.row(i)
    }

    /// Number of right vectors stored.
    pub fn num_right(&self) -> usize {
        self.right_vectors.rows()
    }
}

pub fn svd_thin(a: &DenseMatrix) -> Result<SpectralDecomposition> {
    svd_thin_with(a, LeftVectors::Skip, RANK_FLOOR)
}

/// Thin SVD through the eigendecomposition of the smaller Gram matrix.
pub fn svd_thin_with(
    a: &DenseMatrix,
    left: LeftVectors,
    rank_floor: f64,
) -> Result<SpectralDecomposition> {
    if a.is_empty() {
        return Err(Error::Empty(format!("cannot decompose a {}x{} matrix", a.rows(), a.cols())));
    }
    let (n, d) = a.shape();
    if d <= n {
        let eig = sym_eig(&a.gram_cols(), DEFAULT_EIG_TOL)?;
        let values: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let rank_used = rank_from_values(&values, rank_floor);
        let right_vectors = eig.vectors;
        let left_vectors = match left {
            LeftVectors::Skip => None,
            LeftVectors::Compute => {
                let mut u = DenseMatrix::zeros(rank_used, n);
                for i in 0..rank_used {
                    let v = right_vectors.row(i);
                    let row = u.row_mut(i);
                    for (r, x) in a.iter_rows().zip(row.iter_mut()) {
                        *x = dot(r, v) / values[i];
                    }
                }
                Some(u)
            }
        };
        Ok(SpectralDecomposition {
            values,
            right_vectors,
            left_vectors,
            rank_used,
        })
    } else {
        let eig = sym_eig(&a.gram_rows(), DEFAULT_EIG_TOL)?;
        let values: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let rank_used = rank_from_values(&values, rank_floor);
        let mut u = eig.vectors;
        u.truncate_rows(rank_used);
        let mut v = DenseMatrix::zeros(rank_used, d);
        for i in 0..rank_used {
            let ui = u.row(i).to_vec();
            let row = v.row_mut(i);
            for (r, &c) in a.iter_rows().zip(&ui) {
                axpy(c / values[i], r, row);
            }
        }
        reorthonormalize(&mut v);
        for i in 0..rank_used {
            if apply_sign_convention(v.row_mut(i)) {
                u.row_mut(i).iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(SpectralDecomposition {
            values,
            right_vectors: v,
            left_vectors: match left {
                LeftVectors::Skip => None,
                LeftVectors::Compute => Some(u),
            },
            rank_used,
        })
    }
}

/// Right singular system of any `A` with `AᵀA = cov`, read off the
/// eigendecomposition of the (PSD) covariance.
pub fn decomposition_from_covariance(
    cov: &DenseMatrix,
    rank_floor: f64,
) -> Result<SpectralDecomposition> {
    let eig = sym_eig(cov, DEFAULT_EIG_TOL)?;
    let values: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let rank_used = rank_from_values(&values, rank_floor);
    Ok(SpectralDecomposition {
        values,
        right_vectors: eig.vectors,
        left_vectors: None,
        rank_used,
    })
}

/// Count of leading values with `σᵢ² > floor·σ₁²`.
pub fn rank_from_values(values: &[f64], floor: f64) -> usize {
    let Some(&s1) = values.first() else { return 0 };
    if s1 <= 0.0 {
        return 0;
    }
    let cut = floor * s1 * s1;
    values.iter().take_while(|&&s| s * s > cut).count()
}

/// `A_k = Σ_{i≤k} σᵢ uᵢ vᵢᵀ`.
pub fn truncate(decomp: &SpectralDecomposition, k: usize) -> Result<DenseMatrix> {
    let u = decomp
        .left_vectors
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("truncate needs left singular vectors".into()))?;
    if k > decomp.rank_used {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds rank_used = {}",
            decomp.rank_used
        )));
    }
    let n = u.cols();
    let d = decomp.dim();
    let mut out = DenseMatrix::zeros(n, d);
    for i in 0..k {
        let v = decomp.right(i);
        let s = decomp.values[i];
        for (r, &ui) in u.row(i).iter().enumerate() {
            if ui != 0.0 {
                axpy(s * ui, v, out.row_mut(r));
            }
        }
    }
    Ok(out)
}

/// Modified Gram-Schmidt over the rows, two passes.
fn reorthonormalize(v: &mut DenseMatrix) {
    let d = v.cols();
    for _ in 0..2 {
        for i in 0..v.rows() {
            let (head, tail) = v.data_mut().split_at_mut(i * d);
            let row = &mut tail[..d];
            for j in 0..i {
                let prev = &head[j * d..(j + 1) * d];
                let c = dot(row, prev);
                axpy(-c, prev, row);
            }
            let nrm = norm_sq(row).sqrt();
            if nrm > 0.0 {
                row.iter_mut().for_each(|x| *x /= nrm);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn reconstruct(s: &SpectralDecomposition) -> DenseMatrix {
        truncate(s, s.rank_used).unwrap()
    }

    #[test]
    fn diagonal_case() {
        let a = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let s = svd_thin(&a).unwrap();
        assert_eq!(s.values, vec![2.0, 1.0]);
        assert_eq!(s.right_vectors, DenseMatrix::identity(2));
        assert!(s.left_vectors.is_none());
    }

    #[test]
    fn scaled_identity() {
        let a = DenseMatrix::identity(4).scaled(-3.0);
        let s = svd_thin(&a).unwrap();
        assert!(s.values.iter().all(|&v| (v - 3.0).abs() < 1e-14));
    }

    #[test]
    fn reconstruction_tall_and_wide() {
        for (n, d) in [(6, 4), (4, 6), (9, 9), (1, 5), (5, 1)] {
            let a = random(n, d, (n * 10 + d) as u64);
            let s = svd_thin_with(&a, LeftVectors::Compute, RANK_FLOOR).unwrap();
            assert_eq!(s.rank_used, n.min(d));
            let resid = reconstruct(&s).sub(&a).unwrap().frobenius();
            assert!(resid <= 1e-8 * a.frobenius(), "{n}x{d}: {resid:e}");
            let vvt = s.right_vectors.matmul(&s.right_vectors.transpose()).unwrap();
            let dev = vvt.sub(&DenseMatrix::identity(s.num_right())).unwrap().max_abs();
            assert!(dev <= 1e-10, "{n}x{d}: {dev:e}");
        }
    }

    #[test]
    fn eckart_young() {
        let a = random(5, 3, 11);
        let s = svd_thin_with(&a, LeftVectors::Compute, RANK_FLOOR).unwrap();
        let a1 = truncate(&s, 1).unwrap();
        let err = a.sub(&a1).unwrap().frobenius_sq();
        let tail = s.values[1].powi(2) + s.values[2].powi(2);
        assert!((err - tail).abs() <= 1e-9, "{err} vs {tail}");
    }

    #[test]
    fn truncate_diag() {
        let a = DenseMatrix::from_diag(&[2.0, 1.0]);
        let s = svd_thin_with(&a, LeftVectors::Compute, RANK_FLOOR).unwrap();
        let a1 = truncate(&s, 1).unwrap();
        assert_eq!(a1, DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 0.0]]).unwrap());
        assert!(truncate(&s, 3).is_err());
        assert!(truncate(&svd_thin(&a).unwrap(), 1).is_err());
    }

    #[test]
    fn rank_deficient_wide() {
        // Rank 1, wide: only one right vector survives the floor.
        let a = DenseMatrix::from_fn(2, 5, |i, j| (i as f64 + 1.0) * (j as f64 + 1.0));
        let s = svd_thin_with(&a, LeftVectors::Compute, RANK_FLOOR).unwrap();
        assert_eq!(s.rank_used, 1);
        assert_eq!(s.values.len(), 2);
        assert_eq!(s.num_right(), 1);
        let resid = reconstruct(&s).sub(&a).unwrap().frobenius();
        assert!(resid <= 1e-10 * a.frobenius());
    }

    #[test]
    fn empty_is_an_error() {
        assert!(matches!(svd_thin(&DenseMatrix::zeros(0, 3)), Err(Error::Empty(_))));
    }
}
