//! Dense matrices, symmetric eigensolver, thin SVD and spectral statistics.

pub mod eigen;
pub mod matrix;
pub mod stats;
pub mod svd;

pub use eigen::{sym_eig, SymmetricEigen, DEFAULT_EIG_TOL, MAX_SWEEPS};
pub use matrix::{axpy, dot, norm_sq, DenseMatrix};
pub use stats::{op_norm, op_norm_sym, spectral_stats, stats_from_sigma_sq, SpectralStats};
pub use svd::{decomposition_from_covariance, rank_from_values, svd_thin, svd_thin_with, truncate, LeftVectors, SpectralDecomposition, RANK_FLOOR};
