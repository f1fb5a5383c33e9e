use std::io;

use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("row {row} has width {got}, expected {expected}")]
    WidthMismatch { row: usize, expected: usize, got: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("rank-deficient basis: sigma_{k} = {sigma_k:e} is below the rank floor ({floor:e} * sigma_1)")]
    RankDeficientBasis { k: usize, sigma_k: f64, floor: f64 },

    #[error("sketch has rank {rank} < k = {k}; increase ell (currently {ell}) to at least {suggested}")]
    RankDeficientSketch {
        k: usize,
        rank: usize,
        ell: usize,
        suggested: usize,
    },

    #[error("input has zero total mass")]
    ZeroMass,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
