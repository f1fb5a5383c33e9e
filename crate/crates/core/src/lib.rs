//! Subspace anomaly scores computed exactly and from streaming sketches.
//!
//! The crate is organised bottom-up: [`linalg`] supplies the dense kernels,
//! [`scores`] the exact scores, [`sketch`] the streaming sketches, and
//! [`pipeline`] wires sketches into multi-pass scoring. [`verify`] holds the
//! numeric bound checkers and [`eval`] the data I/O, labelling and F1 sweep.

pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod parallel;
pub mod pipeline;
pub mod scores;
pub mod sketch;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SpectralDecomposition, SpectralStats};
pub use scores::{ScoreKind, ScoreMode, ScoreRecord};
