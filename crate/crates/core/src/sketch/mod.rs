//! Streaming sketches: Frequent Directions, pseudorandom sign projection,
//! and length-squared row/column sampling.

pub mod covariance;
pub mod fd;
pub mod rng;
pub mod sampling;
pub mod sign;
pub mod snapshot;

pub use covariance::ProjectedCovariance;
pub use fd::{fd_sketch, FdState};
pub use sampling::{
    apply_column_plan, column_sample_plan, row_sample, ColumnPlan, ColumnSampler, RowSampler,
    SamplerState,
};
pub use sign::{SignMatrix, SignProjector, DEFAULT_INDEPENDENCE};
pub use snapshot::{Snapshot, SnapshotKind};

/// Any streaming accumulator the pipelines can hold between passes.
#[derive(Debug, Clone)]
pub enum SketchState {
    Fd(FdState),
    Projected(ProjectedCovariance),
    Columns(ColumnSampler),
    Rows(RowSampler),
}
