//! Multi-pass streaming pipelines: build a sketch, extract an approximate
//! top-k basis, then score every row against it.

pub mod sizing;
pub mod source;

use std::fmt;
use std::str::FromStr;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::add_outer_upper;
use crate::linalg::{decomposition_from_covariance, dot, norm_sq, DenseMatrix, SpectralDecomposition, RANK_FLOOR};
use crate::parallel;
use crate::scores::{ScoreMode, ScoreRecord};
use crate::sketch::sign::MATERIALIZE_LIMIT;
use crate::sketch::{
    ColumnPlan, ColumnSampler, FdState, ProjectedCovariance, RowSampler, SignMatrix, SignProjector,
    DEFAULT_INDEPENDENCE,
};

pub use source::{CountingSource, CsvSource, MatrixSource, RowSource};

/// Rows buffered before a parallel scoring batch.
const SCORE_BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchMode {
    Fd,
    Rproj,
    Colsample,
    Rowsample,
    OnlineFd,
}

impl SketchMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fd => "fd",
            Self::Rproj => "rproj",
            Self::Colsample => "colsample",
            Self::Rowsample => "rowsample",
            Self::OnlineFd => "online-fd",
        }
    }

    /// Whether the sketch depends on the seed.
    pub fn is_randomized(self) -> bool {
        matches!(self, Self::Rproj | Self::Colsample | Self::Rowsample)
    }

    /// Passes over the data the pipeline makes.
    pub fn passes(self) -> usize {
        match self {
            Self::Fd | Self::Rproj | Self::Rowsample => 2,
            Self::Colsample => 3,
            Self::OnlineFd => 1,
        }
    }
}

impl fmt::Display for SketchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SketchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd" => Ok(Self::Fd),
            "rproj" => Ok(Self::Rproj),
            "colsample" => Ok(Self::Colsample),
            "rowsample" => Ok(Self::Rowsample),
            "online-fd" | "online" => Ok(Self::OnlineFd),
            other => Err(Error::InvalidArgument(format!("unknown sketch mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub ell: usize,
    pub seed: u64,
    pub lambda: Option<f64>,
    pub mode: SketchMode,
    pub rank_floor: f64,
    pub independence: usize,
}

impl PipelineConfig {
    pub fn new(mode: SketchMode, k: usize, ell: usize, seed: u64) -> Self {
        Self {
            k,
            ell,
            seed,
            lambda: None,
            mode,
            rank_floor: RANK_FLOOR,
            independence: DEFAULT_INDEPENDENCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.ell < 2 {
            return Err(Error::InvalidArgument(format!("ell must be at least 2, got {}", self.ell)));
        }
        if self.k >= self.ell {
            return Err(Error::InvalidArgument(format!(
                "k = {} must be smaller than ell = {}",
                self.k, self.ell
            )));
        }
        if !(self.rank_floor >= 0.0 && self.rank_floor < 1.0) {
            return Err(Error::InvalidArgument(format!("rank floor {} out of range", self.rank_floor)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisSpace {
    RowSpace,
    ProjectedSpace,
}

/// Top-k singular values and right vectors of a sketch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxBasis {
    pub values: Vec<f64>,
    pub right_vectors: DenseMatrix,
    pub space: BasisSpace,
}

impl ApproxBasis {
    /// Extracts the top `k` directions of the sketch covariance `ÃᵀÃ`.
    pub fn from_covariance(
        cov: &DenseMatrix,
        k: usize,
        ell: usize,
        rank_floor: f64,
        space: BasisSpace,
    ) -> Result<Self> {
        Self::from_decomposition(decomposition_from_covariance(cov, rank_floor)?, k, ell, space)
    }

    /// Top `k` directions of an already decomposed sketch.
    pub fn from_decomposition(dec: SpectralDecomposition, k: usize, ell: usize, space: BasisSpace) -> Result<Self> {
        if dec.rank_used < k {
            return Err(Error::RankDeficientSketch {
                k,
                rank: dec.rank_used,
                ell,
                suggested: (2 * ell).max(2 * k + 1),
            });
        }
        let mut right = dec.right_vectors;
        right.truncate_rows(k);
        Ok(Self {
            values: dec.values[..k].to_vec(),
            right_vectors: right,
            space,
        })
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn width(&self) -> usize {
        self.right_vectors.cols()
    }

    /// `L̃ = Σ (ṽⱼᵀy)²/σ̃ⱼ²` and `T̃ = ‖a‖² − Σ (ṽⱼᵀy)²` (clamped, raw kept).
    pub fn score(&self, y: &[f64], row_sq: f64, row_index: usize, mode: ScoreMode) -> ScoreRecord {
        let mut lev = 0.0;
        let mut captured = 0.0;
        for (v, s) in self.right_vectors.iter_rows().zip(&self.values) {
            let c = dot(v, y);
            lev += c * c / (s * s);
            captured += c * c;
        }
        let raw = row_sq - captured;
        ScoreRecord {
            row_index,
            mode,
            full_leverage: None,
            rank_k_leverage: Some(lev),
            projection_distance: Some(raw.max(0.0)),
            tail_leverage: None,
            ridge_leverage: None,
            raw_projection_distance: Some(raw),
        }
    }
}

/// Maps an input row into the space the basis lives in.
pub enum RowTransform<'a> {
    Identity,
    Sign(&'a SignProjector),
    SignTable(&'a SignMatrix),
    Columns(&'a ColumnPlan),
}

impl RowTransform<'_> {
    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Identity => Ok(row.to_vec()),
            Self::Sign(p) => p.project_row(row),
            Self::SignTable(t) => t.project_row(row),
            Self::Columns(plan) => plan.apply(row),
        }
    }
}

/// Pass: stream rows into an FD sketch.
pub fn fd_pass(source: &mut dyn RowSource, ell: usize) -> Result<FdState> {
    let mut fd = FdState::new(ell, source.dim())?;
    source.pass(&mut |r| fd.update(r).map(|_| ()))?;
    Ok(fd)
}

/// Pass: covariance of transformed rows.
pub fn projected_pass(
    source: &mut dyn RowSource,
    transform: &RowTransform<'_>,
    ell: usize,
) -> Result<ProjectedCovariance> {
    let mut cov = ProjectedCovariance::new(ell);
    source.pass(&mut |r| cov.update(&transform.apply(r)?))?;
    Ok(cov)
}

/// Pass 0 of column sampling.
pub fn column_plan_pass(source: &mut dyn RowSource, ell: usize, seed: u64) -> Result<ColumnPlan> {
    let mut s = ColumnSampler::new(source.dim(), ell, seed)?;
    source.pass(&mut |r| s.update(r))?;
    s.finish()
}

pub fn row_sample_pass(source: &mut dyn RowSource, ell: usize, seed: u64) -> Result<DenseMatrix> {
    let mut s = RowSampler::new(source.dim(), ell, seed)?;
    source.pass(&mut |r| s.update(r))?;
    s.finish()
}

/// Final pass: score every row against a frozen basis. Scoring runs in
/// parallel batches; output keeps input order.
pub fn score_pass(
    source: &mut dyn RowSource,
    basis: &ApproxBasis,
    transform: &RowTransform<'_>,
) -> Result<Vec<ScoreRecord>> {
    let d = source.dim();
    let mut out = Vec::new();
    let mut batch: Vec<f64> = Vec::with_capacity(SCORE_BATCH * d);
    let flush = |batch: &mut Vec<f64>, out: &mut Vec<ScoreRecord>| -> Result<()> {
        let base = out.len();
        let rows = batch.len() / d.max(1);
        let scored = parallel::map_indexed(rows, |i| {
            let row = &batch[i * d..(i + 1) * d];
            let y = transform.apply(row)?;
            Ok::<_, Error>(basis.score(&y, norm_sq(row), base + i, ScoreMode::SketchedBatch))
        })?;
        out.extend(scored);
        batch.clear();
        Ok(())
    };
    source.pass(&mut |r| {
        batch.extend_from_slice(r);
        if batch.len() >= SCORE_BATCH * d {
            flush(&mut batch, &mut out)?;
        }
        Ok(())
    })?;
    flush(&mut batch, &mut out)?;
    Ok(out)
}

fn sign_transform<'a>(proj: &'a SignProjector, table: &'a Option<SignMatrix>) -> RowTransform<'a> {
    match table {
        Some(t) => RowTransform::SignTable(t),
        None => RowTransform::Sign(proj),
    }
}

/// Materializes the sign table when it is small enough.
pub fn sign_table(proj: &SignProjector) -> Option<SignMatrix> {
    (proj.dim().saturating_mul(proj.ell()) <= MATERIALIZE_LIMIT).then(|| proj.materialize())
}

/// Two passes: FD sketch, then scores in row space.
pub fn run_fd_pipeline(source: &mut dyn RowSource, cfg: &PipelineConfig) -> Result<Vec<ScoreRecord>> {
    cfg.validate()?;
    let fd = fd_pass(source, cfg.ell)?;
    debug!("fd sketch: {} rows after {} shrinks", fd.fill(), fd.shrink_count());
    let basis = ApproxBasis::from_covariance(&fd.covariance(), cfg.k, cfg.ell, cfg.rank_floor, BasisSpace::RowSpace)?;
    score_pass(source, &basis, &RowTransform::Identity)
}

/// Two passes: projected covariance of `Rᵀa`, then scores in projected space.
pub fn run_rproj_pipeline(source: &mut dyn RowSource, cfg: &PipelineConfig) -> Result<Vec<ScoreRecord>> {
    cfg.validate()?;
    let proj = SignProjector::new(cfg.seed, source.dim(), cfg.ell, cfg.independence)?;
    let table = sign_table(&proj);
    let transform = sign_transform(&proj, &table);
    let cov = projected_pass(source, &transform, cfg.ell)?;
    let basis = ApproxBasis::from_covariance(&cov.matrix(), cfg.k, cfg.ell, cfg.rank_floor, BasisSpace::ProjectedSpace)?;
    score_pass(source, &basis, &transform)
}

/// Three passes: column plan, covariance of sampled columns, scores.
pub fn run_colsample_pipeline(source: &mut dyn RowSource, cfg: &PipelineConfig) -> Result<Vec<ScoreRecord>> {
    cfg.validate()?;
    let plan = column_plan_pass(source, cfg.ell, cfg.seed)?;
    let transform = RowTransform::Columns(&plan);
    let cov = projected_pass(source, &transform, cfg.ell)?;
    let basis = ApproxBasis::from_covariance(&cov.matrix(), cfg.k, cfg.ell, cfg.rank_floor, BasisSpace::ProjectedSpace)?;
    score_pass(source, &basis, &transform)
}

/// Two passes: length-squared row sample, then scores in row space.
pub fn run_rowsample_pipeline(source: &mut dyn RowSource, cfg: &PipelineConfig) -> Result<Vec<ScoreRecord>> {
    cfg.validate()?;
    let sketch = row_sample_pass(source, cfg.ell, cfg.seed)?;
    let basis = ApproxBasis::from_covariance(&sketch.gram_cols(), cfg.k, cfg.ell, cfg.rank_floor, BasisSpace::RowSpace)?;
    score_pass(source, &basis, &RowTransform::Identity)
}

/// One pass: each row is scored against the FD sketch of the rows before it,
/// then added to the sketch. Rows whose prefix sketch has rank below `k` get
/// sentinel records.
pub fn run_online_pipeline(source: &mut dyn RowSource, cfg: &PipelineConfig) -> Result<Vec<ScoreRecord>> {
    cfg.validate()?;
    let d = source.dim();
    let mut fd = FdState::new(cfg.ell, d)?;
    let mut cov = vec![0.0; d * d];
    let mut out = Vec::new();
    source.pass(&mut |r| {
        let i = out.len();
        let rec = if fd.fill() < cfg.k {
            ScoreRecord::sentinel(i, ScoreMode::SketchedOnline)
        } else {
            let mut full = cov.clone();
            crate::linalg::matrix::mirror_upper(&mut full, d);
            let m = DenseMatrix::new(d, d, full)?;
            match ApproxBasis::from_covariance(&m, cfg.k, cfg.ell, cfg.rank_floor, BasisSpace::RowSpace) {
                Ok(b) => b.score(r, norm_sq(r), i, ScoreMode::SketchedOnline),
                Err(Error::RankDeficientSketch { .. }) => ScoreRecord::sentinel(i, ScoreMode::SketchedOnline),
                Err(e) => return Err(e),
            }
        };
        out.push(rec);
        if fd.update(r)? {
            cov.iter_mut().for_each(|x| *x = 0.0);
            for s in fd.sketch().iter_rows() {
                add_outer_upper(&mut cov, d, s, 1.0);
            }
        } else {
            add_outer_upper(&mut cov, d, r, 1.0);
        }
        Ok(())
    })?;
    Ok(out)
}

/// Dispatches on `cfg.mode`.
pub fn run_pipeline(source: &mut dyn RowSource, cfg: &PipelineConfig) -> Result<Vec<ScoreRecord>> {
    match cfg.mode {
        SketchMode::Fd => run_fd_pipeline(source, cfg),
        SketchMode::Rproj => run_rproj_pipeline(source, cfg),
        SketchMode::Colsample => run_colsample_pipeline(source, cfg),
        SketchMode::Rowsample => run_rowsample_pipeline(source, cfg),
        SketchMode::OnlineFd => run_online_pipeline(source, cfg),
    }
}
