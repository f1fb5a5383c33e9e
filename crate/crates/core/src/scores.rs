//! Exact anomaly scores: batch against the whole matrix, online against
//! each prefix.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::add_outer_upper;
use crate::linalg::{
    decomposition_from_covariance, dot, norm_sq, svd_thin, DenseMatrix, SpectralDecomposition,
    RANK_FLOOR,
};
use crate::parallel;

/// Separation below which batch scoring warns that the top-k subspace is
/// ill-defined.
pub const DELTA_WARN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    ExactBatch,
    ExactOnline,
    SketchedBatch,
    SketchedOnline,
}

/// Scores for one row. `None` marks a value that is not defined for the
/// record (sentinels have every score `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub row_index: usize,
    pub mode: ScoreMode,
    pub full_leverage: Option<f64>,
    pub rank_k_leverage: Option<f64>,
    pub projection_distance: Option<f64>,
    pub tail_leverage: Option<f64>,
    pub ridge_leverage: Option<f64>,
    /// Unclamped `‖a‖² − ‖Ṽ_kᵀy‖²` for sketched records.
    pub raw_projection_distance: Option<f64>,
}

impl ScoreRecord {
    pub fn sentinel(row_index: usize, mode: ScoreMode) -> Self {
        Self {
            row_index,
            mode,
            full_leverage: None,
            rank_k_leverage: None,
            projection_distance: None,
            tail_leverage: None,
            ridge_leverage: None,
            raw_projection_distance: None,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.rank_k_leverage.is_none() && self.projection_distance.is_none()
    }

    pub fn get(&self, kind: ScoreKind) -> Option<f64> {
        match kind {
            ScoreKind::Levk => self.rank_k_leverage,
            ScoreKind::Projk => self.projection_distance,
            ScoreKind::Ridge => self.ridge_leverage,
            ScoreKind::Tail => self.tail_leverage,
            ScoreKind::Full => self.full_leverage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Levk,
    Projk,
    Ridge,
    Tail,
    Full,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 5] = [Self::Levk, Self::Projk, Self::Ridge, Self::Tail, Self::Full];

    pub fn name(self) -> &'static str {
        match self {
            Self::Levk => "levk",
            Self::Projk => "projk",
            Self::Ridge => "ridge",
            Self::Tail => "tail",
            Self::Full => "full",
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "levk" | "leverage-k" => Ok(Self::Levk),
            "projk" | "projection-k" => Ok(Self::Projk),
            "ridge" => Ok(Self::Ridge),
            "tail" => Ok(Self::Tail),
            "full" => Ok(Self::Full),
            other => Err(Error::InvalidArgument(format!("unknown score kind '{other}'"))),
        }
    }
}

/// Exact scores of `row` against a basis with the default rank floor.
pub fn score_row(
    basis: &SpectralDecomposition,
    k: usize,
    row: &[f64],
    lambda: Option<f64>,
) -> Result<ScoreRecord> {
    check_basis(basis, k, RANK_FLOOR)?;
    score_row_unchecked(basis, k, row, lambda, 0, ScoreMode::ExactBatch)
}

/// Fails unless the first `k` singular values clear the rank floor.
pub fn check_basis(basis: &SpectralDecomposition, k: usize, rank_floor: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let s1 = basis.values.first().copied().unwrap_or(0.0);
    if k > basis.values.len() || k > basis.rank_used || k > basis.num_right() {
        return Err(Error::RankDeficientBasis {
            k,
            sigma_k: basis.values.get(k - 1).copied().unwrap_or(0.0),
            floor: rank_floor.sqrt() * s1,
        });
    }
    Ok(())
}

pub(crate) fn score_row_unchecked(
    basis: &SpectralDecomposition,
    k: usize,
    row: &[f64],
    lambda: Option<f64>,
    row_index: usize,
    mode: ScoreMode,
) -> Result<ScoreRecord> {
    if row.len() != basis.dim() {
        return Err(Error::WidthMismatch {
            row: row_index,
            expected: basis.dim(),
            got: row.len(),
        });
    }
    if let Some(l) = lambda {
        if !(l > 0.0) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {l}")));
        }
    }
    let row_sq = norm_sq(row);
    let mut lev_k = 0.0;
    let mut proj_k = 0.0;
    let mut lev_tail = 0.0;
    let mut ridge = 0.0;
    let mut captured = 0.0;
    for j in 0..basis.num_right() {
        let c = dot(basis.right(j), row);
        let c2 = c * c;
        let s2 = basis.values[j] * basis.values[j];
        captured += c2;
        if j < k {
            lev_k += c2 / s2;
            proj_k += c2;
        } else if j < basis.rank_used {
            lev_tail += c2 / s2;
        }
        if let Some(l) = lambda {
            ridge += c2 / (s2 + l);
        }
    }
    let ridge = lambda.map(|l| ridge + (row_sq - captured).max(0.0) / l);
    Ok(ScoreRecord {
        row_index,
        mode,
        full_leverage: Some(lev_k + lev_tail),
        rank_k_leverage: Some(lev_k),
        projection_distance: Some((row_sq - proj_k).max(0.0)),
        tail_leverage: Some(lev_tail),
        ridge_leverage: ridge,
        raw_projection_distance: None,
    })
}

/// Exact batch scores of every row of `a` against `svd_thin(a)`.
pub fn batch_scores(a: &DenseMatrix, k: usize, lambda: Option<f64>) -> Result<Vec<ScoreRecord>> {
    let basis = svd_thin(a)?;
    batch_scores_with_basis(a, &basis, k, lambda)
}

/// Batch scores against a precomputed decomposition of `a`.
pub fn batch_scores_with_basis(
    a: &DenseMatrix,
    basis: &SpectralDecomposition,
    k: usize,
    lambda: Option<f64>,
) -> Result<Vec<ScoreRecord>> {
    check_basis(basis, k, RANK_FLOOR)?;
    if k < basis.values.len() {
        let s1 = basis.values[0].powi(2);
        let delta = (basis.values[k - 1].powi(2) - basis.values[k].powi(2)) / s1;
        if delta < DELTA_WARN {
            warn!("spectrum is not separated at k = {k} (delta = {delta:e}); scores are ill-defined");
        }
    }
    parallel::map_indexed(a.rows(), |i| {
        score_row_unchecked(basis, k, a.row(i), lambda, i, ScoreMode::ExactBatch)
    })
}

/// Exact online scorer: keeps the full `d × d` prefix covariance and scores
/// each arriving row against the rows before it.
#[derive(Debug, Clone)]
pub struct OnlineExact {
    d: usize,
    k: usize,
    lambda: Option<f64>,
    rank_floor: f64,
    cov: Vec<f64>,
    seen: usize,
}

impl OnlineExact {
    pub fn new(d: usize, k: usize, lambda: Option<f64>) -> Result<Self> {
        if k == 0 || k > d {
            return Err(Error::InvalidArgument(format!("k = {k} must satisfy 1 <= k <= d = {d}")));
        }
        Ok(Self {
            d,
            k,
            lambda,
            rank_floor: RANK_FLOOR,
            cov: vec![0.0; d * d],
            seen: 0,
        })
    }

    pub fn rows_seen(&self) -> usize {
        self.seen
    }

    /// Scores `row` against the current prefix, then adds it.
    pub fn score_then_update(&mut self, row: &[f64]) -> Result<ScoreRecord> {
        if row.len() != self.d {
            return Err(Error::WidthMismatch {
                row: self.seen,
                expected: self.d,
                got: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: self.seen, col: j });
        }
        let rec = self.score(row)?;
        add_outer_upper(&mut self.cov, self.d, row, 1.0);
        self.seen += 1;
        Ok(rec)
    }

    fn score(&self, row: &[f64]) -> Result<ScoreRecord> {
        if self.seen < self.k {
            return Ok(ScoreRecord::sentinel(self.seen, ScoreMode::ExactOnline));
        }
        let mut cov = DenseMatrix::new(self.d, self.d, self.cov.clone())?;
        mirror(&mut cov);
        let basis = decomposition_from_covariance(&cov, self.rank_floor)?;
        if basis.rank_used < self.k {
            return Ok(ScoreRecord::sentinel(self.seen, ScoreMode::ExactOnline));
        }
        score_row_unchecked(&basis, self.k, row, self.lambda, self.seen, ScoreMode::ExactOnline)
    }
}

fn mirror(m: &mut DenseMatrix) {
    let d = m.rows();
    for p in 0..d {
        for q in (p + 1)..d {
            let v = m.get(p, q);
            m.set(q, p, v);
        }
    }
}

/// Exact online scores of a row stream; rows whose prefix has rank below
/// `k` get sentinel records.
pub fn online_scores<I, R>(rows: I, k: usize) -> Result<Vec<ScoreRecord>>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    online_scores_with(rows, k, None)
}

pub fn online_scores_with<I, R>(rows: I, k: usize, lambda: Option<f64>) -> Result<Vec<ScoreRecord>>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut it = rows.into_iter().peekable();
    let Some(first) = it.peek() else { return Ok(Vec::new()) };
    let mut scorer = OnlineExact::new(first.as_ref().len(), k, lambda)?;
    it.map(|r| scorer.score_then_update(r.as_ref())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{svd_thin_with, truncate, LeftVectors};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    fn small_basis() -> SpectralDecomposition {
        let a = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        svd_thin(&a).unwrap()
    }

    #[test]
    fn hand_examples() {
        let b = small_basis();
        let r = score_row(&b, 1, &[2.0, 0.0], None).unwrap();
        assert_eq!(r.rank_k_leverage, Some(1.0));
        assert_eq!(r.projection_distance, Some(0.0));
        assert_eq!(r.full_leverage, Some(1.0));
        let r = score_row(&b, 1, &[0.0, 1.0], None).unwrap();
        assert_eq!(r.rank_k_leverage, Some(0.0));
        assert_eq!(r.projection_distance, Some(1.0));
        assert_eq!(r.full_leverage, Some(1.0));
        let r = score_row(&b, 1, &[0.0, 0.0], Some(0.5)).unwrap();
        assert_eq!(r.full_leverage, Some(0.0));
        assert_eq!(r.ridge_leverage, Some(0.0));
    }

    #[test]
    fn rank_deficient_basis_is_rejected() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        let b = svd_thin(&a).unwrap();
        assert!(matches!(score_row(&b, 2, &[1.0, 1.0], None), Err(Error::RankDeficientBasis { .. })));
    }

    #[test]
    fn disj_fixture() {
        let mut rows = vec![vec![1.0, 0.0, 0.0, 0.0]; 2];
        rows.push(vec![0.0, 1.0, 0.0, 0.0]);
        rows.push(vec![0.0, 0.0, 1.0, 0.0]);
        let a = DenseMatrix::from_rows(&rows).unwrap();
        let s = batch_scores(&a, 1, None).unwrap();
        // Top singular direction is e1 with σ² = 2.
        assert!((s[0].full_leverage.unwrap() - 0.5).abs() < 1e-12);
        assert!((s[1].full_leverage.unwrap() - 0.5).abs() < 1e-12);
        assert!((s[2].full_leverage.unwrap() - 1.0).abs() < 1e-12);
        assert!((s[3].full_leverage.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sums_match_identities() {
        let a = random(40, 8, 5);
        let k = 3;
        let s = batch_scores(&a, k, None).unwrap();
        let lev: f64 = s.iter().map(|r| r.rank_k_leverage.unwrap()).sum();
        assert!((lev - k as f64).abs() < 1e-8);
        let d = svd_thin_with(&a, LeftVectors::Compute, RANK_FLOOR).unwrap();
        let tail = a.sub(&truncate(&d, k).unwrap()).unwrap().frobenius_sq();
        let t: f64 = s.iter().map(|r| r.projection_distance.unwrap()).sum();
        assert!(((t - tail) / tail).abs() < 1e-8);
    }

    #[test]
    fn ridge_matches_direct_formula_on_wide_input() {
        let a = random(4, 9, 2);
        let b = svd_thin(&a).unwrap();
        let lambda = 0.3;
        // Direct: aᵀ(AᵀA + λI)⁻¹a via eigen of AᵀA (d x d).
        let full = crate::linalg::sym_eig(&a.gram_cols(), 1e-13).unwrap();
        let row = [0.3, -1.0, 0.2, 0.0, 0.5, 0.9, -0.4, 0.1, 0.7];
        let want: f64 = full
            .vectors
            .iter_rows()
            .zip(&full.values)
            .map(|(v, &l)| dot(v, &row).powi(2) / (l.max(0.0) + lambda))
            .sum();
        let got = score_row(&b, 2, &row, Some(lambda)).unwrap().ridge_leverage.unwrap();
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }

    #[test]
    fn online_matches_prefix_recompute() {
        let a = random(30, 6, 8);
        let k = 2;
        let online = online_scores(a.iter_rows(), k).unwrap();
        for (i, rec) in online.iter().enumerate() {
            assert_eq!(rec.row_index, i);
            assert_eq!(rec.mode, ScoreMode::ExactOnline);
            if i < k {
                assert!(rec.is_sentinel());
                continue;
            }
            let mut prefix = a.clone();
            prefix.truncate_rows(i);
            let b = svd_thin(&prefix).unwrap();
            let want = score_row(&b, k, a.row(i), None).unwrap();
            for (x, y) in [
                (rec.rank_k_leverage, want.rank_k_leverage),
                (rec.projection_distance, want.projection_distance),
                (rec.full_leverage, want.full_leverage),
            ] {
                let (x, y) = (x.unwrap(), y.unwrap());
                assert!((x - y).abs() <= 1e-8 * y.abs().max(1.0), "row {i}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn online_orthogonal_row() {
        let mut rows = vec![vec![1.0, 0.0, 0.0]; 4];
        rows.push(vec![0.0, 1.0, 0.0]);
        let s = online_scores(&rows, 1).unwrap();
        assert!(s[0].is_sentinel());
        assert_eq!(s[2].projection_distance, Some(0.0));
        assert_eq!(s[4].projection_distance, Some(1.0));
    }

    #[test]
    fn online_width_mismatch() {
        let rows = vec![vec![1.0, 0.0], vec![1.0]];
        assert!(matches!(online_scores(&rows, 1), Err(Error::WidthMismatch { row: 1, .. })));
    }

    #[test]
    fn score_kind_round_trip() {
        for k in ScoreKind::ALL {
            assert_eq!(k.name().parse::<ScoreKind>().unwrap(), k);
        }
        assert_eq!(serde_json::to_string(&ScoreMode::SketchedOnline).unwrap(), "\"sketched-online\"");
    }

    fn orthogonal(d: usize, seed: u64) -> DenseMatrix {
        let g = random(d, d, seed);
        svd_thin(&g).unwrap().right_vectors
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn score_bounds_and_rotation_invariance(seed in 0u64..10_000, n in 8usize..30, d in 2usize..7) {
            let a = random(n, d, seed);
            let k = 1 + (seed as usize) % (d - 1).max(1);
            let k = k.min(d - 1).max(1);
            let s = batch_scores(&a, k, None).unwrap();
            let q = orthogonal(d, seed ^ 0xabc);
            let rotated = a.matmul(&q.transpose()).unwrap();
            let r = batch_scores(&rotated, k, None).unwrap();
            for (i, (x, y)) in s.iter().zip(&r).enumerate() {
                let row_sq = norm_sq(a.row(i));
                let lk = x.rank_k_leverage.unwrap();
                let l = x.full_leverage.unwrap();
                let t = x.projection_distance.unwrap();
                prop_assert!(lk >= 0.0 && lk <= l + 1e-12);
                prop_assert!(t >= 0.0 && t <= row_sq + 1e-9);
                prop_assert!((lk + x.tail_leverage.unwrap() - l).abs() <= 1e-8);
                prop_assert!((lk - y.rank_k_leverage.unwrap()).abs() <= 1e-8);
                prop_assert!((t - y.projection_distance.unwrap()).abs() <= 1e-8 * row_sq.max(1.0));
            }
        }
    }
}
