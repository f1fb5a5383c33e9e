use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    norm_sq, op_norm, op_norm_sym, stats_from_sigma_sq, svd_thin, svd_thin_with, sym_eig,
    DenseMatrix, LeftVectors, SpectralDecomposition, SpectralStats, DEFAULT_EIG_TOL, RANK_FLOOR,
};
use crate::pipeline::sizing::{
    fd_ell_for_mu, mu_average_leverage, mu_average_projection, mu_pointwise_leverage,
    mu_pointwise_projection, projection_ell_for_mu, sampling_ell_for_mu,
};
use crate::pipeline::{ApproxBasis, BasisSpace};
use crate::scores::{batch_scores_with_basis, ScoreMode, ScoreRecord};
use crate::sketch::{column_sample_plan, fd_sketch, ColumnPlan, SignMatrix, SignProjector, DEFAULT_INDEPENDENCE};

/// Relative slack granted to floating-point round-off when comparing sides.
pub const PASS_TOL: f64 = 1e-9;

/// Cap on the sketch size picked from a sizing formula when no grid is given.
pub const MAX_TRANSLATED_ELL: usize = 1024;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub k: Option<usize>,
    pub ell: Option<usize>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub kappa_k: Option<f64>,
    pub sr: Option<f64>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
}

impl BoundInputs {
    fn shape(a: &DenseMatrix) -> Self {
        Self {
            n: Some(a.rows()),
            d: Some(a.cols()),
            ..Self::default()
        }
    }

    fn with_stats(mut self, s: &SpectralStats) -> Self {
        self.k = Some(s.k);
        self.delta = Some(s.separation_delta);
        self.kappa_k = Some(s.condition_kappa_k);
        self.sr = Some(s.stable_rank);
        self
    }
}

/// One measured inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub inputs: BoundInputs,
    pub applicable: bool,
    pub pass: bool,
    pub note: Option<String>,
}

impl BoundReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, inputs: BoundInputs, applicable: bool) -> Self {
        Self {
            bound_name: name.to_string(),
            lhs,
            rhs,
            slack: rhs - lhs,
            inputs,
            applicable,
            pass: !applicable || holds(lhs, rhs),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Whether the inequality holds, regardless of applicability.
    pub fn holds(&self) -> bool {
        holds(self.lhs, self.rhs)
    }
}

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + PASS_TOL * rhs.max(1.0)
}

/// Stats from the full spectrum of `a` (needs `k < min(n, d)`).
fn stats(a: &DenseMatrix, k: usize) -> Result<SpectralStats> {
    stats_from_sigma_sq(svd_thin(a)?.sigma_sq(), k, 1)
}

/// `‖AAᵀ − ÃÃᵀ‖ / σ₁(A)²`.
pub fn measure_mu_left(a: &DenseMatrix, at: &DenseMatrix, sigma1_sq: f64) -> Result<f64> {
    if a.rows() != at.rows() {
        return Err(Error::Shape(format!("row counts differ: {} vs {}", a.rows(), at.rows())));
    }
    Ok(op_norm_sym(&a.gram_rows().sub(&at.gram_rows())?)? / sigma1_sq)
}

/// `‖AᵀA − ÃᵀÃ‖ / σ₁(A)²`.
pub fn measure_mu_right(a: &DenseMatrix, at: &DenseMatrix, sigma1_sq: f64) -> Result<f64> {
    if a.cols() != at.cols() {
        return Err(Error::Shape(format!("column counts differ: {} vs {}", a.cols(), at.cols())));
    }
    Ok(op_norm_sym(&a.gram_cols().sub(&at.gram_cols())?)? / sigma1_sq)
}

/// `Σ_{j<k} wⱼ uⱼuⱼᵀ` over the first `k` rows of `u`.
fn weighted_projector(u: &DenseMatrix, weights: &[f64]) -> DenseMatrix {
    let n = u.cols();
    let mut p = DenseMatrix::zeros(n, n);
    for (j, &w) in weights.iter().enumerate() {
        let uj = u.row(j);
        for i in 0..n {
            let s = w * uj[i];
            if s == 0.0 {
                continue;
            }
            let row = p.row_mut(i);
            for (x, &y) in row.iter_mut().zip(uj) {
                *x += s * y;
            }
        }
    }
    // Exact symmetry: the eigensolver rejects round-off asymmetry.
    p.add(&p.transpose()).expect("square").scaled(0.5)
}

fn top_left(a: &DenseMatrix, k: usize) -> Result<Option<DenseMatrix>> {
    let s = svd_thin_with(a, LeftVectors::Compute, RANK_FLOOR)?;
    if s.rank_used < k {
        return Ok(None);
    }
    let mut u = s.left_vectors.expect("requested");
    u.truncate_rows(k);
    Ok(Some(u))
}

/// `max_i |σᵢ(C) − σᵢ(C+N)| ≤ ‖N‖`.
pub fn check_weyl(c: &DenseMatrix, n: &DenseMatrix) -> Result<BoundReport> {
    let d = c.add(n)?;
    let sc = svd_thin(c)?.values;
    let sd = svd_thin(&d)?.values;
    let lhs = sc.iter().zip(&sd).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let rhs = op_norm(n)?;
    Ok(BoundReport::new("weyl", lhs, rhs, BoundInputs::shape(c), true))
}

/// `‖U_kU_kᵀ − Ũ_kŨ_kᵀ‖ ≤ 2√(μ/Δ)`, applicable when `μ ≤ Δ/6`.
pub fn check_projector(a: &DenseMatrix, at: &DenseMatrix, k: usize) -> Result<BoundReport> {
    let st = stats(a, k)?;
    let mu = measure_mu_left(a, at, st.sigma_sq[0])?;
    let delta = st.separation_delta;
    let mut inputs = BoundInputs::shape(a).with_stats(&st);
    inputs.mu = Some(mu);
    let rhs = if delta > 0.0 { 2.0 * (mu / delta).sqrt() } else { f64::INFINITY };
    let applicable = delta > 0.0 && mu <= delta / 6.0;
    let (Some(u), Some(ut)) = (top_left(a, k)?, top_left(at, k)?) else {
        return Ok(BoundReport::new("projector", f64::NAN, rhs, inputs, false)
            .with_note("perturbed matrix has rank below k"));
    };
    let ones = vec![1.0; k];
    let diff = weighted_projector(&u, &ones).sub(&weighted_projector(&ut, &ones))?;
    let lhs = op_norm_sym(&diff)?;
    Ok(BoundReport::new("projector", lhs, rhs, inputs, applicable))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaWeight {
    Squared,
    InverseSquared,
}

/// `‖U_kΣ_k^{±2}U_kᵀ − Ũ_kΣ_k^{±2}Ũ_kᵀ‖` with the true `Σ_k` on both sides.
pub fn check_sigma_weighted(
    a: &DenseMatrix,
    at: &DenseMatrix,
    k: usize,
    mode: SigmaWeight,
) -> Result<BoundReport> {
    let st = stats(a, k)?;
    let s1 = st.sigma_sq[0];
    let sk = st.sigma_sq[k - 1];
    let mu = measure_mu_left(a, at, s1)?;
    let delta = st.separation_delta;
    let kappa = st.condition_kappa_k;
    let kf = k as f64;
    let (name, weights, rhs, limit) = match mode {
        SigmaWeight::Squared => (
            "sigma_squared",
            st.sigma_sq[..k].to_vec(),
            8.0 * s1 * (mu * kf).cbrt(),
            (delta.powi(3) * kf * kf).min(1.0 / (20.0 * kf)),
        ),
        SigmaWeight::InverseSquared => (
            "sigma_inverse_squared",
            st.sigma_sq[..k].iter().map(|s| 1.0 / s).collect(),
            8.0 / sk * (mu * kf * kappa).cbrt(),
            (delta.powi(3) * (kf * kappa).powi(2)).min(1.0 / (20.0 * kf * kappa)),
        ),
    };
    let mut inputs = BoundInputs::shape(a).with_stats(&st);
    inputs.mu = Some(mu);
    let applicable = delta > 0.0 && sk > 0.0 && mu <= limit;
    let (Some(u), Some(ut)) = (top_left(a, k)?, top_left(at, k)?) else {
        return Ok(BoundReport::new(name, f64::NAN, rhs, inputs, false)
            .with_note("perturbed matrix has rank below k"));
    };
    let diff = weighted_projector(&u, &weights).sub(&weighted_projector(&ut, &weights))?;
    let lhs = op_norm_sym(&diff)?;
    Ok(BoundReport::new(name, lhs, rhs, inputs, applicable))
}

/// `Σᵢ |Mᵢᵢ| ≤ rank(M)·‖M‖` for symmetric `M`.
pub fn check_diag_dominance(m: &DenseMatrix) -> Result<BoundReport> {
    let e = sym_eig(m, DEFAULT_EIG_TOL)?;
    let norm = e.spectral_radius();
    let rank = e.values.iter().filter(|v| v.abs() > 1e-10 * norm).count();
    let lhs: f64 = (0..m.rows()).map(|i| m.get(i, i).abs()).sum();
    let mut inputs = BoundInputs::shape(m);
    inputs.k = Some(rank);
    Ok(BoundReport::new("diag_dominance", lhs, rank as f64 * norm, inputs, true))
}

/// Projection families for the average-case checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageSketch {
    Rproj,
    Colsample,
}

/// Right-multiplication by a projection family's `d × ℓ` matrix.
pub enum ColumnProjection {
    Sign(SignMatrix),
    Columns(ColumnPlan),
}

impl ColumnProjection {
    pub fn build(a: &DenseMatrix, kind: AverageSketch, ell: usize, seed: u64) -> Result<Self> {
        Ok(match kind {
            AverageSketch::Rproj => Self::Sign(SignProjector::new(seed, a.cols(), ell, DEFAULT_INDEPENDENCE)?.materialize()),
            AverageSketch::Colsample => Self::Columns(column_sample_plan(a, ell, seed)?),
        })
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Sign(t) => t.project_row(row),
            Self::Columns(p) => p.apply(row),
        }
    }

    /// `Ã = AM`, one projected row per input row.
    pub fn project(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        let rows: Vec<Vec<f64>> = a.iter_rows().map(|r| self.apply(r)).collect::<Result<_>>()?;
        DenseMatrix::from_rows(&rows)
    }
}

/// `Ã` (n × ℓ) for a projection family: rows `Rᵀaᵢ` or sampled columns.
pub fn project_columns(a: &DenseMatrix, kind: AverageSketch, ell: usize, seed: u64) -> Result<DenseMatrix> {
    ColumnProjection::build(a, kind, ell, seed)?.project(a)
}

fn sketched_scores(a: &DenseMatrix, y: &DenseMatrix, basis: &ApproxBasis, mode: ScoreMode) -> Vec<ScoreRecord> {
    a.iter_rows()
        .zip(y.iter_rows())
        .enumerate()
        .map(|(i, (r, yi))| basis.score(yi, norm_sq(r), i, mode))
        .collect()
}

struct ProjectedSketch {
    ell: usize,
    y: DenseMatrix,
    mu: f64,
    decomposition: SpectralDecomposition,
}

/// With `A = USVᵀ` and `Ã = AM`, `AAᵀ − ÃÃᵀ = U(S² − ZZᵀ)Uᵀ` and
/// `ÃᵀÃ = ZᵀZ` for `Z = SVᵀM`, so both come from the `r × ℓ` matrix `Z`.
fn projected_sketch(a: &DenseMatrix, exact: &SpectralDecomposition, proj: &ColumnProjection, ell: usize) -> Result<ProjectedSketch> {
    let r = exact.rank_used;
    let zrows: Vec<Vec<f64>> = (0..r)
        .map(|j| {
            let sv: Vec<f64> = exact.right(j).iter().map(|v| v * exact.values[j]).collect();
            proj.apply(&sv)
        })
        .collect::<Result<_>>()?;
    let z = DenseMatrix::from_rows(&zrows)?;
    let s2 = DenseMatrix::from_diag(&exact.sigma_sq()[..r]);
    let mu = op_norm_sym(&s2.sub(&z.gram_rows())?)? / exact.values[0].powi(2);
    Ok(ProjectedSketch {
        ell,
        y: proj.project(a)?,
        mu,
        decomposition: svd_thin(&z)?,
    })
}

pub fn check_average_guarantees(
    a: &DenseMatrix,
    k: usize,
    kind: AverageSketch,
    epsilon: f64,
    seed: u64,
    ell_grid: &[usize],
) -> Result<[BoundReport; 2]> {
    let st = stats(a, k)?;
    let delta = st.separation_delta;
    let sr = st.stable_rank;
    let mu_l = mu_average_leverage(epsilon, delta);
    let mu_t = mu_average_projection(epsilon, sr, k);
    let grid: Vec<usize> = if ell_grid.is_empty() {
        let ell = match kind {
            AverageSketch::Rproj => projection_ell_for_mu(sr, mu_l, 0.1),
            AverageSketch::Colsample => sampling_ell_for_mu(sr, mu_l),
        };
        vec![ell.clamp(k + 1, MAX_TRANSLATED_ELL)]
    } else {
        ell_grid.to_vec()
    };
    // Smallest grid size meeting each target; the largest size otherwise.
    let exact_dec = svd_thin(a)?;
    let mut tried: Vec<ProjectedSketch> = Vec::new();
    let mut pick = |target: f64| -> Result<usize> {
        for (i, &ell) in grid.iter().enumerate() {
            if i == tried.len() {
                let proj = ColumnProjection::build(a, kind, ell, seed)?;
                tried.push(projected_sketch(a, &exact_dec, &proj, ell)?);
            }
            if tried[i].mu <= target {
                return Ok(i);
            }
        }
        Ok(grid.len() - 1)
    };
    let pick_l = pick(mu_l)?;
    let pick_t = pick(mu_t)?;
    let exact = batch_scores_with_basis(a, &exact_dec, k, None)?;
    let kf = k as f64;
    let mut reports = Vec::with_capacity(2);
    for (name, idx, target) in [("average_leverage", pick_l, mu_l), ("average_projection", pick_t, mu_t)] {
        let ProjectedSketch { ell, y, mu, decomposition } = &tried[idx];
        let mut inputs = BoundInputs::shape(a).with_stats(&st);
        inputs.ell = Some(*ell);
        inputs.mu = Some(*mu);
        inputs.epsilon = Some(epsilon);
        inputs.seed = Some(seed);
        let leverage = name == "average_leverage";
        let rhs = if leverage { epsilon * kf } else { epsilon * st.frobenius_sq() };
        let applicable = delta > 0.0
            && *mu <= target
            && if leverage { epsilon < 1.0 } else { epsilon <= (delta * kf * kf).min(kf) / sr };
        let basis = match ApproxBasis::from_decomposition(decomposition.clone(), k, *ell, BasisSpace::ProjectedSpace) {
            Ok(b) => b,
            Err(Error::RankDeficientSketch { .. }) => {
                reports.push(BoundReport::new(name, f64::NAN, rhs, inputs, false).with_note("sketch rank below k"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let approx = sketched_scores(a, y, &basis, ScoreMode::SketchedBatch);
        let lhs: f64 = exact
            .iter()
            .zip(&approx)
            .map(|(e, s)| {
                if leverage {
                    (e.rank_k_leverage.unwrap_or(0.0) - s.rank_k_leverage.unwrap_or(0.0)).abs()
                } else {
                    (e.projection_distance.unwrap_or(0.0) - s.raw_projection_distance.unwrap_or(0.0)).abs()
                }
            })
            .sum();
        reports.push(BoundReport::new(name, lhs, rhs, inputs, applicable).with_note(format!("target mu {target:e}")));
    }
    Ok([reports.remove(0), reports.remove(0)])
}
/// Pointwise guarantees for an FD sketch: the smallest size in a doubling
/// sequence whose measured `μ` meets the prescribed value, capped at the
/// size the FD bound gives (and at `n`, where the sketch is lossless).
pub fn check_pointwise_guarantees(a: &DenseMatrix, k: usize, epsilon: f64) -> Result<[BoundReport; 2]> {
    let st = stats(a, k)?;
    let s1 = st.sigma_sq[0];
    let delta = st.separation_delta;
    let sr = st.stable_rank;
    let kappa = st.condition_kappa_k;
    let fro = st.frobenius_sq();
    let kf = k as f64;
    let exact = batch_scores_with_basis(a, &svd_thin(a)?, k, None)?;

    let mu_t = mu_pointwise_projection(epsilon, delta);
    let mu_l = mu_pointwise_leverage(epsilon, k, sr, kappa);
    let mut out = Vec::with_capacity(2);
    for (name, target) in [("pointwise_projection", mu_t), ("pointwise_leverage", mu_l)] {
        // Doubling search for the smallest sketch whose measured error meets
        // the target, up to the size the FD bound prescribes.
        let cap = fd_ell_for_mu(&st.sigma_sq, k, target).clamp(k + 1, a.rows().max(k + 1));
        let mut ell = (k + 1).max(2);
        let (fd, mu) = loop {
            let fd = fd_sketch(a, ell)?;
            let mu = measure_mu_right(a, fd.sketch(), s1)?;
            if mu <= target || ell >= cap {
                break (fd, mu);
            }
            ell = (2 * ell).min(cap);
        };
        let mut inputs = BoundInputs::shape(a).with_stats(&st);
        inputs.ell = Some(ell);
        inputs.mu = Some(mu);
        inputs.epsilon = Some(epsilon);
        let basis = ApproxBasis::from_covariance(&fd.covariance(), k, ell, RANK_FLOOR, BasisSpace::RowSpace)?;
        let mut worst = 0.0f64;
        for (i, e) in exact.iter().enumerate() {
            let row = a.row(i);
            let rsq = norm_sq(row);
            if rsq == 0.0 {
                continue;
            }
            let s = basis.score(row, rsq, i, ScoreMode::SketchedBatch);
            let dev = if name == "pointwise_projection" {
                (e.projection_distance.unwrap_or(0.0) - s.raw_projection_distance.unwrap_or(0.0)).abs() / rsq
            } else {
                (e.rank_k_leverage.unwrap_or(0.0) - s.rank_k_leverage.unwrap_or(0.0)).abs() * fro / (kf * rsq)
            };
            worst = worst.max(dev);
        }
        let report = if name == "pointwise_projection" {
            BoundReport::new(name, worst, epsilon, inputs, delta > 0.0 && epsilon < 1.0 / 3.0 && mu <= target)
        } else {
            let eps_ok = epsilon <= (kappa * delta).min(1.0 / kf) * sr * kappa;
            BoundReport::new(name, worst, epsilon, inputs, delta > 0.0 && eps_ok && mu <= target).with_note(
                "parameters from the stated condition; the derivation also needs mu >= 1/(20 k kappa), which this regime does not satisfy",
            )
        };
        out.push(report);
    }
    Ok([out.remove(0), out.remove(0)])
}

/// Rank-`p` approximation from the top right singular vectors of `B = RA`
/// with a `k_proj`-row sign matrix. Returns the bound report and the check
/// of the error identity behind it.
pub fn check_low_rank_approx(
    a: &DenseMatrix,
    p: usize,
    k_proj: usize,
    seed: u64,
    epsilon: f64,
) -> Result<[BoundReport; 2]> {
    if p == 0 || k_proj < p {
        return Err(Error::InvalidArgument(format!("need 1 <= p <= k_proj (p = {p}, k_proj = {k_proj})")));
    }
    let (n, d) = a.shape();
    let proj = SignProjector::new(seed, n, k_proj, DEFAULT_INDEPENDENCE)?.materialize();
    // Column j of B is the projection of column j of A.
    let at = a.transpose();
    let cols: Vec<Vec<f64>> = at.iter_rows().map(|c| proj.project_row(c)).collect::<Result<_>>()?;
    let b = DenseMatrix::from_rows(&cols)?.transpose();
    let sb = svd_thin(&b)?;
    if sb.rank_used < p {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds the rank {} of the projected matrix", sb.rank_used)));
    }
    let sigma_sq = svd_thin(a)?.sigma_sq();
    let head: f64 = sigma_sq[..p.min(sigma_sq.len())].iter().sum();
    let tail: f64 = sigma_sq.iter().skip(p).sum();
    let fro = a.frobenius_sq();

    let mut approx = DenseMatrix::zeros(n, d);
    let mut captured = 0.0;
    for i in 0..p {
        let w = sb.right(i);
        let aw = a.mul_vec(w)?;
        captured += norm_sq(&aw);
        for (r, &c) in aw.iter().enumerate() {
            let row = approx.row_mut(r);
            for (x, &wj) in row.iter_mut().zip(w) {
                *x += c * wj;
            }
        }
    }
    let lhs = a.sub(&approx)?.frobenius_sq();
    let inputs = BoundInputs {
        k: Some(p),
        ell: Some(k_proj),
        epsilon: Some(epsilon),
        seed: Some(seed),
        sr: Some(fro / sigma_sq[0].max(f64::MIN_POSITIVE)),
        ..BoundInputs::shape(a)
    };
    let bound = BoundReport::new("low_rank_approx", lhs, tail + epsilon * head, inputs.clone(), true);
    let identity_gap = (lhs - (tail + (head - captured))).abs();
    let identity = BoundReport::new("low_rank_error_identity", identity_gap, 1e-8 * fro, inputs, true);
    Ok([bound, identity])
}
