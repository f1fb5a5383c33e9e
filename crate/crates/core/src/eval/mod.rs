//! Ground-truth labelling and F1 evaluation of approximate scores.

pub mod synth;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::pipeline::{run_pipeline, MatrixSource, PipelineConfig};
use crate::scores::{batch_scores, ScoreKind, ScoreRecord};

/// Seeds averaged over for randomized sketches.
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

pub const GRID_POINTS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub eta: f64,
    pub score_kind: ScoreKind,
    pub sweep_grid: Vec<f64>,
    pub lambda: Option<f64>,
}

impl EvalConfig {
    pub fn new(k: usize, eta: f64, score_kind: ScoreKind) -> Result<Self> {
        let cfg = Self {
            k,
            eta,
            score_kind,
            sweep_grid: default_grid(eta),
            lambda: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidArgument(format!("eta must be in (0, 1), got {}", self.eta)));
        }
        if self.sweep_grid.is_empty() {
            return Err(Error::InvalidArgument("sweep grid is empty".into()));
        }
        if let Some(bad) = self.sweep_grid.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return Err(Error::InvalidArgument(format!("sweep fraction {bad} outside (0, 1)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1: f64,
    pub best_eta_prime: f64,
    pub precision: f64,
    pub recall: f64,
    pub seed: Option<u64>,
    pub per_seed: Vec<EvalReport>,
}

impl EvalReport {
    /// Mean of each field over `runs`, keeping the runs.
    pub fn average(runs: Vec<EvalReport>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Empty("no evaluation runs".into()));
        }
        let m = runs.len() as f64;
        let mean = |f: fn(&EvalReport) -> f64| runs.iter().map(f).sum::<f64>() / m;
        Ok(Self {
            f1: mean(|r| r.f1),
            best_eta_prime: mean(|r| r.best_eta_prime),
            precision: mean(|r| r.precision),
            recall: mean(|r| r.recall),
            seed: None,
            per_seed: runs,
        })
    }
}

/// `GRID_POINTS` log-spaced fractions over `[η/4, 4η] ∩ (0, 1)`.
pub fn default_grid(eta: f64) -> Vec<f64> {
    let lo = eta / 4.0;
    let hi = (4.0 * eta).min(1.0 - 1e-9);
    if !(lo > 0.0 && lo < hi) {
        return vec![eta];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..GRID_POINTS)
        .map(|i| (a + (b - a) * i as f64 / (GRID_POINTS - 1) as f64).exp())
        .collect()
}

/// `⌈frac·n⌉`, guarding against round-off just above an integer.
pub fn top_count(frac: f64, n: usize) -> usize {
    ((frac * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Row order by descending score; ties keep the lower index first and
/// NaN sorts last.
pub fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (scores[i], scores[j]);
        match (a.is_nan(), b.is_nan()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            _ => b.partial_cmp(&a).expect("not NaN"),
        }
        .then(i.cmp(&j))
    });
    idx
}

/// Marks the top `⌈frac·n⌉` rows.
pub fn top_fraction(scores: &[f64], frac: f64) -> Vec<bool> {
    let mut out = vec![false; scores.len()];
    for &i in rank_desc(scores).iter().take(top_count(frac, scores.len())) {
        out[i] = true;
    }
    out
}

/// Score values of one kind; missing values count as `-inf`.
pub fn score_values(records: &[ScoreRecord], kind: ScoreKind) -> Vec<f64> {
    records.iter().map(|r| r.get(kind).unwrap_or(f64::NEG_INFINITY)).collect()
}

/// Labels from given exact scores.
pub fn labels_from_scores(scores: &[f64], eta: f64) -> Result<Vec<bool>> {
    if top_count(eta, scores.len()) == 0 {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta} labels no rows out of {}",
            scores.len()
        )));
    }
    Ok(top_fraction(scores, eta))
}

/// Top `⌈η·n⌉` rows by exact score.
pub fn ground_truth(a: &DenseMatrix, cfg: &EvalConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    if top_count(cfg.eta, a.rows()) == 0 {
        return Err(Error::InvalidArgument(format!("eta = {} labels no rows out of {}", cfg.eta, a.rows())));
    }
    let exact = batch_scores(a, cfg.k, cfg.lambda)?;
    labels_from_scores(&score_values(&exact, cfg.score_kind), cfg.eta)
}

/// Precision, recall and F1; F1 is 0 when nothing is predicted.
pub fn f1_score(predicted: &[bool], labels: &[bool]) -> (f64, f64, f64) {
    let tp = predicted.iter().zip(labels).filter(|(p, l)| **p && **l).count() as f64;
    let pp = predicted.iter().filter(|p| **p).count() as f64;
    let ap = labels.iter().filter(|l| **l).count() as f64;
    if pp == 0.0 || ap == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let (p, r) = (tp / pp, tp / ap);
    let f1 = if tp == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// Best F1 over thresholds at the top `⌈η′·n⌉` approximate scores. The
/// first grid entry wins ties.
pub fn f1_sweep(approx: &[f64], labels: &[bool], grid: &[f64]) -> Result<EvalReport> {
    if approx.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores but {} labels", approx.len(), labels.len())));
    }
    if !labels.iter().any(|l| *l) {
        return Err(Error::InvalidArgument("labels have no positive rows".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let order = rank_desc(approx);
    let mut best: Option<EvalReport> = None;
    for &eta_p in grid {
        let mut predicted = vec![false; approx.len()];
        for &i in order.iter().take(top_count(eta_p, approx.len())) {
            predicted[i] = true;
        }
        let (precision, recall, f1) = f1_score(&predicted, labels);
        if best.as_ref().map_or(true, |b| f1 > b.f1) {
            best = Some(EvalReport {
                f1,
                best_eta_prime: eta_p,
                precision,
                recall,
                seed: None,
                per_seed: Vec::new(),
            });
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Evaluates a sketch pipeline (or the exact scores when `pipeline` is
/// `None`) against exact ground truth. Randomized sketches run once per seed
/// and the report holds the mean.
pub fn evaluate(
    a: &DenseMatrix,
    cfg: &EvalConfig,
    pipeline: Option<&PipelineConfig>,
    seeds: &[u64],
) -> Result<EvalReport> {
    let labels = ground_truth(a, cfg)?;
    let Some(pc) = pipeline else {
        let exact = batch_scores(a, cfg.k, cfg.lambda)?;
        return f1_sweep(&score_values(&exact, cfg.score_kind), &labels, &cfg.sweep_grid);
    };
    if !matches!(cfg.score_kind, ScoreKind::Levk | ScoreKind::Projk) {
        return Err(Error::InvalidArgument(format!(
            "score kind {} is not produced by the {} sketch",
            cfg.score_kind, pc.mode
        )));
    }
    let run = |seed: u64| -> Result<EvalReport> {
        let mut c = pc.clone();
        c.seed = seed;
        let recs = run_pipeline(&mut MatrixSource::new(a), &c)?;
        let mut r = f1_sweep(&score_values(&recs, cfg.score_kind), &labels, &cfg.sweep_grid)?;
        r.seed = Some(seed);
        Ok(r)
    };
    if !pc.mode.is_randomized() {
        return run(pc.seed);
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    EvalReport::average(seeds.iter().map(|&s| run(s)).collect::<Result<_>>()?)
}

/// `(ℓ, F1)` rows for a sweep over sketch sizes.
pub fn ell_curve(
    a: &DenseMatrix,
    cfg: &EvalConfig,
    pipeline: &PipelineConfig,
    ells: &[usize],
    seeds: &[u64],
) -> Result<Vec<(usize, f64)>> {
    ells.iter()
        .map(|&ell| {
            let mut pc = pipeline.clone();
            pc.ell = ell;
            Ok((ell, evaluate(a, cfg, Some(&pc), seeds)?.f1))
        })
        .collect()
}
