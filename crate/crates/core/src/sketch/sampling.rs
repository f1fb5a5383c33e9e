//! Length-squared sampling with `ℓ` independent single-slot reservoirs.
//!
//! On seeing mass `m` (running total `s`), slot `t` takes the new index with
//! probability `m / s`. Draws come from [`keyed_uniform`] so a replay of the
//! same stream with the same seed gives the same reservoirs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_sq, DenseMatrix};
use crate::sketch::rng::keyed_uniform;

/// `ℓ` reservoirs over a stream of weighted items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    pub ell: usize,
    pub reservoirs: Vec<Option<usize>>,
    pub running_mass: f64,
    pub rng_seed: u64,
}

impl SamplerState {
    pub fn new(ell: usize, rng_seed: u64) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidArgument("ell must be positive".into()));
        }
        Ok(Self {
            ell,
            reservoirs: vec![None; ell],
            running_mass: 0.0,
            rng_seed,
        })
    }

    /// Offers item `index` with mass `mass` at stream position `pos`.
    /// Returns the slots that switched to this item.
    pub fn offer(&mut self, index: usize, mass: f64, pos: u64, replaced: &mut Vec<usize>) {
        replaced.clear();
        if !(mass > 0.0) {
            return;
        }
        self.running_mass += mass;
        let p = mass / self.running_mass;
        for (t, slot) in self.reservoirs.iter_mut().enumerate() {
            if keyed_uniform(self.rng_seed, t as u64, pos) < p {
                *slot = Some(index);
                replaced.push(t);
            }
        }
    }

    pub fn indices(&self) -> Result<Vec<usize>> {
        self.reservoirs
            .iter()
            .map(|s| s.ok_or(Error::ZeroMass))
            .collect()
    }
}

/// Zeroth pass of column sampling: reservoirs over entries plus column masses.
#[derive(Debug, Clone)]
pub struct ColumnSampler {
    state: SamplerState,
    col_masses: Vec<f64>,
    rows_seen: u64,
    scratch: Vec<usize>,
}

impl ColumnSampler {
    pub fn new(d: usize, ell: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("row width must be positive".into()));
        }
        Ok(Self {
            state: SamplerState::new(ell, seed)?,
            col_masses: vec![0.0; d],
            rows_seen: 0,
            scratch: Vec::new(),
        })
    }

    pub fn update(&mut self, row: &[f64]) -> Result<()> {
        let d = self.col_masses.len();
        if row.len() != d {
            return Err(Error::WidthMismatch {
                row: self.rows_seen as usize,
                expected: d,
                got: row.len(),
            });
        }
        let base = self.rows_seen * d as u64;
        for (j, &a) in row.iter().enumerate() {
            let m = a * a;
            self.col_masses[j] += m;
            self.state.offer(j, m, base + j as u64, &mut self.scratch);
        }
        self.rows_seen += 1;
        Ok(())
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    pub fn finish(self) -> Result<ColumnPlan> {
        let indices = self.state.indices()?;
        ColumnPlan::new(indices, self.col_masses, self.state.rng_seed)
    }
}

/// Sampled columns with their rescaling, ready for passes 1 and 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPlan {
    indices: Vec<usize>,
    col_masses: Vec<f64>,
    seed: u64,
    scale: Vec<f64>,
}

impl ColumnPlan {
    pub fn new(indices: Vec<usize>, col_masses: Vec<f64>, seed: u64) -> Result<Self> {
        let total: f64 = col_masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        if indices.is_empty() {
            return Err(Error::InvalidArgument("plan needs at least one column".into()));
        }
        let ell = indices.len() as f64;
        let scale = indices
            .iter()
            .map(|&j| {
                let m = *col_masses.get(j).ok_or_else(|| {
                    Error::InvalidArgument(format!("sampled column {j} out of range"))
                })?;
                if !(m > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "sampled column {j} has zero recorded mass"
                    )));
                }
                Ok((total / (ell * m)).sqrt())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            indices,
            col_masses,
            seed,
            scale,
        })
    }

    pub fn ell(&self) -> usize {
        self.indices.len()
    }

    pub fn dim(&self) -> usize {
        self.col_masses.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn col_masses(&self) -> &[f64] {
        &self.col_masses
    }

    /// `out_t = row[S_t] · ‖A‖_F / (√ℓ · ‖A_{:,S_t}‖)`.
    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::WidthMismatch {
                row: 0,
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(self.indices.iter().zip(&self.scale).map(|(&j, &c)| row[j] * c).collect())
    }
}

/// Samples `ℓ` column indices of `a` proportionally to squared column mass.
pub fn column_sample_plan(a: &DenseMatrix, ell: usize, seed: u64) -> Result<ColumnPlan> {
    let mut s = ColumnSampler::new(a.cols(), ell, seed)?;
    for r in a.iter_rows() {
        s.update(r)?;
    }
    s.finish()
}

pub fn apply_column_plan(plan: &ColumnPlan, row: &[f64]) -> Result<Vec<f64>> {
    plan.apply(row)
}

/// One-pass length-squared row sampler keeping a copy of each slot's row.
#[derive(Debug, Clone)]
pub struct RowSampler {
    state: SamplerState,
    d: usize,
    kept: DenseMatrix,
    rows_seen: u64,
    scratch: Vec<usize>,
}

impl RowSampler {
    pub fn new(d: usize, ell: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            state: SamplerState::new(ell, seed)?,
            d,
            kept: DenseMatrix::zeros(ell, d),
            rows_seen: 0,
            scratch: Vec::new(),
        })
    }

    pub fn update(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.d {
            return Err(Error::WidthMismatch {
                row: self.rows_seen as usize,
                expected: self.d,
                got: row.len(),
            });
        }
        let idx = self.rows_seen as usize;
        self.state.offer(idx, norm_sq(row), self.rows_seen, &mut self.scratch);
        for &t in &self.scratch {
            self.kept.row_mut(t).copy_from_slice(row);
        }
        self.rows_seen += 1;
        Ok(())
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    /// Rescaled `ℓ × d` sketch with `E[ÃᵀÃ] = AᵀA`.
    pub fn finish(mut self) -> Result<DenseMatrix> {
        self.state.indices()?;
        let total = self.state.running_mass;
        let ell = self.state.ell as f64;
        for t in 0..self.state.ell {
            let row = self.kept.row_mut(t);
            let c = (total / (ell * norm_sq(row))).sqrt();
            row.iter_mut().for_each(|x| *x *= c);
        }
        Ok(self.kept)
    }
}

pub fn row_sample(a: &DenseMatrix, ell: usize, seed: u64) -> Result<DenseMatrix> {
    let mut s = RowSampler::new(a.cols(), ell, seed)?;
    for r in a.iter_rows() {
        s.update(r)?;
    }
    s.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_nonzero_column_is_forced() {
        let a = DenseMatrix::from_fn(5, 4, |i, j| if j == 2 { i as f64 + 1.0 } else { 0.0 });
        let plan = column_sample_plan(&a, 7, 11).unwrap();
        assert_eq!(plan.indices(), &[2; 7]);
    }

    #[test]
    fn three_to_one_mass_ratio() {
        let a = DenseMatrix::from_rows(&[[3f64.sqrt(), 1.0]]).unwrap();
        let runs = 2000;
        let hits = (0..runs)
            .filter(|&s| column_sample_plan(&a, 1, s).unwrap().indices()[0] == 0)
            .count();
        let frac = hits as f64 / runs as f64;
        assert!((frac - 0.75).abs() <= 0.03, "{frac}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = DenseMatrix::from_fn(20, 6, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        assert_eq!(column_sample_plan(&a, 9, 4).unwrap(), column_sample_plan(&a, 9, 4).unwrap());
        assert_eq!(row_sample(&a, 9, 4).unwrap(), row_sample(&a, 9, 4).unwrap());
    }

    #[test]
    fn zero_mass_is_an_error() {
        let a = DenseMatrix::zeros(3, 2);
        assert!(matches!(column_sample_plan(&a, 2, 0), Err(Error::ZeroMass)));
        assert!(matches!(row_sample(&a, 2, 0), Err(Error::ZeroMass)));
    }

    #[test]
    fn single_column_plan_is_exact() {
        let a = DenseMatrix::from_rows(&[[1.0], [-2.0], [0.5]]).unwrap();
        let plan = column_sample_plan(&a, 1, 3).unwrap();
        let b: Vec<Vec<f64>> = a.iter_rows().map(|r| plan.apply(r).unwrap()).collect();
        let b = DenseMatrix::from_rows(&b).unwrap();
        let diff = b.gram_rows().sub(&a.gram_rows()).unwrap().max_abs();
        assert!(diff < 1e-12);
    }

    #[test]
    fn plan_is_homogeneous() {
        let a = DenseMatrix::from_fn(6, 3, |i, j| (i + 2 * j) as f64 - 2.5);
        let plan = column_sample_plan(&a, 4, 8).unwrap();
        let plan2 = column_sample_plan(&a.scaled(2.0), 4, 8).unwrap();
        assert_eq!(plan.indices(), plan2.indices());
        for r in 0..6 {
            let x = plan.apply(a.row(r)).unwrap();
            let row2: Vec<f64> = a.row(r).iter().map(|v| 2.0 * v).collect();
            let y = plan2.apply(&row2).unwrap();
            for (p, q) in x.iter().zip(&y) {
                assert!((2.0 * p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_rows_give_exact_covariance() {
        let a = DenseMatrix::from_fn(10, 3, |_, j| j as f64 + 1.0);
        let s = row_sample(&a, 4, 1).unwrap();
        let g = a.gram_cols();
        let diff = s.gram_cols().sub(&g).unwrap().max_abs();
        assert!(diff <= 1e-10 * g.max_abs());
    }
}
