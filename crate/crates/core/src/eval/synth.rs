//! Seeded synthetic data: prescribed spectra, planted anomalies, and the
//! repeated-row leverage fixture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm_sq, DenseMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(n: usize, d: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `r` orthonormal rows in `ℝ^dim` (Gram-Schmidt on Gaussian vectors).
pub fn orthonormal_rows(r: usize, dim: usize, rng: &mut impl Rng) -> Result<DenseMatrix> {
    if r > dim {
        return Err(Error::InvalidArgument(format!("cannot fit {r} orthonormal vectors in dimension {dim}")));
    }
    let mut q = DenseMatrix::zeros(0, dim);
    while q.rows() < r {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for _ in 0..2 {
            for prev in q.iter_rows() {
                let c = dot(&v, prev);
                axpy(-c, prev, &mut v);
            }
        }
        let nrm = norm_sq(&v).sqrt();
        if nrm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        q.push_row_unchecked(&v);
    }
    Ok(q)
}

/// `A = U diag(σ) Vᵀ` with random orthonormal `U` (n × r) and `V` (d × r).
pub fn with_spectrum(n: usize, d: usize, sigma: &[f64], rng: &mut impl Rng) -> Result<DenseMatrix> {
    let u = orthonormal_rows(sigma.len(), n, rng)?;
    let v = orthonormal_rows(sigma.len(), d, rng)?;
    Ok(from_factors(&u, sigma, &v))
}

/// `Σ σⱼ uⱼ vⱼᵀ` from row-stored factors.
pub fn from_factors(u: &DenseMatrix, sigma: &[f64], v: &DenseMatrix) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(u.cols(), v.cols());
    for (j, &s) in sigma.iter().enumerate() {
        for (i, &uij) in u.row(j).iter().enumerate() {
            axpy(s * uij, v.row(j), a.row_mut(i));
        }
    }
    a
}

/// Squared spectrum with a top-`k` block in `[top_low, 1]` and a tail in
/// `(0, tail_high]`, so that the gap at `k` is at least `top_low − tail_high`.
pub fn separated_sigma(k: usize, rank: usize, top_low: f64, tail_high: f64, rng: &mut impl Rng) -> Vec<f64> {
    let mut sq: Vec<f64> = Vec::with_capacity(rank);
    for i in 0..k {
        let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
        sq.push(1.0 - t * (1.0 - top_low));
    }
    let mut tail: Vec<f64> = (k..rank).map(|_| tail_high * rng.random_range(0.05..1.0)).collect();
    tail.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    sq.extend(tail);
    sq.iter().map(|s| s.sqrt()).collect()
}

/// Data with a planted rank-`k` signal, isotropic noise and a fraction of
/// anomalous rows pushed off the signal subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub anomaly_fraction: f64,
    /// Per-entry noise standard deviation.
    pub noise: f64,
    /// Norm of the off-subspace component added to anomalies.
    pub anomaly_scale: f64,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn new(n: usize, d: usize, k: usize, seed: u64) -> Self {
        Self {
            n,
            d,
            k,
            anomaly_fraction: 0.02,
            noise: 0.05,
            anomaly_scale: 5.0,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub data: DenseMatrix,
    pub is_anomaly: Vec<bool>,
}

/// Rows `Σⱼ zᵢⱼ sⱼ vⱼ + noise`, with `s` linear from 2 down to 1 and `z`
/// standard normal; anomalies get `anomaly_scale` times a random unit vector
/// orthogonal to the signal subspace.
pub fn planted(cfg: &PlantedConfig) -> Result<Planted> {
    if cfg.k == 0 || cfg.k >= cfg.d {
        return Err(Error::InvalidArgument(format!("need 0 < k < d (k = {}, d = {})", cfg.k, cfg.d)));
    }
    if !(0.0..1.0).contains(&cfg.anomaly_fraction) {
        return Err(Error::InvalidArgument("anomaly fraction must be in [0, 1)".into()));
    }
    let mut rng = rng(cfg.seed);
    let v = orthonormal_rows(cfg.k, cfg.d, &mut rng)?;
    let scales: Vec<f64> = (0..cfg.k)
        .map(|j| if cfg.k == 1 { 2.0 } else { 2.0 - j as f64 / (cfg.k - 1) as f64 })
        .collect();
    let n_anom = (cfg.anomaly_fraction * cfg.n as f64).round() as usize;
    let mut order: Vec<usize> = (0..cfg.n).collect();
    for i in (1..cfg.n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut is_anomaly = vec![false; cfg.n];
    for &i in &order[..n_anom] {
        is_anomaly[i] = true;
    }
    let mut data = DenseMatrix::zeros(cfg.n, cfg.d);
    for i in 0..cfg.n {
        let row = data.row_mut(i);
        for (j, &s) in scales.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            axpy(z * s, v.row(j), row);
        }
        for x in row.iter_mut() {
            *x += cfg.noise * rng.sample::<f64, _>(StandardNormal);
        }
        if is_anomaly[i] {
            let mut w: Vec<f64> = (0..cfg.d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            for vj in v.iter_rows() {
                let c = dot(&w, vj);
                axpy(-c, vj, &mut w);
            }
            let nrm = norm_sq(&w).sqrt();
            axpy(cfg.anomaly_scale / nrm, &w, row);
        }
    }
    Ok(Planted { data, is_anomaly })
}

/// `t` copies of `e₁` followed by `e₂, …, e_{extra+1}` in `ℝ^d`. Each copy
/// of `e₁` has leverage `1/t`, every other row leverage 1.
pub fn disj_fixture(t: usize, extra: usize, d: usize) -> Result<DenseMatrix> {
    if t == 0 || extra + 1 > d {
        return Err(Error::InvalidArgument(format!("need t >= 1 and extra + 1 <= d (t = {t}, extra = {extra}, d = {d})")));
    }
    let n = t + extra;
    Ok(DenseMatrix::from_fn(n, d, |i, j| {
        let axis = if i < t { 0 } else { i - t + 1 };
        if j == axis {
            1.0
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd_thin;

    #[test]
    fn orthonormal_rows_are_orthonormal() {
        let q = orthonormal_rows(5, 9, &mut rng(1)).unwrap();
        let g = q.gram_rows();
        assert!(g.sub(&DenseMatrix::identity(5)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn prescribed_spectrum_is_recovered() {
        let sigma = [3.0, 2.0, 0.5];
        let a = with_spectrum(20, 6, &sigma, &mut rng(2)).unwrap();
        let s = svd_thin(&a).unwrap();
        for (x, y) in s.values.iter().zip(sigma) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(s.values[3] < 1e-6);
    }

    #[test]
    fn planted_is_seeded() {
        let cfg = PlantedConfig::new(100, 12, 3, 9);
        let a = planted(&cfg).unwrap();
        let b = planted(&cfg).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.is_anomaly.iter().filter(|&&x| x).count(), 2);
    }

    #[test]
    fn disj_layout() {
        let m = disj_fixture(3, 2, 4).unwrap();
        assert_eq!(m.rows(), 5);
        assert_eq!(m.row(2), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(m.row(4), &[0.0, 0.0, 1.0, 0.0]);
    }
}
