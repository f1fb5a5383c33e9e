//! Seeded instance families and the named suites run by `verify`.

use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use super::checks::{
    check_average_guarantees, check_diag_dominance, check_low_rank_approx, check_pointwise_guarantees,
    check_projector, check_sigma_weighted, check_weyl, measure_mu_left, AverageSketch, BoundInputs,
    BoundReport, SigmaWeight,
};
use crate::error::{Error, Result};
use crate::eval::synth::{from_factors, gaussian, orthonormal_rows, rng, separated_sigma, with_spectrum};
use crate::linalg::{op_norm, spectral_stats, svd_thin, DenseMatrix, SpectralStats};
use crate::sketch::fd_sketch;
use crate::sketch::rng::derive_seed;

pub const PERTURB_N: usize = 120;
pub const PERTURB_D: usize = 40;

/// Squared tail ceiling for the pointwise family (stable rank near `k`).
pub const POINTWISE_TAIL: f64 = 0.05;

/// Sketch sizes tried, smallest first, for the average-case checks.
pub const AVERAGE_ELL_GRID: [usize; 4] = [32, 64, 128, 256];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Weyl,
    Projector,
    Sigma,
    Diag,
    Fd,
    Average,
    Pointwise,
    LowRank,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 9] =
        ["weyl", "projector", "sigma", "diag", "fd", "average", "pointwise", "lowrank", "all"];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "weyl" => Self::Weyl,
            "projector" => Self::Projector,
            "sigma" => Self::Sigma,
            "diag" => Self::Diag,
            "fd" => Self::Fd,
            "average" => Self::Average,
            "pointwise" => Self::Pointwise,
            "lowrank" | "low-rank" => Self::LowRank,
            "all" => Self::All,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown suite '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

fn seed_for(base: u64, family: u64, i: usize) -> u64 {
    derive_seed(derive_seed(base, family), i as u64)
}

/// `k` alternates between 2 and 5 across instances.
pub fn perturb_k(i: usize) -> usize {
    if i % 2 == 0 {
        2
    } else {
        5
    }
}

/// Random `PERTURB_N × PERTURB_D` matrix whose squared spectrum has a gap of
/// roughly 0.4 after index `k`.
pub fn separated_instance(seed: u64, k: usize) -> Result<DenseMatrix> {
    separated_matrix(seed, PERTURB_N, PERTURB_D, k)
}

pub fn separated_matrix(seed: u64, n: usize, d: usize, k: usize) -> Result<DenseMatrix> {
    separated_with_tail(seed, n, d, k, 0.3)
}

/// As [`separated_matrix`] with squared tail values up to `tail_high`;
/// a small tail gives stable rank close to `k`.
pub fn separated_with_tail(seed: u64, n: usize, d: usize, k: usize, tail_high: f64) -> Result<DenseMatrix> {
    let mut r = rng(seed);
    let sigma = separated_sigma(k, d.min(n), 0.7, tail_high, &mut r);
    with_spectrum(n, d, &sigma, &mut r)
}

#[derive(Debug, Clone)]
pub struct PerturbedCase {
    pub a: DenseMatrix,
    pub perturbed: DenseMatrix,
    pub k: usize,
    pub mu: f64,
}

/// `Ã = A + sE` with `s` tuned so that the measured `μ` lands near a
/// log-uniform target in `[1e-4, 1]·limit`, then halved while above `limit`.
pub fn perturbed_case(seed: u64, k: usize, limit: impl Fn(&SpectralStats) -> f64) -> Result<PerturbedCase> {
    let a = separated_instance(seed, k)?;
    let st = spectral_stats(&a, k, 1)?;
    let s1 = st.sigma_sq[0];
    let max_mu = limit(&st);
    let mut r = rng(derive_seed(seed, 0x6e6f_6973));
    let target = max_mu * 10f64.powf(r.random_range(-4.0..0.0));
    let mut e = gaussian(a.rows(), a.cols(), &mut r);
    e = e.scaled(1.0 / op_norm(&e)?);

    let build = |s: f64| -> Result<(DenseMatrix, f64)> {
        let at = a.add(&e.scaled(s))?;
        let mu = measure_mu_left(&a, &at, s1)?;
        Ok((at, mu))
    };
    let mut s = target * s1.sqrt() / 2.0;
    let (mut at, mut mu) = build(s)?;
    if mu > 0.0 {
        s *= target / mu;
        (at, mu) = build(s)?;
    }
    for _ in 0..60 {
        if mu <= max_mu {
            break;
        }
        s *= 0.5;
        (at, mu) = build(s)?;
    }
    Ok(PerturbedCase { a, perturbed: at, k, mu })
}

pub fn projector_limit(st: &SpectralStats) -> f64 {
    st.separation_delta / 6.0
}

pub fn sigma_limit(mode: SigmaWeight) -> impl Fn(&SpectralStats) -> f64 {
    move |st| {
        let k = st.k as f64;
        let delta = st.separation_delta;
        match mode {
            SigmaWeight::Squared => (delta.powi(3) * k * k).min(1.0 / (20.0 * k)),
            SigmaWeight::InverseSquared => {
                let kk = k * st.condition_kappa_k;
                (delta.powi(3) * kk * kk).min(1.0 / (20.0 * kk))
            }
        }
    }
}

/// A random `C` and a perturbation `N` with norm ratio log-uniform in `[1e-3, 1]`.
pub fn weyl_case(seed: u64) -> Result<(DenseMatrix, DenseMatrix)> {
    let mut r = rng(seed);
    let c = gaussian(PERTURB_N, PERTURB_D, &mut r);
    let n = gaussian(PERTURB_N, PERTURB_D, &mut r);
    let ratio = 10f64.powf(r.random_range(-3.0..0.0));
    let scale = ratio * op_norm(&c)? / op_norm(&n)?;
    Ok((c, n.scaled(scale)))
}

/// Symmetric `d × d` matrix: PSD of random rank, or indefinite.
pub fn symmetric_case(seed: u64) -> Result<DenseMatrix> {
    let mut r = rng(seed);
    let d = PERTURB_D;
    let rank = r.random_range(1..=d);
    let g = gaussian(d, rank, &mut r);
    let mut m = g.gram_rows();
    if r.random_bool(0.5) {
        // Flip the sign of a random subset of eigen-directions.
        let q = orthonormal_rows(d, d, &mut r)?;
        let lambda: Vec<f64> = (0..d)
            .map(|i| if i < rank { r.sample::<f64, _>(StandardNormal) } else { 0.0 })
            .collect();
        m = DenseMatrix::zeros(d, d);
        for (j, &l) in lambda.iter().enumerate() {
            let v = q.row(j);
            for i in 0..d {
                for c in 0..d {
                    let x = m.get(i, c) + l * v[i] * v[c];
                    m.set(i, c, x);
                }
            }
        }
        m = m.add(&m.transpose())?.scaled(0.5);
    }
    Ok(m)
}

/// `k = 1` family with identity right factor: `A = U diag(1, τ, …, τ)`.
/// A sign projection keeps the first coordinate's norm exactly, so the
/// sketch error comes only from the small tail.
pub fn axis_aligned_matrix(seed: u64, n: usize, d: usize, tail: f64) -> Result<DenseMatrix> {
    let mut r = rng(seed);
    let u = orthonormal_rows(d, n, &mut r)?;
    let mut sigma = vec![tail; d];
    sigma[0] = 1.0;
    Ok(from_factors(&u, &sigma, &DenseMatrix::identity(d)))
}

pub fn axis_aligned_instance(seed: u64) -> Result<DenseMatrix> {
    axis_aligned_matrix(seed, 200, 20, 0.003)
}

/// Stable rank close to `p`: `p` unit singular values over a small tail.
pub fn low_rank_instance(seed: u64, n: usize, d: usize, p: usize) -> Result<DenseMatrix> {
    let mut r = rng(seed);
    let mut sigma = vec![1.0; p];
    sigma.extend((p..d.min(n)).map(|_| 0.05 * r.random_range(0.1..1.0)));
    with_spectrum(n, d, &sigma, &mut r)
}

/// Checks `‖AᵀA − ÃᵀÃ‖ ≤ ‖A − A_k‖_F²/(ℓ − k)` for every `k < ℓ`.
pub fn check_fd_bound(a: &DenseMatrix, ell: usize, seed: Option<u64>) -> Result<Vec<BoundReport>> {
    let fd = fd_sketch(a, ell)?;
    let err = op_norm(&a.gram_cols().sub(&fd.covariance())?)?;
    let sq = svd_thin(a)?.sigma_sq();
    let mut out = Vec::with_capacity(ell);
    for k in 0..ell {
        let tail: f64 = sq.iter().skip(k).sum();
        let inputs = BoundInputs {
            n: Some(a.rows()),
            d: Some(a.cols()),
            k: Some(k),
            ell: Some(ell),
            mu: sq.first().map(|s1| err / s1),
            seed,
            ..BoundInputs::default()
        };
        out.push(BoundReport::new("fd_covariance", err, tail / (ell - k) as f64, inputs, true));
    }
    Ok(out)
}

fn tag(mut r: BoundReport, seed: u64) -> BoundReport {
    r.inputs.seed.get_or_insert(seed);
    r
}

/// Runs one suite over `count` seeded instances.
pub fn run_suite(suite: Suite, base_seed: u64, count: usize) -> Result<Vec<BoundReport>> {
    run_suite_with(suite, base_seed, count, None)
}

/// As [`run_suite`], with `epsilon` replacing each family's default accuracy.
pub fn run_suite_with(suite: Suite, base_seed: u64, count: usize, epsilon: Option<f64>) -> Result<Vec<BoundReport>> {
    let mut out = Vec::new();
    let mut families = vec![suite];
    if suite == Suite::All {
        families = vec![
            Suite::Weyl,
            Suite::Projector,
            Suite::Sigma,
            Suite::Diag,
            Suite::Fd,
            Suite::Pointwise,
            Suite::Average,
            Suite::LowRank,
        ];
    }
    for fam in families {
        for i in 0..count {
            out.extend(run_instance(fam, base_seed, i, epsilon)?);
        }
    }
    Ok(out)
}

fn run_instance(fam: Suite, base: u64, i: usize, epsilon: Option<f64>) -> Result<Vec<BoundReport>> {
    let k = perturb_k(i);
    Ok(match fam {
        Suite::Weyl => {
            let s = seed_for(base, 1, i);
            let (c, n) = weyl_case(s)?;
            vec![tag(check_weyl(&c, &n)?, s)]
        }
        Suite::Projector => {
            let s = seed_for(base, 2, i);
            let case = perturbed_case(s, k, projector_limit)?;
            vec![tag(check_projector(&case.a, &case.perturbed, k)?, s)]
        }
        Suite::Sigma => {
            let mut v = Vec::new();
            for mode in [SigmaWeight::Squared, SigmaWeight::InverseSquared] {
                let s = seed_for(base, if mode == SigmaWeight::Squared { 3 } else { 4 }, i);
                let case = perturbed_case(s, k, sigma_limit(mode))?;
                v.push(tag(check_sigma_weighted(&case.a, &case.perturbed, k, mode)?, s));
            }
            v
        }
        Suite::Diag => {
            let s = seed_for(base, 5, i);
            vec![tag(check_diag_dominance(&symmetric_case(s)?)?, s)]
        }
        Suite::Fd => {
            let s = seed_for(base, 6, i);
            let a = gaussian(500, 80, &mut rng(s));
            check_fd_bound(&a, 20, Some(s))?
        }
        Suite::Pointwise => {
            let s = seed_for(base, 7, i);
            let a = separated_with_tail(s, PERTURB_N, PERTURB_D, k, POINTWISE_TAIL)?;
            check_pointwise_guarantees(&a, k, epsilon.unwrap_or(0.2))?.into_iter().map(|r| tag(r, s)).collect()
        }
        Suite::Average => {
            let s = seed_for(base, 8, i);
            let a = axis_aligned_instance(s)?;
            check_average_guarantees(&a, 1, AverageSketch::Rproj, epsilon.unwrap_or(0.25), s, &AVERAGE_ELL_GRID)?.to_vec()
        }
        Suite::LowRank => {
            let s = seed_for(base, 9, i);
            let a = low_rank_instance(s, 300, 60, 5)?;
            check_low_rank_approx(&a, 5, 200, s, epsilon.unwrap_or(0.3))?.to_vec()
        }
        Suite::All => unreachable!("expanded by run_suite"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for name in Suite::NAMES {
            name.parse::<Suite>().unwrap();
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn perturbed_case_respects_limit() {
        for i in 0..4 {
            let k = perturb_k(i);
            let c = perturbed_case(i as u64, k, projector_limit).unwrap();
            let st = spectral_stats(&c.a, k, 1).unwrap();
            assert!(c.mu <= projector_limit(&st));
            assert!(c.mu > 0.0);
        }
    }

    #[test]
    fn axis_aligned_has_unit_top() {
        let a = axis_aligned_instance(3).unwrap();
        let st = spectral_stats(&a, 1, 1).unwrap();
        assert!((st.sigma_sq[0] - 1.0).abs() < 1e-10);
        assert!(st.separation_delta > 0.99);
    }

    #[test]
    fn small_suites_are_deterministic() {
        let a = run_suite(Suite::Weyl, 9, 3).unwrap();
        let b = run_suite(Suite::Weyl, 9, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.pass));
    }
}
