//! Pseudorandom ±1/√ℓ projection from a `w`-wise independent hash family.
//!
//! `h(x) = c₀ + c₁x + … + c_{w−1}x^{w−1} mod (2⁶¹ − 1)`; the entry sign is the
//! low bit of `h(i·ℓ + j)`. Only the `w` coefficients are stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::rng::keyed_u64;

pub const MERSENNE_61: u64 = (1 << 61) - 1;
pub const DEFAULT_INDEPENDENCE: usize = 32;

/// Largest `d·ℓ` for which [`SignProjector::materialize`] is used by the
/// pipelines (one bit per entry).
pub const MATERIALIZE_LIMIT: usize = 1 << 26;

#[inline]
fn mulmod(a: u64, b: u64) -> u64 {
    let p = a as u128 * b as u128;
    let lo = (p as u64) & MERSENNE_61;
    let hi = (p >> 61) as u64;
    let s = lo + hi;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[inline]
fn reduce(x: u64) -> u64 {
    let s = (x & MERSENNE_61) + (x >> 61);
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignProjector {
    seed: u64,
    ell: usize,
    d: usize,
    coefficients: Vec<u64>,
}

impl SignProjector {
    pub fn new(seed: u64, d: usize, ell: usize, independence_w: usize) -> Result<Self> {
        if ell == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!(
                "projector needs d > 0 and ell > 0 (got d = {d}, ell = {ell})"
            )));
        }
        if independence_w == 0 {
            return Err(Error::InvalidArgument("independence must be at least 1".into()));
        }
        if (d as u128) * (ell as u128) >= MERSENNE_61 as u128 {
            return Err(Error::InvalidArgument("d * ell exceeds the hash field".into()));
        }
        let coefficients = (0..independence_w as u64)
            .map(|t| reduce(keyed_u64(seed, 0x5167, t)))
            .collect();
        Ok(Self {
            seed,
            ell,
            d,
            coefficients,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn independence(&self) -> usize {
        self.coefficients.len()
    }

    #[inline]
    fn hash(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in self.coefficients.iter().rev() {
            acc = mulmod(acc, x) + c;
            if acc >= MERSENNE_61 {
                acc -= MERSENNE_61;
            }
        }
        acc
    }

    #[inline]
    fn positive(&self, i: usize, j: usize) -> bool {
        self.hash((i * self.ell + j) as u64) & 1 == 0
    }

    /// Entry `R[i, j]` for input coordinate `i` and output coordinate `j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let m = 1.0 / (self.ell as f64).sqrt();
        if self.positive(i, j) {
            m
        } else {
            -m
        }
    }

    /// `Rᵀa`.
    pub fn project_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_width(row, self.d)?;
        let m = 1.0 / (self.ell as f64).sqrt();
        let mut out = vec![0.0; self.ell];
        for (i, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                if self.positive(i, j) {
                    *o += a;
                } else {
                    *o -= a;
                }
            }
        }
        out.iter_mut().for_each(|o| *o *= m);
        Ok(out)
    }

    /// Expands the signs into a bit table for fast repeated projection.
    pub fn materialize(&self) -> SignMatrix {
        let mut bits = vec![0u64; (self.d * self.ell).div_ceil(64)];
        for i in 0..self.d {
            for j in 0..self.ell {
                if self.positive(i, j) {
                    let idx = i * self.ell + j;
                    bits[idx / 64] |= 1 << (idx % 64);
                }
            }
        }
        SignMatrix {
            d: self.d,
            ell: self.ell,
            bits,
        }
    }
}

/// Materialized sign table of a [`SignProjector`]; same results, no hashing.
#[derive(Debug, Clone)]
pub struct SignMatrix {
    d: usize,
    ell: usize,
    bits: Vec<u64>,
}

impl SignMatrix {
    pub fn project_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_width(row, self.d)?;
        let m = 1.0 / (self.ell as f64).sqrt();
        let mut out = vec![0.0; self.ell];
        for (i, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let base = i * self.ell;
            for (j, o) in out.iter_mut().enumerate() {
                let idx = base + j;
                if self.bits[idx / 64] >> (idx % 64) & 1 == 1 {
                    *o += a;
                } else {
                    *o -= a;
                }
            }
        }
        out.iter_mut().for_each(|o| *o *= m);
        Ok(out)
    }
}

fn check_width(row: &[f64], d: usize) -> Result<()> {
    if row.len() != d {
        return Err(Error::WidthMismatch {
            row: 0,
            expected: d,
            got: row.len(),
        });
    }
    Ok(())
}
