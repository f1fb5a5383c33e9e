//! Cyclic Jacobi eigensolver for dense symmetric matrices.
//!
//! Sweeps visit the pairs `(p, q)`, `p < q`, in row order; the iteration
//! stops once the off-diagonal Frobenius mass drops to `tol * ‖M‖_F`.
//! The fixed sweep order together with the sign convention applied to the
//! output vectors makes the result a deterministic function of the input.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const DEFAULT_EIG_TOL: f64 = 1e-13;
pub const MAX_SWEEPS: usize = 100;

/// Relative asymmetry tolerated on input.
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigen-decomposition `M = Q diag(λ) Qᵀ` of a symmetric matrix.
///
/// Eigenvalues are sorted descending (ties keep their original order);
/// row `i` of `vectors` is the unit eigenvector for `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
    pub sweeps: usize,
}

impl SymmetricEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.row(i)
    }

    /// Largest eigenvalue magnitude, i.e. the operator norm.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rebuilds `Q diag(λ) Qᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        for (lambda, q) in self.values.iter().zip(self.vectors.iter_rows()) {
            for i in 0..n {
                let s = lambda * q[i];
                if s == 0.0 {
                    continue;
                }
                let row = out.row_mut(i);
                for j in 0..n {
                    row[j] += s * q[j];
                }
            }
        }
        out
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(m: &DenseMatrix, tol: f64) -> Result<SymmetricEigen> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = m.rows();
    let asym = m
        .asymmetry()
        .ok_or_else(|| Error::Shape(format!("sym_eig needs a square matrix, got {}x{}", m.rows(), m.cols())))?;
    let fro = m.frobenius();
    if asym > SYMMETRY_TOL * fro.max(f64::MIN_POSITIVE) {
        return Err(Error::Shape(format!(
            "matrix is not symmetric (max asymmetry {asym:e}, ‖M‖_F = {fro:e})"
        )));
    }

    let mut a = m.as_slice().to_vec();
    // Symmetrize exactly so the rotations below can trust either triangle.
    for p in 0..n {
        for q in (p + 1)..n {
            let v = 0.5 * (a[p * n + q] + a[q * n + p]);
            a[p * n + q] = v;
            a[q * n + p] = v;
        }
    }
    let mut vt = DenseMatrix::identity(n);
    let target = tol * fro;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::Convergence {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Once past the first sweeps, an element negligible against
                // both diagonal entries is set to zero outright.
                let g = 100.0 * apq.abs();
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                rotate(&mut a, vt.data_mut(), n, p, q);
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal eigenvalues keep their original index order.
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let row = vectors.row_mut(dst);
        row.copy_from_slice(vt.row(src));
        apply_sign_convention(row);
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Flips `v` so that its entry of largest magnitude (first one on ties) is
/// nonnegative.
pub fn apply_sign_convention(v: &mut [f64]) -> bool {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += a[p * n + q] * a[p * n + q];
        }
    }
    (2.0 * s).sqrt()
}

#[inline]
fn rotate(a: &mut [f64], vt: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    a[p * n + p] = app - t * apq;
    a[q * n + q] = aqq + t * apq;
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;

    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[p * n + r];
        let arq = a[q * n + r];
        let new_p = arp - s * (arq + tau * arp);
        let new_q = arq + s * (arp - tau * arq);
        a[p * n + r] = new_p;
        a[q * n + r] = new_q;
        a[r * n + p] = new_p;
        a[r * n + q] = new_q;
    }

    let (head, tail) = vt.split_at_mut(q * n);
    let vp = &mut head[p * n..(p + 1) * n];
    let vq = &mut tail[..n];
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = xp - s * (xq + tau * xp);
        *y = xq + s * (xp - tau * xq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        m
    }

    /// Coefficients of det(λI - M) = λ³ + c2 λ² + c1 λ + c0 for a 3x3 matrix.
    fn char_poly_3(m: &DenseMatrix) -> [f64; 3] {
        let g = |i, j| m.get(i, j);
        let tr = g(0, 0) + g(1, 1) + g(2, 2);
        let minors = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0) + g(0, 0) * g(2, 2) - g(0, 2) * g(2, 0)
            + g(1, 1) * g(2, 2)
            - g(1, 2) * g(2, 1);
        let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
            - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
        [-det, minors, -tr]
    }

    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (f(mid) > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn identity_and_diagonal() {
        let e = sym_eig(&DenseMatrix::identity(2), DEFAULT_EIG_TOL).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
        assert_eq!(e.vectors, DenseMatrix::identity(2));

        let e = sym_eig(&DenseMatrix::from_diag(&[1.0, 4.0]), DEFAULT_EIG_TOL).unwrap();
        assert_eq!(e.values, vec![4.0, 1.0]);
        assert_eq!(e.vector(0), &[0.0, 1.0]);
        assert_eq!(e.vector(1), &[1.0, 0.0]);
    }

    #[test]
    fn matches_characteristic_polynomial_roots() {
        for seed in 0..20 {
            let m = random_symmetric(3, seed);
            let [c0, c1, c2] = char_poly_3(&m);
            let p = |x: f64| ((x + c2) * x + c1) * x + c0;
            // Roots are separated by the critical points of p.
            let disc = (4.0 * c2 * c2 - 12.0 * c1).sqrt();
            let r1 = (-2.0 * c2 - disc) / 6.0;
            let r2 = (-2.0 * c2 + disc) / 6.0;
            let bound = 10.0;
            let roots = [bisect(p, r2, bound), bisect(p, r1, r2), bisect(p, -bound, r1)];
            let e = sym_eig(&m, DEFAULT_EIG_TOL).unwrap();
            for (got, want) in e.values.iter().zip(roots) {
                assert!((got - want).abs() <= 1e-9, "seed {seed}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        for n in [1, 2, 5, 17, 40] {
            let m = random_symmetric(n, n as u64);
            let e = sym_eig(&m, DEFAULT_EIG_TOL).unwrap();
            let resid = e.reconstruct().sub(&m).unwrap().frobenius();
            assert!(resid <= 1e-12 * m.frobenius().max(1.0), "n={n} resid={resid:e}");
            let qqt = e.vectors.matmul(&e.vectors.transpose()).unwrap();
            let dev = qqt.sub(&DenseMatrix::identity(n)).unwrap().max_abs();
            assert!(dev <= 1e-10, "n={n} dev={dev:e}");
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn sign_convention_holds() {
        let m = random_symmetric(12, 99);
        let e = sym_eig(&m, DEFAULT_EIG_TOL).unwrap();
        for v in e.vectors.iter_rows() {
            let (i, _) = v
                .iter()
                .enumerate()
                .fold((0, -1.0), |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) });
            assert!(v[i] >= 0.0);
        }
    }

    #[test]
    fn deterministic_bytes() {
        let m = random_symmetric(15, 3);
        let a = sym_eig(&m, DEFAULT_EIG_TOL).unwrap();
        let b = sym_eig(&m, DEFAULT_EIG_TOL).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_square_and_asymmetric() {
        let r = sym_eig(&DenseMatrix::zeros(2, 3), DEFAULT_EIG_TOL);
        assert!(matches!(r, Err(Error::Shape(_))));
        let m = DenseMatrix::from_rows(&[[1.0, 2.0], [2.5, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&m, DEFAULT_EIG_TOL), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_matrix_is_fine() {
        let e = sym_eig(&DenseMatrix::zeros(3, 3), DEFAULT_EIG_TOL).unwrap();
        assert_eq!(e.values, vec![0.0; 3]);
        assert_eq!(e.sweeps, 0);
    }
}
