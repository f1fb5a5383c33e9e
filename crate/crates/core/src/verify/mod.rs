//! Numeric checks of the perturbation bounds and sketch guarantees.
//!
//! Every checker measures the left side on concrete matrices, evaluates the
//! right side from measured quantities, and reports both. Sketch error `μ` is
//! always measured, never inferred from the sketch size.

mod checks;
pub mod suite;

use std::io::Write;

pub use checks::{
    check_average_guarantees, check_diag_dominance, check_low_rank_approx, check_pointwise_guarantees,
    check_projector, check_sigma_weighted, check_weyl, measure_mu_left, measure_mu_right, project_columns,
    AverageSketch, BoundInputs, BoundReport, SigmaWeight, MAX_TRANSLATED_ELL, PASS_TOL,
};
pub use suite::{check_fd_bound, run_suite, run_suite_with, Suite};

use crate::error::Result;

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(reports: &[BoundReport], mut out: W) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// True when every applicable report holds.
pub fn all_pass(reports: &[BoundReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::suite::{axis_aligned_instance, low_rank_instance, perturbed_case, projector_limit, separated_instance};
    use super::*;
    use crate::linalg::DenseMatrix;

    fn diag(v: &[f64], n: usize, d: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, d, |i, j| if i == j && i < v.len() { v[i] } else { 0.0 })
    }

    #[test]
    fn weyl_zero_perturbation() {
        let c = separated_instance(1, 2).unwrap();
        let r = check_weyl(&c, &DenseMatrix::zeros(c.rows(), c.cols())).unwrap();
        assert_eq!(r.rhs, 0.0);
        assert!(r.lhs < 1e-12 && r.pass);
    }

    #[test]
    fn weyl_diagonal_equality() {
        let c = diag(&[3.0, 1.0], 2, 2);
        let n = diag(&[0.0, 0.5], 2, 2);
        let r = check_weyl(&c, &n).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-12);
        assert!((r.rhs - 0.5).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn weyl_shape_mismatch() {
        assert!(check_weyl(&DenseMatrix::zeros(2, 2), &DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn projector_identity_perturbation() {
        let a = separated_instance(4, 2).unwrap();
        let r = check_projector(&a, &a, 2).unwrap();
        assert!(r.lhs < 1e-10);
        assert_eq!(r.inputs.mu, Some(0.0));
        assert!(r.applicable && r.pass);
    }

    #[test]
    fn projector_small_diagonal() {
        let a = diag(&[2.0, 1.0], 4, 2);
        let at = a.add(&diag(&[1e-3, -2e-3], 4, 2)).unwrap();
        let r = check_projector(&a, &at, 1).unwrap();
        assert!(r.applicable && r.pass);
        // The top direction is unchanged, so the projectors agree.
        assert!(r.lhs < 1e-12);
    }

    #[test]
    fn projector_scale_invariant() {
        let case = perturbed_case(7, 2, projector_limit).unwrap();
        let r1 = check_projector(&case.a, &case.perturbed, 2).unwrap();
        let r2 = check_projector(&case.a.scaled(4.0), &case.perturbed.scaled(4.0), 2).unwrap();
        assert_eq!(r1.lhs, r2.lhs);
        assert_eq!(r1.rhs, r2.rhs);
    }

    #[test]
    fn projector_inapplicable_is_not_failure() {
        let a = diag(&[2.0, 1.0], 4, 2);
        let at = diag(&[1.0, 2.0], 4, 2);
        let r = check_projector(&a, &at, 1).unwrap();
        assert!(!r.applicable);
        assert!(r.pass);
        // Swapped axes: μ = Δ = 3/4, so the projectors differ by exactly 1.
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_weighted_identity_and_rank_one() {
        let a = separated_instance(2, 5).unwrap();
        for mode in [SigmaWeight::Squared, SigmaWeight::InverseSquared] {
            let r = check_sigma_weighted(&a, &a, 5, mode).unwrap();
            assert!(r.lhs < 1e-9, "{mode:?} {}", r.lhs);
        }
        let b = diag(&[1.0, 1e-3, 1e-3], 6, 3);
        let noise = diag(&[1e-9, 0.0, 0.0], 6, 3);
        let r = check_sigma_weighted(&b, &b.add(&noise).unwrap(), 1, SigmaWeight::Squared).unwrap();
        assert!(r.applicable && r.pass);
        assert!(r.slack > 0.9 * r.rhs);
    }

    #[test]
    fn diag_dominance_equality_cases() {
        let r = check_diag_dominance(&DenseMatrix::identity(6)).unwrap();
        assert_eq!(r.lhs, 6.0);
        assert!((r.rhs - 6.0).abs() < 1e-12 && r.pass);
        let v = [1.0, -2.0, 0.5];
        let m = DenseMatrix::from_fn(3, 3, |i, j| v[i] * v[j]);
        let r = check_diag_dominance(&m).unwrap();
        assert!((r.lhs - 5.25).abs() < 1e-12);
        assert!((r.rhs - 5.25).abs() < 1e-10 && r.pass);
        let asym = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(check_diag_dominance(&asym).is_err());
    }

    #[test]
    fn average_identity_sketch_is_exact() {
        // Columns sampled from a matrix with one nonzero column are exact.
        let a = DenseMatrix::from_fn(30, 4, |i, j| if j == 2 { (i + 1) as f64 } else { 0.0 });
        let [l, t] = check_average_guarantees(&a, 1, AverageSketch::Colsample, 0.25, 5, &[8]).unwrap();
        assert!(l.lhs < 1e-8, "{}", l.lhs);
        assert!(t.lhs < 1e-8 * a.frobenius_sq(), "{}", t.lhs);
        assert!(l.pass && t.pass);
    }

    #[test]
    fn average_axis_aligned_meets_target() {
        let a = axis_aligned_instance(11).unwrap();
        let [l, t] = check_average_guarantees(&a, 1, AverageSketch::Rproj, 0.25, 11, &suite::AVERAGE_ELL_GRID).unwrap();
        assert!(l.applicable, "{l:?}");
        assert!(l.holds() && t.holds());
    }

    #[test]
    fn pointwise_lossless_is_exact() {
        let a = separated_matrix_small();
        let [t, l] = check_pointwise_guarantees(&a, 2, 0.2).unwrap();
        assert!(t.holds() && l.holds());
        assert!(t.applicable);
    }

    fn separated_matrix_small() -> DenseMatrix {
        suite::separated_matrix(3, 40, 12, 2).unwrap()
    }

    #[test]
    fn low_rank_span_capture() {
        let a = low_rank_instance(1, 40, 10, 3).unwrap();
        let [b, id] = check_low_rank_approx(&a, 10, 12, 1, 0.3).unwrap();
        assert!(b.lhs < 1e-8, "{}", b.lhs);
        assert!(id.pass && b.pass);
        let v: Vec<f64> = (0..8).map(|j| (j as f64 - 3.5) / 4.0).collect();
        let r1 = DenseMatrix::from_fn(25, 8, |i, j| ((i % 5) as f64 - 2.0) * v[j]);
        let [b, id] = check_low_rank_approx(&r1, 1, 4, 3, 0.3).unwrap();
        assert!(b.lhs <= 1e-8 && id.pass);
        assert!(check_low_rank_approx(&r1, 2, 4, 3, 0.3).is_err());
        assert!(check_low_rank_approx(&r1, 5, 4, 3, 0.3).is_err());
    }

    #[test]
    fn jsonl_has_named_fields() {
        let r = check_weyl(&DenseMatrix::identity(2), &DenseMatrix::zeros(2, 2)).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&[r.clone(), r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["bound_name", "lhs", "rhs", "slack", "inputs", "applicable", "pass"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        for key in ["n", "d", "k", "ell", "mu", "delta", "kappa_k", "sr", "epsilon", "seed"] {
            assert!(v["inputs"].get(key).is_some(), "{key}");
        }
    }
}
