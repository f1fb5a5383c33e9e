//! Translation from a target covariance error `μ` (and accuracy `ε`) to
//! sketch sizes. Used by test harnesses; the pipelines take `ℓ` directly.

/// FD: `ℓ = k + ⌈Σ_{i>k} σᵢ² / (σ₁² μ)⌉` makes `‖AᵀA − ÃᵀÃ‖ ≤ μσ₁²`.
pub fn fd_ell_for_mu(sigma_sq: &[f64], k: usize, mu: f64) -> usize {
    let s1 = sigma_sq.first().copied().unwrap_or(0.0);
    let tail: f64 = sigma_sq.iter().skip(k).sum();
    if s1 <= 0.0 || mu <= 0.0 {
        return usize::MAX;
    }
    k + (tail / (s1 * mu)).ceil().max(1.0) as usize
}

/// Sign projection: `ℓ = ⌈(sr + ln(1/δ)) / μ²⌉`.
pub fn projection_ell_for_mu(stable_rank: f64, mu: f64, fail_prob: f64) -> usize {
    ((stable_rank + (1.0 / fail_prob).ln()) / (mu * mu)).ceil().max(1.0) as usize
}

/// Length-squared sampling: `ℓ = ⌈sr · ln(sr/μ²) / μ²⌉`.
pub fn sampling_ell_for_mu(stable_rank: f64, mu: f64) -> usize {
    let m2 = mu * mu;
    (stable_rank * (stable_rank / m2).ln().max(1.0) / m2).ceil().max(1.0) as usize
}

/// Pointwise projection-distance guarantee: `μ = ε²Δ`.
pub fn mu_pointwise_projection(epsilon: f64, delta: f64) -> f64 {
    epsilon * epsilon * delta
}

/// Pointwise leverage guarantee: `μ = ε³k² / (10³ sr³ κ⁴)`.
pub fn mu_pointwise_leverage(epsilon: f64, k: usize, stable_rank: f64, kappa: f64) -> f64 {
    epsilon.powi(3) * (k * k) as f64 / (1e3 * stable_rank.powi(3) * kappa.powi(4))
}

/// Average leverage guarantee: `μ = ε²Δ/16`.
pub fn mu_average_leverage(epsilon: f64, delta: f64) -> f64 {
    epsilon * epsilon * delta / 16.0
}

/// Average projection-distance guarantee: `μ = ε³ sr³ / (125 k⁴)`.
pub fn mu_average_projection(epsilon: f64, stable_rank: f64, k: usize) -> f64 {
    epsilon.powi(3) * stable_rank.powi(3) / (125.0 * (k as f64).powi(4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_sizes() {
        assert_eq!(fd_ell_for_mu(&[4.0, 1.0, 1.0], 1, 0.5), 2);
        assert_eq!(fd_ell_for_mu(&[4.0, 1.0, 1.0], 1, 0.1), 6);
        assert_eq!(fd_ell_for_mu(&[0.0], 1, 0.1), usize::MAX);
    }

    #[test]
    fn mu_formulas() {
        assert!((mu_pointwise_projection(0.2, 0.5) - 0.02).abs() < 1e-15);
        assert!((mu_average_leverage(0.25, 0.32) - 0.00125).abs() < 1e-15);
        assert!((mu_average_projection(1.0, 5.0, 1) - 1.0).abs() < 1e-12);
        assert!(projection_ell_for_mu(2.0, 0.5, 0.1) >= 8);
    }
}
