//! Monte-Carlo check of the aggregation error model.

use crate::error::{Error, Result};
use crate::problem::mse_ota;
use crate::scenario::{Scenario, Solution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub empirical_mse: f64,
    pub analytical_mse: f64,
    pub n_trials: usize,
    /// Standard error of `empirical_mse`.
    pub std_error: f64,
    /// Norm of the trial-averaged error vector.
    pub mean_error_norm: f64,
}

/// Normalizes local gradients with the device-averaged mean and standard
/// deviation. Returns `(normalized, mu, gamma)`.
pub fn normalize_gradients(gradients: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64, f64)> {
    let m = match gradients.first() {
        Some(g) if !g.is_empty() => g.len(),
        _ => return Err(Error::param("gradients", "need at least one nonempty vector")),
    };
    if gradients.iter().any(|g| g.len() != m) {
        return Err(Error::param("gradients", "all vectors must have the same length"));
    }
    let k = gradients.len() as f64;
    let (mut mu, mut gamma) = (0.0, 0.0);
    for g in gradients {
        let mean = g.iter().sum::<f64>() / m as f64;
        let second = g.iter().map(|v| v * v).sum::<f64>() / m as f64;
        mu += mean;
        gamma += (second - mean * mean).max(0.0).sqrt();
    }
    mu /= k;
    gamma /= k;
    if !(gamma > 0.0) {
        return Err(Error::ZeroSpread);
    }
    let normalized = gradients
        .iter()
        .map(|g| g.iter().map(|v| (v - mu) / gamma).collect())
        .collect();
    Ok((normalized, mu, gamma))
}

/// Aggregation error `(gamma / K) (sum_k (h_k sqrt(alpha p_k) - 1) g_k + sqrt(alpha) n)`
/// for normalized gradients `g_k` and a noise realization.
pub fn aggregation_error(s: &Scenario, sol: &Solution, normalized: &[Vec<f64>], noise: &[f64], gamma: f64) -> Vec<f64> {
    let m = noise.len();
    let k = s.k() as f64;
    let root = sol.alpha.sqrt();
    let mut err: Vec<f64> = noise.iter().map(|n| root * n).collect();
    for ((h, p), g) in s.h.iter().zip(&sol.p).zip(normalized) {
        let w = h * (sol.alpha * p).sqrt() - 1.0;
        for i in 0..m {
            err[i] += w * g[i];
        }
    }
    err.iter_mut().for_each(|e| *e *= gamma / k);
    err
}

/// Draws standard-normal surrogate gradients and receiver noise and
/// compares the empirical error energy with [`mse_ota`].
pub fn simulate_round(s: &Scenario, sol: &Solution, model_dim: usize, n_trials: usize, seed: u64) -> Result<RoundStats> {
    if model_dim == 0 || n_trials < 2 {
        return Err(Error::param("model_dim/n_trials", "need model_dim >= 1 and n_trials >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_dist = Normal::new(0.0, s.noise_power.sqrt()).map_err(|e| Error::param("noise_power", e.to_string()))?;
    let k = s.k();
    let mut grads = vec![vec![0.0; model_dim]; k];
    let mut noise = vec![0.0; model_dim];
    let mut sum_err = vec![0.0; model_dim];
    let (mut mean, mut m2) = (0.0, 0.0);
    for t in 0..n_trials {
        for g in grads.iter_mut() {
            g.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        }
        noise.iter_mut().for_each(|v| *v = noise_dist.sample(&mut rng));
        let err = aggregation_error(s, sol, &grads, &noise, 1.0);
        let energy: f64 = err.iter().map(|e| e * e).sum();
        for (acc, e) in sum_err.iter_mut().zip(&err) {
            *acc += e;
        }
        // Welford
        let delta = energy - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (energy - mean);
    }
    let var = m2 / (n_trials - 1) as f64;
    let mean_error_norm = sum_err.iter().map(|v| (v / n_trials as f64).powi(2)).sum::<f64>().sqrt();
    Ok(RoundStats {
        empirical_mse: mean,
        analytical_mse: mse_ota(&sol.p, sol.alpha, s, 1.0, model_dim),
        n_trials,
        std_error: (var / n_trials as f64).sqrt(),
        mean_error_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::solve_zf;

    #[test]
    fn normalization_identities() {
        let g = vec![vec![1.0, -1.0, 1.0, -1.0]];
        let (n, mu, gamma) = normalize_gradients(&g).unwrap();
        assert_eq!((mu, gamma), (0.0, 1.0));
        assert_eq!(n, g);

        let g = vec![vec![1.0, 2.0, -0.5], vec![-1.0, -2.0, 0.5]];
        assert_eq!(normalize_gradients(&g).unwrap().1, 0.0);

        let g = vec![vec![0.3, 1.9, -2.2, 0.1], vec![4.0, 0.0, 1.0, 2.0], vec![-1.0, 0.5, 0.25, 3.0]];
        let (n, mu, gamma) = normalize_gradients(&g).unwrap();
        for i in 0..4 {
            let mean_raw = g.iter().map(|v| v[i]).sum::<f64>() / 3.0;
            let mean_norm = n.iter().map(|v| v[i]).sum::<f64>() / 3.0;
            assert!((gamma * mean_norm + mu - mean_raw).abs() < 1e-14);
        }
    }

    #[test]
    fn normalization_errors() {
        assert_eq!(normalize_gradients(&[vec![2.0, 2.0]]), Err(Error::ZeroSpread));
        assert!(normalize_gradients(&[]).is_err());
        assert!(normalize_gradients(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn noiseless_zero_forcing_is_exact() {
        let s = Scenario::new(vec![0.4, 1.3, 2.0], vec![1.0; 3], 1e-300, 0.0, 1.0).unwrap();
        let sol = solve_zf(&s).unwrap().unwrap();
        let st = simulate_round(&s, &sol, 8, 100, 1).unwrap();
        assert!(st.empirical_mse < 1e-28, "{st:?}");
        assert!(st.analytical_mse < 1e-28);
    }

    #[test]
    fn single_device_matches_closed_form() {
        let s = Scenario::new(vec![1.0], vec![1.0], 1.0, 0.0, 1.0).unwrap();
        let sol = Solution::assemble(&s, vec![1.0], 1.0, 0.0, crate::scenario::Status::Heuristic);
        let st = simulate_round(&s, &sol, 32, 100_000, 5).unwrap();
        assert_eq!(st.analytical_mse, 32.0);
        assert!((st.empirical_mse - 32.0).abs() < 3.0 * st.std_error, "{st:?}");
        assert!(st.mean_error_norm < 4.0 * st.std_error * 32f64.sqrt());
    }

    #[test]
    fn mismatched_powers_still_agree_with_formula() {
        let s = Scenario::new(vec![1.0, 2.0], vec![1.0, 1.0], 0.5, 0.0, 1.0).unwrap();
        let sol = Solution::assemble(&s, vec![0.0, 1.0], 1.0, 0.0, crate::scenario::Status::Heuristic);
        let st = simulate_round(&s, &sol, 4, 20_000, 9).unwrap();
        assert!((st.empirical_mse - st.analytical_mse).abs() < 4.0 * st.std_error);
    }

    #[test]
    fn deterministic_under_seed() {
        let s = Scenario::new(vec![1.0, 2.0], vec![1.0, 1.0], 0.5, 0.0, 1.0).unwrap();
        let sol = solve_zf(&s).unwrap().unwrap();
        assert_eq!(simulate_round(&s, &sol, 4, 50, 3).unwrap(), simulate_round(&s, &sol, 4, 50, 3).unwrap());
    }
}
