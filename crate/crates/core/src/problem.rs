//! Objective, error model and closed-form special cases of the convex
//! power-control problem in transformed variables `x_k = p_k alpha`:
//!
//! ```text
//! min_{x, alpha > 0}  sum_k h_k^2 x_k - 2 sum_k h_k sqrt(x_k) + alpha sigma_n^2
//! s.t.                sum_k b_k x_k >= eta_D alpha
//!                     0 <= x_k <= P_max alpha
//! ```

use crate::error::{Error, Result};
use crate::scenario::{Feasibility, FeasibilityClass, Scenario, Solution, Status};
use serde::{Deserialize, Serialize};

/// Relative slack allowed on the split threshold inequalities, so that
/// exact ties between adjacent thresholds are not lost to rounding.
const THRESHOLD_TOL: f64 = 1e-12;

pub fn objective_p2(x: &[f64], alpha: f64, s: &Scenario) -> f64 {
    let mut acc = alpha * s.noise_power;
    for (&h, &x) in s.h.iter().zip(x) {
        acc += h * h * x - 2.0 * h * x.sqrt();
    }
    acc
}

/// Aggregation mean-square error `E||g_est - g||^2` for physical powers `p`.
pub fn mse_ota(p: &[f64], alpha: f64, s: &Scenario, grad_scale: f64, model_dim: usize) -> f64 {
    let k = s.k() as f64;
    let misalign: f64 = s
        .h
        .iter()
        .zip(p)
        .map(|(h, p)| {
            let e = h * (p * alpha).sqrt() - 1.0;
            e * e
        })
        .sum();
    grad_scale * grad_scale * model_dim as f64 / (k * k) * (misalign + alpha * s.noise_power)
}

/// Constants of the learning-convergence bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBoundParams {
    /// Largest coordinate-wise smoothness constant `L_max`.
    pub smoothness_max: f64,
    /// Polyak-Lojasiewicz constant `delta`.
    pub pl_constant: f64,
    pub learning_rate: f64,
    /// `E[F(w_1)] - F*`.
    pub initial_gap: f64,
    pub n_rounds: u32,
    pub grad_scale: f64,
    pub model_dim: usize,
}

impl GapBoundParams {
    /// Contraction factor `C = 1 - delta gamma`.
    pub fn contraction(&self) -> f64 {
        1.0 - self.pl_constant * self.learning_rate
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("smoothness_max", self.smoothness_max),
            ("pl_constant", self.pl_constant),
            ("learning_rate", self.learning_rate),
            ("grad_scale", self.grad_scale),
        ] {
            if !(v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if self.initial_gap < 0.0 {
            return Err(Error::param("initial_gap", "must be >= 0"));
        }
        if self.n_rounds == 0 || self.model_dim == 0 {
            return Err(Error::param("n_rounds/model_dim", "must be positive"));
        }
        let c = self.contraction();
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::param("pl_constant", format!("1 - delta*gamma = {c} outside (0, 1)")));
        }
        Ok(())
    }
}

/// Upper bound on the expected optimality gap after `N` rounds when every
/// round aggregates with error `mse`.
pub fn gap_bound(mse: f64, gp: &GapBoundParams) -> Result<f64> {
    gp.validate()?;
    let c = gp.contraction();
    let n = gp.n_rounds as i32;
    let per_round = 0.5 * gp.learning_rate * gp.learning_rate * gp.smoothness_max * mse;
    let noise: f64 = (1..=n).map(|i| c.powi(n - i) * per_round).sum();
    Ok(c.powi(n) * gp.initial_gap + noise)
}

/// Exact comparison of `P_max sum b` against `eta_D`.
pub fn classify_feasibility(s: &Scenario) -> FeasibilityClass {
    let slack = s.sensing_capacity() - s.eta_d;
    let kind = if slack > 0.0 {
        Feasibility::StrictlyFeasible
    } else if slack == 0.0 {
        Feasibility::BoundaryFeasible
    } else {
        Feasibility::Infeasible
    };
    FeasibilityClass { kind, slack }
}

/// Minimum-MSE control without the sensing constraint, with the devices in
/// `forced` pinned at full power.
///
/// Free devices are ranked by descending gain; the first `l` of them invert
/// their channel (`x = 1/h^2`) and the rest join the forced devices at the
/// cap. The scan returns the first split whose threshold inequalities hold.
pub(crate) fn capped_inversion(s: &Scenario, forced: &[bool]) -> Result<(Vec<f64>, f64)> {
    let k = s.k();
    let p = s.p_max;
    let mut free: Vec<usize> = (0..k).filter(|&i| !forced[i]).collect();
    // stable: equal gains keep index order
    free.sort_by(|&a, &c| s.h[c].total_cmp(&s.h[a]));

    let (mut sum_h, mut sum_h2) = (0.0, 0.0);
    for i in (0..k).filter(|&i| forced[i]) {
        sum_h += s.h[i];
        sum_h2 += s.h[i] * s.h[i];
    }
    // suffix sums over the free ranking
    let m = free.len();
    let mut tail_h = vec![0.0; m + 1];
    let mut tail_h2 = vec![0.0; m + 1];
    for j in (0..m).rev() {
        let h = s.h[free[j]];
        tail_h[j] = tail_h[j + 1] + h;
        tail_h2[j] = tail_h2[j + 1] + h * h;
    }

    let alpha_for = |l: usize| -> f64 {
        let num = sum_h + tail_h[l];
        let den = s.noise_power / p + sum_h2 + tail_h2[l];
        (num / den).powi(2) / p
    };
    let build = |l: usize, alpha: f64| -> Vec<f64> {
        let mut x = vec![alpha * p; k];
        for &i in &free[..l] {
            x[i] = 1.0 / (s.h[i] * s.h[i]);
        }
        x
    };

    let mut best: Option<(f64, usize, f64)> = None;
    for l in 0..=m {
        if sum_h + tail_h[l] <= 0.0 {
            continue;
        }
        let alpha = alpha_for(l);
        let cap = alpha * p;
        let head_ok = free[..l]
            .iter()
            .all(|&i| 1.0 / (s.h[i] * s.h[i]) <= cap * (1.0 + THRESHOLD_TOL));
        let tail_ok = free[l..]
            .iter()
            .all(|&i| cap <= (1.0 + THRESHOLD_TOL) / (s.h[i] * s.h[i]));
        if head_ok && tail_ok {
            return Ok((build(l, alpha), alpha));
        }
        let obj = objective_p2(&build(l, alpha), alpha, s);
        if best.map_or(true, |(o, _, _)| obj < o) {
            best = Some((obj, l, alpha));
        }
    }
    match best {
        Some((_, l, alpha)) => {
            log::debug!("threshold scan found no consistent split; using best split l={l}");
            Ok((build(l, alpha), alpha))
        }
        None => Err(Error::NoChannel),
    }
}

/// Closed-form optimum when the sensing constraint is dropped.
pub fn solve_no_sensing(s: &Scenario) -> Result<Solution> {
    let (x, alpha) = capped_inversion(s, &vec![false; s.k()])?;
    Ok(Solution::assemble(s, x, alpha, 0.0, Status::SensingInactive))
}

/// Optimum of a boundary-feasible instance (`P_max sum b = eta_D`): every
/// device with `b_k > 0` must transmit at full power, and `alpha` zeroes
/// the derivative of the remaining one-dimensional objective.
///
/// The reported `lambda` is the smallest sensing multiplier that makes all
/// cap multipliers nonnegative, so the KKT system closes.
pub fn solve_boundary_equality(s: &Scenario) -> Result<Solution> {
    let class = classify_feasibility(s);
    if class.kind != Feasibility::BoundaryFeasible {
        return Err(Error::NotBoundaryFeasible { slack: class.slack });
    }
    let (x, alpha, lambda) = full_power_point(s)?;
    Ok(Solution::assemble(s, x, alpha, lambda, Status::BoundaryEquality))
}

/// Every sensing device at the cap, `alpha` optimal for that split, and the
/// smallest multiplier keeping the cap multipliers nonnegative.
pub(crate) fn full_power_point(s: &Scenario) -> Result<(Vec<f64>, f64, f64)> {
    let forced: Vec<bool> = s.b.iter().map(|&b| b > 0.0).collect();
    let (x, alpha) = capped_inversion(s, &forced)?;
    let root = (s.p_max * alpha).sqrt();
    let lambda = (0..s.k())
        .filter(|&i| forced[i])
        .map(|i| (s.h[i] * s.h[i] - s.h[i] / root) / s.b[i])
        .fold(0.0, f64::max);
    Ok((x, alpha, lambda))
}

/// KKT residuals of a candidate solution.
///
/// Residuals are evaluated in the rescaled frame where `P_max`,
/// `sigma_n^2` and `eta_D` are one, so thresholds are independent of the
/// physical units of the instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Stationarity in `x_k` with the reconstructed cap multipliers.
    ///
    /// Stationarity and complementary-slackness entries are divided by the
    /// largest magnitude among their terms (at least one).
    pub stationarity_x: Vec<f64>,
    /// Stationarity in `alpha`.
    pub stationarity_alpha: f64,
    /// `lambda * (eta alpha - sum b x)` followed by `rho_k (x_k - alpha)`.
    pub comp_slack: Vec<f64>,
    pub primal_violation: f64,
    pub max_residual: f64,
}

impl KktReport {
    /// Flattened `(name, value)` pairs in a stable order.
    pub fn named_residuals(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(2 * self.stationarity_x.len() + 4);
        for (k, v) in self.stationarity_x.iter().enumerate() {
            out.push((format!("stationarity_x[{k}]"), *v));
        }
        out.push(("stationarity_alpha".into(), self.stationarity_alpha));
        for (j, v) in self.comp_slack.iter().enumerate() {
            let name = if j == 0 {
                "comp_slack_sensing".to_string()
            } else {
                format!("comp_slack_cap[{}]", j - 1)
            };
            out.push((name, *v));
        }
        out.push(("primal_violation".into(), self.primal_violation));
        out.push(("max_residual".into(), self.max_residual));
        out
    }
}

pub fn kkt_residuals(sol: &Solution, s: &Scenario) -> Result<KktReport> {
    if !(sol.alpha > 0.0) {
        return Err(Error::param("alpha", "must be positive"));
    }
    if sol.x.len() != s.k() {
        return Err(Error::param("x", "length differs from device count"));
    }
    if let Some(k) = sol.x.iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroPower { k });
    }
    let (c, scaling) = s.canonical();
    let (x, alpha, lambda) = scaling.to_canonical(&sol.x, sol.alpha, sol.lambda);
    let root = alpha.sqrt();

    // each residual is divided by its largest term, floored at one
    let scaled = |v: f64, terms: &[f64]| v / terms.iter().fold(1.0, |m: f64, t| m.max(t.abs()));
    let mut stationarity_x = Vec::with_capacity(c.k());
    let mut comp_slack = Vec::with_capacity(c.k() + 1);
    let echo = c.b.iter().zip(&x).map(|(b, x)| b * x).sum::<f64>();
    let sensing_gap = c.eta_d * alpha - echo;
    comp_slack.push(scaled(lambda * sensing_gap, &[lambda * echo, lambda * c.eta_d * alpha]));
    let mut rho_sum = 0.0;
    let mut primal: f64 = sensing_gap.max(0.0).max(-lambda);
    for k in 0..c.k() {
        let (h, b) = (c.h[k], c.b[k]);
        let rho = if sol.active_set.contains(&k) {
            (h / root - (h * h - lambda * b)).max(0.0)
        } else {
            0.0
        };
        rho_sum += rho;
        let inv = h / x[k].sqrt();
        stationarity_x.push(scaled(h * h - inv - lambda * b + rho, &[h * h, inv, lambda * b, rho]));
        comp_slack.push(scaled(rho * (x[k] - alpha), &[rho * x[k], rho * alpha]));
        primal = primal.max(x[k] - alpha);
    }
    let stationarity_alpha = scaled(
        c.noise_power + lambda * c.eta_d - rho_sum,
        &[c.noise_power, lambda * c.eta_d, rho_sum],
    );
    let max_residual = stationarity_x
        .iter()
        .chain(&comp_slack)
        .map(|v| v.abs())
        .fold(stationarity_alpha.abs().max(primal), f64::max);
    Ok(KktReport {
        stationarity_x,
        stationarity_alpha,
        comp_slack,
        primal_violation: primal,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(h: &[f64], b: &[f64], sigma2: f64, eta: f64, p: f64) -> Scenario {
        Scenario::new(h.to_vec(), b.to_vec(), sigma2, eta, p).unwrap()
    }

    #[test]
    fn objective_values() {
        let s = sc(&[1.0], &[1.0], 1.0, 0.0, 1.0);
        assert_eq!(objective_p2(&[0.0], 1.0, &s), 1.0);
        assert_eq!(objective_p2(&[1.0], 1.0, &s), 0.0);
        let s = sc(&[1.0, 2.0], &[1.0, 1.0], 2.0, 0.0, 1.0);
        // (1*1 + 4*0.25) - 2(1*1 + 2*0.5) + 0.5*2
        assert_eq!(objective_p2(&[1.0, 0.25], 0.5, &s), -1.0);
    }

    #[test]
    fn mse_values() {
        let s = sc(&[1.0], &[1.0], 1.0, 0.0, 1.0);
        assert_eq!(mse_ota(&[1.0], 1.0, &s, 1.0, 1), 1.0);
        let s = sc(&[2.0, 0.5], &[1.0, 1.0], 0.3, 0.0, 1.0);
        let alpha = 0.7;
        let p = [1.0 / (4.0 * alpha), 1.0 / (0.25 * alpha)];
        let want = 3.0f64.powi(2) * 5.0 / 4.0 * alpha * 0.3;
        assert!((mse_ota(&p, alpha, &s, 3.0, 5) - want).abs() < 1e-12);
    }

    #[test]
    fn gap_bound_values() {
        let gp = GapBoundParams {
            smoothness_max: 2.0,
            pl_constant: 0.5,
            learning_rate: 1.0,
            initial_gap: 1.0,
            n_rounds: 2,
            grad_scale: 1.0,
            model_dim: 1,
        };
        assert!((gap_bound(1.0, &gp).unwrap() - 1.75).abs() < 1e-15);
        assert!((gap_bound(0.0, &gp).unwrap() - 0.25).abs() < 1e-15);
        let long = GapBoundParams { n_rounds: 50, ..gp };
        // geometric limit gamma^2 L mse / (2 delta gamma)
        let limit = 1.0 * 2.0 * 1.0 / (2.0 * 0.5 * 1.0);
        assert!((gap_bound(1.0, &long).unwrap() / limit - 1.0).abs() < 0.01);
        let bad = GapBoundParams { pl_constant: 2.0, ..gp };
        assert!(gap_bound(1.0, &bad).is_err());
    }

    #[test]
    fn feasibility_classes() {
        let c = classify_feasibility(&sc(&[1.0, 1.0], &[1.0, 2.0], 1.0, 2.0, 1.0));
        assert_eq!(c.kind, Feasibility::StrictlyFeasible);
        assert_eq!(c.slack, 1.0);
        let c = classify_feasibility(&sc(&[1.0], &[1.0], 1.0, 2.0, 2.0));
        assert_eq!(c.kind, Feasibility::BoundaryFeasible);
        let c = classify_feasibility(&sc(&[1.0], &[0.5], 1.0, 1.0, 1.0));
        assert_eq!(c.kind, Feasibility::Infeasible);
    }

    #[test]
    fn no_sensing_single_device() {
        let s = sc(&[1.0], &[1.0], 1.0, 0.0, 1.0);
        let sol = solve_no_sensing(&s).unwrap();
        assert!((sol.alpha - 0.25).abs() < 1e-15);
        assert!((sol.x[0] - 0.25).abs() < 1e-15);
        assert!((sol.p[0] - 1.0).abs() < 1e-15);
        assert!((sol.objective + 0.5).abs() < 1e-15);
        assert_eq!(sol.status, Status::SensingInactive);
        assert_eq!(sol.lambda, 0.0);
    }

    #[test]
    fn no_sensing_split_between_inversion_and_cap() {
        let s = sc(&[10.0, 0.5], &[1.0, 1.0], 1.0, 0.0, 1.0);
        let sol = solve_no_sensing(&s).unwrap();
        assert!((sol.x[0] - 0.01).abs() < 1e-15);
        assert!((sol.x[1] - 0.16).abs() < 1e-15);
        assert!((sol.alpha - 0.16).abs() < 1e-15);
        assert!((sol.p[0] - 0.0625).abs() < 1e-15);
        assert!((sol.p[1] - 1.0).abs() < 1e-15);
        assert_eq!(sol.active_set, vec![1]);

        let s = sc(&[1.0, 1.0], &[1.0, 1.0], 1.0, 0.0, 1.0);
        let sol = solve_no_sensing(&s).unwrap();
        assert!((sol.alpha - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(sol.active_set, vec![0, 1]);
    }

    #[test]
    fn no_sensing_handles_dead_channels() {
        let s = sc(&[0.0, 2.0, 0.0], &[1.0, 1.0, 1.0], 1.0, 0.0, 1.0);
        let sol = solve_no_sensing(&s).unwrap();
        assert!(sol.x.iter().all(|&x| x > 0.0));
        assert!(sol.check_invariants(&s).is_ok());
    }

    #[test]
    fn boundary_equality_values() {
        let s = sc(&[1.0], &[1.0], 1.0, 1.0, 1.0);
        let sol = solve_boundary_equality(&s).unwrap();
        assert!((sol.alpha - 0.25).abs() < 1e-15);
        assert_eq!(sol.p, vec![1.0]);
        let s = sc(&[1.0, 1.0], &[1.0, 1.0], 1.0, 2.0, 1.0);
        let sol = solve_boundary_equality(&s).unwrap();
        assert!((sol.alpha - 4.0 / 9.0).abs() < 1e-15);
        assert!(solve_boundary_equality(&sc(&[1.0], &[1.0], 1.0, 0.5, 1.0)).is_err());
    }

    #[test]
    fn boundary_equality_zeroes_alpha_derivative() {
        let s = sc(&[0.8, 1.7, 0.3], &[0.5, 0.25, 0.25], 0.6, 2.0, 2.0);
        let sol = solve_boundary_equality(&s).unwrap();
        let f = |a: f64| objective_p2(&vec![a * s.p_max; 3], a, &s);
        let eps = 1e-6 * sol.alpha;
        let d = (f(sol.alpha + eps) - f(sol.alpha - eps)) / (2.0 * eps);
        assert!(d.abs() < 1e-8, "{d}");
        let kkt = kkt_residuals(&sol, &s).unwrap();
        assert!(kkt.stationarity_alpha.abs() < 1e-10);
        assert!(kkt.max_residual < 1e-9, "{kkt:?}");
    }

    #[test]
    fn kkt_certifies_closed_form_and_flags_perturbation() {
        let s = sc(&[10.0, 0.5, 1.3], &[1.0, 1.0, 1.0], 1.0, 0.0, 1.0);
        let sol = solve_no_sensing(&s).unwrap();
        let kkt = kkt_residuals(&sol, &s).unwrap();
        assert!(kkt.max_residual < 1e-9, "{kkt:?}");

        let mut bad = sol.clone();
        bad.x[0] *= 1.1;
        let kkt = kkt_residuals(&bad, &s).unwrap();
        assert!(kkt.max_residual > 1e-3);

        bad.x[0] = 0.0;
        assert_eq!(kkt_residuals(&bad, &s), Err(Error::ZeroPower { k: 0 }));
    }
}
