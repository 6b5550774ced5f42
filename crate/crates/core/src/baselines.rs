//! Comparison policies and a common dispatch over every policy.

use crate::error::{Error, Result};
use crate::oracle::{solve_oracle, OracleConfig};
use crate::problem::{capped_inversion, classify_feasibility, solve_no_sensing};
use crate::scenario::{Feasibility, Scenario, Solution, Status};
use crate::solver::solve;
use serde::{Deserialize, Serialize};

/// Zero-forcing: every device inverts its channel and the receive scaling
/// is the smallest one the weakest device can reach. `None` when the
/// resulting echo energy misses the detection threshold.
pub fn solve_zf(s: &Scenario) -> Result<Option<Solution>> {
    if let Some(k) = s.h.iter().position(|&h| h == 0.0) {
        return Err(Error::ZeroChannel { k });
    }
    let weakest = s.h.iter().map(|h| h * h).fold(f64::INFINITY, f64::min);
    let alpha = 1.0 / (s.p_max * weakest);
    let cap = alpha * s.p_max;
    let x = s.h.iter().map(|h| (1.0 / (h * h)).min(cap)).collect();
    let sol = Solution::assemble(s, x, alpha, 0.0, Status::Heuristic);
    Ok(sol.meets_sensing(s).then_some(sol))
}

/// Greedy sensing power: the devices with the largest sensing
/// coefficients transmit at full power until the threshold is met, and
/// the rest minimize the aggregation error with the receive scaling
/// shared.
pub fn solve_greedy_sp(s: &Scenario) -> Result<Solution> {
    if classify_feasibility(s).kind == Feasibility::Infeasible {
        return Err(Error::Infeasible {
            capacity: s.sensing_capacity(),
            threshold: s.eta_d,
        });
    }
    let mut order: Vec<usize> = (0..s.k()).collect();
    order.sort_by(|&a, &c| s.b[c].total_cmp(&s.b[a]).then(s.h[c].total_cmp(&s.h[a])));
    let mut forced = vec![false; s.k()];
    let mut energy = 0.0;
    for &k in &order {
        if energy >= s.eta_d {
            break;
        }
        forced[k] = true;
        energy += s.p_max * s.b[k];
    }
    let (x, alpha) = capped_inversion(s, &forced)?;
    Ok(Solution::assemble(s, x, alpha, 0.0, Status::Heuristic))
}

/// Minimum-error control with the sensing requirement dropped; a lower
/// bound that may violate the threshold.
pub fn solve_no_sensing_baseline(s: &Scenario) -> Result<Solution> {
    let mut sol = solve_no_sensing(s)?;
    sol.status = Status::Relaxed;
    Ok(sol)
}

/// Power-control policy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Optimal,
    Oracle,
    Zf,
    Greedy,
    NoSensing,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Optimal,
        Policy::Oracle,
        Policy::Zf,
        Policy::Greedy,
        Policy::NoSensing,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::Optimal => "optimal",
            Policy::Oracle => "oracle",
            Policy::Zf => "zf",
            Policy::Greedy => "greedy",
            Policy::NoSensing => "nosensing",
        }
    }

    /// Runs the policy; `Ok(None)` means the policy has no feasible output
    /// on this instance.
    pub fn apply(&self, s: &Scenario) -> Result<Option<Solution>> {
        match self {
            Policy::Optimal => solve(s).map(Some),
            Policy::Oracle => solve_oracle(s, &OracleConfig::default()).map(Some),
            Policy::Zf => solve_zf(s),
            Policy::Greedy => solve_greedy_sp(s).map(Some),
            Policy::NoSensing => solve_no_sensing_baseline(s).map(Some),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::param("policy", format!("unknown policy `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::solve_boundary_equality;

    fn sc(h: &[f64], b: &[f64], sigma2: f64, eta: f64, p: f64) -> Scenario {
        Scenario::new(h.to_vec(), b.to_vec(), sigma2, eta, p).unwrap()
    }

    #[test]
    fn zf_example() {
        let s = sc(&[1.0, 2.0], &[1.0, 1.0], 1.0, 1.0, 1.0);
        let sol = solve_zf(&s).unwrap().unwrap();
        assert_eq!(sol.alpha, 1.0);
        assert_eq!(sol.p, vec![1.0, 0.25]);
        assert_eq!(sol.active_set, vec![0]);
        // alignment is exact, only the noise term remains
        assert!((sol.objective + 2.0 - 1.0).abs() < 1e-15);
        assert!((sol.sensing_energy(&s) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn zf_failures() {
        let s = sc(&[1.0, 2.0], &[1.0, 1.0], 1.0, 1.5, 1.0);
        assert_eq!(solve_zf(&s).unwrap(), None);
        let s = sc(&[1.0, 0.0], &[1.0, 1.0], 1.0, 0.5, 1.0);
        assert_eq!(solve_zf(&s), Err(Error::ZeroChannel { k: 1 }));
        let deep = sc(&[1.0, 1e-4], &[1.0, 1.0], 1.0, 0.0, 1.0);
        assert!(solve_zf(&deep).unwrap().unwrap().alpha >= 1e8);
    }

    #[test]
    fn greedy_prefix() {
        let s = sc(&[1.0, 1.0], &[2.0, 1.0], 1.0, 1.5, 1.0);
        let sol = solve_greedy_sp(&s).unwrap();
        assert!(sol.active_set.contains(&0));
        assert!(sol.meets_sensing(&s));
        assert!(sol.check_invariants(&s).is_ok());
        // device 0 forced at the cap; device 1 (same gain) joins the cap too
        assert!((sol.alpha - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn greedy_degenerate_thresholds() {
        let s = sc(&[0.7, 2.0, 1.1], &[0.3, 0.2, 0.5], 0.4, 0.0, 1.0);
        let g = solve_greedy_sp(&s).unwrap();
        let n = solve_no_sensing(&s).unwrap();
        assert_eq!(g.x, n.x);
        assert_eq!(g.alpha, n.alpha);

        let s = sc(&[0.7, 2.0, 1.1], &[0.5, 0.5, 0.5], 0.4, 1.5, 1.0);
        let g = solve_greedy_sp(&s).unwrap();
        let b = solve_boundary_equality(&s).unwrap();
        assert_eq!(g.x, b.x);
        assert_eq!(g.alpha, b.alpha);
    }

    #[test]
    fn greedy_tie_break_prefers_stronger_channel() {
        let s = sc(&[0.5, 2.0], &[1.0, 1.0], 1.0, 0.5, 1.0);
        let sol = solve_greedy_sp(&s).unwrap();
        assert!(sol.active_set.contains(&1));
    }

    #[test]
    fn no_sensing_baseline_is_flagged() {
        let s = sc(&[10.0, 0.5], &[0.05, 1.0], 1.0, 1.02, 1.0);
        let sol = solve_no_sensing_baseline(&s).unwrap();
        assert_eq!(sol.status, Status::Relaxed);
        assert!(!sol.meets_sensing(&s));
        assert!(sol.check_invariants(&s).is_ok());
        assert!(sol.objective < solve(&s).unwrap().objective);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.as_str().parse::<Policy>().unwrap(), p);
        }
        assert!("best".parse::<Policy>().is_err());
    }
}
