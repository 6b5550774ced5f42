//! Instance and solution types shared by every solver.

use crate::error::{Error, Result};
use crate::problem::objective_p2;
use serde::{Deserialize, Serialize};

/// Relative tolerance for power-cap membership and sensing feasibility.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// One communication round's optimization instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Channel amplitudes `h_k >= 0`.
    pub h: Vec<f64>,
    /// Sensing coefficients `b_k >= 0`.
    pub b: Vec<f64>,
    /// Receiver noise power (linear).
    pub noise_power: f64,
    /// Minimum aggregate echo energy `eta_D`.
    pub eta_d: f64,
    pub p_max: f64,
}

impl Scenario {
    pub fn new(h: Vec<f64>, b: Vec<f64>, noise_power: f64, eta_d: f64, p_max: f64) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::param("h", "at least one device is required"));
        }
        if h.len() != b.len() {
            return Err(Error::param(
                "b",
                format!("length {} differs from channel count {}", b.len(), h.len()),
            ));
        }
        if let Some(v) = h.iter().chain(&b).find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::param("h/b", format!("entries must be finite and >= 0, got {v}")));
        }
        if !h.iter().any(|&v| v > 0.0) {
            return Err(Error::NoChannel);
        }
        if !(noise_power > 0.0 && noise_power.is_finite()) {
            return Err(Error::param("noise_power", format!("must be positive, got {noise_power}")));
        }
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(Error::param("p_max", format!("must be positive, got {p_max}")));
        }
        if !eta_d.is_finite() {
            return Err(Error::param("eta_d", "must be finite"));
        }
        Ok(Scenario {
            h,
            b,
            noise_power,
            eta_d,
            p_max,
        })
    }

    /// Number of edge devices `K`.
    pub fn k(&self) -> usize {
        self.h.len()
    }

    /// `P_max * sum_k b_k`, the echo energy with every device at full power.
    pub fn sensing_capacity(&self) -> f64 {
        self.p_max * self.b.iter().sum::<f64>()
    }

    /// Rescaled copy with `P_max = 1`, `sigma_n^2 = 1` and (when
    /// `eta_D > 0`) `eta_D = 1`.
    ///
    /// The rescaling maps `x -> x sigma^2 / P`, `alpha -> alpha sigma^2`
    /// and leaves the objective value unchanged, so feasibility, active
    /// sets and optimal values transfer exactly.
    pub(crate) fn canonical(&self) -> (Scenario, Scaling) {
        let snr_scale = (self.p_max / self.noise_power).sqrt();
        let b_max = self.b.iter().cloned().fold(0.0, f64::max);
        let sens = if self.eta_d > 0.0 {
            self.eta_d
        } else if b_max > 0.0 {
            b_max * self.p_max
        } else {
            1.0
        };
        let canon = Scenario {
            h: self.h.iter().map(|h| h * snr_scale).collect(),
            b: self.b.iter().map(|b| b * self.p_max / sens).collect(),
            noise_power: 1.0,
            eta_d: if self.eta_d > 0.0 { 1.0 } else { self.eta_d / sens },
            p_max: 1.0,
        };
        let scaling = Scaling {
            x: self.p_max / self.noise_power,
            alpha: 1.0 / self.noise_power,
            lambda: self.noise_power / sens,
        };
        (canon, scaling)
    }
}

/// Factors mapping canonical quantities back to physical ones
/// (`raw = canonical * factor`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scaling {
    pub x: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl Scaling {
    pub fn to_raw(&self, x: &[f64], alpha: f64, lambda: f64) -> (Vec<f64>, f64, f64) {
        (
            x.iter().map(|v| v * self.x).collect(),
            alpha * self.alpha,
            lambda * self.lambda,
        )
    }

    pub fn to_canonical(&self, x: &[f64], alpha: f64, lambda: f64) -> (Vec<f64>, f64, f64) {
        (
            x.iter().map(|v| v / self.x).collect(),
            alpha / self.alpha,
            lambda / self.lambda,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    /// Sensing constraint active, found by active-set enumeration or the oracle.
    Optimal,
    /// The unconstrained minimizer already meets the sensing requirement.
    SensingInactive,
    /// `P_max sum b = eta_D`: every sensing device pinned at full power.
    BoundaryEquality,
    /// Feasible but not necessarily optimal (baseline policies).
    Heuristic,
    /// Sensing constraint ignored; may violate it.
    Relaxed,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::SensingInactive => "sensing_inactive",
            Status::BoundaryEquality => "boundary_equality",
            Status::Heuristic => "heuristic",
            Status::Relaxed => "relaxed",
        }
    }
}

impl std::str::FromStr for Status {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimal" => Status::Optimal,
            "sensing_inactive" => Status::SensingInactive,
            "boundary_equality" => Status::BoundaryEquality,
            "heuristic" => Status::Heuristic,
            "relaxed" => Status::Relaxed,
            other => return Err(Error::param("status", format!("unknown status `{other}`"))),
        })
    }
}

/// Output of a power-control policy, in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Transformed powers `x_k = p_k alpha`.
    pub x: Vec<f64>,
    /// Receive scaling.
    pub alpha: f64,
    /// Sensing dual variable.
    pub lambda: f64,
    /// Devices at the power cap, ascending.
    pub active_set: Vec<usize>,
    /// Physical transmit powers.
    pub p: Vec<f64>,
    pub objective: f64,
    pub status: Status,
}

impl Solution {
    pub(crate) fn assemble(s: &Scenario, x: Vec<f64>, alpha: f64, lambda: f64, status: Status) -> Self {
        let cap = s.p_max * alpha;
        let active_set = x
            .iter()
            .enumerate()
            .filter(|(_, &v)| (v - cap).abs() <= MEMBERSHIP_TOL * cap)
            .map(|(k, _)| k)
            .collect();
        let p = x.iter().map(|v| v / alpha).collect();
        let objective = objective_p2(&x, alpha, s);
        Solution {
            x,
            alpha,
            lambda,
            active_set,
            p,
            objective,
            status,
        }
    }

    /// Aggregate echo energy `sum_k b_k p_k`.
    pub fn sensing_energy(&self, s: &Scenario) -> f64 {
        s.b.iter().zip(&self.p).map(|(b, p)| b * p).sum()
    }

    pub fn meets_sensing(&self, s: &Scenario) -> bool {
        self.sensing_energy(s) >= s.eta_d - MEMBERSHIP_TOL * s.eta_d.abs()
    }

    /// Checks the structural invariants every policy output must satisfy.
    pub fn check_invariants(&self, s: &Scenario) -> std::result::Result<(), String> {
        let k = s.k();
        if self.x.len() != k || self.p.len() != k {
            return Err(format!("length mismatch: |x|={}, |p|={}, K={k}", self.x.len(), self.p.len()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(format!("alpha = {} is not positive", self.alpha));
        }
        let cap = s.p_max * self.alpha;
        let tol = MEMBERSHIP_TOL * cap;
        for i in 0..k {
            if self.p[i] != self.x[i] / self.alpha {
                return Err(format!("p[{i}] != x[{i}] / alpha"));
            }
            if self.x[i] < 0.0 || self.x[i] > cap + tol {
                return Err(format!("x[{i}] = {} outside [0, {cap}]", self.x[i]));
            }
            let capped = (self.x[i] - cap).abs() <= tol;
            if capped != self.active_set.contains(&i) {
                return Err(format!("active-set membership of device {i} disagrees with x"));
            }
        }
        if self.status != Status::Relaxed && !self.meets_sensing(s) {
            return Err(format!(
                "sensing energy {} below eta_D {}",
                self.sensing_energy(s),
                s.eta_d
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    Infeasible,
    BoundaryFeasible,
    StrictlyFeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityClass {
    pub kind: Feasibility,
    /// `P_max sum b - eta_D`.
    pub slack: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_instances() {
        assert!(Scenario::new(vec![], vec![], 1.0, 1.0, 1.0).is_err());
        assert!(Scenario::new(vec![1.0], vec![1.0, 2.0], 1.0, 1.0, 1.0).is_err());
        assert_eq!(
            Scenario::new(vec![0.0, 0.0], vec![1.0, 2.0], 1.0, 1.0, 1.0),
            Err(Error::NoChannel)
        );
        assert!(Scenario::new(vec![1.0], vec![-1.0], 1.0, 1.0, 1.0).is_err());
        assert!(Scenario::new(vec![1.0], vec![1.0], 0.0, 1.0, 1.0).is_err());
        assert!(Scenario::new(vec![1.0], vec![1.0], 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn canonical_scaling_preserves_objective_and_constraints() {
        let s = Scenario::new(vec![3e-6, 1e-5], vec![2e-13, 7e-14], 1e-11, 1.7e-12, 0.2).unwrap();
        let (c, sc) = s.canonical();
        assert_eq!((c.p_max, c.noise_power, c.eta_d), (1.0, 1.0, 1.0));
        let (x, alpha) = (vec![1e10, 3.3e9], 7e10);
        let (xn, an, _) = sc.to_canonical(&x, alpha, 0.0);
        let raw = objective_p2(&x, alpha, &s);
        let canon = objective_p2(&xn, an, &c);
        assert!((raw - canon).abs() <= 1e-12 * raw.abs());
        // x <= P alpha and sum b x >= eta alpha hold identically in both frames
        let lhs_raw = s.b[0] * x[0] + s.b[1] * x[1] - s.eta_d * alpha;
        let lhs_can = c.b[0] * xn[0] + c.b[1] * xn[1] - c.eta_d * an;
        assert_eq!(lhs_raw > 0.0, lhs_can > 0.0);
        let (xr, ar, lr) = sc.to_raw(&xn, an, 2.5);
        assert!((ar - alpha).abs() <= 1e-15 * alpha);
        assert!((xr[1] - x[1]).abs() <= 1e-15 * x[1]);
        assert!((lr * s.b[0] - 2.5 * c.b[0] / sc.x).abs() <= 1e-12 * lr * s.b[0]);
    }
}
