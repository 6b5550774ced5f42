//! Reference solver by nested one-dimensional search: bisection on the
//! sensing multiplier for a fixed receive scaling, golden-section on the
//! receive scaling outside. Shares no code with the active-set solver.

use crate::error::{Error, Result};
use crate::problem::classify_feasibility;
use crate::scenario::{Feasibility, Scenario, Solution, Status};
use serde::{Deserialize, Serialize};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Factor applied to the search box when the coarse minimum sits on its edge.
    pub alpha_bracket_expansion: f64,
    /// Relative width at which golden-section stops.
    pub outer_tol: f64,
    /// Relative width at which the multiplier bisection stops.
    pub inner_tol: f64,
    pub grid_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            alpha_bracket_expansion: 1e6,
            outer_tol: 1e-11,
            inner_tol: 1e-14,
            grid_points: 512,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_bracket_expansion > 1.0) {
            return Err(Error::param("alpha_bracket_expansion", "must exceed 1"));
        }
        if !(self.outer_tol > 0.0 && self.inner_tol > 0.0) {
            return Err(Error::param("outer_tol/inner_tol", "must be positive"));
        }
        if self.grid_points < 3 {
            return Err(Error::param("grid_points", "need at least 3"));
        }
        Ok(())
    }
}

fn clamp_power(h: f64, b: f64, lambda: f64, cap: f64) -> f64 {
    if h == 0.0 {
        return cap;
    }
    let g = h * h;
    let den = g - lambda * b;
    if den <= 0.0 {
        cap
    } else {
        (g / (den * den)).min(cap)
    }
}

fn echo(s: &Scenario, x: &[f64]) -> f64 {
    s.b.iter().zip(x).map(|(b, x)| b * x).sum()
}

/// Minimizes the alignment part of the objective with `alpha` fixed.
/// Returns the powers, the sensing multiplier and the attained value
/// `sum h^2 x - 2 sum h sqrt(x)`.
pub fn inner_solve_given_alpha(alpha: f64, s: &Scenario, cfg: &OracleConfig) -> Result<(Vec<f64>, f64, f64)> {
    if classify_feasibility(s).kind == Feasibility::Infeasible {
        return Err(Error::Infeasible {
            capacity: s.sensing_capacity(),
            threshold: s.eta_d,
        });
    }
    let cap = alpha * s.p_max;
    let need = s.eta_d * alpha;
    let at = |lambda: f64| -> Vec<f64> {
        s.h.iter()
            .zip(&s.b)
            .map(|(&h, &b)| clamp_power(h, b, lambda, cap))
            .collect()
    };
    let mut x = at(0.0);
    let mut lambda = 0.0;
    if echo(s, &x) < need {
        // every coordinate is capped once lambda passes max h^2/b
        let mut hi = s
            .h
            .iter()
            .zip(&s.b)
            .filter(|(_, &b)| b > 0.0)
            .map(|(h, b)| h * h / b)
            .fold(0.0, f64::max);
        let mut lo = 0.0;
        x = at(hi);
        for _ in 0..400 {
            if hi - lo <= cfg.inner_tol * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let xm = at(mid);
            if echo(s, &xm) >= need {
                hi = mid;
                x = xm;
            } else {
                lo = mid;
            }
        }
        lambda = hi;
    }
    let value = s
        .h
        .iter()
        .zip(&x)
        .map(|(h, x)| h * h * x - 2.0 * h * x.sqrt())
        .sum();
    Ok((x, lambda, value))
}

/// Partially minimized objective `phi(alpha)`.
pub fn phi(alpha: f64, s: &Scenario, cfg: &OracleConfig) -> Result<f64> {
    Ok(alpha * s.noise_power + inner_solve_given_alpha(alpha, s, cfg)?.2)
}

pub fn solve_oracle(s: &Scenario, cfg: &OracleConfig) -> Result<Solution> {
    cfg.validate()?;
    if classify_feasibility(s).kind == Feasibility::Infeasible {
        return Err(Error::Infeasible {
            capacity: s.sensing_capacity(),
            threshold: s.eta_d,
        });
    }
    let min_gain = s
        .h
        .iter()
        .filter(|&&h| h > 0.0)
        .map(|h| h * h)
        .fold(f64::INFINITY, f64::min);
    let mut top = (1.0 / (s.p_max * min_gain)).max(s.k() as f64 / s.noise_power);
    let mut bottom = top * 1e-12;
    let f = |a: f64| phi(a, s, cfg);

    // coarse log grid, widened while the minimum sits on an edge
    let (mut lo, mut hi);
    let mut rounds = 0;
    loop {
        let n = cfg.grid_points;
        let ratio = (top / bottom).ln() / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|j| bottom * (ratio * j as f64).exp()).collect();
        let mut best = (f64::INFINITY, 0);
        for (j, &a) in grid.iter().enumerate() {
            let v = f(a)?;
            // ties resolve to the smaller alpha
            if v < best.0 {
                best = (v, j);
            }
        }
        let j = best.1;
        rounds += 1;
        if j == 0 && rounds < 20 {
            top = grid[1];
            bottom /= cfg.alpha_bracket_expansion;
            continue;
        }
        if j == n - 1 && rounds < 20 {
            bottom = grid[n - 2];
            top *= cfg.alpha_bracket_expansion;
            continue;
        }
        lo = grid[j.saturating_sub(1)];
        hi = grid[(j + 1).min(n - 1)];
        break;
    }

    // golden-section in log(alpha)
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    while b - a > cfg.outer_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp())?;
        }
    }
    lo = a.exp();
    hi = b.exp();
    let alpha = if fc <= fd { c.exp() } else { d.exp() }.clamp(lo, hi);
    let (x, lambda, _) = inner_solve_given_alpha(alpha, s, cfg)?;
    Ok(Solution::assemble(s, x, alpha, lambda, Status::Optimal))
}
