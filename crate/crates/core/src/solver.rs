//! Exact solver: enumerates receive-scaling intervals on which the ordering
//! of the per-device cap thresholds is fixed, and within each interval the
//! nested candidate active sets. For each candidate the sensing multiplier
//! is the unique root of a monotone scalar equation; the first candidate
//! whose root is consistent with its interval and ordering is optimal.

use crate::error::{Error, Result};
use crate::problem::{
    classify_feasibility, full_power_point, kkt_residuals, solve_boundary_equality, solve_no_sensing, KktReport,
};
use crate::scenario::{Feasibility, Scenario, Solution, Status};
use serde::{Deserialize, Serialize};

/// Relative tolerance used when deduplicating transition points.
pub const TRANSITION_DEDUP_TOL: f64 = 1e-12;
/// Slack on the interval and ordering conditions of a candidate.
pub const CONDITION_TOL: f64 = 1e-9;
/// Certification threshold on the KKT residual and sensing equality.
pub const CERTIFY_TOL: f64 = 1e-7;
/// Per-device relative slack below which a strictly feasible instance may
/// be indistinguishable from the boundary after rescaling.
const ROUNDING_SLACK: f64 = 4.0 * f64::EPSILON;

/// Cap threshold `iota_k(alpha)`: device `k` transmits at full power iff the
/// sensing multiplier is at least this value.
pub fn iota(k: usize, alpha: f64, s: &Scenario) -> f64 {
    let (h, b) = (s.h[k], s.b[k]);
    if h == 0.0 {
        return f64::NEG_INFINITY;
    }
    let root = (alpha * s.p_max).sqrt();
    if b == 0.0 {
        // no sensing value: capped exactly when inversion exceeds the cap
        return if h * h * alpha * s.p_max < 1.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    (h * h / b) * (1.0 - 1.0 / (h * root))
}

/// `iota_k(alpha)` as `alpha -> infinity`.
fn iota_limit(k: usize, s: &Scenario) -> f64 {
    let (h, b) = (s.h[k], s.b[k]);
    if h == 0.0 {
        f64::NEG_INFINITY
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        h * h / b
    }
}

/// Transformed powers for a given multiplier and receive scaling.
pub fn x_from_lambda_alpha(lambda: f64, alpha: f64, s: &Scenario) -> Vec<f64> {
    let cap = alpha * s.p_max;
    (0..s.k())
        .map(|k| {
            if lambda < iota(k, alpha, s) {
                let (h, b) = (s.h[k], s.b[k]);
                let d = h * h - lambda * b;
                (h * h / (d * d)).min(cap)
            } else {
                cap
            }
        })
        .collect()
}

/// Receive-scaling values at which two thresholds cross, ascending and
/// deduplicated.
pub fn transition_points(s: &Scenario) -> Vec<f64> {
    let k = s.k();
    let p = s.p_max;
    let mut pts = Vec::new();
    for a in 0..k {
        let (ha, ba) = (s.h[a], s.b[a]);
        if ha == 0.0 {
            continue;
        }
        if ba == 0.0 {
            pts.push(1.0 / (p * ha * ha));
            continue;
        }
        for c in a + 1..k {
            let (hc, bc) = (s.h[c], s.b[c]);
            if hc == 0.0 || bc == 0.0 {
                continue;
            }
            let dr = ha * ha / ba - hc * hc / bc;
            if dr == 0.0 {
                continue;
            }
            let root = (ha / ba - hc / bc) / dr;
            let alpha = root * root / p;
            if root > 0.0 && alpha.is_finite() && alpha > 0.0 {
                pts.push(alpha);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for v in pts {
        match out.last() {
            Some(&last) if v - last <= TRANSITION_DEDUP_TOL * v => {}
            _ => out.push(v),
        }
    }
    out
}

/// Devices sorted by ascending threshold at `alpha`, ties by index.
pub fn permutation_at(alpha: f64, s: &Scenario) -> Vec<usize> {
    let vals: Vec<f64> = (0..s.k()).map(|k| iota(k, alpha, s)).collect();
    let mut perm: Vec<usize> = (0..s.k()).collect();
    perm.sort_by(|&a, &c| vals[a].total_cmp(&vals[c]));
    perm
}

/// Interval `[lo, hi]` of the `n`-th cell delimited by the transition points.
pub fn interval_bounds(n: usize, points: &[f64]) -> (f64, f64) {
    let lo = if n == 0 { 0.0 } else { points[n - 1] };
    let hi = points.get(n).copied().unwrap_or(f64::INFINITY);
    (lo, hi)
}

/// A point strictly inside `(lo, hi)`.
pub fn interior_point(lo: f64, hi: f64) -> f64 {
    match (lo > 0.0, hi.is_finite()) {
        (_, true) => 0.5 * (lo + hi),
        (true, false) => 2.0 * lo,
        (false, false) => 1.0,
    }
}

/// Candidate active set: the `i` devices with the smallest thresholds on
/// interval `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateIndex {
    pub n: usize,
    pub i: usize,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub perm: Vec<usize>,
    pub active_set: Vec<usize>,
    /// Sensing deficit left for the inactive devices, `eta_D - P_max sum_S b`.
    pub d_ni: f64,
}

impl CandidateIndex {
    pub fn new(n: usize, i: usize, points: &[f64], s: &Scenario) -> Self {
        let (alpha_lo, alpha_hi) = interval_bounds(n, points);
        let perm = permutation_at(interior_point(alpha_lo, alpha_hi), s);
        let mut active_set = perm[..i].to_vec();
        let d_ni = s.eta_d - s.p_max * active_set.iter().map(|&k| s.b[k]).sum::<f64>();
        active_set.sort_unstable();
        CandidateIndex {
            n,
            i,
            alpha_lo,
            alpha_hi,
            perm,
            active_set,
            d_ni,
        }
    }

    fn view(&self, s: &Scenario) -> Cand<'_> {
        let (mut sum_h, mut sum_h2) = (0.0, 0.0);
        for &k in &self.perm[..self.i] {
            sum_h += s.h[k];
            sum_h2 += s.h[k] * s.h[k];
        }
        Cand {
            i: self.i,
            lo: self.alpha_lo,
            hi: self.alpha_hi,
            perm: &self.perm,
            d: self.d_ni,
            sum_h,
            sum_h2,
        }
    }
}

/// Borrowed candidate with the sums the scalar equation needs.
#[derive(Clone, Copy)]
struct Cand<'a> {
    i: usize,
    lo: f64,
    hi: f64,
    perm: &'a [usize],
    d: f64,
    sum_h: f64,
    sum_h2: f64,
}

impl Cand<'_> {
    fn q(&self, lambda: f64, s: &Scenario) -> f64 {
        (s.noise_power + lambda * self.d) / s.p_max + self.sum_h2
    }

    fn alpha_hat(&self, lambda: f64, s: &Scenario) -> f64 {
        (self.sum_h / self.q(lambda, s)).powi(2) / s.p_max
    }

    /// Multiplier at which the candidate's receive scaling equals `alpha`.
    fn lambda_for_alpha(&self, alpha: f64, s: &Scenario) -> f64 {
        let p = s.p_max;
        (p * (self.sum_h / (alpha * p).sqrt() - self.sum_h2) - s.noise_power) / self.d
    }

    fn lhs_rhs(&self, lambda: f64, s: &Scenario) -> Result<(f64, f64)> {
        let mut lhs = 0.0;
        for &k in &self.perm[self.i..] {
            let (h, b) = (s.h[k], s.b[k]);
            if b == 0.0 {
                continue;
            }
            let den = h * h - lambda * b;
            if !(den > 0.0) {
                return Err(Error::Pole { k, lambda });
            }
            lhs += b * h * h / (den * den);
        }
        let rhs = self.d / s.p_max * (self.sum_h / self.q(lambda, s)).powi(2);
        Ok((lhs, rhs))
    }

    fn f(&self, lambda: f64, s: &Scenario) -> f64 {
        match self.lhs_rhs(lambda, s) {
            Ok((l, r)) => l - r,
            Err(_) => f64::INFINITY,
        }
    }

    fn df(&self, lambda: f64, s: &Scenario) -> f64 {
        let mut acc = 0.0;
        for &k in &self.perm[self.i..] {
            let (h, b) = (s.h[k], s.b[k]);
            let den = h * h - lambda * b;
            acc += 2.0 * b * b * h * h / (den * den * den);
        }
        let q = self.q(lambda, s);
        acc + 2.0 * (self.d / s.p_max).powi(2) * self.sum_h * self.sum_h / (q * q * q)
    }

    /// Affine form `iota_j(alpha_hat(lambda)) = a - c lambda` for a device
    /// with positive gain and sensing coefficient.
    fn iota_affine(&self, j: usize, s: &Scenario) -> (f64, f64) {
        let (h, b) = (s.h[j], s.b[j]);
        let a = h * h / b - h * (s.noise_power / s.p_max + self.sum_h2) / (b * self.sum_h);
        let c = h * self.d / (b * s.p_max * self.sum_h);
        (a, c)
    }

    fn upper_search_limit(&self, s: &Scenario) -> f64 {
        let next = self.perm[self.i];
        if self.hi.is_finite() {
            iota(next, self.hi, s)
        } else {
            iota_limit(next, s)
        }
    }

    /// Exact acceptance test for a multiplier.
    fn check(&self, lambda: f64, s: &Scenario) -> Option<f64> {
        let alpha = self.alpha_hat(lambda, s);
        if alpha < self.lo * (1.0 - CONDITION_TOL) || alpha > self.hi * (1.0 + CONDITION_TOL) {
            return None;
        }
        let lower = iota(self.perm[self.i - 1], alpha, s);
        let upper = iota(self.perm[self.i], alpha, s);
        let slack = |v: f64| CONDITION_TOL * v.abs().max(1.0);
        if lambda < lower - slack(lower) || lambda >= upper + slack(upper) {
            return None;
        }
        Some(alpha)
    }

    /// Sub-range of multipliers that can pass [`Cand::check`], from the
    /// closed forms of the interval and ordering conditions.
    fn window(&self, s: &Scenario) -> (f64, f64) {
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        if self.hi.is_finite() {
            lo = lo.max(self.lambda_for_alpha(self.hi, s));
        }
        if self.lo > 0.0 {
            hi = hi.min(self.lambda_for_alpha(self.lo, s));
        }
        let below = self.perm[self.i - 1];
        if s.h[below] > 0.0 && s.b[below] > 0.0 {
            let (a, c) = self.iota_affine(below, s);
            lo = lo.max(a / (1.0 + c));
        }
        let above = self.perm[self.i];
        if s.h[above] == 0.0 {
            return (1.0, 0.0);
        }
        if s.b[above] > 0.0 {
            let (a, c) = self.iota_affine(above, s);
            hi = hi.min(a / (1.0 + c));
        }
        let widen = |v: f64| 1e3 * CONDITION_TOL * v.abs().max(1.0);
        ((lo - widen(lo)).max(0.0), hi + widen(hi))
    }
}

/// Sign-change bracket of the candidate's scalar equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub lambda: f64,
    /// Residual at the returned multiplier; never negative.
    pub f: f64,
    pub bracket: RootBracket,
    pub iterations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bracket width, relative to `max(1, lambda)`.
    pub root_tol: f64,
    pub max_iter: u32,
    pub newton_polish: bool,
    /// Skip candidates whose closed-form acceptance window is empty.
    pub prescreen: bool,
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            root_tol: 1e-13,
            max_iter: 200,
            newton_polish: false,
            prescreen: true,
            trace: false,
        }
    }
}

/// `(LHS, RHS)` of the candidate's scalar equation; their difference is the
/// sensing surplus `sum_k b_k x_k - eta_D alpha`.
pub fn lhs_rhs(lambda: f64, c: &CandidateIndex, s: &Scenario) -> Result<(f64, f64)> {
    c.view(s).lhs_rhs(lambda, s)
}

/// Receive scaling induced by the candidate's active set at `lambda`.
pub fn alpha_given_active(lambda: f64, c: &CandidateIndex, s: &Scenario) -> f64 {
    c.view(s).alpha_hat(lambda, s)
}

/// Root of `LHS - RHS` over `(0, lambda_hi)`, or `None` without a sign change.
pub fn find_root(c: &CandidateIndex, s: &Scenario, opts: &SolverOptions) -> Option<RootResult> {
    let v = c.view(s);
    if !(v.d > 0.0 && v.sum_h > 0.0) {
        return None;
    }
    bracket_and_bisect(&v, 0.0, v.upper_search_limit(s), s, opts)
}

fn bracket_and_bisect(v: &Cand, lo: f64, hi: f64, s: &Scenario, opts: &SolverOptions) -> Option<RootResult> {
    if !(hi > lo) || !hi.is_finite() {
        return None;
    }
    let f_lo = v.f(lo, s);
    if f_lo >= 0.0 {
        return None;
    }
    let f_hi = v.f(hi, s);
    if f_hi < 0.0 {
        return None;
    }
    let bracket = RootBracket { lo, hi, f_lo, f_hi };
    let (mut a, mut b, mut fb) = (lo, hi, f_hi);
    let mut iterations = 0;
    while iterations < opts.max_iter && b - a >= opts.root_tol * b.max(1.0) {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = v.f(mid, s);
        if fm >= 0.0 {
            b = mid;
            fb = fm;
        } else {
            a = mid;
        }
        iterations += 1;
    }
    if !fb.is_finite() {
        return None;
    }
    if opts.newton_polish {
        for _ in 0..3 {
            let step = fb / v.df(b, s);
            let cand = b - step;
            if !(cand >= a && cand < b) {
                break;
            }
            let fc = v.f(cand, s);
            if !(fc >= 0.0) {
                break;
            }
            b = cand;
            fb = fc;
        }
    }
    Some(RootResult {
        lambda: b,
        f: fb,
        bracket,
        iterations,
    })
}

/// Receive scaling of the candidate at `lambda_hat` if both the interval and
/// the ordering conditions hold.
pub fn check_conditions(c: &CandidateIndex, lambda_hat: f64, s: &Scenario) -> Option<f64> {
    c.view(s).check(lambda_hat, s)
}

/// One examined candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub i: usize,
    pub d_ni: f64,
    pub root_found: bool,
    pub lambda_hat: Option<f64>,
    pub f_at_root: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub accepted: bool,
}

/// Output of [`solve_with`]. Candidate quantities (`accepted`, `trace`,
/// `f_at_root`) are in the rescaled frame with unit power budget, noise
/// and detection threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solution: Solution,
    pub accepted: Option<CandidateIndex>,
    pub f_at_root: Option<f64>,
    pub n_intervals: usize,
    pub trace: Vec<TraceRow>,
    pub kkt: KktReport,
    /// `|sum_k b_k x_k - eta_D alpha| / (eta_D alpha)`.
    pub sensing_residual: f64,
    pub certified: bool,
}

pub fn solve(s: &Scenario) -> Result<Solution> {
    solve_with(s, &SolverOptions::default()).map(|r| r.solution)
}

pub fn solve_with(s: &Scenario, opts: &SolverOptions) -> Result<SolveReport> {
    let class = classify_feasibility(s);
    let mut accepted = None;
    let mut f_at_root = None;
    let mut n_intervals = 0;
    let mut trace = Vec::new();
    let solution = match class.kind {
        Feasibility::Infeasible => {
            return Err(Error::Infeasible {
                capacity: s.sensing_capacity(),
                threshold: s.eta_d,
            })
        }
        Feasibility::BoundaryFeasible => solve_boundary_equality(s)?,
        Feasibility::StrictlyFeasible => {
            let free = solve_no_sensing(s)?;
            if free.sensing_energy(s) >= s.eta_d {
                free
            } else {
                let (c, scaling) = s.canonical();
                match enumerate(&c, opts, &mut trace) {
                    Ok(found) => {
                        n_intervals = found.n_intervals;
                        f_at_root = Some(found.f);
                        let (x, alpha, lambda) = scaling.to_raw(&found.x, found.alpha, found.lambda);
                        accepted = Some(found.candidate);
                        Solution::assemble(s, x, alpha, lambda, Status::Optimal)
                    }
                    // slack lost to rounding in the rescaled sums: numerically on the boundary
                    Err(Error::NoCandidate { .. })
                        if class.slack <= ROUNDING_SLACK * s.k() as f64 * s.sensing_capacity() =>
                    {
                        log::debug!("slack {:e} at rounding level, using the full-power point", class.slack);
                        let (x, alpha, lambda) = full_power_point(s)?;
                        Solution::assemble(s, x, alpha, lambda, Status::Optimal)
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    };
    let kkt = kkt_residuals(&solution, s)?;
    let scale = s.eta_d * solution.alpha;
    let surplus: f64 = s.b.iter().zip(&solution.x).map(|(b, x)| b * x).sum::<f64>() - scale;
    let sensing_residual = if scale > 0.0 { surplus.abs() / scale } else { 0.0 };
    let certified =
        kkt.max_residual < CERTIFY_TOL && (solution.lambda == 0.0 || sensing_residual < CERTIFY_TOL);
    if !certified {
        log::warn!(
            "solution not certified: kkt residual {:e}, sensing residual {:e}",
            kkt.max_residual,
            sensing_residual
        );
    }
    Ok(SolveReport {
        solution,
        accepted,
        f_at_root,
        n_intervals,
        trace,
        kkt,
        sensing_residual,
        certified,
    })
}

struct Found {
    x: Vec<f64>,
    alpha: f64,
    lambda: f64,
    f: f64,
    candidate: CandidateIndex,
    n_intervals: usize,
}

fn enumerate(s: &Scenario, opts: &SolverOptions, trace: &mut Vec<TraceRow>) -> Result<Found> {
    let k = s.k();
    let points = transition_points(s);
    let n_intervals = points.len() + 1;
    let mut near_miss: Option<(f64, String)> = None;
    let mut prefix_b = vec![0.0; k + 1];

    for n in 0..n_intervals {
        let (lo, hi) = interval_bounds(n, &points);
        let perm = permutation_at(interior_point(lo, hi), s);
        for (j, &d) in perm.iter().enumerate() {
            prefix_b[j + 1] = prefix_b[j] + s.b[d];
        }
        let (mut sum_h, mut sum_h2) = (0.0, 0.0);
        for i in 1..k {
            let last = perm[i - 1];
            sum_h += s.h[last];
            sum_h2 += s.h[last] * s.h[last];
            let d = s.eta_d - s.p_max * prefix_b[i];
            if d <= 0.0 {
                // later ranks only add sensing
                break;
            }
            let v = Cand {
                i,
                lo,
                hi,
                perm: &perm,
                d,
                sum_h,
                sum_h2,
            };
            let mut row = TraceRow {
                n,
                i,
                d_ni: d,
                root_found: false,
                lambda_hat: None,
                f_at_root: None,
                alpha_hat: None,
                accepted: false,
            };
            let next = perm[i];
            let empty_band = s.h[last] == s.h[next] && s.b[last] == s.b[next];
            let root = if sum_h <= 0.0 || empty_band {
                None
            } else {
                let limit = v.upper_search_limit(s);
                if opts.prescreen {
                    let (w_lo, w_hi) = v.window(s);
                    bracket_and_bisect(&v, w_lo, w_hi.min(limit), s, opts)
                } else {
                    bracket_and_bisect(&v, 0.0, limit, s, opts)
                }
            };
            if let Some(r) = root {
                row.root_found = true;
                row.lambda_hat = Some(r.lambda);
                row.f_at_root = Some(r.f);
                let alpha = v.alpha_hat(r.lambda, s);
                row.alpha_hat = Some(alpha);
                if let Some(alpha) = v.check(r.lambda, s) {
                    row.accepted = true;
                    if opts.trace {
                        trace.push(row);
                    }
                    let cap = alpha * s.p_max;
                    let mut x = vec![cap; k];
                    for &d in &perm[i..] {
                        let (h, b) = (s.h[d], s.b[d]);
                        let den = h * h - r.lambda * b;
                        x[d] = (h * h / (den * den)).min(cap);
                    }
                    let mut candidate = CandidateIndex {
                        n,
                        i,
                        alpha_lo: lo,
                        alpha_hi: hi,
                        active_set: perm[..i].to_vec(),
                        perm,
                        d_ni: d,
                    };
                    candidate.active_set.sort_unstable();
                    return Ok(Found {
                        x,
                        alpha,
                        lambda: r.lambda,
                        f: r.f,
                        candidate,
                        n_intervals,
                    });
                }
                let miss = (alpha / hi - 1.0).max(0.0) + (1.0 - alpha / lo.max(f64::MIN_POSITIVE)).max(0.0);
                if near_miss.as_ref().map_or(true, |(m, _)| miss < *m) {
                    near_miss = Some((miss, format!("(n={n}, i={i}, lambda={}, alpha={alpha})", r.lambda)));
                }
            }
            if opts.trace {
                trace.push(row);
            }
        }
    }
    Err(Error::NoCandidate {
        near_miss: near_miss.map_or_else(|| "none".to_string(), |(_, m)| m),
    })
}
