//! Optimality-gap suite over random-placement layouts.

use crate::config::Config;
use crate::instances::protocol_layout;
use rayon::prelude::*;
use serde::Serialize;
use sigiscc::{
    solve_greedy_sp, solve_no_sensing_baseline, solve_oracle, solve_with, solve_zf, OracleConfig, Result, SolverOptions,
    Status,
};
use std::time::Instant;

/// Results for one (layout, fading) instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceOutcome {
    pub layout: usize,
    pub fading: usize,
    pub k: usize,
    pub target_distance_m: f64,
    pub sensing_active: bool,
    pub optimal: f64,
    /// Sensing multiplier of the exact solution.
    pub lambda: f64,
    pub certified: bool,
    pub kkt_residual: f64,
    pub sensing_residual: f64,
    pub f_at_root: Option<f64>,
    pub oracle: f64,
    pub greedy: f64,
    pub zf: Option<f64>,
    pub nosensing: f64,
    pub solve_seconds: f64,
    pub oracle_seconds: f64,
}

impl InstanceOutcome {
    /// `(method, objective)` for every comparison method.
    pub fn methods(&self) -> [(&'static str, Option<f64>); 4] {
        [
            ("oracle", Some(self.oracle)),
            ("greedy", Some(self.greedy)),
            ("zf", self.zf),
            ("nosensing", Some(self.nosensing)),
        ]
    }
}

pub fn relative_gap(baseline: f64, optimal: f64) -> f64 {
    (baseline - optimal) / optimal.abs()
}

#[derive(Debug, Clone)]
pub struct GapSuite {
    pub outcomes: Vec<InstanceOutcome>,
    pub rejections: usize,
}

pub fn run_gap_suite(cfg: &Config, seed: u64) -> Result<GapSuite> {
    let oracle_cfg = OracleConfig::default();
    let per_layout: Vec<(Vec<InstanceOutcome>, usize)> = (0..cfg.gap.n_layouts)
        .into_par_iter()
        .map(|j| {
            let layout = protocol_layout(cfg, seed, j)?;
            let outcomes = layout
                .scenarios
                .iter()
                .enumerate()
                .map(|(f, s)| {
                    let t = Instant::now();
                    let rep = solve_with(s, &SolverOptions::default())?;
                    let solve_seconds = t.elapsed().as_secs_f64();
                    let t = Instant::now();
                    let oracle = solve_oracle(s, &oracle_cfg)?;
                    let oracle_seconds = t.elapsed().as_secs_f64();
                    Ok(InstanceOutcome {
                        layout: j,
                        fading: f,
                        k: layout.k,
                        target_distance_m: layout.target_distance_m,
                        sensing_active: rep.solution.status == Status::Optimal,
                        optimal: rep.solution.objective,
                        lambda: rep.solution.lambda,
                        certified: rep.certified,
                        kkt_residual: rep.kkt.max_residual,
                        sensing_residual: rep.sensing_residual,
                        f_at_root: rep.f_at_root,
                        oracle: oracle.objective,
                        greedy: solve_greedy_sp(s)?.objective,
                        zf: solve_zf(s)?.map(|z| z.objective),
                        nosensing: solve_no_sensing_baseline(s)?.objective,
                        solve_seconds,
                        oracle_seconds,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((outcomes, layout.rejections))
        })
        .collect::<Result<_>>()?;
    let rejections = per_layout.iter().map(|(_, r)| r).sum();
    Ok(GapSuite {
        outcomes: per_layout.into_iter().flat_map(|(o, _)| o).collect(),
        rejections,
    })
}

pub const BUCKETS: [&str; 9] = ["<0%", "<0.01%", "<0.1%", "<1%", "<10%", "<100%", "<1000%", ">=1000%", "infeasible"];

/// Gaps in `[-1e-6, 1e-4)` share the first nonnegative bucket.
pub fn bucket_of(gap: Option<f64>) -> usize {
    match gap {
        None => 8,
        Some(g) if g < -1e-6 => 0,
        Some(g) => [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0]
            .iter()
            .position(|&edge| g < edge)
            .map_or(7, |p| p + 1),
    }
}

pub const GAP_HEADER: [&str; 8] = ["scenario", "layout", "fading", "k", "target_distance_m", "method", "objective", "relative_gap"];

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub scenario: usize,
    pub layout: usize,
    pub fading: usize,
    pub k: usize,
    pub target_distance_m: f64,
    pub method: &'static str,
    pub objective: Option<f64>,
    pub relative_gap: Option<f64>,
}

pub fn gap_rows(suite: &GapSuite) -> Vec<GapRow> {
    let mut rows = Vec::new();
    for (i, o) in suite.outcomes.iter().enumerate() {
        let row = |method, objective: Option<f64>| GapRow {
            scenario: i,
            layout: o.layout,
            fading: o.fading,
            k: o.k,
            target_distance_m: o.target_distance_m,
            method,
            objective,
            relative_gap: objective.map(|v| relative_gap(v, o.optimal)),
        };
        rows.push(row("optimal", Some(o.optimal)));
        for (m, v) in o.methods() {
            rows.push(row(m, v));
        }
    }
    rows
}

pub const BUCKET_HEADER: [&str; 6] = ["method", "bucket", "count", "fraction", "cumulative", "relaxation"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRow {
    pub method: &'static str,
    pub bucket: &'static str,
    pub count: usize,
    pub fraction: f64,
    pub cumulative: f64,
    /// Lower bound rather than a policy; negative gaps are expected.
    pub relaxation: bool,
}

pub fn bucket_rows(suite: &GapSuite) -> Vec<BucketRow> {
    let n = suite.outcomes.len();
    let mut rows = Vec::new();
    for (idx, method) in ["oracle", "greedy", "zf", "nosensing"].into_iter().enumerate() {
        let mut counts = [0usize; BUCKETS.len()];
        for o in &suite.outcomes {
            let v = o.methods()[idx].1;
            counts[bucket_of(v.map(|v| relative_gap(v, o.optimal)))] += 1;
        }
        let mut cumulative = 0.0;
        for (b, &count) in counts.iter().enumerate() {
            let fraction = count as f64 / n as f64;
            cumulative += fraction;
            rows.push(BucketRow {
                method,
                bucket: BUCKETS[b],
                count,
                fraction,
                cumulative,
                relaxation: method == "nosensing",
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_edges() {
        assert_eq!(bucket_of(Some(-2e-6)), 0);
        assert_eq!(bucket_of(Some(-1e-6)), 1);
        assert_eq!(bucket_of(Some(0.0)), 1);
        assert_eq!(bucket_of(Some(1e-4)), 2);
        assert_eq!(bucket_of(Some(0.05)), 4);
        assert_eq!(bucket_of(Some(9.99)), 6);
        assert_eq!(bucket_of(Some(10.0)), 7);
        assert_eq!(bucket_of(None), 8);
    }
}
