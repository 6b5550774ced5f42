//! Mean aggregation error of every policy over the two-group grid.

use crate::config::Config;
use crate::instances::two_group_scenario;
use rayon::prelude::*;
use serde::Serialize;
use sigiscc::{
    classify_feasibility, mse_ota, solve, solve_greedy_sp, solve_no_sensing_baseline, solve_zf, Feasibility, Result,
    Scenario, Solution,
};

pub const POLICIES: [&str; 4] = ["optimal", "greedy", "zf", "nosensing"];

fn mse(sol: &Solution, s: &Scenario) -> f64 {
    mse_ota(&sol.p, sol.alpha, s, 1.0, 1)
}

/// Per-draw MSE in [`POLICIES`] order; `None` where a policy has no output.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub d_2nd_m: f64,
    pub gap_m: f64,
    pub draw: usize,
    pub mse: Option<[Option<f64>; 4]>,
}

pub fn run_draws(cfg: &Config, seed: u64) -> Result<Vec<Draw>> {
    let sw = &cfg.sweep;
    let mut jobs = Vec::new();
    for &d in &sw.d_2nd_m {
        for &g in &sw.gaps_m {
            for draw in 0..sw.n_fading {
                jobs.push((d, g, draw));
            }
        }
    }
    jobs.par_iter()
        .enumerate()
        .map(|(idx, &(d, g, draw))| {
            let s = two_group_scenario(cfg, seed, d, g, idx as u64)?;
            if classify_feasibility(&s).kind == Feasibility::Infeasible {
                return Ok(Draw { d_2nd_m: d, gap_m: g, draw, mse: None });
            }
            let vals = [
                Some(mse(&solve(&s)?, &s)),
                Some(mse(&solve_greedy_sp(&s)?, &s)),
                solve_zf(&s)?.map(|z| mse(&z, &s)),
                Some(mse(&solve_no_sensing_baseline(&s)?, &s)),
            ];
            Ok(Draw { d_2nd_m: d, gap_m: g, draw, mse: Some(vals) })
        })
        .collect()
}

pub const DRAW_HEADER: [&str; 5] = ["d_2nd_m", "gap_m", "draw", "policy", "mse"];

#[derive(Debug, Clone, Serialize)]
pub struct DrawRow {
    pub d_2nd_m: f64,
    pub gap_m: f64,
    pub draw: usize,
    pub policy: &'static str,
    pub mse: Option<f64>,
}

pub fn draw_rows(draws: &[Draw]) -> Vec<DrawRow> {
    let mut rows = Vec::new();
    for d in draws {
        for (p, policy) in POLICIES.into_iter().enumerate() {
            rows.push(DrawRow {
                d_2nd_m: d.d_2nd_m,
                gap_m: d.gap_m,
                draw: d.draw,
                policy,
                mse: d.mse.and_then(|v| v[p]),
            });
        }
    }
    rows
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "policy",
    "d_2nd_m",
    "gap_m",
    "mean_mse",
    "std_error",
    "n_draws",
    "n_feasible",
    "paired_optimal_mse",
    "n_infeasible_instances",
];

/// Grid-point mean. `paired_optimal_mse` is the optimal policy's mean over
/// the draws where this policy has an output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub policy: &'static str,
    pub d_2nd_m: f64,
    pub gap_m: f64,
    pub mean_mse: Option<f64>,
    pub std_error: Option<f64>,
    pub n_draws: usize,
    pub n_feasible: usize,
    pub paired_optimal_mse: Option<f64>,
    pub n_infeasible_instances: usize,
}

fn mean_and_se(v: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = v.len();
    if n == 0 {
        return (None, None);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Some((var / n as f64).sqrt())
    } else {
        None
    };
    (Some(mean), se)
}

pub fn summarize(cfg: &Config, draws: &[Draw]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &d in &cfg.sweep.d_2nd_m {
        for &g in &cfg.sweep.gaps_m {
            let here: Vec<&Draw> = draws.iter().filter(|x| x.d_2nd_m == d && x.gap_m == g).collect();
            let valid: Vec<[Option<f64>; 4]> = here.iter().filter_map(|x| x.mse).collect();
            for (p, policy) in POLICIES.into_iter().enumerate() {
                let paired: Vec<(f64, f64)> = valid
                    .iter()
                    .filter_map(|v| v[p].map(|m| (m, v[0].expect("optimal always has output"))))
                    .collect();
                let own: Vec<f64> = paired.iter().map(|x| x.0).collect();
                let opt: Vec<f64> = paired.iter().map(|x| x.1).collect();
                let (mean_mse, std_error) = mean_and_se(&own);
                out.push(SweepPoint {
                    policy,
                    d_2nd_m: d,
                    gap_m: g,
                    mean_mse,
                    std_error,
                    n_draws: valid.len(),
                    n_feasible: own.len(),
                    paired_optimal_mse: mean_and_se(&opt).0,
                    n_infeasible_instances: here.len() - valid.len(),
                });
            }
        }
    }
    out
}
