//! Wall-clock comparison of the exact solver and the oracle over the
//! device count. Runs on the calling thread only.

use crate::config::{BenchInstances, Config};
use crate::instances::{active_instance, stream};
use serde::Serialize;
use sigiscc::{rayleigh_fading, sample_feasible_layout, solve, solve_oracle, OracleConfig, Result, Scenario};
use std::hint::black_box;
use std::time::Instant;

pub const TIMING_HEADER: [&str; 4] = ["solver", "k", "instance", "seconds"];
pub const SUMMARY_HEADER: [&str; 4] = ["solver", "k", "median_seconds", "n_instances"];

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub solver: &'static str,
    pub k: usize,
    pub instance: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Median {
    pub solver: &'static str,
    pub k: usize,
    pub median_seconds: f64,
    pub n_instances: usize,
}

#[derive(Debug, Clone)]
pub struct BenchResult {
    pub timings: Vec<Timing>,
    pub medians: Vec<Median>,
    /// Log-log slope of the exact solver's median runtime against `K`.
    pub slope: Option<f64>,
    pub rejections: usize,
}

impl BenchResult {
    pub fn median(&self, solver: &str, k: usize) -> Option<f64> {
        self.medians
            .iter()
            .find(|m| m.solver == solver && m.k == k)
            .map(|m| m.median_seconds)
    }
}

fn instance(cfg: &Config, seed: u64, k: usize, i: usize) -> Result<(Scenario, usize)> {
    let mut rng = stream(seed, ((k as u64) << 32) | i as u64);
    match cfg.bench.instances {
        BenchInstances::Active => Ok((active_instance(&mut rng, k), 0)),
        BenchInstances::Protocol => {
            let target = cfg.gap.target_distances_m[i % cfg.gap.target_distances_m.len()];
            let (geom, rej) = sample_feasible_layout(&mut rng, &cfg.radio, cfg.path_loss, &cfg.layout, k, target)?;
            let s = cfg.radio.scenario(&geom, &rayleigh_fading(&mut rng, k))?;
            Ok((s, rej))
        }
    }
}

fn time_min<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let t = Instant::now();
        black_box(f()?);
        best = best.min(t.elapsed().as_secs_f64());
    }
    Ok(best)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn run_bench(cfg: &Config, seed: u64) -> Result<BenchResult> {
    let b = &cfg.bench;
    let oracle_cfg = OracleConfig::default();
    let mut timings = Vec::new();
    let mut medians = Vec::new();
    let mut rejections = 0;
    let mut points = Vec::new();
    for &k in &b.k_list {
        let mut exact = Vec::with_capacity(b.n_instances);
        let mut oracle = Vec::with_capacity(b.n_instances);
        for i in 0..b.n_instances {
            let (s, rej) = instance(cfg, seed, k, i)?;
            rejections += rej;
            let t = time_min(b.repeats, || solve(&s))?;
            timings.push(Timing { solver: "optimal", k, instance: i, seconds: t });
            exact.push(t);
            if b.include_oracle {
                let t = time_min(b.repeats, || solve_oracle(&s, &oracle_cfg))?;
                timings.push(Timing { solver: "oracle", k, instance: i, seconds: t });
                oracle.push(t);
            }
        }
        let m = median(&mut exact);
        points.push((k as f64, m));
        medians.push(Median { solver: "optimal", k, median_seconds: m, n_instances: b.n_instances });
        if b.include_oracle {
            medians.push(Median { solver: "oracle", k, median_seconds: median(&mut oracle), n_instances: b.n_instances });
        }
    }
    Ok(BenchResult {
        timings,
        medians,
        slope: loglog_slope(&points),
        rejections,
    })
}
