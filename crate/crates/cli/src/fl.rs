//! Toy federated-learning runs over seeds and policies.

use crate::config::Config;
use crate::instances::stream;
use rayon::prelude::*;
use serde::Serialize;
use sigiscc::{run_toy_fl, two_group_layout, ChannelSetup, FlConfig, FlPolicy, FlRound, Result};

pub const ROUND_HEADER: [&str; 8] = [
    "round",
    "loss",
    "accuracy",
    "analytical_mse",
    "empirical_mse",
    "policy",
    "seed",
    "fallback",
];

/// Channel of seed index `i`; every policy trains over the same one.
pub fn channel(cfg: &Config, seed: u64, i: usize) -> Result<ChannelSetup> {
    let f = &cfg.fl;
    let n1 = f.train.n_eds / 2;
    let mut rng = stream(seed, i as u64);
    let geometry = two_group_layout(
        &mut rng,
        f.d_2nd_m,
        f.d_2nd_m - f.gap_m,
        n1,
        f.train.n_eds - n1,
        cfg.sweep.group_width_m,
    )?
    .with_path_loss(cfg.path_loss);
    Ok(ChannelSetup {
        geometry,
        radio: cfg.radio,
    })
}

/// Trajectories for every `(policy, seed)` pair, policy-major.
pub fn run_fl_study(cfg: &Config, seed: u64) -> Result<Vec<Vec<FlRound>>> {
    let f = &cfg.fl;
    let policies: Vec<FlPolicy> = f.policies.iter().map(|p| p.parse()).collect::<Result<_>>()?;
    let channels: Vec<ChannelSetup> = (0..f.n_seeds).map(|i| channel(cfg, seed, i)).collect::<Result<_>>()?;
    let jobs: Vec<(FlPolicy, usize)> = policies
        .iter()
        .flat_map(|&p| (0..f.n_seeds).map(move |i| (p, i)))
        .collect();
    jobs.par_iter()
        .map(|&(p, i)| {
            let train = FlConfig {
                seed: seed.wrapping_add(i as u64),
                ..f.train.clone()
            };
            run_toy_fl(&train, p, &channels[i])
        })
        .collect()
}

pub const SUMMARY_HEADER: [&str; 7] = [
    "policy",
    "n_seeds",
    "mean_final_loss",
    "std_error_final_loss",
    "mean_final_accuracy",
    "mean_analytical_mse",
    "fallback_rounds",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub n_seeds: usize,
    pub mean_final_loss: f64,
    pub std_error_final_loss: f64,
    pub mean_final_accuracy: f64,
    /// Averaged over rounds and seeds.
    pub mean_analytical_mse: f64,
    pub fallback_rounds: usize,
}

pub fn summarize(runs: &[Vec<FlRound>]) -> Vec<PolicySummary> {
    let mut out: Vec<PolicySummary> = Vec::new();
    let mut order: Vec<&str> = Vec::new();
    for r in runs {
        if let Some(first) = r.first() {
            if !order.contains(&first.policy.as_str()) {
                order.push(&first.policy);
            }
        }
    }
    for policy in order {
        let mine: Vec<&Vec<FlRound>> = runs.iter().filter(|r| r.first().is_some_and(|x| x.policy == policy)).collect();
        let n = mine.len();
        let finals: Vec<f64> = mine.iter().map(|r| r.last().unwrap().loss).collect();
        let mean = finals.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        let all_rounds: Vec<&FlRound> = mine.iter().flat_map(|r| r.iter()).collect();
        out.push(PolicySummary {
            policy: policy.to_string(),
            n_seeds: n,
            mean_final_loss: mean,
            std_error_final_loss: se,
            mean_final_accuracy: mine.iter().map(|r| r.last().unwrap().accuracy).sum::<f64>() / n as f64,
            mean_analytical_mse: all_rounds.iter().map(|r| r.analytical_mse).sum::<f64>() / all_rounds.len() as f64,
            fallback_rounds: all_rounds.iter().filter(|r| r.fallback).count(),
        });
    }
    out
}
