//! Seeded instance generators. Each work item owns an independent ChaCha
//! stream keyed by its index, so results do not depend on the worker count.

use crate::config::Config;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigiscc::{rayleigh_fading, sample_feasible_layout, two_group_layout, Geometry, Result, Scenario};

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One random-placement layout with its fading draws.
#[derive(Debug, Clone)]
pub struct ProtocolLayout {
    pub index: usize,
    pub k: usize,
    pub target_distance_m: f64,
    pub geometry: Geometry,
    pub rejections: usize,
    pub scenarios: Vec<Scenario>,
}

/// Layout `j` of the gap suite: `K` and the target distance cycle with `j`.
pub fn protocol_layout(cfg: &Config, seed: u64, j: usize) -> Result<ProtocolLayout> {
    let g = &cfg.gap;
    let k = g.k_min + j % (g.k_max - g.k_min + 1);
    let target = g.target_distances_m[j % g.target_distances_m.len()];
    let mut rng = stream(seed, j as u64);
    let (geometry, rejections) = sample_feasible_layout(&mut rng, &cfg.radio, cfg.path_loss, &cfg.layout, k, target)?;
    let scenarios = (0..g.n_fading)
        .map(|_| cfg.radio.scenario(&geometry, &rayleigh_fading(&mut rng, k)))
        .collect::<Result<_>>()?;
    Ok(ProtocolLayout {
        index: j,
        k,
        target_distance_m: target,
        geometry,
        rejections,
        scenarios,
    })
}

/// Two-group layout for one sweep draw; every draw re-places the devices.
pub fn two_group_scenario(cfg: &Config, seed: u64, d_2nd: f64, gap: f64, draw_index: u64) -> Result<Scenario> {
    let s = &cfg.sweep;
    let mut rng = stream(seed, draw_index);
    let geom = two_group_layout(&mut rng, d_2nd, d_2nd - gap, s.n_group1, s.n_group2, s.group_width_m)?
        .with_path_loss(cfg.path_loss);
    let fading = rayleigh_fading(&mut rng, geom.n_eds());
    cfg.radio.scenario(&geom, &fading)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Instance in units with `P_max = sigma^2 = eta_D = 1` on which the
/// sensing constraint binds, so the solver runs its full enumeration.
///
/// Needs `k >= 2`: a lone device already transmits at full power without
/// the constraint, so it never binds.
pub fn active_instance(rng: &mut ChaCha8Rng, k: usize) -> Scenario {
    assert!(k >= 2, "a single device never makes the sensing constraint bind");
    loop {
        let h: Vec<f64> = (0..k).map(|_| log_uniform(rng, 0.05, 20.0)).collect();
        let raw: Vec<f64> = (0..k).map(|_| log_uniform(rng, 1e-3, 1.0)).collect();
        let fill = 0.05 + 0.9 * rng.random::<f64>();
        let total: f64 = raw.iter().sum();
        let b = raw.iter().map(|v| v / (fill * total)).collect();
        let s = Scenario::new(h, b, 1.0, 1.0, 1.0).expect("positive draws");
        match sigiscc::solve_no_sensing(&s) {
            Ok(free) if free.sensing_energy(&s) < s.eta_d => return s,
            _ => {}
        }
    }
}
