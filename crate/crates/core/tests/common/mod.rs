#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigiscc::Scenario;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Unit-frame instance (`P_max = sigma^2 = eta_D = 1`) whose sensing
/// capacity exceeds one by a random margin.
pub fn unit_instance(seed: u64, k: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 0.05, 20.0)).collect();
    let raw: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 1e-3, 1.0)).collect();
    let fill = 0.05 + 0.9 * rng.random::<f64>();
    let total: f64 = raw.iter().sum();
    let b = raw.iter().map(|v| v / (fill * total)).collect();
    Scenario::new(h, b, 1.0, 1.0, 1.0).unwrap()
}

/// Unit-frame instances with the sensing constraint binding.
pub fn active_instances(n: usize, seed: u64) -> Vec<Scenario> {
    let mut out = Vec::with_capacity(n);
    let mut s = seed;
    while out.len() < n {
        let inst = unit_instance(s, 2 + (s % 7) as usize);
        s += 1;
        let free = sigiscc::solve_no_sensing(&inst).unwrap();
        if free.sensing_energy(&inst) < inst.eta_d {
            out.push(inst);
        }
    }
    out
}

/// Same instance expressed in physical units.
pub fn to_physical(s: &Scenario, noise: f64, p_max: f64, eta: f64) -> Scenario {
    let h = s.h.iter().map(|h| h * (noise / p_max).sqrt()).collect();
    let b = s.b.iter().map(|b| b * eta / p_max).collect();
    Scenario::new(h, b, noise, eta, p_max).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
