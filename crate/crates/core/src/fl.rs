//! Toy federated learning over the air: softmax regression on Gaussian
//! blobs, one channel realization and one power-control solve per round.

use crate::baselines::{solve_greedy_sp, Policy};
use crate::error::{Error, Result};
use crate::problem::mse_ota;
use crate::scenario::Solution;
use crate::sensing::{rayleigh_fading, Geometry, RadioConfig};
use crate::sim::normalize_gradients;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heterogeneity {
    Iid,
    /// Two classes per device, dataset sizes following a power law in rank.
    TwoClassPowerLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlConfig {
    pub n_rounds: usize,
    pub n_eds: usize,
    pub n_classes: usize,
    pub n_features: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub samples_per_device: usize,
    pub test_samples: usize,
    pub heterogeneity: Heterogeneity,
    pub power_law_exponent: f64,
    /// Distance of the class centers from the origin.
    pub class_separation: f64,
    pub seed: u64,
}

impl Default for FlConfig {
    fn default() -> Self {
        FlConfig {
            n_rounds: 200,
            n_eds: 10,
            n_classes: 4,
            n_features: 2,
            learning_rate: 1.0,
            batch_size: 16,
            samples_per_device: 200,
            test_samples: 1000,
            heterogeneity: Heterogeneity::Iid,
            power_law_exponent: 1.2,
            class_separation: 2.0,
            seed: 0,
        }
    }
}

impl FlConfig {
    /// Parameter count of the model (`m`).
    pub fn model_dim(&self) -> usize {
        self.n_classes * (self.n_features + 1)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_rounds", self.n_rounds),
            ("n_eds", self.n_eds),
            ("n_features", self.n_features),
            ("batch_size", self.batch_size),
            ("samples_per_device", self.samples_per_device),
            ("test_samples", self.test_samples),
        ] {
            if v == 0 {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if self.n_classes < 2 {
            return Err(Error::param("n_classes", "need at least two classes"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        Ok(())
    }
}

/// Channel side of the experiment: device layout and radio parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSetup {
    pub geometry: Geometry,
    pub radio: RadioConfig,
}

/// How local gradients are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlPolicy {
    Air(Policy),
    /// Error-free averaging, the centralized reference.
    Ideal,
}

impl FlPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlPolicy::Air(p) => p.as_str(),
            FlPolicy::Ideal => "ideal",
        }
    }
}

impl std::str::FromStr for FlPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "ideal" {
            Ok(FlPolicy::Ideal)
        } else {
            s.parse().map(FlPolicy::Air)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlRound {
    pub round: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub analytical_mse: f64,
    pub empirical_mse: f64,
    pub policy: String,
    pub seed: u64,
    /// The policy had no output this round and greedy sensing power was used.
    pub fallback: bool,
}

struct Dataset {
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
}

fn centers(cfg: &FlConfig) -> Vec<Vec<f64>> {
    (0..cfg.n_classes)
        .map(|c| {
            let theta = std::f64::consts::TAU * c as f64 / cfg.n_classes as f64;
            let mut v = vec![0.0; cfg.n_features];
            v[0] = cfg.class_separation * theta.cos();
            if cfg.n_features > 1 {
                v[1] = cfg.class_separation * theta.sin();
            }
            v
        })
        .collect()
}

fn sample_class<R: Rng>(rng: &mut R, center: &[f64]) -> Vec<f64> {
    center
        .iter()
        .map(|c| c + rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn partition<R: Rng>(rng: &mut R, cfg: &FlConfig) -> Vec<Dataset> {
    let cs = centers(cfg);
    let sizes: Vec<usize> = match cfg.heterogeneity {
        Heterogeneity::Iid => vec![cfg.samples_per_device; cfg.n_eds],
        Heterogeneity::TwoClassPowerLaw => {
            let w: Vec<f64> = (1..=cfg.n_eds)
                .map(|r| (r as f64).powf(-cfg.power_law_exponent))
                .collect();
            let total = (cfg.samples_per_device * cfg.n_eds) as f64;
            let sum: f64 = w.iter().sum();
            w.iter()
                .map(|v| ((v / sum * total).round() as usize).max(cfg.batch_size.min(10)).max(1))
                .collect()
        }
    };
    sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..n {
                let c = match cfg.heterogeneity {
                    Heterogeneity::Iid => rng.random_range(0..cfg.n_classes),
                    Heterogeneity::TwoClassPowerLaw => (k + rng.random_range(0..2)) % cfg.n_classes,
                };
                x.push(sample_class(rng, &cs[c]));
                y.push(c);
            }
            Dataset { x, y }
        })
        .collect()
}

fn test_set<R: Rng>(rng: &mut R, cfg: &FlConfig) -> Dataset {
    let cs = centers(cfg);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for j in 0..cfg.test_samples {
        let c = j % cfg.n_classes;
        x.push(sample_class(rng, &cs[c]));
        y.push(c);
    }
    Dataset { x, y }
}

/// Class probabilities for weights laid out row-major as
/// `[class][feature..., bias]`.
fn softmax(w: &[f64], x: &[f64], n_classes: usize) -> Vec<f64> {
    let d = x.len() + 1;
    let z: Vec<f64> = (0..n_classes)
        .map(|c| {
            let row = &w[c * d..(c + 1) * d];
            row[..d - 1].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + row[d - 1]
        })
        .collect();
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Negative cross-entropy gradient over the given sample indices.
fn descent_direction(w: &[f64], data: &Dataset, idx: &[usize], n_classes: usize) -> Vec<f64> {
    let d = data.x[0].len() + 1;
    let mut g = vec![0.0; w.len()];
    for &j in idx {
        let x = &data.x[j];
        let prob = softmax(w, x, n_classes);
        for c in 0..n_classes {
            let r = (if c == data.y[j] { 1.0 } else { 0.0 }) - prob[c];
            for f in 0..d - 1 {
                g[c * d + f] += r * x[f];
            }
            g[c * d + d - 1] += r;
        }
    }
    let n = idx.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

fn evaluate(w: &[f64], data: &Dataset, n_classes: usize) -> (f64, f64) {
    let (mut loss, mut hits) = (0.0, 0usize);
    for (x, &y) in data.x.iter().zip(&data.y) {
        let prob = softmax(w, x, n_classes);
        loss -= prob[y].max(1e-300).ln();
        let best = (0..n_classes).max_by(|&a, &b| prob[a].total_cmp(&prob[b])).unwrap_or(0);
        hits += usize::from(best == y);
    }
    let n = data.y.len() as f64;
    (loss / n, hits as f64 / n)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs the training loop and returns one record per round.
pub fn run_toy_fl(cfg: &FlConfig, policy: FlPolicy, channel: &ChannelSetup) -> Result<Vec<FlRound>> {
    cfg.validate()?;
    if channel.geometry.n_eds() != cfg.n_eds {
        return Err(Error::param(
            "n_eds",
            format!("geometry has {} devices, config {}", channel.geometry.n_eds(), cfg.n_eds),
        ));
    }
    let mut data_rng = stream(cfg.seed, 0);
    let mut batch_rng = stream(cfg.seed, 1);
    let mut fading_rng = stream(cfg.seed, 2);
    let mut noise_rng = stream(cfg.seed, 3);
    let noise = Normal::new(0.0, channel.radio.noise_power.sqrt()).map_err(|e| Error::param("noise_power", e.to_string()))?;

    let locals = partition(&mut data_rng, cfg);
    let test = test_set(&mut data_rng, cfg);
    let m = cfg.model_dim();
    let k = cfg.n_eds as f64;
    let mut w = vec![0.0; m];
    let mut out = Vec::with_capacity(cfg.n_rounds);

    for round in 1..=cfg.n_rounds {
        let fading = rayleigh_fading(&mut fading_rng, cfg.n_eds);
        let s = channel.radio.scenario(&channel.geometry, &fading)?;
        let grads: Vec<Vec<f64>> = locals
            .iter()
            .map(|data| {
                let idx: Vec<usize> = (0..cfg.batch_size)
                    .map(|_| batch_rng.random_range(0..data.y.len()))
                    .collect();
                descent_direction(&w, data, &idx, cfg.n_classes)
            })
            .collect();
        let noise_draw: Vec<f64> = (0..m).map(|_| noise.sample(&mut noise_rng)).collect();
        let mut avg = vec![0.0; m];
        for g in &grads {
            for (a, v) in avg.iter_mut().zip(g) {
                *a += v / k;
            }
        }

        let mut fallback = false;
        let (estimate, analytical_mse) = match policy {
            FlPolicy::Ideal => (avg.clone(), 0.0),
            FlPolicy::Air(p) => {
                let sol = match p.apply(&s) {
                    Ok(Some(sol)) => sol,
                    outcome => {
                        let why = match outcome {
                            Err(e) => e.to_string(),
                            _ => "sensing threshold missed".to_string(),
                        };
                        log::info!("round {round}: policy {p} unavailable ({why}); using greedy sensing power");
                        fallback = true;
                        solve_greedy_sp(&s)?
                    }
                };
                match normalize_gradients(&grads) {
                    Ok((normalized, mu, gamma)) => (
                        receive(&s.h, &sol, &normalized, &noise_draw, mu, gamma),
                        mse_ota(&sol.p, sol.alpha, &s, gamma, m),
                    ),
                    Err(Error::ZeroSpread) => (avg.clone(), 0.0),
                    Err(e) => return Err(e),
                }
            }
        };
        let empirical_mse = estimate.iter().zip(&avg).map(|(a, b)| (a - b).powi(2)).sum();
        for (wi, gi) in w.iter_mut().zip(&estimate) {
            *wi += cfg.learning_rate * gi;
        }
        let (loss, accuracy) = evaluate(&w, &test, cfg.n_classes);
        out.push(FlRound {
            round,
            loss,
            accuracy,
            analytical_mse,
            empirical_mse,
            policy: policy.as_str().to_string(),
            seed: cfg.seed,
            fallback,
        });
    }
    Ok(out)
}

/// Superposes the scaled transmissions, adds noise, and undoes the
/// normalization at the receiver.
fn receive(h: &[f64], sol: &Solution, normalized: &[Vec<f64>], noise: &[f64], mu: f64, gamma: f64) -> Vec<f64> {
    let k = h.len() as f64;
    let mut y = noise.to_vec();
    for ((hk, pk), g) in h.iter().zip(&sol.p).zip(normalized) {
        let amp = hk * pk.sqrt();
        for (yi, gi) in y.iter_mut().zip(g) {
            *yi += amp * gi;
        }
    }
    let scale = gamma * sol.alpha.sqrt() / k;
    y.iter().map(|v| scale * v + mu).collect()
}
