//! Radar detection model and the geometry-to-instance pipeline.
//!
//! Edge devices sit in a plane together with the base station and a point
//! target. Communication gains follow a power law in the device-to-BS
//! distance; sensing coefficients follow a round-trip power law in the
//! device-to-target distance.

use crate::error::{Error, Result};
use crate::qfunc::{q, q_inv};
use crate::scenario::Scenario;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Planar position in meters.
pub type Point = [f64; 2];

/// Distance of the first device group from the BS in the two-group layout.
pub const GROUP1_DISTANCE_M: f64 = 50.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Radar parameters of the joint Neyman-Pearson detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub n_rx_antennas: u32,
    /// Radar cross section.
    pub rcs: f64,
    /// Integration length of the matched filter.
    pub signal_duration: f64,
    pub p_false_alarm: f64,
    pub p_detect_threshold: f64,
    /// Linear watts.
    pub sensing_noise_power: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        SensingConfig {
            n_rx_antennas: 4,
            rcs: 0.7,
            signal_duration: 8.0,
            p_false_alarm: 1e-2,
            p_detect_threshold: 0.99,
            sensing_noise_power: dbm_to_watts(-80.0),
        }
    }
}

impl SensingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rx_antennas == 0 {
            return Err(Error::param("n_rx_antennas", "must be positive"));
        }
        for (name, v) in [
            ("rcs", self.rcs),
            ("signal_duration", self.signal_duration),
            ("sensing_noise_power", self.sensing_noise_power),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        for (name, v) in [
            ("p_false_alarm", self.p_false_alarm),
            ("p_detect_threshold", self.p_detect_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::param(name, format!("must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// `zeta^2 * N_r`, the factor between round-trip path loss and `b_k`.
    pub fn sensing_gain(&self) -> f64 {
        self.rcs * self.rcs * self.n_rx_antennas as f64
    }
}

/// Detection probability of the joint detector for aggregate echo energy
/// `sum_k b_k p_k`.
pub fn detection_probability(energy: f64, cfg: &SensingConfig) -> f64 {
    debug_assert!(energy >= 0.0);
    let t = cfg.signal_duration;
    let shift = (2.0 * t * t * energy / cfg.sensing_noise_power).sqrt();
    q(q_inv(cfg.p_false_alarm) - shift)
}

/// Minimum echo energy `eta_D` meeting the detection-probability target.
///
/// Returns `Ok(0.0)` when the target equals the false-alarm rate and
/// [`Error::DegenerateThreshold`] when it is below it.
pub fn compute_eta_d(cfg: &SensingConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.p_detect_threshold < cfg.p_false_alarm {
        return Err(Error::DegenerateThreshold {
            p_false_alarm: cfg.p_false_alarm,
            p_detect: cfg.p_detect_threshold,
        });
    }
    let gap = q_inv(cfg.p_false_alarm) - q_inv(cfg.p_detect_threshold);
    let t = cfg.signal_duration;
    Ok(cfg.sensing_noise_power * gap * gap / (2.0 * t * t))
}

/// Large-scale propagation constants.
///
/// `reference_gain` is the communication power gain at `reference_distance`;
/// `sensing_reference_gain` is the round-trip radar gain at the same
/// distance (it absorbs the radar-equation constants, so it is typically
/// orders of magnitude below the one-way gain).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLoss {
    pub comm_exponent: f64,
    pub sensing_roundtrip_exponent: f64,
    pub reference_distance: f64,
    pub reference_gain: f64,
    pub sensing_reference_gain: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss {
            comm_exponent: 2.7,
            sensing_roundtrip_exponent: 4.0,
            reference_distance: 1.0,
            reference_gain: 1e-4,
            sensing_reference_gain: 8e-8,
        }
    }
}

impl PathLoss {
    /// Mean power gain of the device-to-BS link at distance `d`.
    pub fn comm_power_gain(&self, d: f64) -> f64 {
        self.reference_gain * (self.reference_distance / d).powf(self.comm_exponent)
    }

    /// Round-trip device-target-device gain at distance `d`.
    pub fn sensing_roundtrip_gain(&self, d: f64) -> f64 {
        self.sensing_reference_gain * (self.reference_distance / d).powf(self.sensing_roundtrip_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("comm_exponent", self.comm_exponent),
            ("sensing_roundtrip_exponent", self.sensing_roundtrip_exponent),
            ("reference_distance", self.reference_distance),
            ("reference_gain", self.reference_gain),
            ("sensing_reference_gain", self.sensing_reference_gain),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub ed_positions: Vec<Point>,
    pub target_position: Point,
    pub bs_position: Point,
    pub path_loss: PathLoss,
}

impl Geometry {
    pub fn with_path_loss(mut self, path_loss: PathLoss) -> Self {
        self.path_loss = path_loss;
        self
    }

    pub fn n_eds(&self) -> usize {
        self.ed_positions.len()
    }

    /// Mean channel amplitudes `sqrt(E|h_k|^2)` before small-scale fading.
    pub fn mean_amplitudes(&self) -> Result<Vec<f64>> {
        self.ed_positions
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let d = distance(p, self.bs_position);
                if d <= 0.0 {
                    return Err(Error::ZeroDistance { what: format!("device {k} and the BS") });
                }
                Ok(self.path_loss.comm_power_gain(d).sqrt())
            })
            .collect()
    }

    /// Sensing coefficients `b_k = zeta^2 N_r beta_kk`.
    pub fn sensing_coeffs(&self, cfg: &SensingConfig) -> Result<Vec<f64>> {
        let g = cfg.sensing_gain();
        self.ed_positions
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let d = distance(p, self.target_position);
                if d <= 0.0 {
                    return Err(Error::ZeroDistance { what: format!("device {k} and the target") });
                }
                Ok(g * self.path_loss.sensing_roundtrip_gain(d))
            })
            .collect()
    }
}

/// Builds one round's optimization instance.
pub fn build_scenario(
    geom: &Geometry,
    cfg: &SensingConfig,
    fading: &[f64],
    noise_power: f64,
    p_max: f64,
) -> Result<Scenario> {
    if geom.ed_positions.is_empty() {
        return Err(Error::param("ed_positions", "at least one device is required"));
    }
    if fading.len() != geom.n_eds() {
        return Err(Error::param(
            "fading",
            format!("expected {} entries, got {}", geom.n_eds(), fading.len()),
        ));
    }
    if let Some(f) = fading.iter().find(|f| !(**f >= 0.0 && f.is_finite())) {
        return Err(Error::param("fading", format!("amplitudes must be finite and >= 0, got {f}")));
    }
    geom.path_loss.validate()?;
    let eta_d = compute_eta_d(cfg)?;
    let h = geom
        .mean_amplitudes()?
        .into_iter()
        .zip(fading)
        .map(|(a, f)| a * f)
        .collect();
    let b = geom.sensing_coeffs(cfg)?;
    Scenario::new(h, b, noise_power, eta_d, p_max)
}

/// `n` Rayleigh amplitudes with unit second moment.
pub fn rayleigh_fading<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            ((re * re + im * im) / 2.0).sqrt()
        })
        .collect()
}

fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, center: Point, radius: f64) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    [center[0] + r * theta.cos(), center[1] + r * theta.sin()]
}

/// Random placement: `n_near_target` devices uniform in a disc around the
/// target, the rest uniform in a disc around the BS. The BS sits at the
/// origin and the target on the positive x-axis.
pub fn sample_random_layout_with<R: Rng + ?Sized>(
    rng: &mut R,
    n_eds: usize,
    n_near_target: usize,
    near_radius_m: f64,
    field_radius_m: f64,
    target_distance_m: f64,
) -> Result<Geometry> {
    if n_near_target > n_eds {
        return Err(Error::param(
            "n_near_target",
            format!("{n_near_target} exceeds device count {n_eds}"),
        ));
    }
    let bs = [0.0, 0.0];
    let target = [target_distance_m, 0.0];
    let mut ed_positions = Vec::with_capacity(n_eds);
    for _ in 0..n_near_target {
        ed_positions.push(uniform_in_disc(rng, target, near_radius_m));
    }
    for _ in n_near_target..n_eds {
        ed_positions.push(uniform_in_disc(rng, bs, field_radius_m));
    }
    Ok(Geometry {
        ed_positions,
        target_position: target,
        bs_position: bs,
        path_loss: PathLoss::default(),
    })
}

pub fn sample_random_layout(
    seed: u64,
    n_eds: usize,
    n_near_target: usize,
    near_radius_m: f64,
    field_radius_m: f64,
    target_distance_m: f64,
) -> Result<Geometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_random_layout_with(
        &mut rng,
        n_eds,
        n_near_target,
        near_radius_m,
        field_radius_m,
        target_distance_m,
    )
}

/// Two device groups on a line through the BS: group 1 centered at
/// [`GROUP1_DISTANCE_M`], group 2 at `d_2nd_m`, target at `d_target_m`.
/// Each device is placed uniformly in a segment of length `group_width_m`
/// centered on its group.
pub fn two_group_layout<R: Rng + ?Sized>(
    rng: &mut R,
    d_2nd_m: f64,
    d_target_m: f64,
    n_group1: usize,
    n_group2: usize,
    group_width_m: f64,
) -> Result<Geometry> {
    if !(d_2nd_m > 0.0 && d_target_m > 0.0) {
        return Err(Error::param("d_2nd_m/d_target_m", "distances must be positive"));
    }
    if group_width_m < 0.0 {
        return Err(Error::param("group_width_m", "must be >= 0"));
    }
    let mut place = |center: f64| {
        let offset = if group_width_m > 0.0 {
            group_width_m * (rng.random::<f64>() - 0.5)
        } else {
            0.0
        };
        [center + offset, 0.0]
    };
    let mut ed_positions: Vec<Point> = (0..n_group1).map(|_| place(GROUP1_DISTANCE_M)).collect();
    ed_positions.extend((0..n_group2).map(|_| place(d_2nd_m)));
    Ok(Geometry {
        ed_positions,
        target_position: [d_target_m, 0.0],
        bs_position: [0.0, 0.0],
        path_loss: PathLoss::default(),
    })
}

/// Radio parameters shared by every instance of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub sensing: SensingConfig,
    /// Receiver noise power in watts.
    pub noise_power: f64,
    /// Per-device power budget in watts.
    pub p_max: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            sensing: SensingConfig::default(),
            noise_power: dbm_to_watts(-80.0),
            p_max: dbm_to_watts(23.0),
        }
    }
}

impl RadioConfig {
    pub fn scenario(&self, geom: &Geometry, fading: &[f64]) -> Result<Scenario> {
        build_scenario(geom, &self.sensing, fading, self.noise_power, self.p_max)
    }

    /// `P_max sum b` exceeds `eta_D` for this layout (independent of fading).
    pub fn strictly_feasible(&self, geom: &Geometry) -> Result<bool> {
        let b = geom.sensing_coeffs(&self.sensing)?;
        Ok(self.p_max * b.iter().sum::<f64>() > compute_eta_d(&self.sensing)?)
    }
}

/// Parameters of the random placement used for the optimality studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomLayoutConfig {
    pub n_near_target: usize,
    pub near_radius_m: f64,
    pub field_radius_m: f64,
    /// Give up after this many rejected layouts in a row.
    pub max_rejections: usize,
}

impl Default for RandomLayoutConfig {
    fn default() -> Self {
        RandomLayoutConfig {
            n_near_target: 3,
            near_radius_m: 30.0,
            field_radius_m: 300.0,
            max_rejections: 100_000,
        }
    }
}

/// Draws layouts until one is strictly feasible. Returns the layout and
/// the number of rejected draws.
pub fn sample_feasible_layout<R: Rng + ?Sized>(
    rng: &mut R,
    radio: &RadioConfig,
    path_loss: PathLoss,
    layout: &RandomLayoutConfig,
    n_eds: usize,
    target_distance_m: f64,
) -> Result<(Geometry, usize)> {
    for rejected in 0..=layout.max_rejections {
        let geom = sample_random_layout_with(
            rng,
            n_eds,
            layout.n_near_target.min(n_eds),
            layout.near_radius_m,
            layout.field_radius_m,
            target_distance_m,
        )?
        .with_path_loss(path_loss);
        if radio.strictly_feasible(&geom)? {
            return Ok((geom, rejected));
        }
    }
    Err(Error::param(
        "max_rejections",
        format!("no strictly feasible layout in {} draws", layout.max_rejections + 1),
    ))
}
