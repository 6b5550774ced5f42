//! Experiment configuration: radio and propagation parameters plus one
//! section per command. Every field has a default; the defaults form the
//! `standard` preset.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use sigiscc::{FlConfig, PathLoss, RadioConfig, RandomLayoutConfig};
use std::path::Path;

pub const PRESETS: [&str; 1] = ["standard"];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub radio: RadioConfig,
    pub path_loss: PathLoss,
    pub layout: RandomLayoutConfig,
    pub solve: SolveSection,
    pub gap: GapSection,
    pub sweep: SweepSection,
    pub bench: BenchSection,
    pub fl: FlSection,
}

/// Explicit instance in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineScenario {
    pub h: Vec<f64>,
    pub b: Vec<f64>,
    pub noise_power: f64,
    pub eta_d: f64,
    pub p_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    /// Device count of the sampled instance when no scenario is given.
    pub n_eds: usize,
    pub target_distance_m: f64,
    pub scenario: Option<InlineScenario>,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            n_eds: 10,
            target_distance_m: 200.0,
            scenario: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapSection {
    pub n_layouts: usize,
    pub n_fading: usize,
    pub k_min: usize,
    pub k_max: usize,
    /// Target distances cycled over the layouts.
    pub target_distances_m: Vec<f64>,
}

impl Default for GapSection {
    fn default() -> Self {
        GapSection {
            n_layouts: 100,
            n_fading: 10,
            k_min: 2,
            k_max: 10,
            target_distances_m: vec![100.0, 200.0, 300.0, 400.0, 500.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub d_2nd_m: Vec<f64>,
    /// Distance from the second group's center back to the target.
    pub gaps_m: Vec<f64>,
    pub n_fading: usize,
    pub n_group1: usize,
    pub n_group2: usize,
    pub group_width_m: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            d_2nd_m: vec![70.0, 100.0, 150.0, 200.0, 250.0, 300.0],
            gaps_m: vec![10.0, 12.0],
            n_fading: 40,
            n_group1: 5,
            n_group2: 5,
            group_width_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchInstances {
    /// Unit-frame instances drawn so that the sensing constraint binds.
    Active,
    /// Random-placement layouts with Rayleigh fading.
    Protocol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub k_list: Vec<usize>,
    pub n_instances: usize,
    /// Timed repetitions per instance; the minimum is kept.
    pub repeats: usize,
    pub instances: BenchInstances,
    pub include_oracle: bool,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            k_list: vec![4, 8, 10, 16, 32, 64],
            n_instances: 20,
            repeats: 3,
            instances: BenchInstances::Active,
            include_oracle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlSection {
    pub d_2nd_m: f64,
    pub gap_m: f64,
    pub n_seeds: usize,
    pub policies: Vec<String>,
    pub train: FlConfig,
}

impl Default for FlSection {
    fn default() -> Self {
        FlSection {
            d_2nd_m: 300.0,
            gap_m: 12.0,
            n_seeds: 20,
            policies: ["optimal", "zf", "greedy", "nosensing", "ideal"].map(String::from).to_vec(),
            train: FlConfig::default(),
        }
    }
}

impl Config {
    pub fn preset(name: &str) -> Result<Config, CliError> {
        match name {
            "standard" => Ok(Config::default()),
            other => Err(CliError::Usage(format!(
                "unknown preset `{other}` (available: {})",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Config, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Config::from_toml(&text).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        self.radio.sensing.validate().map_err(CliError::from)?;
        self.path_loss.validate().map_err(CliError::from)?;
        if self.solve.n_eds == 0 {
            return usage("solve.n_eds must be positive".into());
        }
        let g = &self.gap;
        if g.n_layouts == 0 || g.n_fading == 0 {
            return usage("gap.n_layouts and gap.n_fading must be positive".into());
        }
        if g.k_min == 0 || g.k_min > g.k_max {
            return usage(format!("gap: need 1 <= k_min <= k_max, got {}..{}", g.k_min, g.k_max));
        }
        if g.target_distances_m.is_empty() {
            return usage("gap.target_distances_m must be nonempty".into());
        }
        let s = &self.sweep;
        if s.d_2nd_m.is_empty() || s.gaps_m.is_empty() {
            return usage("sweep.d_2nd_m and sweep.gaps_m must be nonempty".into());
        }
        if s.n_fading == 0 {
            return usage("sweep.n_fading must be positive".into());
        }
        if let Some(&gap) = s.gaps_m.iter().find(|&&gap| s.d_2nd_m.iter().any(|d| d - gap <= 0.0)) {
            return usage(format!("sweep: gap {gap} m puts the target at or behind the BS"));
        }
        let b = &self.bench;
        if b.k_list.is_empty() || b.k_list.contains(&0) || b.n_instances == 0 || b.repeats == 0 {
            return usage("bench: k_list entries, n_instances and repeats must be positive".into());
        }
        let f = &self.fl;
        if f.n_seeds == 0 || f.policies.is_empty() {
            return usage("fl: n_seeds and policies must be nonempty".into());
        }
        if f.d_2nd_m - f.gap_m <= 0.0 {
            return usage(format!("fl: gap {} m puts the target at or behind the BS", f.gap_m));
        }
        for p in &f.policies {
            p.parse::<sigiscc::FlPolicy>().map_err(|_| CliError::Usage(format!("fl: unknown policy `{p}`")))?;
        }
        f.train.validate().map_err(CliError::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = Config::default();
        assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let cfg = Config::from_toml("[sweep]\nn_fading = 3\n[radio.sensing]\nrcs = 1.0\n").unwrap();
        assert_eq!(cfg.sweep.n_fading, 3);
        assert_eq!(cfg.sweep.d_2nd_m, SweepSection::default().d_2nd_m);
        assert_eq!(cfg.radio.sensing.rcs, 1.0);
        assert_eq!(cfg.radio.sensing.n_rx_antennas, 4);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = Config::from_toml("[gap]\nn_layouts = 3\nn_fadng = 2\n").unwrap_err().to_string();
        assert!(err.contains("n_fadng") && err.contains("line 3"), "{err}");
        let err = Config::from_toml("[sweep]\nn_fading = 0\n").unwrap_err().to_string();
        assert!(err.contains("n_fading"), "{err}");
        assert!(Config::preset("nonexistent").is_err());
    }
}
