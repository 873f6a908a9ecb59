//! Run configuration: `key = value` lines grouped in `[section]`s (TOML
//! syntax). Every key is optional; unknown keys are errors.
//!
//! ```text
//! seed = 7
//! n_exc = 100
//! mode = "reference"
//!
//! [stdp]
//! eta = 0.02
//!
//! [device.drive]
//! current_density = 6e10
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::energy::DEFAULT_BASELINE_PER_SPIKE_FJ;
use crate::error::{Error, Result};
use crate::snn::{DeviceConfig, Dynamics, LifParams, Mode, NetworkParams, PoissonEncoderParams, StdpParams, ThetaParams};
use crate::train::{PresentParams, TrainParams};

pub const ENV_SEED: &str = "SKY_SEED";
pub const ENV_DATA_DIR: &str = "SKY_DATA_DIR";

/// Parameters of the fixed (non-learned) network connections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub exc_to_inh_weight: f64,
    pub inh_to_exc_weight: f64,
    pub dynamics: Dynamics,
    pub unit_epsp_mv: Option<f64>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let p = NetworkParams::default();
        NetworkSection {
            exc_to_inh_weight: p.exc_to_inh_weight,
            inh_to_exc_weight: p.inh_to_exc_weight,
            dynamics: p.dynamics,
            unit_epsp_mv: p.unit_epsp_mv,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub init_max_weight: f64,
    pub norm_target: f64,
    /// Write a checkpoint every this many samples; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub min_exc_spikes: u32,
    pub rate_boost: f64,
    pub max_boosts: u32,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainParams::default();
        let p = PresentParams::default();
        TrainSection {
            init_max_weight: t.init_max_weight,
            norm_target: t.norm_target,
            checkpoint_every: 0,
            min_exc_spikes: p.min_exc_spikes,
            rate_boost: p.rate_boost,
            max_boosts: p.max_boosts,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub baseline_per_spike_fj: f64,
    /// Images run through the device model by `energy-report`.
    pub n_images: usize,
}

impl Default for EnergySection {
    fn default() -> Self {
        EnergySection {
            baseline_per_spike_fj: DEFAULT_BASELINE_PER_SPIKE_FJ,
            n_images: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub n_exc: usize,
    pub dt_ms: f64,
    pub presentation_ms: f64,
    pub rest_ms: f64,
    /// Input rate in Hz per intensity unit.
    pub rate_scale: f64,
    pub mode: Mode,
    pub n_train: usize,
    pub n_label: usize,
    pub n_test: usize,
    pub binarize_threshold: f64,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub exc: LifParams,
    pub inh: LifParams,
    pub network: NetworkSection,
    pub theta: ThetaParams,
    pub stdp: StdpParams,
    pub train: TrainSection,
    pub device: DeviceConfig,
    pub energy: EnergySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let enc = PoissonEncoderParams::default();
        RunConfig {
            seed: 1,
            n_exc: 100,
            dt_ms: 0.5,
            presentation_ms: enc.presentation_ms,
            rest_ms: enc.rest_ms,
            rate_scale: enc.rate_scale,
            mode: Mode::Reference,
            n_train: 10_000,
            n_label: 10_000,
            n_test: 2_000,
            binarize_threshold: 0.5,
            data_dir: PathBuf::from("data/mnist"),
            out_dir: PathBuf::from("out"),
            exc: LifParams::excitatory(),
            inh: LifParams::inhibitory(),
            network: NetworkSection::default(),
            theta: ThetaParams::default(),
            stdp: StdpParams::default(),
            train: TrainSection::default(),
            device: DeviceConfig::default(),
            energy: EnergySection::default(),
        }
    }
}

fn config_err(key: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

/// Re-labels a parameter error with the section it came from.
fn in_section(section: &str, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::Parameter { name, reason } => config_err(&format!("{section}.{name}"), reason),
        other => other,
    })
}

impl RunConfig {
    /// Parses and validates config text.
    pub fn from_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| config_err("<syntax>", e.message()))?;
        if let Some(toml::Value::Integer(s)) = table.get("seed") {
            if *s < 0 {
                return Err(config_err("seed", format!("must be non-negative, got {s}")));
            }
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| {
            let msg = e.message().to_string();
            let key = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.starts_with("unknown field"))
                .unwrap_or("<value>")
                .to_string();
            config_err(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_exc == 0 {
            return Err(config_err("n_exc", "must be >= 1"));
        }
        if !(0.0 < self.binarize_threshold && self.binarize_threshold < 1.0) {
            return Err(config_err("binarize_threshold", "must lie in (0, 1)"));
        }
        in_section("network", self.network_params().validate())?;
        in_section("stdp", self.train_params().validate())?;
        in_section("encoder", self.present_params().validate())?;
        in_section("device", self.device.validate())?;
        if !(self.energy.baseline_per_spike_fj > 0.0) {
            return Err(config_err("energy.baseline_per_spike_fj", "must be > 0"));
        }
        if self.mode == Mode::Skyrmion {
            let d = &self.device.drive;
            if d.current_density < d.depin_density {
                return Err(config_err(
                    "device.drive.current_density",
                    format!(
                        "{:e} A/m^2 is below the depinning density {:e} A/m^2; skyrmions would not move",
                        d.current_density, d.depin_density
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Applies `SKY_SEED` and `SKY_DATA_DIR` from `lookup` (normally
    /// `std::env::var`).
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(s) = lookup(ENV_SEED) {
            self.seed = s
                .trim()
                .parse::<i64>()
                .ok()
                .and_then(|v| u64::try_from(v).ok())
                .ok_or_else(|| config_err(ENV_SEED, format!("`{s}` is not a non-negative 63-bit integer")))?;
        }
        if let Some(d) = lookup(ENV_DATA_DIR) {
            self.data_dir = PathBuf::from(d);
        }
        Ok(())
    }

    /// Resolved configuration in the same format, loadable by [`Self::from_str`].
    pub fn echo(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err("<echo>", e))
    }

    pub fn network_params(&self) -> NetworkParams {
        NetworkParams {
            exc: self.exc,
            inh: self.inh,
            exc_to_inh_weight: self.network.exc_to_inh_weight,
            inh_to_exc_weight: self.network.inh_to_exc_weight,
            dynamics: self.network.dynamics,
            unit_epsp_mv: self.network.unit_epsp_mv,
        }
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            stdp: self.stdp,
            theta: self.theta,
            init_max_weight: self.train.init_max_weight,
            norm_target: self.train.norm_target,
        }
    }

    pub fn present_params(&self) -> PresentParams {
        PresentParams {
            dt_ms: self.dt_ms,
            encoder: PoissonEncoderParams {
                rate_scale: self.rate_scale,
                presentation_ms: self.presentation_ms,
                rest_ms: self.rest_ms,
            },
            min_exc_spikes: self.train.min_exc_spikes,
            rate_boost: self.train.rate_boost,
            max_boosts: self.train.max_boosts,
        }
    }
}
