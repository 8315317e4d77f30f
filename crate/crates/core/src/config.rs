//! One TOML file for everything tunable: detector, motion history,
//! presence, the live service and the simulator.
//!
//! ```toml
//! [detector]
//! p_fall_threshold = 0.97
//!
//! [sim]
//! sigma_noise = 0.3
//! ```
//!
//! Missing tables and keys keep their defaults; unknown keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detector::DetectorConfig;
use crate::motion::{MhiParams, PresenceParams};
use crate::stream::PipelineConfig;
use crate::thermal::{BlurParams, SimParams, DEFAULT_TRUNCATION};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamSettings {
    /// Room temperature, °C; estimated per frame when unset.
    pub ambient: Option<f64>,
    pub mask_margin: usize,
    pub queue_capacity: usize,
    pub reorder_window: usize,
    pub shutdown_deadline_ms: u64,
}

impl Default for StreamSettings {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            ambient: p.ambient,
            mask_margin: p.mask_margin,
            queue_capacity: p.queue_capacity,
            reorder_window: p.reorder_window,
            shutdown_deadline_ms: p.shutdown_deadline_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSettings {
    pub seed: u64,
    /// Sensor response time, seconds.
    pub tau: f64,
    /// Additive noise std, °C.
    pub sigma_noise: f64,
    pub psf_truncation: f64,
    pub sensor_id: u16,
    pub first_seq_no: u32,
    /// Render threads; all available cores when unset.
    pub threads: Option<usize>,
}

impl Default for SimSettings {
    fn default() -> Self {
        let b = BlurParams::default();
        Self {
            seed: 0,
            tau: b.tau,
            sigma_noise: b.sigma_noise,
            psf_truncation: DEFAULT_TRUNCATION,
            sensor_id: 1,
            first_seq_no: 0,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub detector: DetectorConfig,
    pub mhi: MhiParams,
    pub presence: PresenceParams,
    pub stream: StreamSettings,
    pub sim: SimSettings,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.detector.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.mhi.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.sim;
        if !(s.tau > 0.0 && s.tau.is_finite()) {
            return Err(ConfigError::Invalid(format!("sim.tau must be positive, got {}", s.tau)));
        }
        if !(s.sigma_noise >= 0.0 && s.sigma_noise.is_finite()) {
            return Err(ConfigError::Invalid(format!("sim.sigma_noise must be non-negative, got {}", s.sigma_noise)));
        }
        if !(s.psf_truncation > 0.0 && s.psf_truncation.is_finite()) {
            return Err(ConfigError::Invalid(format!("sim.psf_truncation must be positive, got {}", s.psf_truncation)));
        }
        if self.stream.queue_capacity == 0 {
            return Err(ConfigError::Invalid("stream.queue_capacity must be at least 1".into()));
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            detector: self.detector,
            mhi: self.mhi,
            presence: self.presence,
            ambient: self.stream.ambient,
            mask_margin: self.stream.mask_margin,
            queue_capacity: self.stream.queue_capacity,
            reorder_window: self.stream.reorder_window,
            shutdown_deadline_ms: self.stream.shutdown_deadline_ms,
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            blur: BlurParams { tau: self.sim.tau, sigma_noise: self.sim.sigma_noise, truncation: self.sim.psf_truncation },
            seed: self.sim.seed,
            contact_epsilon: self.detector.contact_epsilon,
            segmentation: self.detector.segmentation(),
            first_seq_no: self.sim.first_seq_no,
            threads: self.sim.threads,
            ..SimParams::default()
        }
    }
}
