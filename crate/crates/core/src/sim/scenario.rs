use serde::{Deserialize, Serialize};

use super::controller::ControllerSpec;
use super::profile::LeaderProfile;
use super::signal::Signal;
use super::ConfigError;
use crate::trajectory::DEFAULT_VEHICLE_LENGTH;

/// Stretch of road with a speed limit, e.g. a sharp curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedCap {
    /// m
    pub from: f64,
    /// m
    pub to: f64,
    /// m/s
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub label: String,
    /// Loop length in m; 0 is an open road.
    #[serde(default)]
    pub loop_length: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of white acceleration noise on followers, m/s².
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default = "default_length")]
    pub vehicle_length: f64,
    /// Bumper-to-bumper start gaps, one per follower. Equilibrium gaps when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_gaps: Option<Vec<f64>>,
    pub leader: LeaderProfile,
    #[serde(default)]
    pub followers: Vec<ControllerSpec>,
    #[serde(default)]
    pub signals: Vec<Signal>,
    #[serde(default)]
    pub speed_caps: Vec<SpeedCap>,
}

fn default_dt() -> f64 {
    0.1
}

fn default_length() -> f64 {
    DEFAULT_VEHICLE_LENGTH
}

impl Scenario {
    pub fn new(leader: LeaderProfile, followers: Vec<ControllerSpec>, duration: f64) -> Self {
        Self {
            label: String::new(),
            loop_length: 0.0,
            dt: default_dt(),
            duration,
            seed: 0,
            noise_sd: 0.0,
            vehicle_length: default_length(),
            initial_gaps: None,
            leader,
            followers,
            signals: Vec::new(),
            speed_caps: Vec::new(),
        }
    }

    /// Parses and validates a scenario file.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) {
            return Err(ConfigError::invalid("dt", "must be > 0"));
        }
        if !(self.duration > 0.0) {
            return Err(ConfigError::invalid("duration", "must be > 0"));
        }
        if !(self.loop_length >= 0.0) {
            return Err(ConfigError::invalid("loop_length", "must be >= 0"));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(ConfigError::invalid("noise_sd", "must be >= 0"));
        }
        if !(self.vehicle_length > 0.0) {
            return Err(ConfigError::invalid("vehicle_length", "must be > 0"));
        }
        self.leader.validate("leader")?;
        for (i, f) in self.followers.iter().enumerate() {
            f.validate(&format!("followers[{i}]"))?;
        }
        if let Some(gaps) = &self.initial_gaps {
            if gaps.len() != self.followers.len() {
                return Err(ConfigError::invalid(
                    "initial_gaps",
                    format!(
                        "expected {} values, got {}",
                        self.followers.len(),
                        gaps.len()
                    ),
                ));
            }
            if let Some(i) = gaps.iter().position(|g| !(*g > 0.0)) {
                return Err(ConfigError::invalid(
                    format!("initial_gaps[{i}]"),
                    "must be > 0",
                ));
            }
        }
        for (i, s) in self.signals.iter().enumerate() {
            s.validate(&format!("signals[{i}]"))?;
            if self.loop_length > 0.0 && !(0.0..self.loop_length).contains(&s.position) {
                return Err(ConfigError::invalid(
                    format!("signals[{i}].position"),
                    "must lie in [0, loop_length)",
                ));
            }
        }
        for (i, c) in self.speed_caps.iter().enumerate() {
            let key = format!("speed_caps[{i}]");
            if !(c.from < c.to) {
                return Err(ConfigError::invalid(key, "need from < to"));
            }
            if !(c.cap >= 0.0) {
                return Err(ConfigError::invalid(format!("{key}.cap"), "must be >= 0"));
            }
            if self.loop_length > 0.0 && !(c.from >= 0.0 && c.to <= self.loop_length) {
                return Err(ConfigError::invalid(
                    key,
                    "must lie within [0, loop_length)",
                ));
            }
        }
        Ok(())
    }
}
