//! Deterministic fixed-step platoon simulation.

pub mod controller;
pub mod engine;
pub mod profile;
pub mod scenario;
pub mod signal;
pub mod templates;

use thiserror::Error;

pub use controller::{
    step_acc_ctg, step_dd_idm, step_di, AccParams, ControllerSpec, DiHistory, DiParams, IdmParams,
    ScriptedParams,
};
pub use engine::{simulate, simulate_behind, Event, EventKind, PlatoonRun};
pub use profile::{leader_speed, LeaderProfile, ProfileKind};
pub use scenario::{Scenario, SpeedCap};
pub use signal::{green_wave_speed, signal_state, speed_grid, Signal, SignalPlan, SignalState};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<toml::de::Error> for ConfigError {
    fn from(e: toml::de::Error) -> Self {
        Self::Parse(e.to_string())
    }
}
