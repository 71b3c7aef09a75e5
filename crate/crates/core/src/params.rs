//! Analysis parameter file: `[safety]`, `[energy]` and `[analysis]` tables,
//! each optional.

use serde::{Deserialize, Serialize};

use crate::metrics::{
    summarize_laps, summarize_run, EnergyParams, MetricsError, MetricsSummary, SafetyParams,
};
use crate::sim::ConfigError;
use crate::trajectory::{PlatoonLog, DEFAULT_VEHICLE_LENGTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Loop length used when none is given on the command line, m.
    pub loop_length: f64,
    pub vehicle_length: f64,
    /// One record per vehicle and complete lap instead of per vehicle.
    pub per_lap: bool,
    /// Restrict output to these vehicle ids. Empty keeps all.
    pub vehicles: Vec<String>,
    /// Restrict per-lap output to these laps. Empty keeps all.
    pub laps: Vec<i64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            loop_length: 0.0,
            vehicle_length: DEFAULT_VEHICLE_LENGTH,
            per_lap: false,
            vehicles: Vec::new(),
            laps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub safety: SafetyParams,
    pub energy: EnergyParams,
    pub analysis: AnalysisOptions,
}

impl Params {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let p: Params = toml::from_str(text)?;
        p.safety
            .validate()
            .map_err(|e| ConfigError::invalid("safety", e.to_string()))?;
        p.energy
            .validate()
            .map_err(|e| ConfigError::invalid("energy", e.to_string()))?;
        if !(p.analysis.vehicle_length > 0.0) {
            return Err(ConfigError::invalid(
                "analysis.vehicle_length",
                "must be > 0",
            ));
        }
        if !(p.analysis.loop_length >= 0.0) {
            return Err(ConfigError::invalid("analysis.loop_length", "must be >= 0"));
        }
        Ok(p)
    }

    /// Whole-run or per-lap summary, filtered to the configured vehicles and laps.
    pub fn summarize(&self, log: &PlatoonLog) -> Result<MetricsSummary, MetricsError> {
        let a = &self.analysis;
        let mut sum = if a.per_lap {
            summarize_laps(log, &self.safety, &self.energy)?
        } else {
            summarize_run(log, &self.safety, &self.energy)?
        };
        if !a.vehicles.is_empty() {
            sum.vehicles.retain(|m| a.vehicles.contains(&m.vehicle_id));
        }
        if a.per_lap && !a.laps.is_empty() {
            sum.vehicles
                .retain(|m| m.lap.is_some_and(|lap| a.laps.contains(&lap)));
        }
        Ok(sum)
    }
}
