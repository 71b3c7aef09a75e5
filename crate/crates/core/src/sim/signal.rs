use serde::{Deserialize, Serialize};

use super::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signal {
    /// Stop line chainage, m.
    pub position: f64,
    /// s
    pub cycle: f64,
    /// Start of green within the cycle, s.
    pub green_start: f64,
    /// End of green within the cycle (exclusive), s.
    pub green_end: f64,
}

impl Signal {
    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if !(self.cycle > 0.0) {
            return Err(ConfigError::invalid(format!("{key}.cycle"), "must be > 0"));
        }
        if !(0.0 <= self.green_start
            && self.green_start < self.green_end
            && self.green_end <= self.cycle)
        {
            return Err(ConfigError::invalid(
                key,
                "need 0 <= green_start < green_end <= cycle",
            ));
        }
        if !self.position.is_finite() {
            return Err(ConfigError::invalid(
                format!("{key}.position"),
                "must be finite",
            ));
        }
        Ok(())
    }
}

/// Signal list as read from a signals file: `[[signals]]` tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalPlan {
    #[serde(default)]
    pub signals: Vec<Signal>,
}

impl SignalPlan {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let plan: SignalPlan = toml::from_str(text).map_err(ConfigError::from)?;
        for (i, s) in plan.signals.iter().enumerate() {
            s.validate(&format!("signals[{i}]"))?;
        }
        Ok(plan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalState {
    Green,
    Red,
}

/// Green on the half-open interval `[green_start, green_end)` of each cycle.
pub fn signal_state(signal: &Signal, t: f64) -> SignalState {
    let phase = t.rem_euclid(signal.cycle);
    if phase >= signal.green_start && phase < signal.green_end {
        SignalState::Green
    } else {
        SignalState::Red
    }
}

/// Candidate speeds `v_min + k·resolution` up to `v_max`.
pub fn speed_grid(v_min: f64, v_max: f64, resolution: f64) -> Vec<f64> {
    if !(resolution > 0.0) || v_max < v_min {
        return Vec::new();
    }
    let count = ((v_max - v_min) / resolution + 1e-9).floor() as usize;
    (0..=count).map(|k| v_min + k as f64 * resolution).collect()
}

/// Constant speeds from the grid that reach every downstream stop line while
/// it shows green.
pub fn green_wave_speed(
    signals: &[Signal],
    v_min: f64,
    v_max: f64,
    start_s: f64,
    start_t: f64,
    resolution: f64,
) -> Vec<f64> {
    if !(v_min > 0.0) {
        return Vec::new();
    }
    speed_grid(v_min, v_max, resolution)
        .into_iter()
        .filter(|&v| {
            signals.iter().filter(|s| s.position >= start_s).all(|s| {
                let arrival = start_t + (s.position - start_s) / v;
                signal_state(s, arrival) == SignalState::Green
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signal {
        Signal {
            position: 300.0,
            cycle: 60.0,
            green_start: 0.0,
            green_end: 30.0,
        }
    }

    #[test]
    fn state_is_half_open_and_periodic() {
        let s = sig();
        assert_eq!(signal_state(&s, 29.9), SignalState::Green);
        assert_eq!(signal_state(&s, 30.0), SignalState::Red);
        assert_eq!(signal_state(&s, 90.0), SignalState::Red);
        assert_eq!(signal_state(&s, 120.0), SignalState::Green);
    }

    #[test]
    fn single_signal_worked_case() {
        let speeds = green_wave_speed(&[sig()], 1.0, 30.0, 0.0, 0.0, 1.0);
        assert!(speeds.contains(&15.0));
        assert!(!speeds.contains(&8.0));
    }

    #[test]
    fn no_signals_admit_whole_grid() {
        let speeds = green_wave_speed(&[], 5.0, 15.0, 0.0, 0.0, 0.5);
        assert_eq!(speeds, speed_grid(5.0, 15.0, 0.5));
        assert_eq!(speeds.len(), 21);
    }

    #[test]
    fn signals_behind_start_are_ignored() {
        let s = Signal {
            position: -50.0,
            green_start: 59.0,
            green_end: 60.0,
            ..sig()
        };
        assert_eq!(
            green_wave_speed(&[s], 5.0, 6.0, 0.0, 0.0, 1.0),
            vec![5.0, 6.0]
        );
    }

    #[test]
    fn invalid_signal_names_key() {
        let err = SignalPlan::from_toml(
            "[[signals]]\nposition = 1.0\ncycle = 60.0\ngreen_start = 40.0\ngreen_end = 30.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("signals[0]"), "{err}");
        assert!(SignalPlan::from_toml("").unwrap().signals.is_empty());
    }
}
