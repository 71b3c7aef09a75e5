use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Sinusoid,
    Trapezoid,
    StopAndGo,
}

/// Periodic reference speed for a scripted vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderProfile {
    pub kind: ProfileKind,
    /// m/s
    pub v_min: f64,
    /// m/s
    pub v_max: f64,
    /// s
    pub period: f64,
    /// Time after which the profile holds its last value. `None` repeats forever.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Tracking acceleration limit, m/s².
    #[serde(default = "default_track_accel")]
    pub a_max: f64,
    /// Tracking deceleration limit, m/s².
    #[serde(default = "default_track_decel")]
    pub b_max: f64,
}

fn default_track_accel() -> f64 {
    1.5
}

fn default_track_decel() -> f64 {
    3.0
}

impl LeaderProfile {
    pub fn new(kind: ProfileKind, v_min: f64, v_max: f64, period: f64) -> Self {
        Self {
            kind,
            v_min,
            v_max,
            period,
            duration: None,
            a_max: default_track_accel(),
            b_max: default_track_decel(),
        }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(ProfileKind::Sinusoid, v, v, 60.0)
    }

    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        if !(self.v_min >= 0.0 && self.v_min <= self.v_max) {
            return Err(ConfigError::invalid(key, "need 0 <= v_min <= v_max"));
        }
        if !(self.period > 0.0) {
            return Err(ConfigError::invalid(format!("{key}.period"), "must be > 0"));
        }
        if let Some(d) = self.duration {
            if !(d >= 0.0) {
                return Err(ConfigError::invalid(
                    format!("{key}.duration"),
                    "must be >= 0",
                ));
            }
        }
        if !(self.a_max > 0.0 && self.b_max > 0.0) {
            return Err(ConfigError::invalid(key, "a_max and b_max must be > 0"));
        }
        Ok(())
    }

    /// Acceleration that tracks the profile one step ahead.
    pub fn tracking_accel(&self, v: f64, t: f64, dt: f64) -> f64 {
        ((leader_speed(self, t + dt) - v) / dt).clamp(-self.b_max, self.a_max)
    }
}

/// Reference speed at time `t`.
///
/// Phases of the non-sinusoidal profiles (fractions of the period):
/// trapezoid ramps up over the first quarter, holds `v_max`, ramps down and
/// holds `v_min`; stop-and-go dwells at `v_min` for the first quarter, rises
/// along a raised cosine, holds `v_max` and falls back.
pub fn leader_speed(p: &LeaderProfile, t: f64) -> f64 {
    let t = match p.duration {
        Some(d) => t.min(d),
        None => t,
    };
    let (lo, hi) = (p.v_min, p.v_max);
    let phase = (t / p.period).rem_euclid(1.0);
    let v = match p.kind {
        ProfileKind::Sinusoid => {
            0.5 * (lo + hi) + 0.5 * (hi - lo) * (2.0 * PI * t / p.period).sin()
        }
        ProfileKind::Trapezoid => match phase {
            x if x < 0.25 => lo + (hi - lo) * x / 0.25,
            x if x < 0.5 => hi,
            x if x < 0.75 => hi - (hi - lo) * (x - 0.5) / 0.25,
            _ => lo,
        },
        ProfileKind::StopAndGo => {
            let raised = |x: f64| 0.5 * (1.0 - (PI * x).cos());
            match phase {
                x if x < 0.25 => lo,
                x if x < 0.5 => lo + (hi - lo) * raised((x - 0.25) / 0.25),
                x if x < 0.75 => hi,
                x => hi - (hi - lo) * raised((x - 0.75) / 0.25),
            }
        }
    };
    v.clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn flat_sinusoid_is_constant() {
        let p = LeaderProfile::constant(10.0);
        for k in 0..100 {
            assert_eq!(leader_speed(&p, k as f64 * 0.7), 10.0);
        }
    }

    #[test]
    fn sinusoid_peaks_at_quarter_period() {
        let p = LeaderProfile::new(ProfileKind::Sinusoid, 30.0 / 3.6, 45.0 / 3.6, 60.0);
        assert_abs_diff_eq!(leader_speed(&p, 15.0), 12.5, epsilon = 1e-12);
        assert_abs_diff_eq!(leader_speed(&p, 45.0), 30.0 / 3.6, epsilon = 1e-12);
    }

    #[test]
    fn trapezoid_starts_at_minimum() {
        let p = LeaderProfile::new(ProfileKind::Trapezoid, 2.0, 8.0, 40.0);
        assert_eq!(leader_speed(&p, 0.0), 2.0);
        assert_eq!(leader_speed(&p, 15.0), 8.0);
        assert_abs_diff_eq!(leader_speed(&p, 5.0), 5.0, epsilon = 1e-12);
        assert_eq!(leader_speed(&p, 35.0), 2.0);
    }

    #[test]
    fn stop_and_go_dwells_at_zero() {
        let p = LeaderProfile::new(ProfileKind::StopAndGo, 0.0, 50.0 / 3.6, 60.0);
        assert_eq!(leader_speed(&p, 0.0), 0.0);
        assert_eq!(leader_speed(&p, 14.9), 0.0);
        assert_eq!(leader_speed(&p, 60.0 + 5.0), 0.0);
        assert_abs_diff_eq!(leader_speed(&p, 40.0), 50.0 / 3.6, epsilon = 1e-12);
        assert_abs_diff_eq!(leader_speed(&p, 22.5), 25.0 / 3.6, epsilon = 1e-12);
    }

    #[test]
    fn duration_freezes_profile() {
        let mut p = LeaderProfile::new(ProfileKind::Trapezoid, 2.0, 8.0, 40.0);
        p.duration = Some(12.0);
        assert_eq!(leader_speed(&p, 100.0), leader_speed(&p, 12.0));
    }

    #[test]
    fn profiles_stay_in_range() {
        for kind in [
            ProfileKind::Sinusoid,
            ProfileKind::Trapezoid,
            ProfileKind::StopAndGo,
        ] {
            let p = LeaderProfile::new(kind, 3.0, 9.0, 37.0);
            for k in 0..1000 {
                let v = leader_speed(&p, k as f64 * 0.173);
                assert!((3.0..=9.0).contains(&v), "{kind:?} {v}");
            }
        }
    }
}
