//! Longitudinal controllers. Each maps (own speed, gap, leader state) to an
//! acceleration command.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::profile::LeaderProfile;
use super::ConfigError;
use crate::metrics::{d_safe, SafetyParams};

/// Intelligent driver model, the distance-keeping (DD) follower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    /// Desired speed, m/s.
    pub v0: f64,
    /// Desired time headway, s.
    pub t_headway: f64,
    /// Jam distance, m.
    pub s0: f64,
    pub a_max: f64,
    /// Comfortable deceleration, m/s².
    pub b: f64,
    /// Physical braking limit, m/s².
    pub b_max_phys: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 16.67,
            t_headway: 1.0,
            s0: 2.0,
            a_max: 1.0,
            b: 3.0,
            b_max_phys: 8.0,
        }
    }
}

impl IdmParams {
    /// Gap at which a vehicle cruising at `v` behind an equal-speed leader
    /// holds zero acceleration. `None` at or above the desired speed.
    pub fn equilibrium_gap(&self, v: f64) -> Option<f64> {
        let r = 1.0 - (v / self.v0).powi(4);
        (r > 0.0).then(|| (self.s0 + v * self.t_headway) / r.sqrt())
    }
}

/// Constant-time-gap adaptive cruise control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccParams {
    /// Time gap, s.
    pub h: f64,
    /// Standstill distance, m.
    pub d0: f64,
    /// Gap error gain, 1/s².
    pub k_g: f64,
    /// Speed error gain, 1/s.
    pub k_v: f64,
    pub a_max: f64,
    pub b_max_phys: f64,
}

impl Default for AccParams {
    fn default() -> Self {
        Self {
            h: 0.6,
            d0: 2.0,
            k_g: 0.5,
            k_v: 0.5,
            a_max: 1.5,
            b_max_phys: 8.0,
        }
    }
}

/// Inertia-keeping (DI) follower: cruises at the leader's trailing mean speed
/// and lets the gap absorb the leader's oscillation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiParams {
    /// Averaging window, s.
    pub window: f64,
    /// Speed tracking gain, 1/s.
    pub k_i: f64,
    /// Comfort acceleration bound, m/s².
    pub a_cap: f64,
    /// Relax gain of the safety override, 1/s.
    pub k_s: f64,
    /// Extra deceleration of the safety override, m/s².
    pub b_relax: f64,
    pub b_max_phys: f64,
    /// Envelope used for the safe-distance override.
    pub safety: SafetyParams,
}

impl Default for DiParams {
    fn default() -> Self {
        Self {
            window: 60.0,
            k_i: 0.4,
            a_cap: 0.3,
            k_s: 0.8,
            b_relax: 0.5,
            b_max_phys: 8.0,
            safety: SafetyParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedParams {
    pub profile: LeaderProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ControllerSpec {
    #[serde(rename = "DD_IDM")]
    DdIdm(IdmParams),
    #[serde(rename = "ACC_CTG")]
    AccCtg(AccParams),
    #[serde(rename = "DI_INERTIA")]
    DiInertia(DiParams),
    #[serde(rename = "SCRIPTED")]
    Scripted(ScriptedParams),
}

impl ControllerSpec {
    pub fn dd() -> Self {
        Self::DdIdm(IdmParams::default())
    }

    pub fn acc() -> Self {
        Self::AccCtg(AccParams::default())
    }

    pub fn di() -> Self {
        Self::DiInertia(DiParams::default())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::DdIdm(_) => "DD_IDM",
            Self::AccCtg(_) => "ACC_CTG",
            Self::DiInertia(_) => "DI_INERTIA",
            Self::Scripted(_) => "SCRIPTED",
        }
    }

    /// Steady-state gap behind a leader cruising at `v`, if the law has one.
    pub fn equilibrium_gap(&self, v: f64) -> Option<f64> {
        match self {
            Self::DdIdm(p) => p.equilibrium_gap(v),
            Self::AccCtg(p) => Some(p.d0 + p.h * v),
            Self::DiInertia(p) => Some(d_safe(v, v, &p.safety)),
            Self::Scripted(_) => None,
        }
    }

    pub fn braking_limit(&self) -> f64 {
        match self {
            Self::DdIdm(p) => p.b_max_phys,
            Self::AccCtg(p) => p.b_max_phys,
            Self::DiInertia(p) => p.b_max_phys,
            Self::Scripted(p) => p.profile.b_max,
        }
    }

    pub fn validate(&self, key: &str) -> Result<(), ConfigError> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(format!("{key}.{name}"), "must be > 0"))
            }
        };
        match self {
            Self::DdIdm(p) => {
                positive("v0", p.v0)?;
                positive("t_headway", p.t_headway)?;
                positive("s0", p.s0)?;
                positive("a_max", p.a_max)?;
                positive("b", p.b)?;
                positive("b_max_phys", p.b_max_phys)
            }
            Self::AccCtg(p) => {
                positive("h", p.h)?;
                positive("d0", p.d0)?;
                positive("k_g", p.k_g)?;
                positive("k_v", p.k_v)?;
                positive("a_max", p.a_max)?;
                positive("b_max_phys", p.b_max_phys)
            }
            Self::DiInertia(p) => {
                positive("window", p.window)?;
                positive("k_i", p.k_i)?;
                positive("a_cap", p.a_cap)?;
                positive("k_s", p.k_s)?;
                positive("b_relax", p.b_relax)?;
                positive("b_max_phys", p.b_max_phys)?;
                p.safety
                    .validate()
                    .map_err(|e| ConfigError::invalid(format!("{key}.safety"), e.to_string()))
            }
            Self::Scripted(p) => p.profile.validate(&format!("{key}.profile")),
        }
    }
}

/// IDM acceleration. A non-positive gap returns the emergency value.
pub fn step_dd_idm(v: f64, gap: f64, v_lead: f64, p: &IdmParams) -> f64 {
    if gap <= 0.0 {
        return -p.b_max_phys;
    }
    let dyn_term = v * p.t_headway + v * (v - v_lead) / (2.0 * (p.a_max * p.b).sqrt());
    let s_star = p.s0 + dyn_term.max(0.0);
    let a = p.a_max * (1.0 - (v / p.v0).powi(4) - (s_star / gap).powi(2));
    a.clamp(-p.b_max_phys, p.a_max)
}

/// Constant-time-gap ACC acceleration.
pub fn step_acc_ctg(v: f64, gap: f64, v_lead: f64, p: &AccParams) -> f64 {
    if gap <= 0.0 {
        return -p.b_max_phys;
    }
    let a = p.k_g * (gap - (p.d0 + p.h * v)) + p.k_v * (v_lead - v);
    a.clamp(-p.b_max_phys, p.a_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct DiSample {
    t: f64,
    v_lead: f64,
    gap: f64,
}

/// Trailing window of leader speeds and gaps seen by a DI follower.
#[derive(Debug, Clone, Default)]
pub struct DiHistory {
    window: f64,
    dt: f64,
    samples: VecDeque<DiSample>,
}

impl DiHistory {
    pub fn new(window: f64, dt: f64) -> Self {
        Self {
            window,
            dt,
            samples: VecDeque::new(),
        }
    }

    pub fn push(&mut self, t: f64, v_lead: f64, gap: f64) {
        self.samples.push_back(DiSample { t, v_lead, gap });
        // Keep samples strictly inside (t - window, t], with a little slack so
        // floating-point time stamps do not drop a sample early.
        let horizon = t - self.window + 0.5 * self.dt;
        while self.samples.front().is_some_and(|s| s.t < horizon) {
            self.samples.pop_front();
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Trailing mean of the leader speed.
    pub fn mean_lead_speed(&self) -> Option<f64> {
        (!self.is_empty())
            .then(|| self.samples.iter().map(|s| s.v_lead).sum::<f64>() / self.len() as f64)
    }
}

/// DI acceleration.
///
/// The target speed is the leader's trailing mean `u0`, nudged to pull the
/// mean gap toward a reference gap: the safe distance at `u0` against
/// the slowest leader speed in the window, plus the distance the leader ran
/// ahead of or fell behind `u0` over the window (the anti-jam buffer). The
/// nudge acts on the window time scale. Within one leader oscillation the
/// follower holds an almost uniform speed.
pub fn step_di(v: f64, gap: f64, v_lead: f64, history: &DiHistory, p: &DiParams) -> f64 {
    if gap <= 0.0 {
        return -p.b_max_phys;
    }
    let target = match history.mean_lead_speed() {
        None => v_lead,
        Some(u0) => {
            let mut cum = 0.0f64;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut min_lead = f64::INFINITY;
            let mut gap_sum = 0.0;
            for s in &history.samples {
                cum += (s.v_lead - u0) * history.dt;
                lo = lo.min(cum);
                hi = hi.max(cum);
                min_lead = min_lead.min(s.v_lead);
                gap_sum += s.gap;
            }
            let buffer = if history.len() > 1 { hi - lo } else { 0.0 };
            let gap_ref = d_safe(u0, min_lead, &p.safety) + buffer;
            let mean_gap = gap_sum / history.len() as f64;
            u0 + (mean_gap - gap_ref) / p.window
        }
    };
    let mut a = (p.k_i * (target - v)).clamp(-p.a_cap, p.a_cap);
    if gap < d_safe(v, v_lead, &p.safety) {
        a = a.min(p.k_s * (v_lead - v) - p.b_relax);
    }
    a.max(-p.b_max_phys)
}
