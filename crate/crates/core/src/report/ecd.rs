use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::metrics::{d_safe, tractive_power_series, EnergyParams, SafetyParams};
use crate::sim::{simulate_behind, IdmParams};
use crate::trajectory::{derive_acceleration, gap_series, platoon_extension_series, PlatoonLog};

pub const SPEED: &str = "SPEED";
pub const FUEL: &str = "FUEL";
pub const DISTANCE: &str = "DISTANCE";
pub const SPACE_SAFETY: &str = "SPACE_SAFETY";
pub const SAFETY_FRONT: &str = "SAFETY_FRONT";
pub const SAFETY_REAR: &str = "SAFETY_REAR";

/// Panel names in grid order: top row left to right, then bottom row.
pub const PANELS: [&str; 6] = [
    SPEED,
    FUEL,
    DISTANCE,
    SPACE_SAFETY,
    SAFETY_FRONT,
    SAFETY_REAR,
];

#[derive(Debug, Clone, PartialEq)]
pub struct EcdOptions {
    /// Number of virtual followers behind the subject.
    pub n_virtual: usize,
    /// Headway of the ideal spacing line, s.
    pub ideal_headway: f64,
    pub virtual_params: IdmParams,
    /// Speed below which the subject counts as stopped, m/s.
    pub flat_speed: f64,
    /// Minimum stop length that makes a flat DISTANCE segment, s.
    pub flat_min_duration: f64,
}

impl Default for EcdOptions {
    fn default() -> Self {
        Self {
            n_virtual: 8,
            ideal_headway: 2.0,
            virtual_params: IdmParams::default(),
            flat_speed: 0.1,
            flat_min_duration: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub name: String,
    pub series: Vec<Series>,
}

/// Six-panel driving report for one vehicle. All series share `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdReport {
    pub subject_id: String,
    pub t: Vec<f64>,
    pub panels: Vec<Panel>,
    #[serde(default)]
    pub notices: Vec<String>,
}

/// A stretch where the subject stood still after it had started moving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatSegment {
    pub start: f64,
    pub end: f64,
}

fn series(name: &str, unit: &str, values: Vec<f64>) -> Series {
    Series {
        name: name.into(),
        unit: unit.into(),
        values,
    }
}

fn pop_sd(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

impl EcdReport {
    pub fn panel(&self, name: &str) -> Option<&Panel> {
        self.panels.iter().find(|p| p.name == name)
    }

    pub fn series(&self, panel: &str, series: &str) -> Option<&[f64]> {
        self.panel(panel)?
            .series
            .iter()
            .find(|s| s.name == series)
            .map(|s| s.values.as_slice())
    }

    /// Runs of near-zero speed lasting at least `min_duration`, ignoring any
    /// standstill before the subject first moves.
    pub fn flat_segments(&self, flat_speed: f64, min_duration: f64) -> Vec<FlatSegment> {
        let Some(v) = self.series(SPEED, "speed") else {
            return Vec::new();
        };
        let Some(first) = v.iter().position(|&x| x >= flat_speed) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut start: Option<usize> = None;
        for i in first..=v.len() {
            let stopped = i < v.len() && v[i] < flat_speed;
            match (stopped, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    let end = i - 1;
                    if self.t[end] - self.t[s] >= min_duration {
                        out.push(FlatSegment {
                            start: self.t[s],
                            end: self.t[end],
                        });
                    }
                    start = None;
                }
                _ => {}
            }
        }
        out
    }

    /// Samples where the front gap is below the safe-distance threshold.
    pub fn front_violations(&self) -> Option<usize> {
        let gap = self.series(SAFETY_FRONT, "gap")?;
        let thr = self.series(SAFETY_FRONT, "threshold")?;
        Some(gap.iter().zip(thr).filter(|(g, t)| g < t).count())
    }

    /// Population SD of the virtual-follower platoon extension.
    pub fn rear_sd(&self) -> Option<f64> {
        self.series(SAFETY_REAR, "extension").map(pop_sd)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Builds the report for `subject` from a recorded platoon.
pub fn ecd(
    log: &PlatoonLog,
    subject: &str,
    sp: &SafetyParams,
    ep: &EnergyParams,
    opts: &EcdOptions,
) -> Result<EcdReport, ReportError> {
    sp.validate()?;
    ep.validate()?;
    let index = log
        .position_of(subject)
        .ok_or_else(|| ReportError::UnknownVehicle(subject.to_string()))?;
    let traj = &log.vehicles()[index];
    if traj.len() < 2 {
        return Err(ReportError::Empty);
    }
    let traj = derive_acceleration(traj)?;
    let t = traj.times();
    let v = traj.speeds();
    let dt = traj.dt();
    let mut notices = Vec::new();

    let mut distance = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    distance.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * dt;
        distance.push(acc);
    }

    let mut panels = vec![
        Panel {
            name: SPEED.into(),
            series: vec![series("speed", "m/s", v.clone())],
        },
        Panel {
            name: FUEL.into(),
            series: vec![series("power", "kW", tractive_power_series(&traj, ep)?)],
        },
        Panel {
            name: DISTANCE.into(),
            series: vec![series("distance", "m", distance)],
        },
    ];

    if index == 0 {
        notices.push(format!(
            "{subject} leads the platoon: {SPACE_SAFETY} and {SAFETY_FRONT} omitted"
        ));
    } else {
        let leader = &log.vehicles()[index - 1];
        let gaps = gap_series(&traj, leader, log.loop_length).gap;
        let ideal = v.iter().map(|x| opts.ideal_headway * x).collect();
        let threshold = v
            .iter()
            .zip(leader.samples())
            .map(|(&x, l)| d_safe(x, l.v, sp))
            .collect();
        panels.push(Panel {
            name: SPACE_SAFETY.into(),
            series: vec![
                series("ideal", "m", ideal),
                series("actual", "m", gaps.clone()),
            ],
        });
        panels.push(Panel {
            name: SAFETY_FRONT.into(),
            series: vec![
                series("gap", "m", gaps),
                series("threshold", "m", threshold),
            ],
        });
    }

    let rear = if opts.n_virtual == 0 {
        Vec::new()
    } else {
        let tail = simulate_behind(
            &traj,
            opts.n_virtual,
            &opts.virtual_params,
            traj.vehicle_length(),
        );
        vec![series("extension", "m", platoon_extension_series(&tail)?)]
    };
    panels.push(Panel {
        name: SAFETY_REAR.into(),
        series: rear,
    });

    Ok(EcdReport {
        subject_id: subject.to_string(),
        t,
        panels,
        notices,
    })
}
