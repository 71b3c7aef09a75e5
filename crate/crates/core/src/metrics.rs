//! Surrogate safety measures, tractive energy and per-run summaries.
//!
//! Within-run variability uses the population standard deviation; sample
//! standard deviations are reserved for across-observation statistics in
//! [`crate::stats`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{
    derive_acceleration, gap_series, lap_segments, platoon_extension_series, PlatoonLog,
    TrajectoryError, VehicleTrajectory,
};

/// Time gap reported for a (near) standstill follower.
pub const TIME_GAP_CAP: f64 = 1000.0;
/// Below this speed the follower counts as standing.
pub const STANDSTILL_SPEED: f64 = 0.1;
/// Rotating-mass factor applied to the inertial term.
pub const ROTATING_MASS_FACTOR: f64 = 1.03;
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("trajectory covers zero distance; energy per distance is undefined")]
    ZeroDistance,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Envelope parameters of the proactive fuzzy safety metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyParams {
    /// Ego reaction time, s.
    pub tau: f64,
    /// Comfortable ego deceleration, m/s².
    pub b_ego_comf: f64,
    /// Maximum ego deceleration, m/s².
    pub b_ego_max: f64,
    /// Maximum deceleration assumed for the lead vehicle, m/s².
    pub b_lead_max: f64,
    /// Safety margin, m.
    pub d1: f64,
}

impl Default for SafetyParams {
    fn default() -> Self {
        Self {
            tau: 0.75,
            b_ego_comf: 3.0,
            b_ego_max: 6.0,
            b_lead_max: 6.0,
            d1: 2.0,
        }
    }
}

impl SafetyParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let ok = self.b_ego_comf > 0.0
            && self.b_ego_comf < self.b_ego_max
            && self.b_lead_max > 0.0
            && self.tau >= 0.0
            && self.d1 >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(MetricsError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// Road-grade profile, piecewise linear in position. Empty means flat.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradeProfile(pub Vec<(f64, f64)>);

impl GradeProfile {
    /// Grade in radians at chainage `s`.
    pub fn at(&self, s: f64) -> f64 {
        let pts = &self.0;
        match pts.len() {
            0 => 0.0,
            1 => pts[0].1,
            _ => {
                if s <= pts[0].0 {
                    return pts[0].1;
                }
                for w in pts.windows(2) {
                    if s <= w[1].0 {
                        let f = (s - w[0].0) / (w[1].0 - w[0].0);
                        return w[0].1 + f * (w[1].1 - w[0].1);
                    }
                }
                pts[pts.len() - 1].1
            }
        }
    }
}

/// Road-load coefficients and vehicle mass for tractive power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    /// kg
    pub mass: f64,
    /// N
    pub f0: f64,
    /// N·s/m
    pub f1: f64,
    /// N·s²/m²
    pub f2: f64,
    pub grade: GradeProfile,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            mass: 1360.0,
            f0: 112.1,
            f1: 0.655,
            f2: 0.03181,
            grade: GradeProfile::default(),
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.mass > 0.0 && self.f0 >= 0.0 && self.f1 >= 0.0 && self.f2 >= 0.0 {
            Ok(())
        } else {
            Err(MetricsError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// Gap divided by follower speed, capped at [`TIME_GAP_CAP`] at standstill.
pub fn time_gap(gap: f64, v_follower: f64) -> f64 {
    if v_follower < STANDSTILL_SPEED {
        TIME_GAP_CAP
    } else {
        gap / v_follower
    }
}

/// Time to collision, `None` when the follower is not closing in.
pub fn ttc(gap: f64, v_follower: f64, v_lead: f64) -> Option<f64> {
    (v_follower > v_lead).then(|| gap / (v_follower - v_lead))
}

pub fn d_safe(u_ego: f64, u_lead: f64, p: &SafetyParams) -> f64 {
    u_ego * p.tau + u_ego * u_ego / (2.0 * p.b_ego_comf) - u_lead * u_lead / (2.0 * p.b_lead_max)
        + p.d1
}

pub fn d_unsafe(u_ego: f64, u_lead: f64, p: &SafetyParams) -> f64 {
    u_ego * p.tau + u_ego * u_ego / (2.0 * p.b_ego_max) - u_lead * u_lead / (2.0 * p.b_lead_max)
}

/// Tailgating risk in `[0, 1]`: 1 inside the unsafe envelope, 0 beyond the
/// safe one, linear in between. Contact (`dist_lon ≤ d1`) counts as 1.
pub fn pfs(dist_lon: f64, u_ego: f64, u_lead: f64, p: &SafetyParams) -> f64 {
    let x = dist_lon - p.d1;
    let unsafe_ = d_unsafe(u_ego, u_lead, p);
    let safe = d_safe(u_ego, u_lead, p);
    if x <= 0.0 || x <= unsafe_ {
        1.0
    } else if x >= safe {
        0.0
    } else {
        // d_unsafe < x < d_safe implies d_unsafe < d_safe here.
        ((dist_lon - safe - p.d1) / (unsafe_ - safe)).clamp(0.0, 1.0)
    }
}

/// Non-negative tractive power in kW; braking phases contribute nothing.
pub fn tractive_power(v: f64, a: f64, theta: f64, p: &EnergyParams) -> f64 {
    let force = p.f0
        + p.f1 * v
        + p.f2 * v * v
        + ROTATING_MASS_FACTOR * p.mass * a
        + p.mass * GRAVITY * theta.sin();
    (force * v * 1e-3).max(0.0)
}

/// Instantaneous tractive power series (kW) for a trajectory. Derives
/// accelerations when the trajectory does not carry them.
pub fn tractive_power_series(
    traj: &VehicleTrajectory,
    p: &EnergyParams,
) -> Result<Vec<f64>, MetricsError> {
    let accel = match traj.accelerations() {
        Some(a) => a,
        None if traj.len() < 2 => vec![0.0; traj.len()],
        None => derive_acceleration(traj)?.accelerations().expect("derived"),
    };
    Ok(traj
        .samples()
        .iter()
        .zip(accel)
        .map(|(s, a)| tractive_power(s.v, a, p.grade.at(s.s), p))
        .collect())
}

fn trapezoid(y: &[f64], dt: f64) -> f64 {
    y.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
}

/// Tractive energy intensity in kWh/100km.
pub fn tractive_energy(traj: &VehicleTrajectory, p: &EnergyParams) -> Result<f64, MetricsError> {
    let distance = trapezoid(&traj.speeds(), traj.dt());
    if !(distance > 0.0) {
        return Err(MetricsError::ZeroDistance);
    }
    let power = tractive_power_series(traj, p)?;
    Ok(trapezoid(&power, traj.dt()) / (0.036 * distance))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
fn pop_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

/// One summary record: a whole vehicle trajectory or one of its laps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VehicleMetrics {
    pub vehicle_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lap: Option<i64>,
    pub speed_mean: f64,
    pub speed_sd: f64,
    pub gap_mean: Option<f64>,
    pub gap_sd: Option<f64>,
    pub timegap_mean: Option<f64>,
    pub timegap_sd: Option<f64>,
    pub min_ttc: Option<f64>,
    pub pfs_mean: Option<f64>,
    pub energy: Option<f64>,
    pub extension_mean: Option<f64>,
    pub extension_sd: Option<f64>,
    #[serde(default)]
    pub overlap_samples: usize,
}

/// Names accepted by [`VehicleMetrics::get`], in report order.
pub const VARIABLES: [&str; 11] = [
    "speed_mean",
    "speed_sd",
    "gap_mean",
    "gap_sd",
    "timegap_mean",
    "timegap_sd",
    "min_ttc",
    "pfs_mean",
    "energy",
    "extension_mean",
    "extension_sd",
];

impl VehicleMetrics {
    pub fn get(&self, variable: &str) -> Option<f64> {
        match variable {
            "speed_mean" => Some(self.speed_mean),
            "speed_sd" => Some(self.speed_sd),
            "gap_mean" => self.gap_mean,
            "gap_sd" => self.gap_sd,
            "timegap_mean" => self.timegap_mean,
            "timegap_sd" => self.timegap_sd,
            "min_ttc" => self.min_ttc,
            "pfs_mean" => self.pfs_mean,
            "energy" => self.energy,
            "extension_mean" => self.extension_mean,
            "extension_sd" => self.extension_sd,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub label: String,
    /// Always `"population"`: within-run spreads divide by n.
    pub sd_convention: String,
    pub vehicles: Vec<VehicleMetrics>,
    pub extension_mean: Option<f64>,
    pub extension_sd: Option<f64>,
    #[serde(default)]
    pub notices: Vec<String>,
}

impl MetricsSummary {
    /// Copy with every number rounded to six significant digits.
    pub fn rounded(&self) -> Self {
        let r = |x: f64| crate::fmt::round_sig(x, 6);
        let o = |x: Option<f64>| x.map(r);
        let mut out = self.clone();
        for m in &mut out.vehicles {
            m.speed_mean = r(m.speed_mean);
            m.speed_sd = r(m.speed_sd);
            m.gap_mean = o(m.gap_mean);
            m.gap_sd = o(m.gap_sd);
            m.timegap_mean = o(m.timegap_mean);
            m.timegap_sd = o(m.timegap_sd);
            m.min_ttc = o(m.min_ttc);
            m.pfs_mean = o(m.pfs_mean);
            m.energy = o(m.energy);
            m.extension_mean = o(m.extension_mean);
            m.extension_sd = o(m.extension_sd);
        }
        out.extension_mean = o(out.extension_mean);
        out.extension_sd = o(out.extension_sd);
        out
    }

    pub fn vehicle(&self, id: &str) -> Option<&VehicleMetrics> {
        self.vehicles.iter().find(|v| v.vehicle_id == id)
    }

    /// One CSV row per record with a shared header.
    pub fn to_csv(&self) -> String {
        records_to_csv(&self.vehicles)
    }
}

pub fn records_to_csv(records: &[VehicleMetrics]) -> String {
    use crate::fmt::sig6;
    let opt = |x: Option<f64>| x.map(sig6).unwrap_or_default();
    let mut out = String::from("vehicle_id,lap,");
    out.push_str(&VARIABLES.join(","));
    out.push('\n');
    for r in records {
        out.push_str(&r.vehicle_id);
        out.push(',');
        out.push_str(&r.lap.map(|l| l.to_string()).unwrap_or_default());
        for var in VARIABLES {
            out.push(',');
            out.push_str(&opt(r.get(var)));
        }
        out.push('\n');
    }
    out
}

/// Metrics of vehicle `index` restricted to the sample indices in `range`.
fn vehicle_metrics(
    log: &PlatoonLog,
    index: usize,
    range: std::ops::Range<usize>,
    extension: Option<&[f64]>,
    sp: &SafetyParams,
    ep: &EnergyParams,
    notices: &mut Vec<String>,
) -> Result<VehicleMetrics, MetricsError> {
    let traj = &log.vehicles()[index];
    let part = traj.slice(range.clone())?;
    let speeds = part.speeds();
    let mut m = VehicleMetrics {
        vehicle_id: traj.vehicle_id().to_string(),
        lap: None,
        speed_mean: mean(&speeds),
        speed_sd: pop_sd(&speeds),
        gap_mean: None,
        gap_sd: None,
        timegap_mean: None,
        timegap_sd: None,
        min_ttc: None,
        pfs_mean: None,
        energy: None,
        extension_mean: None,
        extension_sd: None,
        overlap_samples: 0,
    };
    match tractive_energy(&part, ep) {
        Ok(e) => m.energy = Some(e),
        Err(e) => notices.push(format!("{}: energy unavailable: {e}", traj.vehicle_id())),
    }
    if let Some(ext) = extension {
        let ext = &ext[range.clone()];
        m.extension_mean = Some(mean(ext));
        m.extension_sd = Some(pop_sd(ext));
    }
    if index == 0 {
        return Ok(m);
    }
    let leader = &log.vehicles()[index - 1];
    let gaps = gap_series(traj, leader, log.loop_length);
    let gap = &gaps.gap[range.clone()];
    let lead_v: Vec<f64> = leader.samples()[range].iter().map(|p| p.v).collect();
    let tg: Vec<f64> = gap
        .iter()
        .zip(&speeds)
        .map(|(&g, &v)| time_gap(g, v))
        .collect();
    let pf: Vec<f64> = gap
        .iter()
        .zip(speeds.iter().zip(&lead_v))
        .map(|(&g, (&v, &vl))| pfs(g, v, vl, sp))
        .collect();
    m.gap_mean = Some(mean(gap));
    m.gap_sd = Some(pop_sd(gap));
    m.timegap_mean = Some(mean(&tg));
    m.timegap_sd = Some(pop_sd(&tg));
    m.pfs_mean = Some(mean(&pf));
    m.min_ttc = gap
        .iter()
        .zip(speeds.iter().zip(&lead_v))
        .filter_map(|(&g, (&v, &vl))| ttc(g, v, vl))
        .reduce(f64::min);
    m.overlap_samples = gap.iter().filter(|&&g| g < 0.0).count();
    Ok(m)
}

/// Validated log with accelerations, the extension series and notices.
type Prepared = (PlatoonLog, Option<Vec<f64>>, Vec<String>);

fn prepare(
    log: &PlatoonLog,
    sp: &SafetyParams,
    ep: &EnergyParams,
) -> Result<Prepared, MetricsError> {
    sp.validate()?;
    ep.validate()?;
    let mut notices = Vec::new();
    let log = if log.vehicles()[0].len() >= 2 {
        log.with_accelerations()?
    } else {
        log.clone()
    };
    let extension = match platoon_extension_series(&log) {
        Ok(ext) => Some(ext),
        Err(_) => {
            notices.push("single-vehicle log: platoon fields omitted".to_string());
            None
        }
    };
    Ok((log, extension, notices))
}

/// Whole-run metrics for every vehicle plus platoon extension statistics.
/// A failing sub-metric is reported as a notice and left empty rather than
/// aborting the summary.
pub fn summarize_run(
    log: &PlatoonLog,
    sp: &SafetyParams,
    ep: &EnergyParams,
) -> Result<MetricsSummary, MetricsError> {
    let (log, extension, mut notices) = prepare(log, sp, ep)?;
    let n = log.vehicles()[0].len();
    let vehicles = (0..log.vehicles().len())
        .map(|i| vehicle_metrics(&log, i, 0..n, None, sp, ep, &mut notices))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsSummary {
        label: log.label.clone(),
        sd_convention: "population".into(),
        vehicles,
        extension_mean: extension.as_deref().map(mean),
        extension_sd: extension.as_deref().map(pop_sd),
        notices,
    })
}

/// One record per vehicle and complete lap. Extension statistics in each
/// record cover the time window of that vehicle's lap.
pub fn summarize_laps(
    log: &PlatoonLog,
    sp: &SafetyParams,
    ep: &EnergyParams,
) -> Result<MetricsSummary, MetricsError> {
    let (log, extension, mut notices) = prepare(log, sp, ep)?;
    let mut vehicles = Vec::new();
    for (i, traj) in log.vehicles().iter().enumerate() {
        for seg in lap_segments(traj, log.loop_length)
            .into_iter()
            .filter(|s| s.complete)
        {
            let mut m = vehicle_metrics(
                &log,
                i,
                seg.range(),
                extension.as_deref(),
                sp,
                ep,
                &mut notices,
            )?;
            m.lap = Some(seg.lap);
            vehicles.push(m);
        }
    }
    if log.loop_length <= 0.0 {
        notices.push("open road: no laps to segment".to_string());
    }
    Ok(MetricsSummary {
        label: log.label.clone(),
        sd_convention: "population".into(),
        vehicles,
        extension_mean: extension.as_deref().map(mean),
        extension_sd: extension.as_deref().map(pop_sd),
        notices,
    })
}
