//! Trajectory data model, log ingestion and loop-aware spacing.
//!
//! Chainage (`s`) is path position measured along the route and is stored
//! unwrapped: on a closed loop it keeps growing lap after lap, so cumulative
//! distance is always monotone. Loop wrapping is applied only to chainage
//! *differences* (see [`wrap_distance`]).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::fmt::sig6;

/// Sampling interval every trajectory is resampled to.
pub const CANONICAL_DT: f64 = 0.1;
/// Bumper-to-bumper convention: gaps subtract the leader's length.
pub const DEFAULT_VEHICLE_LENGTH: f64 = 4.5;

const SPACING_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("sampling interval must be positive, got {0}")]
    InvalidDt(f64),
    #[error("trajectory `{vehicle}` needs at least {needed} samples, has {got}")]
    TooFewSamples {
        vehicle: String,
        needed: usize,
        got: usize,
    },
    #[error("trajectory `{vehicle}`: sample {index} breaks uniform spacing")]
    NonUniformSpacing { vehicle: String, index: usize },
    #[error("trajectory `{vehicle}`: negative speed at sample {index}")]
    NegativeSpeed { vehicle: String, index: usize },
    #[error("trajectory `{vehicle}`: chainage decreases at sample {index}")]
    DecreasingChainage { vehicle: String, index: usize },
    #[error("platoon log needs at least {needed} vehicles, has {got}")]
    TooFewVehicles { needed: usize, got: usize },
    #[error("vehicle `{vehicle}` does not share the platoon time base")]
    TimeBaseMismatch { vehicle: String },
    #[error("unknown vehicle `{0}`")]
    UnknownVehicle(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("empty file")]
    Empty,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: cannot parse {column} value `{value}`")]
    Parse {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("row {row}: time does not increase for vehicle `{vehicle}`")]
    NonMonotoneTime { vehicle: String, row: usize },
    #[error("row {row}: negative speed for vehicle `{vehicle}`")]
    NegativeSpeed { vehicle: String, row: usize },
    #[error("vehicle time ranges do not overlap")]
    NoOverlap,
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub s: f64,
    pub v: f64,
    /// `None` until [`derive_acceleration`] has run.
    pub a: Option<f64>,
}

impl TrajectorySample {
    pub fn new(t: f64, s: f64, v: f64) -> Self {
        Self { t, s, v, a: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrajectory {
    vehicle_id: String,
    dt: f64,
    samples: Vec<TrajectorySample>,
    vehicle_length: f64,
}

impl VehicleTrajectory {
    /// Validates uniform spacing, non-negative speed and non-decreasing
    /// chainage.
    pub fn new(
        vehicle_id: impl Into<String>,
        dt: f64,
        samples: Vec<TrajectorySample>,
        vehicle_length: f64,
    ) -> Result<Self, TrajectoryError> {
        let vehicle_id = vehicle_id.into();
        if !(dt > 0.0) {
            return Err(TrajectoryError::InvalidDt(dt));
        }
        if samples.is_empty() {
            return Err(TrajectoryError::TooFewSamples {
                vehicle: vehicle_id,
                needed: 1,
                got: 0,
            });
        }
        for (i, w) in samples.windows(2).enumerate() {
            if ((w[1].t - w[0].t) - dt).abs() > SPACING_TOL {
                return Err(TrajectoryError::NonUniformSpacing {
                    vehicle: vehicle_id,
                    index: i + 1,
                });
            }
            if w[1].s < w[0].s {
                return Err(TrajectoryError::DecreasingChainage {
                    vehicle: vehicle_id,
                    index: i + 1,
                });
            }
        }
        if let Some(index) = samples.iter().position(|p| p.v < 0.0) {
            return Err(TrajectoryError::NegativeSpeed {
                vehicle: vehicle_id,
                index,
            });
        }
        Ok(Self {
            vehicle_id,
            dt,
            samples,
            vehicle_length,
        })
    }

    /// Builds a uniformly sampled trajectory from parallel speed and
    /// chainage columns starting at `t0`.
    pub fn from_columns(
        vehicle_id: impl Into<String>,
        t0: f64,
        dt: f64,
        s: &[f64],
        v: &[f64],
        vehicle_length: f64,
    ) -> Result<Self, TrajectoryError> {
        let samples = s
            .iter()
            .zip(v)
            .enumerate()
            .map(|(k, (&s, &v))| TrajectorySample::new(t0 + k as f64 * dt, s, v))
            .collect();
        Self::new(vehicle_id, dt, samples, vehicle_length)
    }

    pub fn vehicle_id(&self) -> &str {
        &self.vehicle_id
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn vehicle_length(&self) -> f64 {
        self.vehicle_length
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.t).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.v).collect()
    }

    pub fn chainage(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.s).collect()
    }

    /// Accelerations, or `None` if they have not been derived yet.
    pub fn accelerations(&self) -> Option<Vec<f64>> {
        self.samples.iter().map(|p| p.a).collect()
    }

    pub fn mean_position(&self) -> f64 {
        self.samples.iter().map(|p| p.s).sum::<f64>() / self.samples.len() as f64
    }

    /// Copy restricted to `range` of sample indices, keeping derived values.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self, TrajectoryError> {
        Self::new(
            self.vehicle_id.clone(),
            self.dt,
            self.samples[range].to_vec(),
            self.vehicle_length,
        )
    }

    /// Linear-interpolation resampling onto `t_start + k·dt`, `k = 0..count`.
    pub fn resample(&self, t_start: f64, dt: f64, count: usize) -> Result<Self, TrajectoryError> {
        let t: Vec<f64> = self.times();
        let s: Vec<f64> = self.chainage();
        let v: Vec<f64> = self.speeds();
        let samples = (0..count)
            .map(|k| {
                let tau = t_start + k as f64 * dt;
                TrajectorySample::new(tau, interp(&t, &s, tau), interp(&t, &v, tau))
            })
            .collect();
        Self::new(self.vehicle_id.clone(), dt, samples, self.vehicle_length)
    }
}

/// Piecewise-linear interpolation; exact sample times return the stored
/// value bit-for-bit so resampling onto an identical grid is idempotent.
fn interp(t: &[f64], y: &[f64], tau: f64) -> f64 {
    if tau <= t[0] {
        return y[0];
    }
    let last = t.len() - 1;
    if tau >= t[last] {
        return y[last];
    }
    // First index with t[i] > tau.
    let hi = t.partition_point(|&x| x <= tau);
    let lo = hi - 1;
    if t[lo] == tau {
        return y[lo];
    }
    let w = (tau - t[lo]) / (t[hi] - t[lo]);
    y[lo] + w * (y[hi] - y[lo])
}

/// Ordered vehicles of one platoon; index 0 is the leader.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonLog {
    /// Loop length in meters, `0.0` for open road.
    pub loop_length: f64,
    vehicles: Vec<VehicleTrajectory>,
    pub label: String,
}

impl PlatoonLog {
    pub fn new(
        loop_length: f64,
        vehicles: Vec<VehicleTrajectory>,
        label: impl Into<String>,
    ) -> Result<Self, TrajectoryError> {
        if vehicles.is_empty() {
            return Err(TrajectoryError::TooFewVehicles { needed: 1, got: 0 });
        }
        let head = &vehicles[0];
        for veh in &vehicles[1..] {
            let same = (veh.dt - head.dt).abs() <= SPACING_TOL
                && veh.len() == head.len()
                && (veh.samples[0].t - head.samples[0].t).abs() <= SPACING_TOL;
            if !same {
                return Err(TrajectoryError::TimeBaseMismatch {
                    vehicle: veh.vehicle_id.clone(),
                });
            }
        }
        Ok(Self {
            loop_length,
            vehicles,
            label: label.into(),
        })
    }

    pub fn vehicles(&self) -> &[VehicleTrajectory] {
        &self.vehicles
    }

    pub fn dt(&self) -> f64 {
        self.vehicles[0].dt
    }

    pub fn times(&self) -> Vec<f64> {
        self.vehicles[0].times()
    }

    pub fn position_of(&self, vehicle_id: &str) -> Option<usize> {
        self.vehicles
            .iter()
            .position(|v| v.vehicle_id == vehicle_id)
    }

    pub fn vehicle(&self, vehicle_id: &str) -> Result<&VehicleTrajectory, TrajectoryError> {
        self.position_of(vehicle_id)
            .map(|i| &self.vehicles[i])
            .ok_or_else(|| TrajectoryError::UnknownVehicle(vehicle_id.to_string()))
    }

    /// Same log with accelerations derived for every vehicle.
    pub fn with_accelerations(&self) -> Result<Self, TrajectoryError> {
        let vehicles = self
            .vehicles
            .iter()
            .map(derive_acceleration)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            loop_length: self.loop_length,
            vehicles,
            label: self.label.clone(),
        })
    }
}

/// Bumper-to-bumper spacing between consecutive vehicles over time.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub t: Vec<f64>,
    pub gap: Vec<f64>,
    /// Sample indices where the gap is negative (vehicles overlap).
    pub overlaps: Vec<usize>,
}

/// Chainage difference reduced modulo the loop length (identity on open
/// road).
pub fn wrap_distance(ds: f64, loop_length: f64) -> f64 {
    if loop_length > 0.0 {
        ds.rem_euclid(loop_length)
    } else {
        ds
    }
}

/// Parses a `t,vehicle_id,s,v` log and resamples every vehicle onto the
/// shared [`CANONICAL_DT`] grid spanning the common time window.
pub fn ingest_log(
    csv_text: &str,
    loop_length: f64,
    vehicle_length: f64,
) -> Result<PlatoonLog, IngestError> {
    let mut lines = csv_text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(IngestError::Empty)?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let (ci_t, ci_id, ci_s, ci_v) = (col("t")?, col("vehicle_id")?, col("s")?, col("v")?);

    // Raw rows grouped per vehicle, in order of first appearance.
    let mut order: Vec<String> = Vec::new();
    let mut raw: BTreeMap<String, Vec<TrajectorySample>> = BTreeMap::new();
    let mut rows = 0usize;
    for (row, line) in lines {
        rows += 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(IngestError::FieldCount {
                row,
                expected: columns.len(),
                found: fields.len(),
            });
        }
        let num = |idx: usize, column: &'static str| -> Result<f64, IngestError> {
            fields[idx]
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| IngestError::Parse {
                    row,
                    column,
                    value: fields[idx].to_string(),
                })
        };
        let (t, s, v) = (num(ci_t, "t")?, num(ci_s, "s")?, num(ci_v, "v")?);
        let id = fields[ci_id].to_string();
        if v < 0.0 {
            return Err(IngestError::NegativeSpeed { vehicle: id, row });
        }
        let track = raw.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Vec::new()
        });
        if let Some(prev) = track.last() {
            if !(t > prev.t) {
                return Err(IngestError::NonMonotoneTime { vehicle: id, row });
            }
        }
        track.push(TrajectorySample::new(t, s, v));
    }
    if rows == 0 {
        return Err(IngestError::Empty);
    }

    let t_start = raw.values().map(|tr| tr[0].t).fold(f64::MIN, f64::max);
    let t_end = raw
        .values()
        .map(|tr| tr[tr.len() - 1].t)
        .fold(f64::MAX, f64::min);
    if t_end < t_start {
        return Err(IngestError::NoOverlap);
    }
    let count = ((t_end - t_start) / CANONICAL_DT + 1e-9).floor() as usize + 1;

    let mut vehicles = Vec::with_capacity(order.len());
    for id in &order {
        let samples = raw.remove(id).expect("grouped vehicle");
        let t: Vec<f64> = samples.iter().map(|p| p.t).collect();
        let s: Vec<f64> = samples.iter().map(|p| p.s).collect();
        let v: Vec<f64> = samples.iter().map(|p| p.v).collect();
        let resampled = (0..count)
            .map(|k| {
                let tau = t_start + k as f64 * CANONICAL_DT;
                TrajectorySample::new(tau, interp(&t, &s, tau), interp(&t, &v, tau))
            })
            .collect();
        vehicles.push(VehicleTrajectory::new(
            id.clone(),
            CANONICAL_DT,
            resampled,
            vehicle_length,
        )?);
    }
    // Physical order: furthest along first.
    vehicles.sort_by(|a, b| b.mean_position().total_cmp(&a.mean_position()));
    Ok(PlatoonLog::new(loop_length, vehicles, "")?)
}

/// Number formatting for [`write_log`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    /// Six significant digits, the interchange default.
    #[default]
    Significant6,
    /// Shortest representation that parses back to the identical `f64`.
    Exact,
}

/// Serializes a log as `t,vehicle_id,s,v` rows in platoon order.
pub fn write_log(log: &PlatoonLog, precision: Precision) -> String {
    let num = |x: f64| match precision {
        Precision::Significant6 => sig6(x),
        Precision::Exact => format!("{x:?}"),
    };
    let mut out = String::from("t,vehicle_id,s,v\n");
    for veh in log.vehicles() {
        for p in veh.samples() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                num(p.t),
                veh.vehicle_id(),
                num(p.s),
                num(p.v)
            );
        }
    }
    out
}

/// Central differences of speed, one-sided at both ends.
pub fn derive_acceleration(traj: &VehicleTrajectory) -> Result<VehicleTrajectory, TrajectoryError> {
    let n = traj.samples.len();
    if n < 2 {
        return Err(TrajectoryError::TooFewSamples {
            vehicle: traj.vehicle_id.clone(),
            needed: 2,
            got: n,
        });
    }
    let dt = traj.dt;
    let v = traj.speeds();
    let mut out = traj.clone();
    for (i, p) in out.samples.iter_mut().enumerate() {
        let a = if i == 0 {
            (v[1] - v[0]) / dt
        } else if i == n - 1 {
            (v[n - 1] - v[n - 2]) / dt
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * dt)
        };
        p.a = Some(a);
    }
    Ok(out)
}

/// Bumper gap of `follower` behind `leader`, using the leader's length.
pub fn gap_series(
    follower: &VehicleTrajectory,
    leader: &VehicleTrajectory,
    loop_length: f64,
) -> GapSeries {
    let n = follower.len().min(leader.len());
    let mut t = Vec::with_capacity(n);
    let mut gap = Vec::with_capacity(n);
    let mut overlaps = Vec::new();
    for (i, (f, l)) in follower.samples.iter().zip(&leader.samples).enumerate() {
        let g = wrap_distance(l.s - f.s, loop_length) - leader.vehicle_length;
        if g < 0.0 {
            overlaps.push(i);
        }
        t.push(f.t);
        gap.push(g);
    }
    GapSeries { t, gap, overlaps }
}

/// Head-to-tail span of the platoon: the sum of wrapped chainage
/// differences between consecutive vehicles.
pub fn platoon_extension_series(log: &PlatoonLog) -> Result<Vec<f64>, TrajectoryError> {
    let vehicles = log.vehicles();
    if vehicles.len() < 2 {
        return Err(TrajectoryError::TooFewVehicles {
            needed: 2,
            got: vehicles.len(),
        });
    }
    let n = vehicles[0].len();
    Ok((0..n)
        .map(|k| {
            vehicles
                .windows(2)
                .map(|w| wrap_distance(w[0].samples[k].s - w[1].samples[k].s, log.loop_length))
                .sum()
        })
        .collect())
}

/// Samples of one trajectory that fall within lap `lap`, i.e. chainage in
/// `[lap·L, (lap+1)·L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LapSegment {
    pub lap: i64,
    pub start: usize,
    pub end: usize,
    /// The trajectory covers the whole lap, start line to finish line.
    pub complete: bool,
}

impl LapSegment {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// Splits a trajectory into laps on a loop. Returns an empty list on open
/// road.
pub fn lap_segments(traj: &VehicleTrajectory, loop_length: f64) -> Vec<LapSegment> {
    if !(loop_length > 0.0) || traj.is_empty() {
        return Vec::new();
    }
    let lap_of = |s: f64| (s / loop_length).floor() as i64;
    let first_s = traj.samples[0].s;
    let last_s = traj.samples[traj.len() - 1].s;
    let mut out = Vec::new();
    let mut start = 0;
    let mut current = lap_of(first_s);
    for (i, p) in traj.samples.iter().enumerate().skip(1) {
        let lap = lap_of(p.s);
        if lap != current {
            out.push((current, start, i));
            start = i;
            current = lap;
        }
    }
    out.push((current, start, traj.len()));
    out.into_iter()
        .map(|(lap, start, end)| {
            let lo = lap as f64 * loop_length;
            let hi = (lap + 1) as f64 * loop_length;
            LapSegment {
                lap,
                start,
                end,
                complete: first_s <= lo && last_s >= hi,
            }
        })
        .collect()
}
