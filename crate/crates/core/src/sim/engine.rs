//! Fixed-step platoon integration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::controller::{step_acc_ctg, step_dd_idm, step_di, ControllerSpec, DiHistory, IdmParams};
use super::profile::leader_speed;
use super::scenario::{Scenario, SpeedCap};
use super::signal::{signal_state, Signal, SignalState};
use super::ConfigError;
use crate::trajectory::{PlatoonLog, VehicleTrajectory};

/// Start gap for controllers without an equilibrium.
pub const FALLBACK_GAP: f64 = 20.0;
/// Distance over which caps and red signals are anticipated, m.
pub const LOOKAHEAD: f64 = 300.0;
/// Speed error gain inside a capped zone, 1/s.
const CAP_GAIN: f64 = 1.0;
/// Scale of the quadratic onset of cap braking, m/s².
const CAP_BRAKE_REF: f64 = 1.0;
/// Deceleration beyond which a driver runs the amber rather than stopping.
const SIGNAL_STOP_DECEL: f64 = 3.0;
/// Speed below which a vehicle counts as stopped.
const STOPPED: f64 = 0.1;
/// Braking limit of the scripted leader when obeying caps and signals.
const LEADER_BRAKE_LIMIT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Controller saw a non-positive gap.
    Overlap,
    /// Integration would have placed a follower inside its leader.
    Collision,
    /// Vehicle came to rest in front of a red signal.
    SignalStop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub vehicle_id: String,
    pub event_kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatoonRun {
    pub scenario: Scenario,
    pub log: PlatoonLog,
    pub events: Vec<Event>,
}

impl PlatoonRun {
    pub fn events_json(&self) -> String {
        serde_json::to_string_pretty(&self.events).expect("events serialize")
    }
}

pub fn vehicle_id(index: usize) -> String {
    format!("v{}", index + 1)
}

/// Tightest acceleration bound imposed by speed caps: a proportional pull
/// toward the cap inside a zone and, ahead of a zone, a braking demand that
/// grows with the square of the deceleration needed to reach the cap at the
/// zone entry.
fn cap_constraint(s: f64, v: f64, caps: &[SpeedCap], loop_length: f64) -> f64 {
    let looped = loop_length > 0.0;
    let pos = if looped { s.rem_euclid(loop_length) } else { s };
    let mut a = f64::INFINITY;
    for c in caps {
        if c.from <= pos && pos < c.to {
            a = a.min(CAP_GAIN * (c.cap - v));
        } else if v > c.cap {
            let d = if looped {
                (c.from - pos).rem_euclid(loop_length)
            } else {
                c.from - pos
            };
            if d > 0.0 && d < LOOKAHEAD {
                let b_req = (v * v - c.cap * c.cap) / (2.0 * d.max(0.5));
                a = a.min(-b_req * b_req / CAP_BRAKE_REF);
            }
        }
    }
    a
}

/// Bound from red signals ahead, treated as standing obstacles at the stop
/// line. A vehicle too close to stop comfortably proceeds.
fn signal_constraint(s: f64, v: f64, t: f64, signals: &[Signal], loop_length: f64) -> f64 {
    let idm = IdmParams::default();
    let mut a = f64::INFINITY;
    for sig in signals {
        let d = if loop_length > 0.0 {
            (sig.position - s).rem_euclid(loop_length)
        } else {
            sig.position - s
        };
        if d <= 0.0 || d >= LOOKAHEAD || signal_state(sig, t) == SignalState::Green {
            continue;
        }
        if v * v / (2.0 * d) <= SIGNAL_STOP_DECEL {
            a = a.min(step_dd_idm(v, d, 0.0, &idm));
        }
    }
    a
}

fn start_gap(spec: &ControllerSpec, v: f64) -> f64 {
    spec.equilibrium_gap(v).unwrap_or(FALLBACK_GAP)
}

/// Runs a scenario. Identical scenarios, seed included, give identical runs.
pub fn simulate(scenario: &Scenario) -> Result<PlatoonRun, ConfigError> {
    scenario.validate()?;
    let sc = scenario;
    let n = sc.followers.len() + 1;
    let dt = sc.dt;
    let len = sc.vehicle_length;
    let steps = sc.steps();

    let v_init = leader_speed(&sc.leader, 0.0);
    let mut s = vec![0.0; n];
    let mut v = vec![v_init; n];
    for (i, spec) in sc.followers.iter().enumerate() {
        let gap = match &sc.initial_gaps {
            Some(g) => g[i],
            None => start_gap(spec, v_init),
        };
        s[i + 1] = s[i] - len - gap;
    }

    let mut histories: Vec<Option<DiHistory>> = sc
        .followers
        .iter()
        .map(|f| match f {
            ControllerSpec::DiInertia(p) => Some(DiHistory::new(p.window, dt)),
            _ => None,
        })
        .collect();
    let mut noise = (sc.noise_sd > 0.0).then(|| {
        (
            ChaCha8Rng::seed_from_u64(sc.seed),
            Normal::new(0.0, sc.noise_sd).expect("validated noise"),
        )
    });

    let ids: Vec<String> = (0..n).map(vehicle_id).collect();
    let mut rec_s: Vec<Vec<f64>> = s.iter().map(|&x| vec![x]).collect();
    let mut rec_v: Vec<Vec<f64>> = v.iter().map(|&x| vec![x]).collect();
    for r in rec_s.iter_mut().chain(rec_v.iter_mut()) {
        r.reserve(steps);
    }
    let mut events = Vec::new();
    let mut held = vec![false; n];
    let mut acc = vec![0.0; n];

    for k in 0..steps {
        let t = k as f64 * dt;
        for i in 0..n {
            let mut a = if i == 0 {
                sc.leader.tracking_accel(v[0], t, dt)
            } else {
                let gap = s[i - 1] - s[i] - len;
                let vl = v[i - 1];
                if gap <= 0.0 {
                    events.push(Event {
                        t,
                        vehicle_id: ids[i].clone(),
                        event_kind: EventKind::Overlap,
                    });
                }
                let spec = &sc.followers[i - 1];
                let mut a = match spec {
                    ControllerSpec::DdIdm(p) => step_dd_idm(v[i], gap, vl, p),
                    ControllerSpec::AccCtg(p) => step_acc_ctg(v[i], gap, vl, p),
                    ControllerSpec::DiInertia(p) => {
                        let h = histories[i - 1].as_mut().expect("DI history");
                        h.push(t, vl, gap);
                        step_di(v[i], gap, vl, h, p)
                    }
                    ControllerSpec::Scripted(p) => p.profile.tracking_accel(v[i], t, dt),
                };
                if let Some((rng, dist)) = noise.as_mut() {
                    a += dist.sample(rng);
                }
                a
            };
            let brake_limit = if i == 0 {
                LEADER_BRAKE_LIMIT
            } else {
                sc.followers[i - 1].braking_limit()
            };
            a = a.min(cap_constraint(s[i], v[i], &sc.speed_caps, sc.loop_length));
            let sig = signal_constraint(s[i], v[i], t, &sc.signals, sc.loop_length);
            let red_hold = sig <= a;
            a = a.min(sig).max(-brake_limit);
            if red_hold && v[i] + a * dt < STOPPED && !held[i] {
                events.push(Event {
                    t: t + dt,
                    vehicle_id: ids[i].clone(),
                    event_kind: EventKind::SignalStop,
                });
                held[i] = true;
            } else if v[i] >= STOPPED && !red_hold {
                held[i] = false;
            }
            acc[i] = a;
        }
        for i in 0..n {
            v[i] = (v[i] + acc[i] * dt).max(0.0);
            s[i] += v[i] * dt;
        }
        for i in 1..n {
            if s[i - 1] - s[i] - len < 0.0 {
                events.push(Event {
                    t: t + dt,
                    vehicle_id: ids[i].clone(),
                    event_kind: EventKind::Collision,
                });
                s[i] = s[i - 1] - len;
                v[i] = v[i - 1];
            }
        }
        for i in 0..n {
            rec_s[i].push(s[i]);
            rec_v[i].push(v[i]);
        }
    }

    let vehicles = (0..n)
        .map(|i| {
            VehicleTrajectory::from_columns(ids[i].clone(), 0.0, dt, &rec_s[i], &rec_v[i], len)
        })
        .collect::<Result<Vec<_>, _>>()
        .expect("engine output satisfies trajectory invariants");
    let log =
        PlatoonLog::new(sc.loop_length, vehicles, sc.label.clone()).expect("shared time base");
    Ok(PlatoonRun {
        scenario: sc.clone(),
        log,
        events,
    })
}

/// Replays a recorded trajectory as a leader and simulates `count` IDM
/// followers behind it, starting at equilibrium spacing. The returned log
/// holds the subject first.
pub fn simulate_behind(
    subject: &VehicleTrajectory,
    count: usize,
    params: &IdmParams,
    vehicle_length: f64,
) -> PlatoonLog {
    let dt = subject.dt();
    let rec = subject.samples();
    let n = count + 1;
    let v_init = rec[0].v;
    let gap0 = params.equilibrium_gap(v_init).unwrap_or(FALLBACK_GAP);
    let mut s = vec![rec[0].s; n];
    let mut v = vec![v_init; n];
    for i in 1..n {
        let lead_len = if i == 1 {
            subject.vehicle_length()
        } else {
            vehicle_length
        };
        s[i] = s[i - 1] - lead_len - gap0;
    }
    let mut rec_s: Vec<Vec<f64>> = s.iter().map(|&x| vec![x]).collect();
    let mut rec_v: Vec<Vec<f64>> = v.iter().map(|&x| vec![x]).collect();
    let mut acc = vec![0.0; n];
    for sample in &rec[1..] {
        for i in 1..n {
            let lead_len = if i == 1 {
                subject.vehicle_length()
            } else {
                vehicle_length
            };
            acc[i] = step_dd_idm(v[i], s[i - 1] - s[i] - lead_len, v[i - 1], params);
        }
        s[0] = sample.s;
        v[0] = sample.v;
        for i in 1..n {
            v[i] = (v[i] + acc[i] * dt).max(0.0);
            s[i] += v[i] * dt;
            let lead_len = if i == 1 {
                subject.vehicle_length()
            } else {
                vehicle_length
            };
            if s[i - 1] - s[i] - lead_len < 0.0 {
                s[i] = (s[i - 1] - lead_len).max(rec_s[i][rec_s[i].len() - 1]);
                v[i] = v[i - 1];
            }
            rec_s[i].push(s[i]);
            rec_v[i].push(v[i]);
        }
    }
    let t0 = rec[0].t;
    let mut vehicles = vec![subject.clone()];
    for i in 1..n {
        vehicles.push(
            VehicleTrajectory::from_columns(
                format!("{}_f{i}", subject.vehicle_id()),
                t0,
                dt,
                &rec_s[i],
                &rec_v[i],
                vehicle_length,
            )
            .expect("virtual follower trajectory"),
        );
    }
    PlatoonLog::new(
        0.0,
        vehicles,
        format!("{} virtual followers", subject.vehicle_id()),
    )
    .expect("shared time base")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::profile::{LeaderProfile, ProfileKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_leader_covers_exact_distance() {
        let sc = Scenario::new(LeaderProfile::constant(10.0), vec![], 60.0);
        let run = simulate(&sc).unwrap();
        let last = run.log.vehicles()[0].samples().last().unwrap();
        assert_eq!(run.log.vehicles()[0].len(), 601);
        assert_abs_diff_eq!(last.s, 600.0, epsilon = 1e-9);
        assert_abs_diff_eq!(last.t, 60.0, epsilon = 1e-9);
    }

    #[test]
    fn idm_follower_settles_at_equilibrium() {
        let mut sc = Scenario::new(
            LeaderProfile::constant(8.333),
            vec![ControllerSpec::dd()],
            120.0,
        );
        sc.initial_gaps = Some(vec![25.0]);
        let run = simulate(&sc).unwrap();
        let lead = run.log.vehicles()[0].samples().last().unwrap();
        let foll = run.log.vehicles()[1].samples().last().unwrap();
        let gap = lead.s - foll.s - 4.5;
        assert!((gap - 10.672).abs() / 10.672 < 0.01, "gap {gap}");
    }

    #[test]
    fn identical_scenarios_give_identical_runs() {
        let mut sc = Scenario::new(
            LeaderProfile::new(ProfileKind::Sinusoid, 5.0, 12.0, 40.0),
            vec![
                ControllerSpec::dd(),
                ControllerSpec::acc(),
                ControllerSpec::di(),
            ],
            120.0,
        );
        sc.noise_sd = 0.2;
        sc.seed = 7;
        assert_eq!(simulate(&sc).unwrap(), simulate(&sc).unwrap());
        let mut other = sc.clone();
        other.seed = 8;
        assert_ne!(simulate(&sc).unwrap().log, simulate(&other).unwrap().log);
    }

    #[test]
    fn collision_is_recorded_and_resolved() {
        // A scripted follower that ignores its leader runs into it.
        let mut sc = Scenario::new(
            LeaderProfile::constant(5.0),
            vec![ControllerSpec::Scripted(
                crate::sim::controller::ScriptedParams {
                    profile: LeaderProfile::constant(8.0),
                },
            )],
            30.0,
        );
        sc.initial_gaps = Some(vec![10.0]);
        let run = simulate(&sc).unwrap();
        assert!(run
            .events
            .iter()
            .any(|e| e.event_kind == EventKind::Collision));
        let lead = &run.log.vehicles()[0];
        let foll = &run.log.vehicles()[1];
        for (a, b) in lead.samples().iter().zip(foll.samples()) {
            assert!(a.s - b.s - 4.5 >= -1e-9);
        }
    }

    #[test]
    fn red_signal_stops_the_leader() {
        let mut sc = Scenario::new(
            LeaderProfile::constant(10.0),
            vec![ControllerSpec::dd()],
            80.0,
        );
        sc.signals = vec![Signal {
            position: 250.0,
            cycle: 120.0,
            green_start: 60.0,
            green_end: 120.0,
        }];
        let run = simulate(&sc).unwrap();
        let lead = &run.log.vehicles()[0];
        let at = |t: f64| lead.samples()[(t / 0.1).round() as usize];
        assert!(at(55.0).v < 0.1);
        assert!(at(55.0).s < 250.0);
        assert!(at(79.0).s > 250.0);
        assert!(run
            .events
            .iter()
            .any(|e| e.event_kind == EventKind::SignalStop && e.vehicle_id == "v1"));
    }

    #[test]
    fn caps_slow_vehicles_in_zone() {
        let mut sc = Scenario::new(LeaderProfile::constant(12.0), vec![], 100.0);
        sc.loop_length = 1000.0;
        sc.speed_caps = vec![SpeedCap {
            from: 500.0,
            to: 600.0,
            cap: 5.0,
        }];
        let run = simulate(&sc).unwrap();
        for p in run.log.vehicles()[0].samples() {
            let pos = p.s.rem_euclid(1000.0);
            if (520.0..600.0).contains(&pos) {
                assert!(p.v < 5.5, "v {} at {pos}", p.v);
            }
        }
    }

    #[test]
    fn virtual_followers_track_subject() {
        let subject = VehicleTrajectory::from_columns(
            "x",
            0.0,
            0.1,
            &(0..600).map(|k| k as f64).collect::<Vec<_>>(),
            &[10.0; 600],
            4.5,
        )
        .unwrap();
        let log = simulate_behind(&subject, 8, &IdmParams::default(), 4.5);
        assert_eq!(log.vehicles().len(), 9);
        let gap0 = IdmParams::default().equilibrium_gap(10.0).unwrap();
        let ext = crate::trajectory::platoon_extension_series(&log).unwrap();
        for e in ext {
            assert_abs_diff_eq!(e, 8.0 * (gap0 + 4.5), epsilon = 1e-6);
        }
    }
}
