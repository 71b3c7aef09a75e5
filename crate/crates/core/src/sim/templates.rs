//! Shipped scenarios. The files under `scenarios/` are the source of truth;
//! the functions here parse the same text.

use super::scenario::Scenario;
use super::signal::SignalPlan;

pub const JRC_CIRCUIT: &str = include_str!("../../../../scenarios/jrc_circuit.toml");
pub const JRC_CIRCUIT_DI: &str = include_str!("../../../../scenarios/jrc_circuit_di.toml");
pub const WDC_EVAL: &str = include_str!("../../../../scenarios/wdc_eval.toml");
pub const WDC_EVAL_DI: &str = include_str!("../../../../scenarios/wdc_eval_di.toml");
pub const TRAFFIC_LIGHTS: &str = include_str!("../../../../scenarios/traffic_lights.toml");
pub const MODULE1_WAVES: &str = include_str!("../../../../scenarios/module1_waves.toml");
pub const CORRIDOR_SIGNALS: &str = include_str!("../../../../scenarios/corridor_signals.toml");

pub const NAMES: [&str; 6] = [
    "jrc_circuit",
    "jrc_circuit_di",
    "wdc_eval",
    "wdc_eval_di",
    "traffic_lights",
    "module1_waves",
];

pub fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "jrc_circuit" => JRC_CIRCUIT,
        "jrc_circuit_di" => JRC_CIRCUIT_DI,
        "wdc_eval" => WDC_EVAL,
        "wdc_eval_di" => WDC_EVAL_DI,
        "traffic_lights" => TRAFFIC_LIGHTS,
        "module1_waves" => MODULE1_WAVES,
        _ => return None,
    })
}

pub fn by_name(name: &str) -> Option<Scenario> {
    source(name).map(|text| Scenario::from_toml(text).expect("shipped scenario is valid"))
}

/// 3.3 km loop, oscillating leader, ACC amplifier as vehicle 2 and four
/// distance-keeping followers.
pub fn jrc_circuit() -> Scenario {
    by_name("jrc_circuit").unwrap()
}

/// [`jrc_circuit`] with inertia-keeping followers behind the ACC.
pub fn jrc_circuit_di() -> Scenario {
    by_name("jrc_circuit_di").unwrap()
}

/// Stop-and-go leader, one subject and eight distance-keeping followers.
pub fn wdc_eval() -> Scenario {
    by_name("wdc_eval").unwrap()
}

/// [`wdc_eval`] with an inertia-keeping subject.
pub fn wdc_eval_di() -> Scenario {
    by_name("wdc_eval_di").unwrap()
}

/// Signalized corridor driven at its green-wave speed.
pub fn traffic_lights() -> Scenario {
    by_name("traffic_lights").unwrap()
}

/// Wide cyclical speed variation with eight distance-keeping followers.
pub fn module1_waves() -> Scenario {
    by_name("module1_waves").unwrap()
}

pub fn corridor_signals() -> SignalPlan {
    SignalPlan::from_toml(CORRIDOR_SIGNALS).expect("shipped signal plan is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{green_wave_speed, ControllerSpec, ProfileKind};

    #[test]
    fn every_template_parses() {
        for name in NAMES {
            let s = by_name(name).unwrap();
            assert_eq!(s.label, name);
        }
        assert!(by_name("nope").is_none());
    }

    #[test]
    fn jrc_layout() {
        let s = jrc_circuit();
        assert_eq!(s.loop_length, 3300.0);
        assert_eq!(s.leader.kind, ProfileKind::Sinusoid);
        assert_eq!(s.leader.v_min, 30.0 / 3.6);
        assert_eq!(s.leader.v_max, 45.0 / 3.6);
        let kinds: Vec<_> = s.followers.iter().map(|f| f.kind()).collect();
        assert_eq!(kinds, ["ACC_CTG", "DD_IDM", "DD_IDM", "DD_IDM", "DD_IDM"]);
        let di = jrc_circuit_di();
        assert_eq!(di.followers[0], ControllerSpec::acc());
        assert!(di.followers[1..].iter().all(|f| *f == ControllerSpec::di()));
        assert_eq!(di.speed_caps, s.speed_caps);
    }

    #[test]
    fn wdc_layout() {
        let s = wdc_eval();
        assert_eq!(s.followers.len(), 9);
        assert_eq!(s.leader.v_max, 50.0 / 3.6);
        assert_eq!(wdc_eval_di().followers[0], ControllerSpec::di());
    }

    #[test]
    fn traffic_lights_leader_rides_the_green_wave() {
        let s = traffic_lights();
        let v = s.leader.v_min;
        let ok = green_wave_speed(&s.signals, v, v, 0.0, 0.0, 1.0);
        assert_eq!(ok, vec![v]);
        assert_eq!(corridor_signals().signals, s.signals);
    }
}
