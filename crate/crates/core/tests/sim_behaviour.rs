use proptest::prelude::*;
use wavesim_core::metrics::SafetyParams;
use wavesim_core::sim::*;

fn pop_sd(x: &[f64]) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

fn controller(k: u8) -> ControllerSpec {
    match k % 3 {
        0 => ControllerSpec::dd(),
        1 => ControllerSpec::acc(),
        _ => ControllerSpec::di(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn order_kept_and_speeds_non_negative(
        kinds in prop::collection::vec(0u8..3, 1..6),
        stop_and_go in any::<bool>(),
        vmax in 5.0f64..20.0,
        noise in 0.0f64..0.3,
        seed in any::<u64>(),
    ) {
        let kind = if stop_and_go { ProfileKind::StopAndGo } else { ProfileKind::Sinusoid };
        let mut sc = Scenario::new(LeaderProfile::new(kind, 0.0, vmax, 40.0), kinds.into_iter().map(controller).collect(), 120.0);
        sc.noise_sd = noise;
        sc.seed = seed;
        let run = simulate(&sc).unwrap();
        let vs = run.log.vehicles();
        for v in vs {
            prop_assert!(v.speeds().iter().all(|&x| x >= 0.0));
        }
        for pair in vs.windows(2) {
            for (a, b) in pair[0].samples().iter().zip(pair[1].samples()) {
                prop_assert!(a.s - b.s >= sc.vehicle_length - 1e-9);
            }
        }
    }
}

#[test]
fn same_seed_same_run() {
    let mut sc = templates::module1_waves();
    sc.noise_sd = 0.25;
    sc.seed = 99;
    sc.duration = 120.0;
    let a = simulate(&sc).unwrap();
    let b = simulate(&sc).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.events, b.events);
    sc.seed = 100;
    assert_ne!(simulate(&sc).unwrap().log, a.log);
}

#[test]
fn dd_followers_keep_leader_oscillation() {
    let lead = LeaderProfile::new(ProfileKind::Sinusoid, 30.0 / 3.6, 45.0 / 3.6, 60.0);
    let run = simulate(&Scenario::new(lead, vec![ControllerSpec::dd(); 4], 600.0)).unwrap();
    let sds: Vec<f64> = run
        .log
        .vehicles()
        .iter()
        .map(|v| pop_sd(&v.speeds()[1200..]))
        .collect();
    for sd in &sds[1..] {
        assert!(*sd >= 0.9 * sds[0], "{sds:?}");
    }
}

#[test]
fn di_tracks_mean_speed_without_collisions() {
    let run = simulate(&templates::wdc_eval_di()).unwrap();
    assert!(run.events.is_empty(), "{:?}", run.events);
    let subject = &run.log.vehicles()[1];
    let lead = &run.log.vehicles()[0];
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (vs, vl) = (subject.speeds(), lead.speeds());
    assert!((mean(&vs[3000..]) - mean(&vl[3000..])).abs() < 1.0);
    assert!(pop_sd(&vs[1200..]) < 0.5 * pop_sd(&vl[1200..]));
}

#[test]
fn stock_templates_run_clean() {
    for name in [
        "traffic_lights",
        "module1_waves",
        "jrc_circuit",
        "jrc_circuit_di",
    ] {
        let run = simulate(&templates::by_name(name).unwrap()).unwrap();
        assert!(
            run.events.is_empty(),
            "{name}: {:?}",
            &run.events[..run.events.len().min(3)]
        );
    }
}

#[test]
fn red_light_stops_the_platoon() {
    let mut sc = Scenario::new(
        LeaderProfile::constant(12.0),
        vec![ControllerSpec::dd(); 2],
        90.0,
    );
    sc.signals = vec![Signal {
        position: 400.0,
        cycle: 120.0,
        green_start: 60.0,
        green_end: 120.0,
    }];
    let run = simulate(&sc).unwrap();
    let lead = &run.log.vehicles()[0];
    let at_50s = &lead.samples()[500];
    assert!(
        at_50s.v < 0.1 && at_50s.s <= 400.0 && at_50s.s > 380.0,
        "{at_50s:?}"
    );
    assert!(lead.samples().last().unwrap().s > 400.0);
}

#[test]
fn speed_caps_hold_inside_zones() {
    let run = simulate(&templates::jrc_circuit()).unwrap();
    let sc = &run.scenario;
    for v in run.log.vehicles() {
        for x in v.samples().iter().skip(600) {
            let pos = x.s.rem_euclid(sc.loop_length);
            for cap in &sc.speed_caps {
                if pos >= cap.from + 50.0 && pos < cap.to {
                    assert!(x.v <= cap.cap + 0.5, "{} at {pos}: {}", v.vehicle_id(), x.v);
                }
            }
        }
    }
}

#[test]
fn di_equilibrium_is_safe_distance() {
    let spec = ControllerSpec::di();
    let sp = SafetyParams::default();
    let gap = spec.equilibrium_gap(10.0).unwrap();
    assert!((gap - wavesim_core::metrics::d_safe(10.0, 10.0, &sp)).abs() < 1e-12);
}

#[test]
fn bad_config_names_the_key() {
    let text = templates::source("jrc_circuit_di").unwrap().replacen(
        "kind = \"DI_INERTIA\"",
        "kind = \"DI_INERTIA\"\nwindow = -1.0",
        1,
    );
    let err = Scenario::from_toml(&text).unwrap_err().to_string();
    assert!(err.contains("followers[1].window"), "{err}");
    let err = Scenario::from_toml("duration = 10\n[leader]\nkind = \"sinusoid\"\nv_min = 1\nv_max = 2\nperiod = 10\nbogus = 1\n")
        .unwrap_err()
        .to_string();
    assert!(err.contains("bogus"), "{err}");
}

#[test]
fn scenario_round_trips_through_toml() {
    for name in templates::NAMES {
        let sc = templates::by_name(name).unwrap();
        assert_eq!(Scenario::from_toml(&sc.to_toml()).unwrap(), sc, "{name}");
    }
}
