use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wavesim_core::sim::templates;

fn wavesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavesim"))
        .args(args)
        .env_remove("WAVESIM_PARAMS")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn simulate_template(dir: &Path, name: &str, duration: f64) -> std::path::PathBuf {
    let mut sc = templates::by_name(name).unwrap();
    sc.duration = duration;
    let file = dir.join(format!("{name}.toml"));
    fs::write(&file, sc.to_toml()).unwrap();
    let out = dir.join(name);
    let o = wavesim(&["simulate", "--scenario", p(&file), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        wavesim(&[
            "simulate",
            "--scenario",
            p(&missing),
            "--out",
            p(dir.path())
        ])
        .status
        .code(),
        Some(2)
    );

    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "duration = -5\n[leader]\nkind = \"sinusoid\"\nv_min = 1\nv_max = 2\nperiod = 9\n",
    )
    .unwrap();
    let o = wavesim(&["simulate", "--scenario", p(&bad), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("duration"));

    assert_eq!(
        wavesim(&[
            "greenwave",
            "--signals",
            p(&bad),
            "--vmin",
            "0",
            "--vmax",
            "1",
            "--resolution",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(wavesim(&["bogus"]).status.code(), Some(2));
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    fs::write(&log, "t,vehicle_id,s,v\n0,a,0,1\n0,a,1,1\n").unwrap();
    assert_eq!(
        wavesim(&["analyze", "--log", p(&log)]).status.code(),
        Some(3)
    );

    let pre = dir.path().join("pre");
    fs::create_dir(&pre).unwrap();
    fs::write(pre.join("x.json"), "{\"not\": \"metrics\"}").unwrap();
    assert_eq!(
        wavesim(&["compare", "--pre", p(&pre), "--post", p(&pre)])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn simulate_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate_template(dir.path(), "traffic_lights", 60.0);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_object().unwrap();
    for name in ["log.csv", "events.json", "scenario.toml", "ecd_v2.svg"] {
        let bytes = fs::read(out.join(name)).unwrap();
        use sha2::Digest;
        assert_eq!(
            files[name],
            hex::encode(sha2::Sha256::digest(&bytes)),
            "{name}"
        );
    }
    assert_eq!(manifest["steps"], 600);
    assert_eq!(
        fs::read_to_string(out.join("events.json")).unwrap().trim(),
        "[]"
    );
}

#[test]
fn several_scenarios_in_parallel_match_serial() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["traffic_lights", "module1_waves", "wdc_eval"] {
        let mut sc = templates::by_name(name).unwrap();
        sc.duration = 60.0;
        let f = dir.path().join(format!("{name}.toml"));
        fs::write(&f, sc.to_toml()).unwrap();
        files.push(f);
    }
    let run = |out: &Path, jobs: &str| {
        let mut args = vec![
            "simulate".to_string(),
            "--out".into(),
            p(out).into(),
            "--jobs".into(),
            jobs.into(),
        ];
        for f in &files {
            args.push("--scenario".into());
            args.push(p(f).into());
        }
        let o = Command::new(env!("CARGO_BIN_EXE_wavesim"))
            .args(&args)
            .output()
            .unwrap();
        assert!(o.status.success());
    };
    let (a, b) = (dir.path().join("serial"), dir.path().join("parallel"));
    run(&a, "1");
    run(&b, "3");
    for name in ["traffic_lights", "module1_waves", "wdc_eval"] {
        assert_eq!(
            fs::read(a.join(name).join("log.csv")).unwrap(),
            fs::read(b.join(name).join("log.csv")).unwrap()
        );
    }
}

#[test]
fn analyze_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate_template(dir.path(), "jrc_circuit", 1200.0);
    let log = out.join("log.csv");
    let o = wavesim(&[
        "analyze",
        "--log",
        p(&log),
        "--loop-length",
        "3300",
        "--per-lap",
        "--vehicles",
        "v3,v4,v5,v6",
        "--laps",
        "0,1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["vehicles"].as_array().unwrap().len(), 8);
    assert_eq!(summary["sd_convention"], "population");

    for side in ["pre", "post"] {
        fs::create_dir(dir.path().join(side)).unwrap();
        fs::write(dir.path().join(side).join("run.json"), stdout(&o)).unwrap();
    }
    let (pre, post) = (dir.path().join("pre"), dir.path().join("post"));
    let o = wavesim(&[
        "compare",
        "--pre",
        p(&pre),
        "--post",
        p(&post),
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let rows = wavesim_core::report::parse_comparison_csv(&stdout(&o)).unwrap();
    assert_eq!(rows.len(), wavesim_core::metrics::VARIABLES.len());
    for r in &rows {
        assert_eq!(
            (r.t, r.p, r.cohen_d, r.df),
            (0.0, 1.0, 0.0, 7),
            "{}",
            r.variable
        );
    }

    let o = wavesim(&[
        "compare",
        "--pre",
        p(&pre),
        "--post",
        p(&post),
        "--vars",
        "speed_sd",
    ]);
    let text = stdout(&o);
    assert_eq!(
        text.lines().filter(|l| l.starts_with("speed_sd")).count(),
        1
    );
    assert_eq!(text.lines().count(), 2, "{text}");
    assert_eq!(
        wavesim(&[
            "compare",
            "--pre",
            p(&pre),
            "--post",
            p(&post),
            "--vars",
            "nope"
        ])
        .status
        .code(),
        Some(2)
    );

    let csv = wavesim(&[
        "analyze",
        "--log",
        p(&log),
        "--loop-length",
        "3300",
        "--format",
        "csv",
    ]);
    assert_eq!(stdout(&csv).lines().count(), 7);
}

#[test]
fn single_vehicle_analyze_notes_missing_leader() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("solo.csv");
    fs::write(&log, "t,vehicle_id,s,v\n0,a,0,10\n0.1,a,1,10\n0.2,a,2,10\n").unwrap();
    let o = wavesim(&["analyze", "--log", p(&log)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("notice"));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(summary["vehicles"][0]["gap_mean"].is_null());
}

#[test]
fn params_come_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("solo.csv");
    fs::write(&log, "t,vehicle_id,s,v\n0,a,0,10\n0.1,a,1,10\n").unwrap();
    let params = dir.path().join("params.toml");
    fs::write(&params, "[safety]\ntau = -1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wavesim"))
        .args(["analyze", "--log", p(&log)])
        .env("WAVESIM_PARAMS", &params)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ecd_writes_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate_template(dir.path(), "wdc_eval", 120.0);
    let report = dir.path().join("report");
    let o = wavesim(&[
        "ecd",
        "--log",
        p(&out.join("log.csv")),
        "--vehicle",
        "v3",
        "--out",
        p(&report),
        "--virtual",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(report.join("ecd_v3.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(
        doc.descendants()
            .filter(|n| n.attribute("class") == Some("panel"))
            .count(),
        6
    );
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report.join("ecd_v3.json")).unwrap()).unwrap();
    assert_eq!(json["subject_id"], "v3");
    let missing = wavesim(&[
        "ecd",
        "--log",
        p(&out.join("log.csv")),
        "--vehicle",
        "v42",
        "--out",
        p(&report),
    ]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn greenwave_cases() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.toml");
    fs::write(
        &one,
        "[[signals]]\nposition = 300\ncycle = 60\ngreen_start = 0\ngreen_end = 30\n",
    )
    .unwrap();
    let o = wavesim(&[
        "greenwave",
        "--signals",
        p(&one),
        "--vmin",
        "1",
        "--vmax",
        "30",
        "--resolution",
        "1",
    ]);
    assert!(o.status.success());
    let speeds: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert!(speeds.contains(&15.0) && !speeds.contains(&8.0));

    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    let o = wavesim(&[
        "greenwave",
        "--signals",
        p(&empty),
        "--vmin",
        "5",
        "--vmax",
        "6",
        "--resolution",
        "0.25",
    ]);
    assert_eq!(stdout(&o), "5\n5.25\n5.5\n5.75\n6\n");

    let never = dir.path().join("never.toml");
    fs::write(&never, "[[signals]]\nposition = 100\ncycle = 100\ngreen_start = 0\ngreen_end = 1\n\n[[signals]]\nposition = 110\ncycle = 100\ngreen_start = 50\ngreen_end = 51\n").unwrap();
    let o = wavesim(&[
        "greenwave",
        "--signals",
        p(&never),
        "--vmin",
        "5",
        "--vmax",
        "15",
        "--resolution",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("notice"));
}
