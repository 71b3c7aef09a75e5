use std::collections::BTreeSet;
use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde_json::json;
use wavesim_core::fmt::sig6;
use wavesim_core::metrics::{MetricsSummary, VARIABLES};
use wavesim_core::params::Params;
use wavesim_core::report::{self, render_svg, render_table, EcdOptions};
use wavesim_core::sim::{self, Scenario, SignalPlan};
use wavesim_core::stats::{self, ObservationKey};
use wavesim_core::trajectory::{ingest_log, write_log, PlatoonLog, Precision};

use crate::io::{json_files, read_text, sha256_hex, write_atomic};
use crate::{
    AnalyzeArgs, Classify, CompareArgs, EcdArgs, Failure, GreenwaveArgs, MetricsFormat,
    SimulateArgs, TableFormat,
};

pub const PARAMS_ENV: &str = "WAVESIM_PARAMS";

/// Writes to stdout. A reader that closed the pipe early is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(Failure::Input(e.into())),
        _ => Ok(()),
    }
}

fn load_params(path: Option<&Path>) -> Result<Params, Failure> {
    let path = match path {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(PARAMS_ENV).map(PathBuf::from),
    };
    match path {
        None => Ok(Params::default()),
        Some(p) => {
            let text = read_text(&p).input()?;
            Params::from_toml(&text)
                .with_context(|| format!("in {}", p.display()))
                .input()
        }
    }
}

fn load_log(path: &Path, loop_length: f64, vehicle_length: f64) -> Result<PlatoonLog, Failure> {
    let text = read_text(path).input()?;
    ingest_log(&text, loop_length, vehicle_length)
        .with_context(|| format!("in {}", path.display()))
        .data()
}

struct Job {
    path: PathBuf,
    scenario: Scenario,
    out: PathBuf,
}

fn run_job(job: &Job, params: &Params) -> anyhow::Result<()> {
    let run = sim::simulate(&job.scenario)?;
    fs::create_dir_all(&job.out).with_context(|| format!("cannot create {}", job.out.display()))?;
    let mut files: Vec<(String, Vec<u8>)> = vec![
        (
            "log.csv".into(),
            write_log(&run.log, Precision::Significant6).into_bytes(),
        ),
        (
            "events.json".into(),
            (run.events_json() + "\n").into_bytes(),
        ),
        ("scenario.toml".into(), job.scenario.to_toml().into_bytes()),
    ];
    if run.log.vehicles().len() >= 2 {
        let subject = run.log.vehicles()[1].vehicle_id().to_string();
        let r = report::ecd(
            &run.log,
            &subject,
            &params.safety,
            &params.energy,
            &EcdOptions::default(),
        )?;
        files.push((format!("ecd_{subject}.svg"), render_svg(&r)?.into_bytes()));
    }
    for (name, bytes) in &files {
        write_atomic(&job.out.join(name), bytes)?;
    }
    let hashes: serde_json::Map<String, serde_json::Value> = files
        .iter()
        .map(|(name, bytes)| (name.clone(), json!(sha256_hex(bytes))))
        .collect();
    let manifest = json!({
        "tool": concat!("wavesim ", env!("CARGO_PKG_VERSION")),
        "scenario": job.path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "label": job.scenario.label,
        "seed": job.scenario.seed,
        "steps": job.scenario.steps(),
        "events": run.events.len(),
        "files": hashes,
    });
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    write_atomic(&job.out.join("manifest.json"), text.as_bytes())
}

pub fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    if args.jobs == 0 {
        return Err(Failure::Input(anyhow!("--jobs must be at least 1")));
    }
    let params = load_params(args.params.as_deref())?;
    let several = args.scenarios.len() > 1;
    let mut stems = BTreeSet::new();
    let mut jobs = Vec::new();
    for path in &args.scenarios {
        let text = read_text(path).input()?;
        let mut scenario = Scenario::from_toml(&text)
            .with_context(|| format!("in {}", path.display()))
            .input()?;
        if let Some(seed) = args.seed {
            scenario.seed = seed;
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        if !stems.insert(stem.clone()) {
            return Err(Failure::Input(anyhow!(
                "two scenarios share the name `{stem}`"
            )));
        }
        let out = if several {
            args.out.join(&stem)
        } else {
            args.out.clone()
        };
        jobs.push(Job {
            path: path.clone(),
            scenario,
            out,
        });
    }
    let chunk = jobs.len().div_ceil(args.jobs.min(jobs.len()));
    let results: Vec<anyhow::Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                let params = &params;
                scope.spawn(move || part.iter().map(|j| run_job(j, params)).collect::<Vec<_>>())
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    });
    for (job, r) in jobs.iter().zip(results) {
        r.with_context(|| format!("{}", job.path.display()))
            .input()?;
        eprintln!("wrote {}", job.out.display());
    }
    Ok(())
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let mut params = load_params(args.params.as_deref())?;
    let a = &mut params.analysis;
    if let Some(l) = args.loop_length {
        a.loop_length = l;
    }
    if let Some(l) = args.vehicle_length {
        a.vehicle_length = l;
    }
    a.per_lap |= args.per_lap;
    if !args.vehicles.is_empty() {
        a.vehicles = args.vehicles.clone();
    }
    if !args.laps.is_empty() {
        a.laps = args.laps.clone();
    }
    if !(a.loop_length >= 0.0) || !(a.vehicle_length > 0.0) {
        return Err(Failure::Input(anyhow!(
            "loop length must be >= 0 and vehicle length > 0"
        )));
    }
    let log = load_log(&args.log, a.loop_length, a.vehicle_length)?;
    let mut summary = params.summarize(&log).data()?;
    if summary.label.is_empty() {
        summary.label = args
            .log
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    for n in &summary.notices {
        eprintln!("notice: {n}");
    }
    match args.format {
        MetricsFormat::Json => {
            let text =
                serde_json::to_string_pretty(&summary.rounded()).expect("summary serializes");
            emit(&(text + "\n"))?;
        }
        MetricsFormat::Csv => emit(&summary.to_csv())?,
    }
    Ok(())
}

fn load_observations(
    path: &Path,
) -> Result<Vec<(ObservationKey, wavesim_core::metrics::VehicleMetrics)>, Failure> {
    let files = json_files(path).input()?;
    if files.is_empty() {
        return Err(Failure::Input(anyhow!(
            "no metrics files in {}",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for file in files {
        let text = read_text(&file).input()?;
        let summary: MetricsSummary = serde_json::from_str(&text)
            .with_context(|| format!("{} is not a metrics file", file.display()))
            .data()?;
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        for m in summary.vehicles {
            let key = ObservationKey {
                driver: format!("{stem}/{}", m.vehicle_id),
                lap: m.lap,
            };
            out.push((key, m));
        }
    }
    Ok(out)
}

pub fn compare(args: &CompareArgs) -> Result<(), Failure> {
    let vars: Vec<&str> = if args.vars.is_empty() {
        VARIABLES.to_vec()
    } else {
        args.vars.iter().map(String::as_str).collect()
    };
    if let Some(bad) = vars.iter().find(|v| !VARIABLES.contains(v)) {
        return Err(Failure::Input(anyhow!(
            "unknown variable `{bad}`; expected one of {}",
            VARIABLES.join(", ")
        )));
    }
    let pre = load_observations(&args.pre)?;
    let post = load_observations(&args.post)?;
    let cmp = stats::compare(&pre, &post, &vars).data()?;
    if cmp.dropped > 0 {
        eprintln!("warning: {} observation(s) dropped pairwise", cmp.dropped);
    }
    for w in &cmp.warnings {
        eprintln!("warning: {w}");
    }
    let table = render_table(&cmp.rows);
    match args.format {
        TableFormat::Text => emit(&table.text)?,
        TableFormat::Csv => emit(&table.csv)?,
    }
    Ok(())
}

pub fn ecd(args: &EcdArgs) -> Result<(), Failure> {
    let params = load_params(args.params.as_deref())?;
    let loop_length = args.loop_length.unwrap_or(params.analysis.loop_length);
    let log = load_log(&args.log, loop_length, params.analysis.vehicle_length)?;
    let opts = EcdOptions {
        n_virtual: args.n_virtual,
        ..EcdOptions::default()
    };
    let r = report::ecd(&log, &args.vehicle, &params.safety, &params.energy, &opts).data()?;
    for n in &r.notices {
        eprintln!("notice: {n}");
    }
    let svg = render_svg(&r).data()?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .input()?;
    let stem = format!("ecd_{}", args.vehicle);
    write_atomic(
        &args.out.join(format!("{stem}.json")),
        (r.to_json() + "\n").as_bytes(),
    )
    .input()?;
    write_atomic(&args.out.join(format!("{stem}.svg")), svg.as_bytes()).input()?;
    Ok(())
}

pub fn greenwave(args: &GreenwaveArgs) -> Result<(), Failure> {
    let check = || -> anyhow::Result<()> {
        if !(args.vmin > 0.0) {
            bail!("--vmin must be > 0");
        }
        if !(args.vmax >= args.vmin) {
            bail!("--vmax must be >= --vmin");
        }
        if !(args.resolution > 0.0) {
            bail!("--resolution must be > 0");
        }
        Ok(())
    };
    check().input()?;
    let text = read_text(&args.signals).input()?;
    let plan = SignalPlan::from_toml(&text)
        .with_context(|| format!("in {}", args.signals.display()))
        .input()?;
    let speeds = sim::green_wave_speed(
        &plan.signals,
        args.vmin,
        args.vmax,
        args.start_s,
        args.start_t,
        args.resolution,
    );
    if speeds.is_empty() {
        eprintln!("notice: no constant speed in the grid meets every signal on green");
    }
    let lines: String = speeds.iter().map(|&v| sig6(v) + "\n").collect();
    emit(&lines)
}
