//! Python bindings. Structured results cross the boundary as JSON and come
//! back as plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use wavesim_core::metrics::{self, EnergyParams, MetricsSummary, SafetyParams};
use wavesim_core::params::Params;
use wavesim_core::report::{self, EcdOptions};
use wavesim_core::sim::{self, templates, Scenario, SignalPlan};
use wavesim_core::stats::{self, ObservationKey};
use wavesim_core::trajectory::{ingest_log, write_log, Precision, VehicleTrajectory};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn to_json(obj: &Bound<'_, PyAny>) -> PyResult<String> {
    obj.py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()
}

fn load_params(params_toml: Option<&str>) -> PyResult<Params> {
    params_toml.map_or_else(
        || Ok(Params::default()),
        |t| Params::from_toml(t).map_err(value_err),
    )
}

#[pyfunction]
fn template_names() -> Vec<&'static str> {
    templates::NAMES.to_vec()
}

/// Scenario TOML of a shipped template.
#[pyfunction]
fn template(name: &str) -> PyResult<&'static str> {
    templates::source(name).ok_or_else(|| value_err(format!("no template named `{name}`")))
}

/// Runs a scenario given as TOML text. Returns `{"log_csv", "events"}`.
#[pyfunction]
#[pyo3(signature = (scenario_toml, seed=None, exact=false))]
fn simulate<'py>(
    py: Python<'py>,
    scenario_toml: &str,
    seed: Option<u64>,
    exact: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut scenario = Scenario::from_toml(scenario_toml).map_err(value_err)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let run = sim::simulate(&scenario).map_err(value_err)?;
    let precision = if exact {
        Precision::Exact
    } else {
        Precision::Significant6
    };
    let out = serde_json::json!({
        "log_csv": write_log(&run.log, precision),
        "events": run.events,
    });
    from_json(py, &out.to_string())
}

/// Per-vehicle (or per-lap) metrics of a CSV log.
#[pyfunction]
#[pyo3(signature = (log_csv, loop_length=None, params_toml=None, per_lap=false))]
fn analyze<'py>(
    py: Python<'py>,
    log_csv: &str,
    loop_length: Option<f64>,
    params_toml: Option<&str>,
    per_lap: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mut params = load_params(params_toml)?;
    if let Some(l) = loop_length {
        params.analysis.loop_length = l;
    }
    params.analysis.per_lap |= per_lap;
    let log = ingest_log(
        log_csv,
        params.analysis.loop_length,
        params.analysis.vehicle_length,
    )
    .map_err(value_err)?;
    let summary = params.summarize(&log).map_err(value_err)?;
    from_json(
        py,
        &serde_json::to_string(&summary).expect("summary serializes"),
    )
}

fn observations(
    side: &Bound<'_, pyo3::types::PyDict>,
) -> PyResult<Vec<(ObservationKey, metrics::VehicleMetrics)>> {
    let mut out = Vec::new();
    for (name, summary) in side.iter() {
        let name: String = name.extract()?;
        let summary: MetricsSummary =
            serde_json::from_str(&to_json(&summary)?).map_err(value_err)?;
        for m in summary.vehicles {
            let key = ObservationKey {
                driver: format!("{name}/{}", m.vehicle_id),
                lap: m.lap,
            };
            out.push((key, m));
        }
    }
    Ok(out)
}

/// Paired comparison of `{name: summary}` dicts as returned by `analyze`.
/// Observations pair up by name, vehicle id and lap.
#[pyfunction]
#[pyo3(signature = (pre, post, variables=None))]
fn compare<'py>(
    py: Python<'py>,
    pre: &Bound<'py, pyo3::types::PyDict>,
    post: &Bound<'py, pyo3::types::PyDict>,
    variables: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyAny>> {
    let vars: Vec<String> =
        variables.unwrap_or_else(|| metrics::VARIABLES.iter().map(|s| s.to_string()).collect());
    let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
    let cmp =
        stats::compare(&observations(pre)?, &observations(post)?, &vars).map_err(value_err)?;
    from_json(
        py,
        &serde_json::to_string(&cmp).expect("comparison serializes"),
    )
}

/// Rendered text table of a comparison returned by `compare`.
#[pyfunction]
fn comparison_table(comparison: &Bound<'_, PyAny>) -> PyResult<String> {
    let cmp: stats::Comparison = serde_json::from_str(&to_json(comparison)?).map_err(value_err)?;
    Ok(report::comparison_text(&cmp.rows))
}

/// `(t, df, p)` of a paired t test on `pre - post`.
#[pyfunction]
fn paired_t(pre: Vec<f64>, post: Vec<f64>) -> PyResult<(f64, u32, f64)> {
    let (t, df) = stats::paired_t(&pre, &post).map_err(value_err)?;
    Ok((t, df, stats::t_sf(t, df)))
}

#[pyfunction]
fn t_sf(t: f64, df: u32) -> PyResult<f64> {
    if df == 0 {
        return Err(value_err("df must be >= 1"));
    }
    Ok(stats::t_sf(t, df))
}

#[pyfunction]
fn cohen_dz(pre: Vec<f64>, post: Vec<f64>) -> PyResult<f64> {
    stats::cohen_dz(&pre, &post).map_err(value_err)
}

#[pyfunction]
fn pfs(gap: f64, u_ego: f64, u_lead: f64) -> f64 {
    metrics::pfs(gap, u_ego, u_lead, &SafetyParams::default())
}

#[pyfunction]
fn d_safe(u_ego: f64, u_lead: f64) -> f64 {
    metrics::d_safe(u_ego, u_lead, &SafetyParams::default())
}

#[pyfunction(name = "d_unsafe")]
fn critical_distance(u_ego: f64, u_lead: f64) -> f64 {
    metrics::d_unsafe(u_ego, u_lead, &SafetyParams::default())
}

/// kW, clamped at zero.
#[pyfunction]
#[pyo3(signature = (v, a, theta=0.0))]
fn tractive_power(v: f64, a: f64, theta: f64) -> f64 {
    metrics::tractive_power(v, a, theta, &EnergyParams::default())
}

/// kWh/100km of a uniformly sampled trip.
#[pyfunction]
#[pyo3(signature = (chainage, speeds, dt=0.1))]
fn tractive_energy(chainage: Vec<f64>, speeds: Vec<f64>, dt: f64) -> PyResult<f64> {
    if chainage.len() != speeds.len() {
        return Err(value_err("chainage and speeds differ in length"));
    }
    let traj = VehicleTrajectory::from_columns("trip", 0.0, dt, &chainage, &speeds, 4.5)
        .map_err(value_err)?;
    metrics::tractive_energy(&traj, &EnergyParams::default()).map_err(value_err)
}

/// Constant speeds that meet every signal of a `[[signals]]` TOML on green.
#[pyfunction]
#[pyo3(signature = (signals_toml, vmin, vmax, resolution, start_s=0.0, start_t=0.0))]
fn green_wave_speed(
    signals_toml: &str,
    vmin: f64,
    vmax: f64,
    resolution: f64,
    start_s: f64,
    start_t: f64,
) -> PyResult<Vec<f64>> {
    let plan = SignalPlan::from_toml(signals_toml).map_err(value_err)?;
    Ok(sim::green_wave_speed(
        &plan.signals,
        vmin,
        vmax,
        start_s,
        start_t,
        resolution,
    ))
}

/// Six-panel report for one vehicle: `{"report": dict, "svg": str}`.
#[pyfunction]
#[pyo3(signature = (log_csv, vehicle, loop_length=0.0, n_virtual=8, params_toml=None))]
fn ecd<'py>(
    py: Python<'py>,
    log_csv: &str,
    vehicle: &str,
    loop_length: f64,
    n_virtual: usize,
    params_toml: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let params = load_params(params_toml)?;
    let log =
        ingest_log(log_csv, loop_length, params.analysis.vehicle_length).map_err(value_err)?;
    let opts = EcdOptions {
        n_virtual,
        ..EcdOptions::default()
    };
    let r = report::ecd(&log, vehicle, &params.safety, &params.energy, &opts).map_err(value_err)?;
    let svg = report::render_svg(&r).map_err(value_err)?;
    let out = serde_json::json!({ "report": r, "svg": svg });
    from_json(py, &out.to_string())
}

#[pymodule]
fn wavesim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(template_names, m)?)?;
    m.add_function(wrap_pyfunction!(template, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(comparison_table, m)?)?;
    m.add_function(wrap_pyfunction!(paired_t, m)?)?;
    m.add_function(wrap_pyfunction!(t_sf, m)?)?;
    m.add_function(wrap_pyfunction!(cohen_dz, m)?)?;
    m.add_function(wrap_pyfunction!(pfs, m)?)?;
    m.add_function(wrap_pyfunction!(d_safe, m)?)?;
    m.add_function(wrap_pyfunction!(critical_distance, m)?)?;
    m.add_function(wrap_pyfunction!(tractive_power, m)?)?;
    m.add_function(wrap_pyfunction!(tractive_energy, m)?)?;
    m.add_function(wrap_pyfunction!(green_wave_speed, m)?)?;
    m.add_function(wrap_pyfunction!(ecd, m)?)?;
    Ok(())
}
