//! Single experiments: integration, diagnostics, persistence and reloading.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use dnls_core::analysis::{
    characterize_prw_event, fit_spatial_envelope, fit_temporal_envelope, series_peaks, support_metrics, FitParams,
    FitResult, PRWEvent, SpatialFamily, SupportMetrics,
};
use dnls_core::diagnostics::{agmon_check, bound_constants, gronwall_envelope_check, mass_balance_residual, BoundReport};
use dnls_core::integrator::{simulate, ParityEigenBasis, StepStats};
use dnls_core::model::{eval_prw, PRWParams};
use dnls_core::{ChebGrid, FieldState, ModelParams, RunStatus, Scheme, SolverOptions, TimeWeight, Trajectory};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{parse_config, ExperimentConfig, TimeWeightSource};
use crate::error::{HarnessError, Result};
use crate::io::{self, RunWriter};
use crate::plot::{self, Curve};

pub type Outcome<T> = std::result::Result<T, String>;

pub const SPATIAL_FAMILIES: [SpatialFamily; 3] =
    [SpatialFamily::Gaussian, SpatialFamily::LinearAbs, SpatialFamily::QuadraticAbs];

type BasisKey = (usize, u64);

fn basis_cache() -> &'static Mutex<HashMap<BasisKey, Arc<ParityEigenBasis>>> {
    static CACHE: OnceLock<Mutex<HashMap<BasisKey, Arc<ParityEigenBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Eigenbasis of the interior second-derivative matrix, built once per `(N, L)`.
pub fn eigenbasis(grid: &ChebGrid) -> Result<Arc<ParityEigenBasis>> {
    let key = (grid.degree(), grid.half_length().to_bits());
    let mut cache = basis_cache().lock().unwrap_or_else(|p| p.into_inner());
    if let Some(b) = cache.get(&key) {
        return Ok(b.clone());
    }
    let b = Arc::new(ParityEigenBasis::new(grid)?);
    cache.insert(key, b.clone());
    Ok(b)
}

pub fn solver_options(config: &ExperimentConfig, grid: &ChebGrid) -> Result<SolverOptions> {
    let scheme = config.integrator.scheme;
    let basis = if scheme == Scheme::Exponential { Some(eigenbasis(grid)?) } else { None };
    Ok(SolverOptions { scheme, backend: config.integrator.backend, basis })
}

/// Integrates the configured model. Step underflow is an error.
pub fn simulate_config(config: &ExperimentConfig) -> Result<(ChebGrid, ModelParams, Trajectory)> {
    let grid = config.grid()?;
    let params = config.model_params()?;
    let init = config.initial_state(&grid)?;
    let options = solver_options(config, &grid)?;
    let traj = simulate(&grid, &params, &init, &config.integrator_config(), &options)?;
    Ok((grid, params, traj))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallSummary {
    pub constant: f64,
    pub max_excess: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub event: Outcome<PRWEvent>,
    pub support: Outcome<SupportMetrics>,
    /// Snapshot time of the spatial fits.
    pub fit_time: Option<f64>,
    pub spatial_fits: Vec<(SpatialFamily, Outcome<FitResult>)>,
    pub peaks: Vec<(f64, f64)>,
    pub temporal_fit: Outcome<FitResult>,
    pub bound: Outcome<BoundReport>,
    pub agmon_max_ratio: Outcome<f64>,
    pub gronwall: Outcome<GronwallSummary>,
    pub mass_balance_max: Outcome<f64>,
}

fn text<T>(r: dnls_core::Result<T>) -> Outcome<T> {
    r.map_err(|e| e.to_string())
}

pub fn temporal_fit(config: &ExperimentConfig, traj: &Trajectory) -> (Vec<(f64, f64)>, Outcome<FitResult>) {
    let peaks = series_peaks(&traj.center_series, config.analysis.peak_prominence);
    let fit = text(fit_temporal_envelope(&peaks, config.analysis.temporal_kappa, None));
    (peaks, fit)
}

pub fn spatial_fits(config: &ExperimentConfig, grid: &ChebGrid, snap: &FieldState) -> Vec<(SpatialFamily, Outcome<FitResult>)> {
    SPATIAL_FAMILIES.iter().map(|f| (*f, text(fit_spatial_envelope(snap, grid, *f, config.fit_window())))).collect()
}

pub fn time_weight(config: &ExperimentConfig, temporal: &Outcome<FitResult>) -> Outcome<TimeWeight> {
    match config.weights.time {
        TimeWeightSource::Fitted => match temporal {
            Ok(fit) => fit.time_weight().ok_or_else(|| "temporal fit gave an invalid time weight".to_string()),
            Err(e) => Err(format!("no fitted time weight: {e}")),
        },
        _ => text(config.fixed_time_weight()),
    }
}

pub fn agmon_max(config: &ExperimentConfig, grid: &ChebGrid, traj: &Trajectory) -> Outcome<f64> {
    let w = config.spatial_weight();
    let mut worst: f64 = 0.0;
    for s in &traj.snapshots {
        let rec = text(agmon_check(grid, s, &w))?;
        if rec.inconsistent {
            return Err(format!("vanishing right-hand side with nonzero field at t = {}", s.t));
        }
        worst = worst.max(rec.ratio);
    }
    Ok(worst)
}

pub fn diagnose(config: &ExperimentConfig, grid: &ChebGrid, params: &ModelParams, traj: &Trajectory) -> Diagnostics {
    let an = &config.analysis;
    let event = text(characterize_prw_event(traj, grid, (an.event_t_lo, an.event_t_hi)));
    let support = match &event {
        Ok(ev) => match traj.snapshot_near(ev.profile_time) {
            Some(s) => text(support_metrics(s, grid)),
            None => Err("no snapshots".into()),
        },
        Err(e) => Err(e.clone()),
    };
    let fit_snap = if an.fit_time <= config.integrator.t_end { traj.snapshot_near(an.fit_time) } else { None };
    let spatial = fit_snap.map(|s| spatial_fits(config, grid, s)).unwrap_or_default();
    let (peaks, temporal) = temporal_fit(config, traj);
    let bound = time_weight(config, &temporal)
        .and_then(|tw| text(bound_constants(traj, &config.spatial_weight(), &tw, grid)));
    let gronwall = text(gronwall_envelope_check(traj, params, &config.spatial_weight(), grid))
        .map(|g| GronwallSummary { constant: g.constant, max_excess: g.max_excess, passed: g.passed });
    let mass_balance_max = text(mass_balance_residual(traj, params))
        .map(|r| r.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max));
    Diagnostics {
        event,
        support,
        fit_time: fit_snap.map(|s| s.t),
        spatial_fits: spatial,
        peaks,
        temporal_fit: temporal,
        bound,
        agmon_max_ratio: agmon_max(config, grid, traj),
        gronwall,
        mass_balance_max,
    }
}

pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub grid: ChebGrid,
    pub params: ModelParams,
    pub trajectory: Trajectory,
    pub diagnostics: Diagnostics,
    /// Seconds spent integrating and analysing.
    pub wall_time: f64,
}

/// Integrates and analyses without touching the file system.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let (grid, params, trajectory) = simulate_config(config)?;
    let diagnostics = diagnose(config, &grid, &params, &trajectory);
    Ok(RunOutcome {
        config: config.clone(),
        grid,
        params,
        trajectory,
        diagnostics,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub dir: PathBuf,
    pub config_hash: String,
    pub software_version: String,
    pub wall_time: f64,
    pub status: String,
    /// Paths relative to `dir`.
    pub files: Vec<PathBuf>,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    Sha256::digest(config.to_document().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn status_time(status: &RunStatus) -> Option<f64> {
    match status {
        RunStatus::Completed => None,
        RunStatus::Blowup { t } | RunStatus::StepBudgetExhausted { t } => Some(*t),
    }
}

fn status_from(label: &str, t: Option<f64>) -> Option<RunStatus> {
    match label {
        "completed" => Some(RunStatus::Completed),
        "blowup" => Some(RunStatus::Blowup { t: t? }),
        "step-budget-exhausted" => Some(RunStatus::StepBudgetExhausted { t: t? }),
        _ => None,
    }
}

pub fn fit_json(fit: &FitResult) -> Value {
    let params = match fit.params {
        FitParams::Gaussian { sigma, x_shift } => json!({"family": "gaussian", "sigma": sigma, "x_shift": x_shift}),
        FitParams::LinearAbs { x0 } => json!({"family": "linear_abs", "x0": x0}),
        FitParams::QuadraticAbs { x0 } => json!({"family": "quadratic_abs", "x0": x0}),
        FitParams::Temporal { s0, t0, kappa } => json!({"family": "temporal", "s0": s0, "t0": t0, "kappa": kappa}),
    };
    json!({
        "params": params,
        "log_amplitude": fit.log_amplitude,
        "bound_log_amplitude": fit.bound_log_amplitude,
        "rss": fit.rss,
        "window": [fit.window.0, fit.window.1],
        "samples": fit.samples,
        "translated": fit.translated,
        "degenerate": fit.degenerate,
    })
}

pub fn family_name(f: SpatialFamily) -> &'static str {
    match f {
        SpatialFamily::Gaussian => "gaussian",
        SpatialFamily::LinearAbs => "linear_abs",
        SpatialFamily::QuadraticAbs => "quadratic_abs",
    }
}

fn outcome_json<T>(o: &Outcome<T>, f: impl Fn(&T) -> Value) -> Value {
    match o {
        Ok(v) => f(v),
        Err(e) => json!({"error": e}),
    }
}

pub fn event_json(ev: &PRWEvent) -> Value {
    json!({
        "t_star": ev.t_star,
        "p0_est": ev.p0_est,
        "p0_background": ev.p0_background,
        "peak_density": ev.peak_density,
        "profile_l2_error": ev.profile_l2_error,
        "center_series_error": ev.center_series_error,
        "profile_time": ev.profile_time,
    })
}

pub fn bound_json(b: &BoundReport) -> Value {
    let s = &b.times_of_sup;
    json!({
        "k1_emp": b.k1_emp, "k2_emp": b.k2_emp, "r_emp": b.r_emp, "r0_emp": b.r0_emp, "r1_emp": b.r1_emp,
        "times_of_sup": {"k1_t": s.k1_t, "k1_x": s.k1_x, "k2_t": s.k2_t, "r_t": s.r_t, "r0_t": s.r0_t, "r1_t": s.r1_t},
        "certifying": b.certifying,
    })
}

pub fn diagnostics_json(d: &Diagnostics) -> Value {
    json!({
        "event": outcome_json(&d.event, event_json),
        "support": outcome_json(&d.support, |s| json!({"h_s": s.h_s, "w_s": s.w_s})),
        "fit_time": d.fit_time,
        "spatial_fits": d.spatial_fits.iter().map(|(f, r)| json!({
            "family": family_name(*f),
            "fit": outcome_json(r, fit_json),
        })).collect::<Vec<_>>(),
        "peaks": d.peaks.iter().map(|(t, v)| json!([t, v])).collect::<Vec<_>>(),
        "temporal_fit": outcome_json(&d.temporal_fit, fit_json),
        "bound": outcome_json(&d.bound, bound_json),
        "agmon_max_ratio": outcome_json(&d.agmon_max_ratio, |r| json!(r)),
        "gronwall": outcome_json(&d.gronwall, |g| json!({"constant": g.constant, "max_excess": g.max_excess, "passed": g.passed})),
        "mass_balance_max": outcome_json(&d.mass_balance_max, |r| json!(r)),
    })
}

/// Indices of the snapshots written to disk.
fn written_snapshots(out: &RunOutcome) -> Vec<usize> {
    let snaps = &out.trajectory.snapshots;
    if !out.config.outputs.write_snapshots || snaps.is_empty() {
        return Vec::new();
    }
    let stride = out.config.outputs.snapshot_stride;
    let mut keep: Vec<usize> = (0..snaps.len()).filter(|k| k % stride == 0).collect();
    keep.push(snaps.len() - 1);
    let nearest = |t: f64| {
        (0..snaps.len()).min_by(|a, b| (snaps[*a].t - t).abs().total_cmp(&(snaps[*b].t - t).abs()))
    };
    keep.extend(nearest(out.config.analysis.fit_time));
    if let Ok(ev) = &out.diagnostics.event {
        keep.extend(nearest(ev.profile_time));
    }
    keep.sort_unstable();
    keep.dedup();
    keep
}

fn uniform_density(grid: &ChebGrid, s: &FieldState, lo: f64, hi: f64, step: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (xs, vs) = grid.resample_uniform(&grid.embed(&s.values), lo, hi, step)?;
    Ok((xs, vs.iter().map(|z| z.norm_sqr()).collect()))
}

const MAX_HEATMAP_ROWS: usize = 200;

fn render_plots(out: &RunOutcome, writer: &mut RunWriter) -> Result<()> {
    let grid = &out.grid;
    let traj = &out.trajectory;
    let d = &out.diagnostics;
    let fail = |name: &str, e: String| HarnessError::data(writer_path(name), format!("plot: {e}"));
    if let (Ok(ev), Some(snap)) = (&d.event, d.event.as_ref().ok().and_then(|ev| traj.snapshot_near(ev.profile_time))) {
        let half = 20.0_f64.min(grid.half_length());
        let (xs, dens) = uniform_density(grid, snap, -half, half, 0.05)?;
        let prw = PRWParams::new(ev.t_star, ev.p0_est)?;
        let model: Vec<(f64, f64)> = xs.iter().map(|x| (*x, eval_prw(*x, snap.t, &prw).norm_sqr())).collect();
        let curves = [
            Curve::line(format!("|u|², t = {:.2}", snap.t), xs.iter().copied().zip(dens).collect()),
            Curve::line(format!("rogue wave, t0 = {:.3}, P0 = {:.3}", ev.t_star, ev.p0_est), model),
        ];
        let svg = plot::line_plot("density at the event", "x", "|u|²", &curves, false).map_err(|e| fail("event_profile.svg", e))?;
        writer.write("plots/event_profile.svg", svg.as_bytes())?;
    }
    if let Some(t) = d.fit_time {
        if let Some(snap) = traj.snapshot_near(t) {
            let (xs, dens) = uniform_density(grid, snap, 0.0, grid.half_length(), io::SNAPSHOT_STEP)?;
            let mut curves = vec![Curve::line(format!("|u|², t = {:.2}", snap.t), xs.iter().copied().zip(dens).collect())];
            for (f, r) in &d.spatial_fits {
                if let Ok(fit) = r {
                    let pts = xs.iter().filter(|x| **x >= fit.window.0).map(|x| (*x, fit.bound(*x))).collect();
                    curves.push(Curve::line(format!("{} bound", family_name(*f)), pts));
                }
            }
            let svg = plot::line_plot("spatial envelope", "x", "|u|²", &curves, true).map_err(|e| fail("spatial_fit.svg", e))?;
            writer.write("plots/spatial_fit.svg", svg.as_bytes())?;
        }
    }
    let mut curves = vec![Curve::line("|u(0,t)|²", traj.center_series.clone())];
    if !d.peaks.is_empty() {
        curves.push(Curve::markers("peaks", d.peaks.clone()));
    }
    if let Ok(fit) = &d.temporal_fit {
        let t_end = traj.center_series.last().map(|p| p.0).unwrap_or(0.0);
        let pts = (0..=400).map(|k| t_end * k as f64 / 400.0).map(|t| (t, fit.bound(t))).collect();
        curves.push(Curve::line("temporal bound", pts));
    }
    let svg = plot::line_plot("center density", "t", "|u(0,t)|²", &curves, false).map_err(|e| fail("center_series.svg", e))?;
    writer.write("plots/center_series.svg", svg.as_bytes())?;

    let half = out.config.outputs.heatmap_half_width.min(grid.half_length());
    let stride = traj.snapshots.len().div_ceil(MAX_HEATMAP_ROWS).max(1);
    let mut ts = Vec::new();
    let mut rows = Vec::new();
    let mut xs = Vec::new();
    for s in traj.snapshots.iter().step_by(stride) {
        let (x, dens) = uniform_density(grid, s, -half, half, io::SNAPSHOT_STEP)?;
        xs = x;
        ts.push(s.t);
        rows.push(dens);
    }
    if ts.len() >= 2 {
        let svg = plot::heatmap("|u(x,t)|²", &xs, &ts, &rows).map_err(|e| fail("density_heatmap.svg", e))?;
        writer.write("plots/density_heatmap.svg", svg.as_bytes())?;
    }
    Ok(())
}

fn writer_path(name: &str) -> PathBuf {
    Path::new("plots").join(name)
}

fn write_all(out: &RunOutcome, writer: &mut RunWriter) -> Result<(String, Vec<Value>)> {
    let doc = out.config.to_document();
    writer.write("config.toml", doc.as_bytes())?;
    writer.write("series.csv", io::series_csv(&out.trajectory).as_bytes())?;
    writer.write("balance.csv", io::balance_csv(&out.trajectory).as_bytes())?;
    let mut listing = Vec::new();
    for k in written_snapshots(out) {
        let s = &out.trajectory.snapshots[k];
        let uniform = format!("snapshots/u_{k:05}.csv");
        let raw = format!("snapshots/raw_{k:05}.csv");
        writer.write(&uniform, io::snapshot_csv(&out.grid, s)?.as_bytes())?;
        writer.write(&raw, io::raw_snapshot_csv(&out.grid, s).as_bytes())?;
        listing.push(json!({"index": k, "t": s.t, "uniform": uniform, "raw": raw}));
    }
    if out.config.outputs.plots {
        render_plots(out, writer)?;
    }
    Ok((config_hash(&out.config), listing))
}

/// Writes the run directory; on failure every file written is removed.
pub fn persist(out: &RunOutcome, dir: &Path) -> Result<RunRecord> {
    let mut writer = RunWriter::create(dir)?;
    let result = write_all(out, &mut writer).and_then(|(hash, listing)| {
        let status = out.trajectory.status;
        let mut files: Vec<PathBuf> = writer.files().to_vec();
        files.push(PathBuf::from("metadata.json"));
        let meta = json!({
            "software": {"name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION")},
            "config_hash": hash,
            "config": out.config.entries().into_iter().map(|(k, v)| (k.to_string(), toml_to_json(&v))).collect::<serde_json::Map<_, _>>(),
            "preset": out.config.preset,
            "status": status.label(),
            "status_time": status_time(&status),
            "wall_time_s": out.wall_time,
            "steps": {"accepted": out.trajectory.stats.accepted, "rejected": out.trajectory.stats.rejected},
            "diagnostics": diagnostics_json(&out.diagnostics),
            "snapshots": listing,
            "manifest": files.iter().map(|p| p.to_string_lossy().into_owned()).collect::<Vec<_>>(),
        });
        let body = serde_json::to_string_pretty(&meta).map_err(|e| HarnessError::data(dir.join("metadata.json"), e.to_string()))?;
        writer.write("metadata.json", body.as_bytes())?;
        Ok(RunRecord {
            dir: dir.to_path_buf(),
            config_hash: hash,
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time: out.wall_time,
            status: status.label().to_string(),
            files,
        })
    });
    match result {
        Ok(r) => Ok(r),
        Err(e) => {
            writer.rollback();
            Err(e)
        }
    }
}

fn toml_to_json(v: &toml::Value) -> Value {
    match v {
        toml::Value::Float(f) => json!(f),
        toml::Value::Integer(i) => json!(i),
        toml::Value::Boolean(b) => json!(b),
        toml::Value::String(s) => json!(s),
        other => json!(other.to_string()),
    }
}

/// Integrates, analyses and writes to `config.outputs.dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunRecord> {
    let out = execute(config)?;
    persist(&out, &config.outputs.dir)
}

/// A run directory read back from disk.
pub struct LoadedRun {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub grid: ChebGrid,
    pub params: ModelParams,
    /// Snapshots are the ones written, from the raw files.
    pub trajectory: Trajectory,
    pub metadata: Value,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let meta_path = dir.join("metadata.json");
    let metadata: Value = serde_json::from_str(&io::read_text(&meta_path)?)
        .map_err(|e| HarnessError::data(&meta_path, e.to_string()))?;
    let config = parse_config(&io::read_text(&dir.join("config.toml"))?, None)?;
    let grid = config.grid()?;
    let params = config.model_params()?;
    let (center_series, norm_series) = io::read_series(&dir.join("series.csv"), &dir.join("balance.csv"))?;
    let bad = |msg: &str| HarnessError::data(&meta_path, msg.to_string());
    let mut snapshots = Vec::new();
    for entry in metadata["snapshots"].as_array().ok_or_else(|| bad("missing snapshot listing"))? {
        let t = entry["t"].as_f64().ok_or_else(|| bad("snapshot without time"))?;
        let raw = entry["raw"].as_str().ok_or_else(|| bad("snapshot without raw file"))?;
        snapshots.push(io::read_raw_snapshot(&dir.join(raw), &grid, t)?);
    }
    let label = metadata["status"].as_str().ok_or_else(|| bad("missing status"))?;
    let status = status_from(label, metadata["status_time"].as_f64()).ok_or_else(|| bad("unknown status"))?;
    let stats = StepStats {
        accepted: metadata["steps"]["accepted"].as_u64().unwrap_or(0) as usize,
        rejected: metadata["steps"]["rejected"].as_u64().unwrap_or(0) as usize,
    };
    Ok(LoadedRun {
        dir: dir.to_path_buf(),
        config,
        grid,
        params,
        trajectory: Trajectory { snapshots, center_series, norm_series, status, stats },
        metadata,
    })
}
