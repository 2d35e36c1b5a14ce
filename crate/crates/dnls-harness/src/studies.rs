//! Manufactured-solution studies and parameter sweeps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use dnls_core::{ChebGrid, Trajectory};
use serde_json::json;
use toml::Value;

use crate::config::{flatten, from_flat, parse_table, DriverKind, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::run::{simulate_config, RunRecord};

pub const CONVERGENCE_DEGREES: [usize; 4] = [64, 128, 256, 512];

#[derive(Debug, Clone, PartialEq)]
pub struct MmsReport {
    pub n: usize,
    /// Max over snapshots and interior nodes of `|u − u_m|`.
    pub max_error: f64,
    pub status: String,
    pub steps: usize,
}

fn manufactured_error(config: &ExperimentConfig, grid: &ChebGrid, traj: &Trajectory) -> f64 {
    let fam = config.mms;
    traj.snapshots
        .iter()
        .flat_map(|s| grid.interior_nodes().iter().zip(&s.values).map(move |(x, u)| (u - fam.field(*x, s.t)).norm()))
        .fold(0.0, f64::max)
}

/// Runs the configured manufactured problem and measures the error.
pub fn mms_study(config: &ExperimentConfig) -> Result<MmsReport> {
    if config.driver.kind != DriverKind::Manufactured {
        return Err(HarnessError::config("driver.kind", "the manufactured-solution study needs \"manufactured\""));
    }
    let (grid, _, traj) = simulate_config(config)?;
    Ok(MmsReport {
        n: config.n,
        max_error: manufactured_error(config, &grid, &traj),
        status: traj.status.label().to_string(),
        steps: traj.stats.accepted,
    })
}

/// Repeats [`mms_study`] for each degree.
pub fn convergence_study(config: &ExperimentConfig, degrees: &[usize]) -> Result<Vec<MmsReport>> {
    degrees
        .iter()
        .map(|&n| {
            let mut c = config.clone();
            c.n = n;
            c.validate()?;
            mms_study(&c)
        })
        .collect()
}

pub fn mms_table_json(rows: &[MmsReport]) -> serde_json::Value {
    let ratios: Vec<Option<f64>> = rows.windows(2).map(|w| (w[0].max_error > 0.0).then(|| w[1].max_error / w[0].max_error)).collect();
    json!({
        "rows": rows.iter().map(|r| json!({"N": r.n, "max_error": r.max_error, "status": r.status, "steps": r.steps})).collect::<Vec<_>>(),
        "successive_ratios": ratios,
    })
}

/// Base keys plus axes; the axes come from array values under `sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: BTreeMap<String, Value>,
    pub axes: Vec<(String, Vec<Value>)>,
    pub preset: Option<String>,
}

pub fn parse_sweep(text: &str, preset: Option<&str>) -> Result<SweepSpec> {
    let flat = flatten(&parse_table(text)?);
    let mut base = BTreeMap::new();
    let mut axes = Vec::new();
    for (k, v) in flat {
        match k.strip_prefix("sweep.") {
            Some(key) => {
                let values = v.as_array().ok_or_else(|| HarnessError::config(&k, "sweep axes must be arrays"))?;
                if values.is_empty() {
                    return Err(HarnessError::config(&k, "sweep axis is empty"));
                }
                if key == "outputs.dir" {
                    return Err(HarnessError::config(&k, "output directories are assigned per point"));
                }
                axes.push((key.to_string(), values.clone()));
            }
            None => {
                base.insert(k, v);
            }
        }
    }
    // Surface base-key errors before any point runs.
    from_flat(&base, preset)?;
    Ok(SweepSpec { base, axes, preset: preset.map(str::to_string) })
}

impl SweepSpec {
    /// Cartesian product of the axes, first axis slowest.
    pub fn points(&self) -> Vec<Vec<(String, Value)>> {
        let mut out = vec![Vec::new()];
        for (key, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p: Vec<(String, Value)>| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push((key.clone(), v.clone()));
                        q
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Debug)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, Value)>,
    pub dir: PathBuf,
    pub result: std::result::Result<RunRecord, String>,
}

/// Runs every point with up to `workers` threads; a failed point is
/// recorded and the sweep goes on. Writes `sweep.json` under `root`.
pub fn run_sweep<F>(spec: &SweepSpec, root: &Path, workers: usize, run: F) -> Result<Vec<SweepPoint>>
where
    F: Fn(&ExperimentConfig) -> Result<RunRecord> + Sync,
{
    let points = spec.points();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<SweepPoint>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, points.len().max(1)) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(assignments) = points.get(k) else { break };
                let dir = root.join(format!("point_{k:04}"));
                let mut flat = spec.base.clone();
                for (key, v) in assignments {
                    flat.insert(key.clone(), v.clone());
                }
                flat.insert("outputs.dir".into(), Value::String(dir.to_string_lossy().into_owned()));
                let result = from_flat(&flat, spec.preset.as_deref()).and_then(|c| run(&c)).map_err(|e| e.to_string());
                let point = SweepPoint { index: k, assignments: assignments.clone(), dir, result };
                results.lock().unwrap_or_else(|p| p.into_inner()).push(point);
            });
        }
    });
    let mut results = results.into_inner().unwrap_or_else(|p| p.into_inner());
    results.sort_by_key(|p| p.index);
    let summary = json!({
        "points": results.iter().map(|p| json!({
            "index": p.index,
            "assignments": p.assignments.iter().map(|(k, v)| (k.clone(), json!(v.to_string()))).collect::<serde_json::Map<_, _>>(),
            "dir": p.dir.to_string_lossy(),
            "status": match &p.result { Ok(r) => r.status.clone(), Err(_) => "failed".into() },
            "error": p.result.as_ref().err(),
        })).collect::<Vec<_>>(),
    });
    std::fs::create_dir_all(root).map_err(|e| HarnessError::io(root, e))?;
    let path = root.join("sweep.json");
    let body = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::data(&path, e.to_string()))?;
    std::fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))?;
    Ok(results)
}
