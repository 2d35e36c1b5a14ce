//! Reports computed from a finished run directory or from a config alone.

use dnls_core::analysis::{characterize_prw_event, fit_spatial_envelope, SpatialFamily};
use dnls_core::diagnostics::{driver_admissibility, mass_balance_residual, weighted_time_balance_residual};
use dnls_core::{ChebGrid, TimeWeight};
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::{event_json, family_name, fit_json, temporal_fit, LoadedRun, SPATIAL_FAMILIES};

pub fn parse_family(name: &str) -> Result<SpatialFamily> {
    SPATIAL_FAMILIES
        .iter()
        .copied()
        .find(|f| family_name(*f) == name || family_name(*f).replace('_', "-") == name)
        .ok_or_else(|| HarnessError::config("--family", format!("unknown family `{name}`")))
}

/// Spatial envelope fits on the written snapshot nearest `time`.
pub fn fit_spatial(run: &LoadedRun, families: &[SpatialFamily], time: Option<f64>) -> Result<Value> {
    let t = time.unwrap_or(run.config.analysis.fit_time);
    let snap = run
        .trajectory
        .snapshot_near(t)
        .ok_or_else(|| HarnessError::data(&run.dir, "the run has no written snapshots"))?;
    let mut fits = Vec::new();
    for f in families {
        let fit = fit_spatial_envelope(snap, &run.grid, *f, run.config.fit_window())?;
        fits.push(json!({"family": family_name(*f), "fit": fit_json(&fit)}));
    }
    Ok(json!({"snapshot_time": snap.t, "fits": fits}))
}

/// Peaks of the center density and their bounding temporal envelope.
pub fn fit_temporal(run: &LoadedRun) -> Result<Value> {
    let (peaks, fit) = temporal_fit(&run.config, &run.trajectory);
    let fit = fit.map_err(|e| HarnessError::Numerical(dnls_core::Error::DegenerateData(e)))?;
    let bounded = peaks.iter().all(|(t, v)| *v <= fit.bound(*t) * (1.0 + 1e-12));
    Ok(json!({
        "peaks": peaks.iter().map(|(t, v)| json!([t, v])).collect::<Vec<_>>(),
        "fit": fit_json(&fit),
        "bound_covers_peaks": bounded,
    }))
}

pub fn detect_event(run: &LoadedRun) -> Result<Value> {
    let an = &run.config.analysis;
    let ev = characterize_prw_event(&run.trajectory, &run.grid, (an.event_t_lo, an.event_t_hi))?;
    Ok(event_json(&ev))
}

/// Mass balance and its `φ ≡ 1` weighted form on the dense series.
pub fn verify_balance(run: &LoadedRun) -> Result<Value> {
    let plain = mass_balance_residual(&run.trajectory, &run.params)?;
    let weighted = weighted_time_balance_residual(&run.trajectory, &TimeWeight::unit(), &run.params)?;
    let max = |r: &[(f64, f64)]| r.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    Ok(json!({
        "samples": plain.len(),
        "mass_balance_max": max(&plain),
        "unit_weight_balance_max": max(&weighted),
    }))
}

pub const ADMISSIBILITY_KAPPAS: [f64; 4] = [1.0, 2.0, 3.0, 4.0];
pub const ADMISSIBILITY_HORIZON: f64 = 1e7;
const ADMISSIBILITY_DEGREE: usize = 256;

/// Convergence of `∫∫φ²|f|²` for the configured driver and `φ = (1 + γt/κ)^κ`.
pub fn verify_admissibility(config: &ExperimentConfig, horizon: f64) -> Result<Value> {
    let grid = ChebGrid::new(ADMISSIBILITY_DEGREE, config.l)?;
    let driver = config.driver_spec();
    let gamma = config.gamma;
    let mut rows = Vec::new();
    for kappa in ADMISSIBILITY_KAPPAS {
        let phi = TimeWeight::theory(kappa, kappa, gamma)?;
        let rep = driver_admissibility(&driver, &config.spatial_weight(), &phi, horizon, &grid)?;
        rows.push(json!({
            "kappa": kappa,
            "fd_integral": rep.fd_integral,
            "sup_weighted_f": rep.sup_weighted_f,
            "sup_weighted_ft": rep.sup_weighted_ft,
            "tail_exponent": rep.tail_exponent,
            "classification": if rep.divergence_flag { "divergent" } else { "convergent" },
        }));
    }
    Ok(json!({"gamma": gamma, "horizon": horizon, "rows": rows}))
}
