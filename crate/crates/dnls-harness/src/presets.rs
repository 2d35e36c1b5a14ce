//! Named parameter sets.

use std::path::PathBuf;

use dnls_core::model::MmsProfile;
use dnls_core::Scheme;

use crate::config::{DriverKind, ExperimentConfig, IcKind};
use crate::error::{HarnessError, Result};

pub const PRESET_NAMES: [&str; 7] = ["fig1", "fig1-sech", "fig4", "fig4-sech", "fig8N", "mms-gaussian", "mms-soliton"];

fn gaussian_driver(name: &str) -> ExperimentConfig {
    let mut c = ExperimentConfig { preset: Some(name.to_string()), ..Default::default() };
    c.outputs.dir = PathBuf::from(format!("runs/{name}"));
    c
}

fn algebraic_driver(name: &str) -> ExperimentConfig {
    let mut c = gaussian_driver(name);
    c.driver.kind = DriverKind::Algebraic;
    c.driver.amplitude = 1.5;
    c.driver.delta_x = 100.0;
    c.driver.delta_t = 0.5;
    c.driver.space_quadratic = 0.0;
    c.driver.time_quadratic = 0.0;
    // Same node spacing near the center as the L = 500 presets.
    c.l = 400.0;
    c.n = 3328;
    c.analysis.fit_time = 4.8;
    c
}

fn manufactured(name: &str, profile: MmsProfile, gamma: f64, n: usize, t_end: f64, tol: f64) -> ExperimentConfig {
    let mut c = gaussian_driver(name);
    c.gamma = gamma;
    c.driver.kind = DriverKind::Manufactured;
    c.mms.profile = profile;
    c.mms.amplitude = 1.0;
    c.mms.frequency = 0.5;
    c.mms.width = 1.0;
    c.ic = IcKind::Manufactured;
    c.l = 20.0;
    c.n = n;
    c.integrator.scheme = Scheme::Exponential;
    c.integrator.rel_tol = tol;
    c.integrator.abs_tol = tol;
    c.integrator.t_end = t_end;
    c.schedule.event_end = t_end;
    c.schedule.event_step = t_end / 20.0;
    c.outputs.plots = false;
    c
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    Ok(match name {
        "fig1" => gaussian_driver(name),
        "fig1-sech" => {
            let mut c = gaussian_driver(name);
            c.ic = IcKind::Sech;
            c
        }
        "fig4" => algebraic_driver(name),
        "fig4-sech" => {
            let mut c = algebraic_driver(name);
            c.ic = IcKind::Sech;
            c
        }
        "fig8N" => {
            let mut c = gaussian_driver(name);
            c.gamma = 0.0;
            c.integrator.t_end = 150.0;
            c
        }
        "mms-gaussian" => manufactured(name, MmsProfile::Gaussian, 0.01, 256, 2.0, 1e-9),
        "mms-soliton" => manufactured(name, MmsProfile::Sech, 0.0, 128, 1.0, 1e-12),
        other => {
            return Err(HarnessError::config(
                "preset",
                format!("unknown preset `{other}`; known presets: {}", PRESET_NAMES.join(", ")),
            ))
        }
    })
}
