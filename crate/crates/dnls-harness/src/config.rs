//! Flat dotted-key experiment configuration.
//!
//! Documents are TOML; nested tables and dotted keys are flattened to paths
//! such as `driver.Gamma`, which are then applied on top of a preset.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

use dnls_core::analysis::SpatialWindow;
use dnls_core::integrator::uniform_schedule;
use dnls_core::model::{
    AlgebraicDriver, GaussianDriver, ManufacturedDriver, MmsFamily, MmsProfile, SampledProfile,
};
use dnls_core::{
    ChebGrid, DerivativeBackend, DriverSpec, FieldState, ICSpec, IntegratorConfig, ModelParams, Scheme,
    SpatialWeight, TimeWeight,
};
use num_complex::Complex64;
use toml::Value;

use crate::error::{HarnessError, Result};
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverKind {
    Gaussian,
    Algebraic,
    None,
    Manufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcKind {
    Algebraic,
    Sech,
    /// Two-column or three-column table `x,re[,im]`.
    File,
    /// The manufactured field at `t = 0`.
    Manufactured,
}

/// Which time weight multiplies the sup density in `K2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeWeightSource {
    /// Taken from the temporal envelope fit of the same run.
    Fitted,
    /// `(1 + γ(t+s0)/t0)^κ`
    Theory,
    /// `(1 + (t+s0)/t0)^κ` with the configured constants.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverSettings {
    pub kind: DriverKind,
    pub amplitude: f64,
    pub phase: f64,
    pub sigma_x: f64,
    pub sigma_t: f64,
    pub t_center: f64,
    pub delta_x: f64,
    pub delta_t: f64,
    pub space_quadratic: f64,
    pub time_quadratic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSettings {
    pub scheme: Scheme,
    pub backend: DerivativeBackend,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: Option<f64>,
    pub max_steps: usize,
    pub t_end: f64,
    pub blowup_threshold: f64,
}

/// Snapshot cadence: `event_step` up to `event_end`, `late_step` afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSettings {
    pub event_end: f64,
    pub event_step: f64,
    pub late_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSettings {
    /// Scale of the `LinearAbs` weight used by the decay checks.
    pub x0: f64,
    pub time: TimeWeightSource,
    pub time_t0: f64,
    pub time_s0: f64,
    pub time_kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSettings {
    pub fit_x_min: f64,
    pub fit_x_max: f64,
    pub fit_time: f64,
    pub peak_prominence: f64,
    pub event_t_lo: f64,
    pub event_t_hi: f64,
    pub temporal_kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub plots: bool,
    pub write_snapshots: bool,
    /// Every k-th snapshot is written; the one nearest `fit_time` always is.
    pub snapshot_stride: usize,
    pub heatmap_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub gamma: f64,
    pub driver: DriverSettings,
    pub mms: MmsFamily,
    pub ic: IcKind,
    pub ic_path: Option<PathBuf>,
    pub n: usize,
    pub l: f64,
    pub integrator: IntegratorSettings,
    pub schedule: ScheduleSettings,
    pub weights: WeightSettings,
    pub analysis: AnalysisSettings,
    pub outputs: OutputSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: None,
            gamma: 0.01,
            driver: DriverSettings {
                kind: DriverKind::Gaussian,
                amplitude: 1.0,
                phase: FRAC_PI_4,
                sigma_x: 100.0,
                sigma_t: 0.5,
                t_center: 0.0,
                delta_x: 100.0,
                delta_t: 0.5,
                space_quadratic: 0.0,
                time_quadratic: 0.0,
            },
            mms: MmsFamily { profile: MmsProfile::Gaussian, amplitude: 1.0, frequency: 0.5, width: 1.0 },
            ic: IcKind::Algebraic,
            ic_path: None,
            n: 4096,
            l: 500.0,
            integrator: IntegratorSettings {
                scheme: Scheme::Exponential,
                backend: DerivativeBackend::Dense,
                rel_tol: 1e-8,
                abs_tol: 1e-8,
                dt_init: 1e-4,
                dt_min: 1e-13,
                dt_max: None,
                max_steps: 10_000_000,
                t_end: 30.0,
                blowup_threshold: 1e6,
            },
            schedule: ScheduleSettings { event_end: 6.0, event_step: 0.02, late_step: 0.5 },
            weights: WeightSettings {
                x0: 100.0,
                time: TimeWeightSource::Fitted,
                time_t0: 24.06,
                time_s0: 0.0,
                time_kappa: 2.0,
            },
            analysis: AnalysisSettings {
                fit_x_min: 50.0,
                fit_x_max: 150.0,
                fit_time: 5.3,
                peak_prominence: 0.05,
                event_t_lo: 0.0,
                event_t_hi: 6.0,
                temporal_kappa: 2.0,
            },
            outputs: OutputSettings {
                dir: PathBuf::from("runs/default"),
                plots: true,
                write_snapshots: true,
                snapshot_stride: 5,
                heatmap_half_width: 50.0,
            },
        }
    }
}

fn mismatch(key: &str, want: &str, got: &Value) -> HarnessError {
    HarnessError::config(key, format!("expected {want}, found {}", got.type_str()))
}

fn float(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(mismatch(key, "a number", other)),
    }
}

fn count(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(i) => Err(HarnessError::config(key, format!("expected a non-negative integer, found {i}"))),
        other => Err(mismatch(key, "an integer", other)),
    }
}

fn text<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| mismatch(key, "a string", v))
}

fn flag(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| mismatch(key, "a boolean", v))
}

fn choice<T: Copy>(key: &str, v: &Value, options: &[(&str, T)]) -> Result<T> {
    let s = text(key, v)?;
    options.iter().find(|(name, _)| *name == s).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        HarnessError::config(key, format!("unknown value `{s}`; expected one of {}", names.join(", ")))
    })
}

fn name_of<T: PartialEq>(value: &T, options: &[(&'static str, T)]) -> &'static str {
    options.iter().find(|(_, t)| t == value).map(|(n, _)| *n).unwrap_or("?")
}

const DRIVER_KINDS: [(&str, DriverKind); 4] = [
    ("gaussian", DriverKind::Gaussian),
    ("algebraic", DriverKind::Algebraic),
    ("none", DriverKind::None),
    ("manufactured", DriverKind::Manufactured),
];
const IC_KINDS: [(&str, IcKind); 4] = [
    ("algebraic", IcKind::Algebraic),
    ("sech", IcKind::Sech),
    ("file", IcKind::File),
    ("manufactured", IcKind::Manufactured),
];
const MMS_PROFILES: [(&str, MmsProfile); 2] = [("gaussian", MmsProfile::Gaussian), ("sech", MmsProfile::Sech)];
const SCHEMES: [(&str, Scheme); 2] = [("explicit", Scheme::Explicit), ("exponential", Scheme::Exponential)];
const BACKENDS: [(&str, DerivativeBackend); 2] =
    [("dense", DerivativeBackend::Dense), ("transform", DerivativeBackend::Transform)];
const TIME_SOURCES: [(&str, TimeWeightSource); 3] = [
    ("fitted", TimeWeightSource::Fitted),
    ("theory", TimeWeightSource::Theory),
    ("fixed", TimeWeightSource::Fixed),
];

/// Flattens nested tables into dotted paths.
pub fn flatten(table: &toml::Table) -> BTreeMap<String, Value> {
    fn walk(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
        for (k, v) in table {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match v {
                Value::Table(t) => walk(&path, t, out),
                other => {
                    out.insert(path, other.clone());
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    walk("", table, &mut out);
    out
}

pub fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| HarnessError::config("<document>", e.message().to_string()))
}

/// Parses a config document; `preset_override` wins over a `preset` key.
pub fn parse_config(text: &str, preset_override: Option<&str>) -> Result<ExperimentConfig> {
    let flat = flatten(&parse_table(text)?);
    from_flat(&flat, preset_override)
}

pub(crate) fn from_flat(flat: &BTreeMap<String, Value>, preset_override: Option<&str>) -> Result<ExperimentConfig> {
    let named = match flat.get("preset") {
        Some(v) => Some(text("preset", v)?.to_string()),
        None => None,
    };
    let mut cfg = match preset_override.map(str::to_string).or(named) {
        Some(name) => presets::preset(&name)?,
        None => ExperimentConfig::default(),
    };
    for (key, value) in flat {
        if key != "preset" {
            cfg.set(key, value)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Assigns one dotted key; unknown keys and type mismatches are errors.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        let d = &mut self.driver;
        let it = &mut self.integrator;
        let an = &mut self.analysis;
        match key {
            "model.gamma" => self.gamma = float(key, v)?,
            "driver.kind" => d.kind = choice(key, v, &DRIVER_KINDS)?,
            "driver.Gamma" => d.amplitude = float(key, v)?,
            "driver.Theta" => d.phase = float(key, v)?,
            "driver.sigma_x" => d.sigma_x = float(key, v)?,
            "driver.sigma_t" => d.sigma_t = float(key, v)?,
            "driver.t_center" => d.t_center = float(key, v)?,
            "driver.delta_x" => d.delta_x = float(key, v)?,
            "driver.delta_t" => d.delta_t = float(key, v)?,
            "driver.theta" => d.space_quadratic = float(key, v)?,
            "driver.omega" => d.time_quadratic = float(key, v)?,
            "mms.profile" => self.mms.profile = choice(key, v, &MMS_PROFILES)?,
            "mms.amplitude" => self.mms.amplitude = float(key, v)?,
            "mms.frequency" => self.mms.frequency = float(key, v)?,
            "mms.width" => self.mms.width = float(key, v)?,
            "ic.kind" => self.ic = choice(key, v, &IC_KINDS)?,
            "ic.path" => self.ic_path = Some(PathBuf::from(text(key, v)?)),
            "grid.N" => self.n = count(key, v)?,
            "grid.L" => self.l = float(key, v)?,
            "integrator.scheme" => it.scheme = choice(key, v, &SCHEMES)?,
            "integrator.backend" => it.backend = choice(key, v, &BACKENDS)?,
            "integrator.rel_tol" => it.rel_tol = float(key, v)?,
            "integrator.abs_tol" => it.abs_tol = float(key, v)?,
            "integrator.dt_init" => it.dt_init = float(key, v)?,
            "integrator.dt_min" => it.dt_min = float(key, v)?,
            "integrator.dt_max" => it.dt_max = Some(float(key, v)?),
            "integrator.max_steps" => it.max_steps = count(key, v)?,
            "integrator.t_end" => it.t_end = float(key, v)?,
            "integrator.blowup_threshold" => it.blowup_threshold = float(key, v)?,
            "schedule.event_end" => self.schedule.event_end = float(key, v)?,
            "schedule.event_step" => self.schedule.event_step = float(key, v)?,
            "schedule.late_step" => self.schedule.late_step = float(key, v)?,
            "weights.x0" => self.weights.x0 = float(key, v)?,
            "weights.time" => self.weights.time = choice(key, v, &TIME_SOURCES)?,
            "weights.time_t0" => self.weights.time_t0 = float(key, v)?,
            "weights.time_s0" => self.weights.time_s0 = float(key, v)?,
            "weights.time_kappa" => self.weights.time_kappa = float(key, v)?,
            "analysis.fit_x_min" => an.fit_x_min = float(key, v)?,
            "analysis.fit_x_max" => an.fit_x_max = float(key, v)?,
            "analysis.fit_time" => an.fit_time = float(key, v)?,
            "analysis.peak_prominence" => an.peak_prominence = float(key, v)?,
            "analysis.event_t_lo" => an.event_t_lo = float(key, v)?,
            "analysis.event_t_hi" => an.event_t_hi = float(key, v)?,
            "analysis.temporal_kappa" => an.temporal_kappa = float(key, v)?,
            "outputs.dir" => self.outputs.dir = PathBuf::from(text(key, v)?),
            "outputs.plots" => self.outputs.plots = flag(key, v)?,
            "outputs.write_snapshots" => self.outputs.write_snapshots = flag(key, v)?,
            "outputs.snapshot_stride" => self.outputs.snapshot_stride = count(key, v)?,
            "outputs.heatmap_half_width" => self.outputs.heatmap_half_width = float(key, v)?,
            _ => return Err(HarnessError::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Every key with its current value, in the order of the key table.
    pub fn entries(&self) -> Vec<(&'static str, Value)> {
        let d = &self.driver;
        let it = &self.integrator;
        let an = &self.analysis;
        let s = |v: &str| Value::String(v.to_string());
        let f = Value::Float;
        let i = |n: usize| Value::Integer(n as i64);
        let mut out = vec![
            ("model.gamma", f(self.gamma)),
            ("driver.kind", s(name_of(&d.kind, &DRIVER_KINDS))),
            ("driver.Gamma", f(d.amplitude)),
            ("driver.Theta", f(d.phase)),
            ("driver.sigma_x", f(d.sigma_x)),
            ("driver.sigma_t", f(d.sigma_t)),
            ("driver.t_center", f(d.t_center)),
            ("driver.delta_x", f(d.delta_x)),
            ("driver.delta_t", f(d.delta_t)),
            ("driver.theta", f(d.space_quadratic)),
            ("driver.omega", f(d.time_quadratic)),
            ("mms.profile", s(name_of(&self.mms.profile, &MMS_PROFILES))),
            ("mms.amplitude", f(self.mms.amplitude)),
            ("mms.frequency", f(self.mms.frequency)),
            ("mms.width", f(self.mms.width)),
            ("ic.kind", s(name_of(&self.ic, &IC_KINDS))),
        ];
        if let Some(p) = &self.ic_path {
            out.push(("ic.path", s(&p.to_string_lossy())));
        }
        out.extend([
            ("grid.N", i(self.n)),
            ("grid.L", f(self.l)),
            ("integrator.scheme", s(name_of(&it.scheme, &SCHEMES))),
            ("integrator.backend", s(name_of(&it.backend, &BACKENDS))),
            ("integrator.rel_tol", f(it.rel_tol)),
            ("integrator.abs_tol", f(it.abs_tol)),
            ("integrator.dt_init", f(it.dt_init)),
            ("integrator.dt_min", f(it.dt_min)),
        ]);
        if let Some(m) = it.dt_max {
            out.push(("integrator.dt_max", f(m)));
        }
        out.extend([
            ("integrator.max_steps", i(it.max_steps)),
            ("integrator.t_end", f(it.t_end)),
            ("integrator.blowup_threshold", f(it.blowup_threshold)),
            ("schedule.event_end", f(self.schedule.event_end)),
            ("schedule.event_step", f(self.schedule.event_step)),
            ("schedule.late_step", f(self.schedule.late_step)),
            ("weights.x0", f(self.weights.x0)),
            ("weights.time", s(name_of(&self.weights.time, &TIME_SOURCES))),
            ("weights.time_t0", f(self.weights.time_t0)),
            ("weights.time_s0", f(self.weights.time_s0)),
            ("weights.time_kappa", f(self.weights.time_kappa)),
            ("analysis.fit_x_min", f(an.fit_x_min)),
            ("analysis.fit_x_max", f(an.fit_x_max)),
            ("analysis.fit_time", f(an.fit_time)),
            ("analysis.peak_prominence", f(an.peak_prominence)),
            ("analysis.event_t_lo", f(an.event_t_lo)),
            ("analysis.event_t_hi", f(an.event_t_hi)),
            ("analysis.temporal_kappa", f(an.temporal_kappa)),
            ("outputs.dir", s(&self.outputs.dir.to_string_lossy())),
            ("outputs.plots", Value::Boolean(self.outputs.plots)),
            ("outputs.write_snapshots", Value::Boolean(self.outputs.write_snapshots)),
            ("outputs.snapshot_stride", i(self.outputs.snapshot_stride)),
            ("outputs.heatmap_half_width", f(self.outputs.heatmap_half_width)),
        ]);
        out
    }

    /// Canonical document: one `key = value` line per entry, keys quoted.
    pub fn to_document(&self) -> String {
        let mut doc = String::new();
        if let Some(p) = &self.preset {
            doc.push_str(&format!("# preset {p}\n"));
        }
        for (k, v) in self.entries() {
            doc.push_str(&format!("\"{k}\" = {v}\n"));
        }
        doc
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(HarnessError::config(key, format!("must be positive and finite, got {v}")))
            }
        };
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(HarnessError::config("model.gamma", format!("must be non-negative, got {}", self.gamma)));
        }
        self.driver_spec().validate().map_err(|e| HarnessError::config("driver", e.to_string()))?;
        if self.ic == IcKind::File && self.ic_path.is_none() {
            return Err(HarnessError::config("ic.path", "required when ic.kind = \"file\""));
        }
        if self.ic == IcKind::Manufactured && self.driver.kind != DriverKind::Manufactured {
            return Err(HarnessError::config("ic.kind", "the manufactured IC needs driver.kind = \"manufactured\""));
        }
        if self.n < 8 || self.n % 2 != 0 {
            return Err(HarnessError::config("grid.N", format!("must be even and at least 8, got {}", self.n)));
        }
        positive("grid.L", self.l)?;
        positive("integrator.t_end", self.integrator.t_end)?;
        positive("schedule.event_step", self.schedule.event_step)?;
        positive("schedule.late_step", self.schedule.late_step)?;
        if !(self.schedule.event_end >= 0.0) {
            return Err(HarnessError::config("schedule.event_end", "must be non-negative"));
        }
        self.integrator_config()
            .validate(0.0)
            .map_err(|e| HarnessError::config("integrator", e.to_string()))?;
        positive("weights.x0", self.weights.x0)?;
        if self.weights.time != TimeWeightSource::Fitted {
            self.fixed_time_weight().map_err(|e| HarnessError::config("weights", e.to_string()))?;
        }
        let an = &self.analysis;
        if !(an.fit_x_max > an.fit_x_min && an.fit_x_min >= 0.0) {
            return Err(HarnessError::config("analysis.fit_x_max", "fit window must satisfy 0 <= fit_x_min < fit_x_max"));
        }
        if !(an.event_t_hi > an.event_t_lo) {
            return Err(HarnessError::config("analysis.event_t_hi", "event window is empty"));
        }
        if !(an.peak_prominence >= 0.0) {
            return Err(HarnessError::config("analysis.peak_prominence", "must be non-negative"));
        }
        if !(an.temporal_kappa >= 1.0) {
            return Err(HarnessError::config("analysis.temporal_kappa", "must be at least 1"));
        }
        if self.outputs.snapshot_stride == 0 {
            return Err(HarnessError::config("outputs.snapshot_stride", "must be at least 1"));
        }
        if self.outputs.dir.as_os_str().is_empty() {
            return Err(HarnessError::config("outputs.dir", "must not be empty"));
        }
        positive("outputs.heatmap_half_width", self.outputs.heatmap_half_width)?;
        Ok(())
    }

    pub fn driver_spec(&self) -> DriverSpec {
        let d = &self.driver;
        match d.kind {
            DriverKind::Gaussian => DriverSpec::Gaussian(GaussianDriver {
                amplitude: d.amplitude,
                sigma_x: d.sigma_x,
                sigma_t: d.sigma_t,
                phase: d.phase,
                t_center: d.t_center,
            }),
            DriverKind::Algebraic => DriverSpec::Algebraic(AlgebraicDriver {
                amplitude: d.amplitude,
                delta_x: d.delta_x,
                delta_t: d.delta_t,
                space_quadratic: d.space_quadratic,
                time_quadratic: d.time_quadratic,
                phase: d.phase,
            }),
            DriverKind::None => DriverSpec::None,
            DriverKind::Manufactured => {
                DriverSpec::Manufactured(ManufacturedDriver { family: self.mms, gamma: self.gamma })
            }
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.gamma, self.driver_spec())?)
    }

    pub fn grid(&self) -> Result<ChebGrid> {
        Ok(ChebGrid::new(self.n, self.l)?)
    }

    pub fn initial_state(&self, grid: &ChebGrid) -> Result<FieldState> {
        let spec = match self.ic {
            IcKind::Algebraic => ICSpec::Algebraic,
            IcKind::Sech => ICSpec::Sech,
            IcKind::Manufactured => {
                let fam = self.mms;
                return Ok(FieldState::from_fn(grid, 0.0, |x| fam.field(x, 0.0)));
            }
            IcKind::File => {
                let path = self.ic_path.clone().ok_or_else(|| HarnessError::config("ic.path", "missing"))?;
                ICSpec::File(load_profile(&path)?)
            }
        };
        Ok(dnls_core::model::initial_state(&spec, grid)?)
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        let t_end = self.integrator.t_end;
        let s = &self.schedule;
        let split = s.event_end.min(t_end);
        let mut times = if split > 0.0 { uniform_schedule(0.0, split, s.event_step) } else { vec![0.0] };
        if t_end > split {
            let late = uniform_schedule(split, t_end, s.late_step);
            times.extend(late.into_iter().skip(1));
        }
        times
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        let it = &self.integrator;
        IntegratorConfig {
            rel_tol: it.rel_tol,
            abs_tol: it.abs_tol,
            dt_init: it.dt_init,
            dt_min: it.dt_min,
            dt_max: it.dt_max,
            max_steps: it.max_steps,
            snapshot_times: self.snapshot_times(),
            blowup_threshold: it.blowup_threshold,
        }
    }

    pub fn spatial_weight(&self) -> SpatialWeight {
        SpatialWeight::LinearAbs { x0: self.weights.x0 }
    }

    /// The configured time weight when it does not come from a fit.
    pub fn fixed_time_weight(&self) -> dnls_core::Result<TimeWeight> {
        let w = &self.weights;
        match w.time {
            TimeWeightSource::Theory => TimeWeight::theory(w.time_t0, w.time_kappa, self.gamma),
            _ => TimeWeight::fitted(w.time_t0, w.time_kappa, w.time_s0),
        }
    }

    pub fn fit_window(&self) -> SpatialWindow {
        SpatialWindow { x_min: self.analysis.fit_x_min, x_max: self.analysis.fit_x_max }
    }
}

/// Reads an `x,re[,im]` table with an optional header line.
pub fn load_profile(path: &std::path::Path) -> Result<SampledProfile> {
    let body = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut xs = Vec::new();
    let mut vals = Vec::new();
    for (k, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(nums) if nums.len() == 2 || nums.len() == 3 => {
                xs.push(nums[0]);
                vals.push(Complex64::new(nums[1], nums.get(2).copied().unwrap_or(0.0)));
            }
            Err(_) if k == 0 => continue,
            _ => return Err(HarnessError::data(path, format!("line {}: expected x,re[,im]", k + 1))),
        }
    }
    SampledProfile::new(xs, vals).map_err(|e| HarnessError::data(path, e.to_string()))
}
