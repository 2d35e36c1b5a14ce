//! Adaptive Dormand–Prince 5(4) integration with snapshot scheduling and
//! blow-up detection.

mod exponential;
mod trajectory;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub use exponential::{EtdKernel, ParityEigenBasis};
pub use trajectory::{
    d2_spectral_radius, simulate, NormSample, Scheme, SolverOptions, Trajectory, EXPLICIT_STABILITY_FACTOR,
};

/// A complex first-order system `y' = F(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) -> Result<()>;
}

/// Adapts a closure into an [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> OdeSystem for FnSystem<F>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) -> Result<()> {
        (self.f)(t, y, dy);
        crate::model::check_finite(dy, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub abs_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    /// `None` selects the scheme's default bound.
    pub dt_max: Option<f64>,
    /// Budget of attempted steps.
    pub max_steps: usize,
    /// Output times; the last one is the final time.
    pub snapshot_times: Vec<f64>,
    /// Cap on `max |u|²`.
    pub blowup_threshold: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-8,
            dt_init: 1e-4,
            dt_min: 1e-13,
            dt_max: None,
            max_steps: 100_000_000,
            snapshot_times: Vec::new(),
            blowup_threshold: 1e6,
        }
    }
}

impl IntegratorConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { rel_tol: self.rel_tol, abs_tol: self.abs_tol }
    }

    pub fn final_time(&self) -> Option<f64> {
        self.snapshot_times.last().copied()
    }

    pub fn validate(&self, t0: f64) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if !(self.dt_min > 0.0 && self.dt_init > 0.0) {
            return Err(invalid("dt_min and dt_init must be positive"));
        }
        if let Some(m) = self.dt_max {
            if !(m >= self.dt_min) {
                return Err(invalid(format!("dt_max {m} is below dt_min {}", self.dt_min)));
            }
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(invalid("blowup threshold must be positive"));
        }
        if self.snapshot_times.is_empty() {
            return Err(invalid("at least one snapshot time is required"));
        }
        if self.snapshot_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("snapshot times must be strictly increasing"));
        }
        if self.snapshot_times[0] < t0 {
            return Err(invalid(format!("snapshot time {} precedes the initial time {t0}", self.snapshot_times[0])));
        }
        Ok(())
    }
}

/// Uniform output schedule `t0, t0 + every, ...` up to `t_end` inclusive.
pub fn uniform_schedule(t0: f64, t_end: f64, every: f64) -> Vec<f64> {
    let count = ((t_end - t0) / every + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=count).map(|k| t0 + every * k as f64).collect();
    if let Some(last) = out.last_mut() {
        if (t_end - *last).abs() < 1e-9 * every {
            *last = t_end;
        } else if *last < t_end {
            out.push(t_end);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    Blowup { t: f64 },
    StepBudgetExhausted { t: f64 },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Blowup { .. } => "blowup",
            RunStatus::StepBudgetExhausted { .. } => "step-budget-exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand–Prince 5(4) tableau.
pub(crate) const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
pub(crate) const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
pub(crate) const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

pub(crate) fn error_norm(err: &[Complex64], y_new: &[Complex64], tol: Tolerances) -> f64 {
    err.iter()
        .zip(y_new)
        .map(|(e, y)| e.norm() / (tol.abs_tol + tol.rel_tol * y.norm()))
        .fold(0.0, f64::max)
}

/// One Dormand–Prince step from `(t, y)`; returns the fifth-order solution
/// and the scaled error estimate.
pub fn step<S: OdeSystem>(
    system: &mut S,
    y: &[Complex64],
    t: f64,
    dt: f64,
    tol: Tolerances,
) -> Result<(Vec<Complex64>, f64)> {
    if !(dt > 0.0) {
        return Err(invalid(format!("step size must be positive, got {dt}")));
    }
    let mut kernel = ExplicitKernel::new(system, t, y)?;
    let mut y_new = vec![Complex64::new(0.0, 0.0); y.len()];
    let err = kernel.attempt(dt, tol, &mut y_new)?;
    Ok((y_new, err))
}

/// A single-step method driven by [`run_adaptive`]. The kernel owns the
/// current accepted state.
pub trait StepKernel {
    fn dim(&self) -> usize;
    fn time(&self) -> f64;
    fn state(&self) -> &[Complex64];
    /// Tries a step of size `h`; writes the candidate and returns the scaled error.
    fn attempt(&mut self, h: f64, tol: Tolerances, y_new: &mut [Complex64]) -> Result<f64>;
    /// Commits the most recent attempt.
    fn accept(&mut self);
    /// Overrides the current time; used to land exactly on output times.
    fn set_time(&mut self, t: f64);
}

/// Explicit Dormand–Prince kernel with first-same-as-last reuse.
pub struct ExplicitKernel<'s, S: OdeSystem> {
    system: &'s mut S,
    t: f64,
    h: f64,
    y: Vec<Complex64>,
    y_new: Vec<Complex64>,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    err: Vec<Complex64>,
}

impl<'s, S: OdeSystem> ExplicitKernel<'s, S> {
    pub fn new(system: &'s mut S, t: f64, y: &[Complex64]) -> Result<Self> {
        let n = system.dim();
        if y.len() != n {
            return Err(invalid(format!("state has {} components, system has {n}", y.len())));
        }
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let mut k: [Vec<Complex64>; 7] = std::array::from_fn(|_| zero.clone());
        system.eval(t, y, &mut k[0])?;
        Ok(Self { system, t, h: 0.0, y: y.to_vec(), y_new: zero.clone(), k, stage: zero.clone(), err: zero })
    }
}

impl<S: OdeSystem> StepKernel for ExplicitKernel<'_, S> {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn time(&self) -> f64 {
        self.t
    }

    fn state(&self) -> &[Complex64] {
        &self.y
    }

    fn attempt(&mut self, h: f64, tol: Tolerances, y_new: &mut [Complex64]) -> Result<f64> {
        let n = self.y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += self.k[j][i] * *a;
                    }
                }
                self.stage[i] = self.y[i] + acc * h;
            }
            if s == 6 {
                self.y_new.copy_from_slice(&self.stage);
            }
            let tail = &mut self.k[s..];
            self.system.eval(self.t + C[s] * h, &self.stage, &mut tail[0])?;
        }
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, e) in E.iter().enumerate() {
                if *e != 0.0 {
                    acc += self.k[j][i] * *e;
                }
            }
            self.err[i] = acc * h;
        }
        self.h = h;
        y_new.copy_from_slice(&self.y_new);
        Ok(error_norm(&self.err, &self.y_new, tol))
    }

    fn accept(&mut self) {
        std::mem::swap(&mut self.y, &mut self.y_new);
        self.k.swap(0, 6);
        self.t += self.h;
    }

    fn set_time(&mut self, t: f64) {
        self.t = t;
    }
}

/// Receives every accepted state, including the initial one.
pub trait StepObserver {
    fn observe(&mut self, t: f64, y: &[Complex64]) -> Result<()>;
}

impl StepObserver for () {
    fn observe(&mut self, _t: f64, _y: &[Complex64]) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    pub snapshots: Vec<(f64, Vec<Complex64>)>,
    pub status: RunStatus,
    pub stats: StepStats,
}

const SAFETY: f64 = 0.9;
const MIN_RATIO: f64 = 0.2;
const MAX_RATIO: f64 = 5.0;

fn sup_modulus_sq(y: &[Complex64]) -> f64 {
    y.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
}

/// Accept/reject control loop with exact landing on every snapshot time.
pub fn run_adaptive<K: StepKernel, O: StepObserver>(
    kernel: &mut K,
    cfg: &IntegratorConfig,
    dt_max: f64,
    observer: &mut O,
) -> Result<AdaptiveRun> {
    let t0 = kernel.time();
    cfg.validate(t0)?;
    let tol = cfg.tolerances();
    let mut snapshots = Vec::with_capacity(cfg.snapshot_times.len());
    let mut stats = StepStats::default();
    let mut y_new = vec![Complex64::new(0.0, 0.0); kernel.dim()];
    let mut dt = cfg.dt_init.min(dt_max);
    let mut attempts = 0usize;

    observer.observe(t0, kernel.state())?;
    if sup_modulus_sq(kernel.state()) > cfg.blowup_threshold {
        return Ok(AdaptiveRun { snapshots, status: RunStatus::Blowup { t: t0 }, stats });
    }
    for &target in &cfg.snapshot_times {
        while kernel.time() < target {
            if attempts >= cfg.max_steps {
                let status = RunStatus::StepBudgetExhausted { t: kernel.time() };
                return Ok(AdaptiveRun { snapshots, status, stats });
            }
            attempts += 1;
            let t = kernel.time();
            let remaining = target - t;
            // Land exactly on the target when the remainder is within a hair of dt.
            let clipped = dt * (1.0 + 1e-12) >= remaining;
            let h = if clipped { remaining } else { dt };
            let err = match kernel.attempt(h, tol, &mut y_new) {
                Ok(e) if e.is_finite() => e,
                Ok(_) | Err(Error::NumericOverflow { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if err <= 1.0 {
                kernel.accept();
                stats.accepted += 1;
                if clipped {
                    kernel.set_time(target);
                }
                let ratio = if err == 0.0 { MAX_RATIO } else { (SAFETY * err.powf(-0.2)).clamp(MIN_RATIO, MAX_RATIO) };
                if !clipped || h >= dt {
                    dt = (h * ratio).min(dt_max);
                }
                observer.observe(kernel.time(), kernel.state())?;
                if sup_modulus_sq(kernel.state()) > cfg.blowup_threshold {
                    return Ok(AdaptiveRun { snapshots, status: RunStatus::Blowup { t: kernel.time() }, stats });
                }
            } else {
                stats.rejected += 1;
                let ratio = if err.is_finite() { (SAFETY * err.powf(-0.2)).clamp(MIN_RATIO, 1.0) } else { MIN_RATIO };
                dt = h * ratio;
                if dt < cfg.dt_min {
                    let max_modulus = sup_modulus_sq(kernel.state()).sqrt();
                    return Err(Error::StepUnderflow { t, dt, max_modulus });
                }
            }
        }
        snapshots.push((kernel.time(), kernel.state().to_vec()));
    }
    Ok(AdaptiveRun { snapshots, status: RunStatus::Completed, stats })
}

/// Integrates a generic system over the configured snapshot schedule.
pub fn integrate<S: OdeSystem>(
    system: &mut S,
    t0: f64,
    y0: &[Complex64],
    cfg: &IntegratorConfig,
) -> Result<AdaptiveRun> {
    let dt_max = cfg.dt_max.unwrap_or(f64::INFINITY);
    let mut kernel = ExplicitKernel::new(system, t0, y0)?;
    run_adaptive(&mut kernel, cfg, dt_max, &mut ())
}

/// Fixed-step integration, used for order verification.
pub fn integrate_fixed<S: OdeSystem>(
    system: &mut S,
    t0: f64,
    y0: &[Complex64],
    dt: f64,
    steps: usize,
) -> Result<Vec<Complex64>> {
    let tol = Tolerances { rel_tol: 1.0, abs_tol: 1.0 };
    let mut kernel = ExplicitKernel::new(system, t0, y0)?;
    let mut y_new = vec![Complex64::new(0.0, 0.0); y0.len()];
    for _ in 0..steps {
        kernel.attempt(dt, tol, &mut y_new)?;
        kernel.accept();
    }
    Ok(kernel.state().to_vec())
}
