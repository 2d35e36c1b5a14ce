//! Full-model integration: scheme selection, the explicit step bound and
//! the dense per-step series.

use std::sync::Arc;

use num_complex::Complex64;

use super::{run_adaptive, ExplicitKernel, IntegratorConfig, EtdKernel, ParityEigenBasis, RunStatus, StepObserver, StepStats};
use crate::error::{invalid, Result};
use crate::grid::{ChebGrid, DerivativeBackend, Differentiator};
use crate::model::{DriverSampler, FieldState, ModelParams, NlsRhs};

/// Explicit steps are capped at `EXPLICIT_STABILITY_FACTOR / ρ(D2_interior)`.
pub const EXPLICIT_STABILITY_FACTOR: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Dormand–Prince on the full right-hand side.
    #[default]
    Explicit,
    /// Exponential time differencing with the linear part integrated exactly.
    Exponential,
}

#[derive(Debug, Clone, Default)]
pub struct SolverOptions {
    pub scheme: Scheme,
    /// Derivative backend of the explicit scheme.
    pub backend: DerivativeBackend,
    /// Precomputed eigenbasis for the exponential scheme; built on demand otherwise.
    pub basis: Option<Arc<ParityEigenBasis>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub t: f64,
    /// `∫ |u|²`
    pub mass: f64,
    pub sup_density: f64,
    /// `Im ∫ f ū`
    pub drive_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<FieldState>,
    /// `(t, |u(0,t)|²)` at every accepted step.
    pub center_series: Vec<(f64, f64)>,
    pub norm_series: Vec<NormSample>,
    pub status: RunStatus,
    pub stats: StepStats,
}

impl Trajectory {
    /// Snapshot closest to `t`.
    pub fn snapshot_near(&self, t: f64) -> Option<&FieldState> {
        self.snapshots.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

/// Power iteration for the spectral radius of the interior second-derivative matrix.
pub fn d2_spectral_radius(diff: &mut Differentiator<'_>, iterations: usize) -> f64 {
    let n = diff.grid().interior_len();
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + (1.3 * i as f64).sin(), 0.0)).collect();
    let mut av = vec![Complex64::new(0.0, 0.0); n];
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= norm;
        }
        diff.second_interior(&v, &mut av);
        estimate = av.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut av);
    }
    estimate
}

struct SeriesObserver {
    center_row: Vec<f64>,
    weights: Vec<f64>,
    sampler: DriverSampler,
    forcing: Vec<Complex64>,
    center: Vec<(f64, f64)>,
    norms: Vec<NormSample>,
}

impl SeriesObserver {
    fn new(grid: &ChebGrid, params: &ModelParams) -> Result<Self> {
        let k = grid.interior_len();
        let row = grid.interpolation_row(0.0)?;
        Ok(Self {
            center_row: row[1..=k].to_vec(),
            weights: grid.qweights()[1..=k].to_vec(),
            sampler: DriverSampler::new(&params.driver, grid.interior_nodes()),
            forcing: vec![Complex64::new(0.0, 0.0); k],
            center: Vec::new(),
            norms: Vec::new(),
        })
    }
}

impl StepObserver for SeriesObserver {
    fn observe(&mut self, t: f64, y: &[Complex64]) -> Result<()> {
        let c: Complex64 = self.center_row.iter().zip(y).filter(|(r, _)| **r != 0.0).map(|(r, u)| u * *r).sum();
        self.center.push((t, c.norm_sqr()));
        let mut mass = 0.0;
        let mut sup: f64 = 0.0;
        for (w, u) in self.weights.iter().zip(y) {
            let d = u.norm_sqr();
            mass += w * d;
            sup = sup.max(d);
        }
        let drive_power = if self.sampler.is_zero() {
            0.0
        } else {
            self.sampler.sample_into(t, &mut self.forcing)?;
            self.weights.iter().zip(&self.forcing).zip(y).map(|((w, f), u)| w * (f * u.conj()).im).sum()
        };
        self.norms.push(NormSample { t, mass, sup_density: sup, drive_power });
        Ok(())
    }
}

/// Integrates the model from `initial` over `cfg.snapshot_times`.
pub fn simulate(
    grid: &ChebGrid,
    params: &ModelParams,
    initial: &FieldState,
    cfg: &IntegratorConfig,
    options: &SolverOptions,
) -> Result<Trajectory> {
    if initial.values.len() != grid.interior_len() {
        return Err(invalid("initial state does not match the grid"));
    }
    let mut observer = SeriesObserver::new(grid, params)?;
    let run = match options.scheme {
        Scheme::Explicit => {
            let mut system = NlsRhs::new(grid, params, options.backend);
            let dt_max = match cfg.dt_max {
                Some(v) => v,
                None => EXPLICIT_STABILITY_FACTOR / d2_spectral_radius(system.differentiator(), 200),
            };
            let mut kernel = ExplicitKernel::new(&mut system, initial.t, &initial.values)?;
            run_adaptive(&mut kernel, cfg, dt_max, &mut observer)?
        }
        Scheme::Exponential => {
            let owned;
            let basis = match &options.basis {
                Some(b) => b.as_ref(),
                None => {
                    owned = ParityEigenBasis::new(grid)?;
                    &owned
                }
            };
            let mut kernel = EtdKernel::new(basis, grid, params, initial.t, &initial.values)?;
            run_adaptive(&mut kernel, cfg, cfg.dt_max.unwrap_or(f64::INFINITY), &mut observer)?
        }
    };
    let snapshots = run.snapshots.into_iter().map(|(t, values)| FieldState { t, values }).collect();
    Ok(Trajectory {
        snapshots,
        center_series: observer.center,
        norm_series: observer.norms,
        status: run.status,
        stats: run.stats,
    })
}
