//! Closed-form pieces of the damped driven NLS
//! `i u_t + ½ u_xx + |u|² u = f − iγu`: forcing terms, initial data,
//! the Peregrine reference profile and the collocated right-hand side.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{ChebGrid, DerivativeBackend, Differentiator};
use crate::integrator::OdeSystem;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gamma: f64,
    pub driver: DriverSpec,
}

impl ModelParams {
    pub fn new(gamma: f64, driver: DriverSpec) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("damping must be a finite value >= 0, got {gamma}")));
        }
        driver.validate()?;
        if let DriverSpec::Manufactured(m) = &driver {
            if m.gamma != gamma {
                return Err(invalid("manufactured forcing was built for a different damping"));
            }
        }
        Ok(Self { gamma, driver })
    }

    pub fn undriven(gamma: f64) -> Result<Self> {
        Self::new(gamma, DriverSpec::None)
    }
}

/// Field values at the interior nodes at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub values: Vec<Complex64>,
}

impl FieldState {
    pub fn new(t: f64, values: Vec<Complex64>) -> Result<Self> {
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericOverflow { t });
        }
        Ok(Self { t, values })
    }

    pub fn zeros(grid: &ChebGrid, t: f64) -> Self {
        Self { t, values: vec![Complex64::new(0.0, 0.0); grid.interior_len()] }
    }

    /// Samples a closed-form field at the interior nodes.
    pub fn from_fn(grid: &ChebGrid, t: f64, f: impl Fn(f64) -> Complex64) -> Self {
        Self { t, values: grid.interior_nodes().iter().map(|&x| f(x)).collect() }
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn sup_density(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max)
    }

    fn check_len(&self, grid: &ChebGrid) -> Result<()> {
        if self.values.len() != grid.interior_len() {
            return Err(invalid(format!(
                "state has {} values, grid has {} interior nodes",
                self.values.len(),
                grid.interior_len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDriver {
    pub amplitude: f64,
    pub sigma_x: f64,
    pub sigma_t: f64,
    pub phase: f64,
    pub t_center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraicDriver {
    pub amplitude: f64,
    pub delta_x: f64,
    pub delta_t: f64,
    /// Coefficient of the quadratic term of the spatial factor.
    pub space_quadratic: f64,
    /// Coefficient of the quadratic term of the temporal factor.
    pub time_quadratic: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsProfile {
    /// `exp(-x²/2w²)`
    Gaussian,
    /// `sech(x/w)`
    Sech,
}

/// Manufactured solution `A e^{iat} p(x/w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsFamily {
    pub profile: MmsProfile,
    pub amplitude: f64,
    pub frequency: f64,
    pub width: f64,
}

impl MmsFamily {
    fn shape(&self, x: f64) -> (f64, f64) {
        let w = self.width;
        match self.profile {
            MmsProfile::Gaussian => {
                let p = (-x * x / (2.0 * w * w)).exp();
                (p, (x * x / w.powi(4) - 1.0 / (w * w)) * p)
            }
            MmsProfile::Sech => {
                let s = 1.0 / (x / w).cosh();
                (s, (s - 2.0 * s * s * s) / (w * w))
            }
        }
    }

    /// Exact field.
    pub fn field(&self, x: f64, t: f64) -> Complex64 {
        let (p, _) = self.shape(x);
        Complex64::from_polar(self.amplitude * p, self.frequency * t)
    }

    /// Spatial part `h(x)` of the forcing `f_m = e^{iat} h(x)`.
    fn forcing_profile(&self, gamma: f64, x: f64) -> Complex64 {
        let a = self.amplitude;
        let (p, pxx) = self.shape(x);
        let re = -self.frequency * a * p + 0.5 * a * pxx + a * a * a * p * p * p;
        Complex64::new(re, gamma * a * p)
    }
}

/// Forcing that makes the manufactured field an exact solution.
pub fn mms_forcing(family: &MmsFamily, gamma: f64, x: f64, t: f64) -> Complex64 {
    family.forcing_profile(gamma, x) * Complex64::from_polar(1.0, family.frequency * t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedDriver {
    pub family: MmsFamily,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum DriverSpec {
    Gaussian(GaussianDriver),
    Algebraic(AlgebraicDriver),
    #[default]
    None,
    Manufactured(ManufacturedDriver),
}

impl DriverSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("driver {name} must be positive, got {v}")))
            }
        };
        match self {
            DriverSpec::Gaussian(g) => {
                positive("amplitude", g.amplitude)?;
                positive("sigma_x", g.sigma_x)?;
                positive("sigma_t", g.sigma_t)
            }
            DriverSpec::Algebraic(a) => {
                positive("amplitude", a.amplitude)?;
                positive("delta_x", a.delta_x)?;
                positive("delta_t", a.delta_t)?;
                if !(a.space_quadratic >= 0.0 && a.time_quadratic >= 0.0) {
                    return Err(invalid("algebraic driver quadratic coefficients must be >= 0"));
                }
                Ok(())
            }
            DriverSpec::None => Ok(()),
            DriverSpec::Manufactured(m) => {
                positive("manufactured width", m.family.width)?;
                if m.gamma < 0.0 {
                    return Err(invalid("manufactured forcing damping must be >= 0"));
                }
                Ok(())
            }
        }
    }

    /// Complex spatial profile `h(x)`; every driver factors as `g(t) h(x)`.
    pub fn spatial_profile(&self, x: f64) -> Complex64 {
        match self {
            DriverSpec::Gaussian(g) => {
                let m = SQRT_2 * g.amplitude * (-x * x / (2.0 * g.sigma_x * g.sigma_x)).exp();
                Complex64::from_polar(m, g.phase)
            }
            DriverSpec::Algebraic(a) => {
                let r = (x / a.delta_x).abs();
                let xf = 1.0 + r + a.space_quadratic * r * r;
                Complex64::from_polar(SQRT_2 * a.amplitude / (xf * xf), a.phase)
            }
            DriverSpec::None => Complex64::new(0.0, 0.0),
            DriverSpec::Manufactured(m) => m.family.forcing_profile(m.gamma, x),
        }
    }

    /// Temporal factor `g(t)`.
    pub fn temporal_factor(&self, t: f64) -> Result<Complex64> {
        Ok(match self {
            DriverSpec::Gaussian(g) => {
                let s = (t - g.t_center) / g.sigma_t;
                Complex64::new((-0.5 * s * s).exp(), 0.0)
            }
            DriverSpec::Algebraic(a) => {
                if t < 0.0 {
                    return Err(invalid(format!("algebraic driver is defined for t >= 0, got {t}")));
                }
                let s = t / a.delta_t;
                let tf = 1.0 + s + a.time_quadratic * s * s;
                Complex64::new(1.0 / (tf * tf), 0.0)
            }
            DriverSpec::None => Complex64::new(1.0, 0.0),
            DriverSpec::Manufactured(m) => Complex64::from_polar(1.0, m.family.frequency * t),
        })
    }

    /// Analytic `dg/dt`.
    pub fn temporal_factor_dt(&self, t: f64) -> Result<Complex64> {
        Ok(match self {
            DriverSpec::Gaussian(g) => {
                let s = (t - g.t_center) / g.sigma_t;
                Complex64::new(-s / g.sigma_t * (-0.5 * s * s).exp(), 0.0)
            }
            DriverSpec::Algebraic(a) => {
                if t < 0.0 {
                    return Err(invalid(format!("algebraic driver is defined for t >= 0, got {t}")));
                }
                let s = t / a.delta_t;
                let tf = 1.0 + s + a.time_quadratic * s * s;
                let dtf = (1.0 + 2.0 * a.time_quadratic * s) / a.delta_t;
                Complex64::new(-2.0 * dtf / (tf * tf * tf), 0.0)
            }
            DriverSpec::None => Complex64::new(0.0, 0.0),
            DriverSpec::Manufactured(m) => {
                I * m.family.frequency * Complex64::from_polar(1.0, m.family.frequency * t)
            }
        })
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<Complex64> {
        Ok(self.temporal_factor(t)? * self.spatial_profile(x))
    }

    /// Analytic `∂f/∂t`.
    pub fn eval_dt(&self, x: f64, t: f64) -> Result<Complex64> {
        Ok(self.temporal_factor_dt(t)? * self.spatial_profile(x))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DriverSpec::None)
    }
}

/// Caches the spatial profile of a driver on a set of nodes.
#[derive(Debug, Clone)]
pub struct DriverSampler {
    driver: DriverSpec,
    profile: Vec<Complex64>,
}

impl DriverSampler {
    pub fn new(driver: &DriverSpec, xs: &[f64]) -> Self {
        Self { driver: driver.clone(), profile: xs.iter().map(|&x| driver.spatial_profile(x)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.driver.is_zero()
    }

    pub fn sample_into(&self, t: f64, out: &mut [Complex64]) -> Result<()> {
        if self.driver.is_zero() {
            out.fill(Complex64::new(0.0, 0.0));
            return Ok(());
        }
        let g = self.driver.temporal_factor(t)?;
        for (o, h) in out.iter_mut().zip(&self.profile) {
            *o = g * h;
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.profile.len()];
        self.sample_into(t, &mut out)?;
        Ok(out)
    }
}

/// Tabulated initial profile, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    xs: Vec<f64>,
    values: Vec<Complex64>,
}

impl SampledProfile {
    pub fn new(xs: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(invalid("sampled profile needs >= 2 matching abscissae and values"));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("sampled profile abscissae must be strictly increasing"));
        }
        Ok(Self { xs, values })
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        let (lo, hi) = (self.xs[0], self.xs[self.xs.len() - 1]);
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfDomain { x, lo, hi });
        }
        let k = self.xs.partition_point(|&s| s <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let s = (x - x0) / (x1 - x0);
        Ok(self.values[k - 1] * (1.0 - s) + self.values[k] * s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ICSpec {
    /// `1/(1+x²)`
    Algebraic,
    /// `sech x`
    Sech,
    File(SampledProfile),
}

/// Largest admissible modulus of tabulated initial data at `±L`.
pub const FILE_IC_EDGE_TOL: f64 = 1e-4;

pub fn eval_ic(spec: &ICSpec, x: f64) -> Result<Complex64> {
    Ok(match spec {
        ICSpec::Algebraic => Complex64::new(1.0 / (1.0 + x * x), 0.0),
        ICSpec::Sech => Complex64::new(1.0 / x.cosh(), 0.0),
        ICSpec::File(p) => p.eval(x)?,
    })
}

/// Samples initial data on the interior nodes.
pub fn initial_state(spec: &ICSpec, grid: &ChebGrid) -> Result<FieldState> {
    if let ICSpec::File(p) = spec {
        let l = grid.half_length();
        for x in [-l, l] {
            let v = p.eval(x)?.norm();
            if v >= FILE_IC_EDGE_TOL {
                return Err(invalid(format!("initial data has |u0({x})| = {v:e}, must vanish at the boundary")));
            }
        }
    }
    let values = grid.interior_nodes().iter().map(|&x| eval_ic(spec, x)).collect::<Result<Vec<_>>>()?;
    FieldState::new(0.0, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRWParams {
    pub t0: f64,
    pub p0: f64,
}

impl PRWParams {
    pub fn new(t0: f64, p0: f64) -> Result<Self> {
        if !(p0 > 0.0) {
            return Err(invalid(format!("background density must be positive, got {p0}")));
        }
        Ok(Self { t0, p0 })
    }
}

/// Peregrine rational solution of the undamped, undriven equation.
pub fn eval_prw(x: f64, t: f64, p: &PRWParams) -> Complex64 {
    let s = t - p.t0;
    let p0 = p.p0;
    let num = Complex64::new(1.0, 2.0 * p0 * s) * 4.0;
    let den = 1.0 + 4.0 * p0 * x * x + 4.0 * p0 * p0 * s * s;
    (Complex64::new(1.0, 0.0) - num / den) * Complex64::from_polar(p0.sqrt(), p0 * s)
}

/// `du/dt` at the interior nodes, with dense differentiation.
pub fn rhs(state: &FieldState, params: &ModelParams, grid: &ChebGrid) -> Result<Vec<Complex64>> {
    state.check_len(grid)?;
    let mut system = NlsRhs::new(grid, params, DerivativeBackend::Dense);
    let mut out = vec![Complex64::new(0.0, 0.0); state.values.len()];
    system.eval(state.t, &state.values, &mut out)?;
    Ok(out)
}

/// Reusable right-hand side evaluator for the integrator.
pub struct NlsRhs<'g> {
    diff: Differentiator<'g>,
    gamma: f64,
    sampler: DriverSampler,
    forcing: Vec<Complex64>,
}

impl<'g> NlsRhs<'g> {
    pub fn new(grid: &'g ChebGrid, params: &ModelParams, backend: DerivativeBackend) -> Self {
        let sampler = DriverSampler::new(&params.driver, grid.interior_nodes());
        Self {
            diff: Differentiator::new(grid, backend),
            gamma: params.gamma,
            sampler,
            forcing: vec![Complex64::new(0.0, 0.0); grid.interior_len()],
        }
    }

    pub fn differentiator(&mut self) -> &mut Differentiator<'g> {
        &mut self.diff
    }
}

pub(crate) fn check_finite(values: &[Complex64], t: f64) -> Result<()> {
    let s: f64 = values.iter().map(|z| z.re + z.im).sum();
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericOverflow { t })
    }
}

impl OdeSystem for NlsRhs<'_> {
    fn dim(&self) -> usize {
        self.forcing.len()
    }

    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) -> Result<()> {
        check_finite(y, t)?;
        self.diff.second_interior(y, dy);
        self.sampler.sample_into(t, &mut self.forcing)?;
        for ((d, &u), &f) in dy.iter_mut().zip(y).zip(&self.forcing) {
            // (i/2) u_xx + i|u|²u − γu − i f
            *d = I * (0.5 * *d + u.norm_sqr() * u - f) - self.gamma * u;
        }
        check_finite(dy, t)
    }
}
