//! Weighted norms, balance-law residuals, empirical bound constants and
//! driver admissibility, evaluated along computed trajectories.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::ChebGrid;
use crate::integrator::{RunStatus, Trajectory};
use crate::model::{DriverSpec, FieldState, ModelParams};
use crate::weights::{split_weights, SpatialWeight, TimeWeight};

fn full_values(grid: &ChebGrid, state: &FieldState) -> Result<Vec<Complex64>> {
    if state.values.len() != grid.interior_len() {
        return Err(invalid(format!(
            "state has {} values, grid has {} interior nodes",
            state.values.len(),
            grid.interior_len()
        )));
    }
    Ok(grid.embed(&state.values))
}

fn weighted_sum(weights: &[f64], values: impl Iterator<Item = f64>) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// `∫ |u|²`
pub fn mass(grid: &ChebGrid, state: &FieldState) -> Result<f64> {
    let u = full_values(grid, state)?;
    grid.quadrature_real(&u.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
}

/// `∫ ρ² |u|²`
pub fn weighted_l2(grid: &ChebGrid, state: &FieldState, w: &SpatialWeight) -> Result<f64> {
    w.validate()?;
    let u = full_values(grid, state)?;
    let wq = split_weights(grid, |x| w.sq_split(x));
    Ok(weighted_sum(&wq, u.iter().map(|z| z.norm_sqr())))
}

/// `∫ ρ² |u|² + ∫ ρ² |u_x|²`
pub fn weighted_h1(grid: &ChebGrid, state: &FieldState, w: &SpatialWeight) -> Result<f64> {
    w.validate()?;
    let u = full_values(grid, state)?;
    let ux = grid.apply_d1(&u)?;
    let wq = split_weights(grid, |x| w.sq_split(x));
    Ok(weighted_sum(&wq, u.iter().map(|z| z.norm_sqr())) + weighted_sum(&wq, ux.iter().map(|z| z.norm_sqr())))
}

/// `¼∫ρ²|u_x|² − ¼∫ρ²|u|⁴ + Re∫ρ² f ū` at time `t`.
pub fn functional_j(
    grid: &ChebGrid,
    state: &FieldState,
    w: &SpatialWeight,
    driver: &DriverSpec,
    t: f64,
) -> Result<f64> {
    w.validate()?;
    let u = full_values(grid, state)?;
    let ux = grid.apply_d1(&u)?;
    let wq = split_weights(grid, |x| w.sq_split(x));
    let mut total = 0.0;
    for (j, &x) in grid.nodes().iter().enumerate() {
        let d = u[j].norm_sqr();
        let drive = if driver.is_zero() { 0.0 } else { (driver.eval(x, t)? * u[j].conj()).re };
        total += wq[j] * (0.25 * ux[j].norm_sqr() - 0.25 * d * d + drive);
    }
    Ok(total)
}

/// Local degree-5 Lagrange interpolation of a sampled series.
fn lagrange_at(ts: &[f64], vs: &[f64], t: f64) -> f64 {
    let n = ts.len();
    let width = n.min(6);
    let k = ts.partition_point(|&s| s < t);
    let start = k.saturating_sub(width / 2).min(n - width);
    let idx = start..start + width;
    let mut acc = 0.0;
    for i in idx.clone() {
        if ts[i] == t {
            return vs[i];
        }
        let mut li = 1.0;
        for j in idx.clone() {
            if j != i {
                li *= (t - ts[j]) / (ts[i] - ts[j]);
            }
        }
        acc += li * vs[i];
    }
    acc
}

/// Fourth-order derivative of uniformly spaced samples, one-sided at the ends.
fn uniform_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let m = v.len();
    let mut d = vec![0.0; m];
    let s = 12.0 * h;
    for i in 2..m - 2 {
        d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / s;
    }
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / s;
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / s;
    d[m - 1] = (25.0 * v[m - 1] - 48.0 * v[m - 2] + 36.0 * v[m - 3] - 16.0 * v[m - 4] + 3.0 * v[m - 5]) / s;
    d[m - 2] = (3.0 * v[m - 1] + 10.0 * v[m - 2] - 18.0 * v[m - 3] + 6.0 * v[m - 4] - v[m - 5]) / s;
    d
}

/// Mass and drive power resampled to a uniform time grid.
struct UniformSeries {
    t: Vec<f64>,
    mass: Vec<f64>,
    power: Vec<f64>,
    h: f64,
}

fn uniform_series(traj: &Trajectory) -> Result<UniformSeries> {
    let series = &traj.norm_series;
    if series.len() < 3 {
        return Err(invalid(format!("balance residual needs at least 3 samples, got {}", series.len())));
    }
    let span = series[series.len() - 1].t - series[0].t;
    if !(span > 0.0) {
        return Err(invalid("norm series spans no time"));
    }
    // Nearly coincident samples (a clipped landing step) spoil the interpolant.
    let mut ts = Vec::with_capacity(series.len());
    let mut ms = Vec::with_capacity(series.len());
    let mut ps = Vec::with_capacity(series.len());
    for s in series {
        if let Some(&prev) = ts.last() {
            if s.t - prev < 1e-9 * span {
                continue;
            }
        }
        ts.push(s.t);
        ms.push(s.mass);
        ps.push(s.drive_power);
    }
    let m = ts.len().max(5);
    let h = span / (m - 1) as f64;
    let t: Vec<f64> = (0..m).map(|k| if k == m - 1 { ts[ts.len() - 1] } else { ts[0] + h * k as f64 }).collect();
    let (mass, power) = if ts.len() == m && ts.iter().zip(&t).all(|(a, b)| (a - b).abs() <= 1e-12 * span) {
        (ms, ps)
    } else {
        (t.iter().map(|&s| lagrange_at(&ts, &ms, s)).collect(), t.iter().map(|&s| lagrange_at(&ts, &ps, s)).collect())
    };
    Ok(UniformSeries { t, mass, power, h })
}

/// `dN/dt + 2γN − 2 Im∫f ū`, normalized by `max(1, N)`, on a uniform
/// resample of the trajectory's dense norm series.
pub fn mass_balance_residual(traj: &Trajectory, params: &ModelParams) -> Result<Vec<(f64, f64)>> {
    let s = uniform_series(traj)?;
    let dn = uniform_derivative(&s.mass, s.h);
    Ok((0..s.t.len())
        .map(|k| {
            let r = dn[k] + 2.0 * params.gamma * s.mass[k] - 2.0 * s.power[k];
            (s.t[k], r / s.mass[k].max(1.0))
        })
        .collect())
}

/// `½ d/dt[φ²N] + γφ²N − φ² Im∫f ū − φφ̇N`, normalized by `max(1, N)`.
pub fn weighted_time_balance_residual(
    traj: &Trajectory,
    w: &TimeWeight,
    params: &ModelParams,
) -> Result<Vec<(f64, f64)>> {
    let s = uniform_series(traj)?;
    let phi: Vec<f64> = s.t.iter().map(|&t| w.eval(t)).collect();
    let weighted: Vec<f64> = phi.iter().zip(&s.mass).map(|(p, n)| p * p * n).collect();
    let d = uniform_derivative(&weighted, s.h);
    Ok((0..s.t.len())
        .map(|k| {
            let p2 = phi[k] * phi[k];
            let r = 0.5 * d[k] + params.gamma * p2 * s.mass[k]
                - p2 * s.power[k]
                - phi[k] * w.derivative(s.t[k]) * s.mass[k];
            (s.t[k], r / s.mass[k].max(1.0))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgmonRecord {
    /// `sup |ρu|²` over the nodes.
    pub lhs: f64,
    /// `‖ρu‖₂ ‖(ρu)_x‖₂`
    pub rhs: f64,
    /// `lhs / rhs`, zero for the zero field.
    pub ratio: f64,
    /// Set when `rhs` vanishes while `lhs` does not.
    pub inconsistent: bool,
}

/// Compares `sup|ψ|²` with `‖ψ‖‖ψ_x‖` for `ψ = ρu`.
pub fn agmon_check(grid: &ChebGrid, state: &FieldState, w: &SpatialWeight) -> Result<AgmonRecord> {
    w.validate()?;
    let u = full_values(grid, state)?;
    let ux = grid.apply_d1(&u)?;
    let lhs = grid.nodes().iter().zip(&u).map(|(&x, z)| w.eval_sq(x) * z.norm_sqr()).fold(0.0, f64::max);
    let wq = split_weights(grid, |x| w.sq_split(x));
    let wd = split_weights(grid, |x| w.dsq_split(x));
    let wc = split_weights(grid, |x| w.cross_split(x));
    let psi_sq = weighted_sum(&wq, u.iter().map(|z| z.norm_sqr()));
    // |ρ'u + ρu_x|² = ρ'²|u|² + 2ρρ' Re(u ū_x) + ρ²|u_x|²
    let dpsi_sq = weighted_sum(&wd, u.iter().map(|z| z.norm_sqr()))
        + 2.0 * weighted_sum(&wc, u.iter().zip(&ux).map(|(a, b)| (a * b.conj()).re))
        + weighted_sum(&wq, ux.iter().map(|z| z.norm_sqr()));
    let rhs = (psi_sq.max(0.0) * dpsi_sq.max(0.0)).sqrt();
    let (ratio, inconsistent) = if lhs == 0.0 {
        (0.0, false)
    } else if rhs == 0.0 {
        (f64::INFINITY, true)
    } else {
        (lhs / rhs, false)
    };
    Ok(AgmonRecord { lhs, rhs, ratio, inconsistent })
}

/// Where each empirical supremum of a [`BoundReport`] was attained.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SupLocations {
    pub k1_t: f64,
    pub k1_x: f64,
    pub k2_t: f64,
    pub r_t: f64,
    pub r0_t: f64,
    pub r1_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundReport {
    /// `sup ρ²(x)|u(x,t)|²` over snapshots and a uniform resample in `x`.
    pub k1_emp: f64,
    /// `sup_t φ(t) sup_x |u|²` over the dense series.
    pub k2_emp: f64,
    /// `sup_t (‖u‖² + ‖u_x‖² + ‖u_xx‖²)`
    pub r_emp: f64,
    /// `sup_t ∫ρ²|u|²`
    pub r0_emp: f64,
    /// `sup_t (∫ρ²|u|² + ∫ρ²|u_x|²)`
    pub r1_emp: f64,
    pub times_of_sup: SupLocations,
    /// Completed run with theory-valid weights.
    pub certifying: bool,
}

/// Resample step used for `K1`.
pub const BOUND_RESAMPLE_STEP: f64 = 0.5;

/// Empirical constants of the decay estimates along a trajectory.
pub fn bound_constants(
    traj: &Trajectory,
    w_space: &SpatialWeight,
    w_time: &TimeWeight,
    grid: &ChebGrid,
) -> Result<BoundReport> {
    w_space.validate()?;
    let mut rep = BoundReport::default();
    let wq = split_weights(grid, |x| w_space.sq_split(x));
    let l = grid.half_length();
    for snap in &traj.snapshots {
        let u = full_values(grid, snap)?;
        let (xs, vs) = grid.resample_uniform(&u, -l, l, BOUND_RESAMPLE_STEP)?;
        for (x, v) in xs.iter().zip(&vs) {
            let k1 = w_space.eval_sq(*x) * v.norm_sqr();
            if k1 > rep.k1_emp {
                rep.k1_emp = k1;
                rep.times_of_sup.k1_t = snap.t;
                rep.times_of_sup.k1_x = *x;
            }
        }
        let ux = grid.apply_d1(&u)?;
        let uxx = grid.apply_d1(&ux)?;
        let norm = |v: &[Complex64]| grid.quadrature_real(&v.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        let r = norm(&u)? + norm(&ux)? + norm(&uxx)?;
        let r0 = weighted_sum(&wq, u.iter().map(|z| z.norm_sqr()));
        let r1 = r0 + weighted_sum(&wq, ux.iter().map(|z| z.norm_sqr()));
        if r > rep.r_emp {
            rep.r_emp = r;
            rep.times_of_sup.r_t = snap.t;
        }
        if r0 > rep.r0_emp {
            rep.r0_emp = r0;
            rep.times_of_sup.r0_t = snap.t;
        }
        if r1 > rep.r1_emp {
            rep.r1_emp = r1;
            rep.times_of_sup.r1_t = snap.t;
        }
    }
    for s in &traj.norm_series {
        let k2 = w_time.eval(s.t) * s.sup_density;
        if k2 > rep.k2_emp {
            rep.k2_emp = k2;
            rep.times_of_sup.k2_t = s.t;
        }
    }
    let finite = [rep.k1_emp, rep.k2_emp, rep.r_emp, rep.r0_emp, rep.r1_emp].iter().all(|v| v.is_finite());
    rep.certifying = finite
        && traj.status == RunStatus::Completed
        && w_space.validity().theory_valid
        && w_time.certifiable();
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    /// `∫₀ᵀ ∫ φ² |f|²`
    pub fd_integral: f64,
    /// `sup_t ∫ ρ² |f|²`
    pub sup_weighted_f: f64,
    /// `sup_t ∫ ρ² |f_t|²`
    pub sup_weighted_ft: f64,
    /// Log-log slope of `φ² ∫|f|²` over the last decade of `[0, T]`.
    pub tail_exponent: f64,
    /// Set when the tail decays no faster than `t⁻¹`.
    pub divergence_flag: bool,
}

fn simpson_adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson over dyadic panels `[0,1], [1,2], [2,4], ...` up to `t_end`.
fn integrate_time(f: impl Fn(f64) -> f64, t_end: f64, rel_tol: f64) -> f64 {
    let mut edges = vec![0.0];
    let mut e: f64 = 1.0;
    while e < t_end {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(t_end);
    edges
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let tol = rel_tol * whole.abs().max(1e-300);
            simpson_adaptive(&f, a, b, fa, fm, fb, whole, tol, 40)
        })
        .sum()
}

/// Integrability of `φ²|f|²` in time and the weighted sup norms of `f`, `f_t`.
pub fn driver_admissibility(
    driver: &DriverSpec,
    w_space: &SpatialWeight,
    w_time: &TimeWeight,
    horizon: f64,
    grid: &ChebGrid,
) -> Result<AdmissibilityReport> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid(format!("admissibility horizon must be positive, got {horizon}")));
    }
    driver.validate()?;
    w_space.validate()?;
    // Every driver factors as g(t) h(x), so the spatial integrals are computed once.
    let h: Vec<f64> = grid.nodes().iter().map(|&x| driver.spatial_profile(x).norm_sqr()).collect();
    let plain = grid.quadrature_real(&h)?;
    let wq = split_weights(grid, |x| w_space.sq_split(x));
    let weighted = weighted_sum(&wq, h.iter().copied());

    let g2 = |t: f64| driver.temporal_factor(t).map(|g| g.norm_sqr());
    let gt2 = |t: f64| driver.temporal_factor_dt(t).map(|g| g.norm_sqr());
    // Errors only arise for t < 0, which never occurs below.
    let density = |t: f64| w_time.eval(t).powi(2) * g2(t).unwrap_or(f64::NAN) * plain;
    let fd_integral = integrate_time(density, horizon, 1e-10);

    let mut sup_f: f64 = 0.0;
    let mut sup_ft: f64 = 0.0;
    let mut probe = |t: f64| -> Result<()> {
        sup_f = sup_f.max(g2(t)? * weighted);
        sup_ft = sup_ft.max(gt2(t)? * weighted);
        Ok(())
    };
    let samples = 4000;
    for k in 0..=samples {
        probe(horizon.min(50.0) * k as f64 / samples as f64)?;
        probe(horizon * (k as f64 / samples as f64).powi(3))?;
    }
    if let DriverSpec::Gaussian(g) = driver {
        for t in [g.t_center, g.t_center - g.sigma_t, g.t_center + g.sigma_t] {
            if (0.0..=horizon).contains(&t) {
                probe(t)?;
            }
        }
    }

    let tail_exponent = tail_slope(|t| density(t), horizon);
    let divergence_flag = tail_exponent >= -1.0;
    if !fd_integral.is_finite() {
        return Err(Error::DegenerateData(format!("admissibility integral is not finite ({fd_integral})")));
    }
    Ok(AdmissibilityReport { fd_integral, sup_weighted_f: sup_f, sup_weighted_ft: sup_ft, tail_exponent, divergence_flag })
}

/// Least-squares slope of `log F` against `log t` over `[T/10, T]`;
/// `-∞` when the tail underflows.
fn tail_slope(f: impl Fn(f64) -> f64, horizon: f64) -> f64 {
    let pts: Vec<(f64, f64)> = (0..=20)
        .map(|k| horizon * 10f64.powf(-1.0 + k as f64 / 20.0))
        .filter_map(|t| {
            let v = f(t);
            (v > 0.0 && v.is_finite()).then(|| (t.ln(), v.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallCheck {
    /// Asymptotic level `C` of the envelope.
    pub constant: f64,
    /// `(t, weighted_l2(t), envelope(t))` per snapshot.
    pub samples: Vec<(f64, f64, f64)>,
    /// Largest `weighted_l2 − envelope`; non-positive when the check passes.
    pub max_excess: f64,
    pub passed: bool,
}

/// A posteriori check of `Y(t) ≤ Y(0)e^{−γt} + C(1 − e^{−γt})` for `Y = ∫ρ²|u|²`,
/// with `C = 2 sup_t Q(t)/γ` and `Q = (R β₂² + ∫ρ²|f|²)/γ`, `R = sup_t ‖u_x‖²`.
pub fn gronwall_envelope_check(
    traj: &Trajectory,
    params: &ModelParams,
    w: &SpatialWeight,
    grid: &ChebGrid,
) -> Result<GronwallCheck> {
    let gamma = params.gamma;
    if !(gamma > 0.0) {
        return Err(invalid("the Gronwall envelope needs gamma > 0"));
    }
    let beta2 = w
        .validity()
        .beta2
        .ok_or_else(|| invalid(format!("weight {w:?} has unbounded derivative; no envelope")))?;
    let first = traj.snapshots.first().ok_or_else(|| invalid("trajectory has no snapshots"))?;
    let t_lo = first.t;
    let t_hi = traj.snapshots.last().map(|s| s.t).unwrap_or(t_lo);

    let mut grad_sup: f64 = 0.0;
    let mut ys = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let u = full_values(grid, snap)?;
        let ux = grid.apply_d1(&u)?;
        grad_sup = grad_sup.max(grid.quadrature_real(&ux.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())?);
        ys.push((snap.t, weighted_l2(grid, snap, w)?));
    }

    let h: Vec<f64> = grid.nodes().iter().map(|&x| params.driver.spatial_profile(x).norm_sqr()).collect();
    let wq = split_weights(grid, |x| w.sq_split(x));
    let weighted_h = weighted_sum(&wq, h.iter().copied());
    let mut forcing_sup: f64 = 0.0;
    if !params.driver.is_zero() {
        let mut times: Vec<f64> = (0..=4000).map(|k| t_lo + (t_hi - t_lo) * k as f64 / 4000.0).collect();
        if let DriverSpec::Gaussian(g) = &params.driver {
            if (t_lo..=t_hi).contains(&g.t_center) {
                times.push(g.t_center);
            }
        }
        for t in times {
            forcing_sup = forcing_sup.max(params.driver.temporal_factor(t)?.norm_sqr() * weighted_h);
        }
    }
    let q_sup = (grad_sup * beta2 * beta2 + forcing_sup) / gamma;
    let constant = 2.0 * q_sup / gamma;

    let y0 = ys[0].1;
    let mut max_excess = f64::NEG_INFINITY;
    let samples: Vec<(f64, f64, f64)> = ys
        .iter()
        .map(|&(t, y)| {
            let decay = (-gamma * (t - t_lo)).exp();
            let env = y0 * decay + constant * (1.0 - decay);
            max_excess = max_excess.max(y - env);
            (t, y, env)
        })
        .collect();
    let slack = 1e-9 * samples.iter().map(|s| s.2).fold(0.0, f64::max);
    Ok(GronwallCheck { constant, samples, max_excess, passed: max_excess <= slack })
}
