//! Peak detection, log-space envelope fits with bounding translation,
//! rogue-wave event characterization and support metrics.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::ChebGrid;
use crate::integrator::Trajectory;
use crate::model::{eval_prw, FieldState, PRWParams};
use crate::weights::{SpatialWeight, TimeWeight};

/// Indices of local maxima whose prominence is at least `min_prominence`.
///
/// Flat tops count once, at their middle sample. Prominence is the height
/// above the higher of the two minima reached before the series climbs
/// above the peak on either side.
pub fn detect_peaks(values: &[f64], min_prominence: f64) -> Vec<usize> {
    let n = values.len();
    let mut peaks = Vec::new();
    if n < 3 {
        return peaks;
    }
    let mut i = 1;
    while i < n - 1 {
        if values[i - 1] < values[i] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                let mid = (i + j) / 2;
                if prominence(values, mid) >= min_prominence {
                    peaks.push(mid);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

fn prominence(values: &[f64], peak: usize) -> f64 {
    let h = values[peak];
    let mut left_min = h;
    for &v in values[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &values[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Peaks of a `(t, value)` series as `(t, value)` pairs.
pub fn series_peaks(series: &[(f64, f64)], min_prominence: f64) -> Vec<(f64, f64)> {
    let values: Vec<f64> = series.iter().map(|p| p.1).collect();
    detect_peaks(&values, min_prominence).into_iter().map(|i| series[i]).collect()
}

/// Box-constrained quasi-Newton minimization with projected steps.
fn minimize_box(
    f: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let project = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let mut x = start.to_vec();
    project(&mut x);
    let (mut fx, mut g) = f(&x);
    let mut h = identity(n);
    let mut scaled = false;
    for _ in 0..max_iter {
        let active: Vec<bool> = (0..n).map(|i| (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)).collect();
        let pg = (0..n).map(|i| if active[i] { 0.0 } else { g[i].abs() }).fold(0.0, f64::max);
        if pg <= 1e-14 * (1.0 + fx.abs()) || !fx.is_finite() {
            break;
        }
        let mut d: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i][j] * g[j]).sum::<f64>()).collect();
        for i in 0..n {
            if active[i] {
                d[i] = 0.0;
            }
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(n);
            d = (0..n).map(|i| if active[i] { 0.0 } else { -g[i] }).collect();
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        }
        if !scaled {
            // Unit-length first step in the parameter units.
            let m = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if m > 1.0 {
                d.iter_mut().for_each(|v| *v /= m);
                slope /= m;
            }
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            project(&mut trial);
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * alpha * slope.min(0.0) {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, fxn, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let done = s.iter().all(|v| v.abs() <= 1e-15) || (fx - fxn).abs() <= 1e-16 * fx.abs() && fxn < fx;
        if sy > 1e-300 {
            if !scaled {
                let yy: f64 = y.iter().map(|v| v * v).sum();
                h = identity(n);
                h.iter_mut().enumerate().for_each(|(i, row)| row[i] = sy / yy);
                scaled = true;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        x = xn;
        fx = fxn;
        g = gn;
        if done {
            break;
        }
    }
    (x, fx)
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Residual sum of squares with the log-amplitude profiled out, and its
/// gradient; `model(p)` returns `log ρ²` (or the analogue) and its Jacobian.
fn profiled_rss(data: &[f64], model: &[f64], jac: &[Vec<f64>]) -> (f64, f64, Vec<f64>) {
    let n = data.len() as f64;
    let r: Vec<f64> = data.iter().zip(model).map(|(d, m)| d + m).collect();
    let log_a = r.iter().sum::<f64>() / n;
    let rss = r.iter().map(|v| (v - log_a).powi(2)).sum();
    let grad = jac.iter().map(|col| 2.0 * r.iter().zip(col).map(|(v, c)| (v - log_a) * c).sum::<f64>()).collect();
    (rss, log_a, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialFamily {
    Gaussian,
    LinearAbs,
    QuadraticAbs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitParams {
    Gaussian { sigma: f64, x_shift: f64 },
    LinearAbs { x0: f64 },
    QuadraticAbs { x0: f64 },
    /// `A [1 + (t + s0)/t0]^{-κ}`
    Temporal { s0: f64, t0: f64, kappa: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: FitParams,
    /// Fitted log-amplitude.
    pub log_amplitude: f64,
    /// Log-amplitude of the bounding curve; never below `log_amplitude`.
    pub bound_log_amplitude: f64,
    /// Residual sum of squares of the log data before translation.
    pub rss: f64,
    /// Data range used.
    pub window: (f64, f64),
    pub samples: usize,
    pub translated: bool,
    /// The optimum sits on a parameter bound, so the fit is not identified.
    pub degenerate: bool,
}

impl FitResult {
    /// The fitted weight, for spatial families.
    pub fn spatial_weight(&self) -> Option<SpatialWeight> {
        match self.params {
            FitParams::Gaussian { sigma, x_shift } => Some(SpatialWeight::Gaussian { sigma, x_shift }),
            FitParams::LinearAbs { x0 } => Some(SpatialWeight::LinearAbs { x0 }),
            FitParams::QuadraticAbs { x0 } => Some(SpatialWeight::QuadraticAbs { x0 }),
            FitParams::Temporal { .. } => None,
        }
    }

    pub fn time_weight(&self) -> Option<TimeWeight> {
        match self.params {
            FitParams::Temporal { s0, t0, kappa } => TimeWeight::fitted(t0, kappa, s0).ok(),
            _ => None,
        }
    }

    fn log_shape(&self, z: f64) -> f64 {
        match self.params {
            FitParams::Temporal { s0, t0, kappa } => -kappa * (1.0 + (z + s0) / t0).ln(),
            _ => -self.spatial_weight().map(|w| w.log_sq(z)).unwrap_or(0.0),
        }
    }

    /// Fitted curve at `z` (position or time).
    pub fn fitted(&self, z: f64) -> f64 {
        (self.log_amplitude + self.log_shape(z)).exp()
    }

    /// Bounding curve at `z`.
    pub fn bound(&self, z: f64) -> f64 {
        (self.bound_log_amplitude + self.log_shape(z)).exp()
    }
}

/// Spatial fit window `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialWindow {
    pub x_min: f64,
    pub x_max: f64,
}

impl Default for SpatialWindow {
    fn default() -> Self {
        Self { x_min: 50.0, x_max: 150.0 }
    }
}

pub const FIT_RESAMPLE_STEP: f64 = 0.5;
const MIN_SPATIAL_SAMPLES: usize = 20;
const STARTS: usize = 8;

fn finish_fit(
    params: FitParams,
    log_amplitude: f64,
    rss: f64,
    window: (f64, f64),
    zs: &[f64],
    logs: &[f64],
    degenerate: bool,
) -> FitResult {
    let mut fit = FitResult {
        params,
        log_amplitude,
        bound_log_amplitude: log_amplitude,
        rss,
        window,
        samples: zs.len(),
        translated: false,
        degenerate,
    };
    let excess = zs.iter().zip(logs).map(|(&z, &l)| l - (log_amplitude + fit.log_shape(z))).fold(0.0, f64::max);
    if excess > 0.0 {
        fit.bound_log_amplitude = log_amplitude + excess;
        fit.translated = true;
    }
    fit
}

/// Fits `density(x) ≈ A / ρ²(x)` in log space on given samples.
///
/// Non-positive densities are dropped.
pub fn fit_spatial_profile(xs: &[f64], density: &[f64], family: SpatialFamily) -> Result<FitResult> {
    if xs.len() != density.len() {
        return Err(invalid("positions and densities differ in length"));
    }
    if !density.is_empty() && density.iter().all(|&d| d == 0.0) {
        return Err(Error::DegenerateData("density vanishes on the whole fit window".into()));
    }
    let (zs, logs): (Vec<f64>, Vec<f64>) =
        xs.iter().zip(density).filter(|(_, d)| **d > 0.0 && d.is_finite()).map(|(&x, &d)| (x, d.ln())).unzip();
    if zs.len() < MIN_SPATIAL_SAMPLES {
        return Err(invalid(format!("spatial fit needs {MIN_SPATIAL_SAMPLES} positive samples, got {}", zs.len())));
    }
    let window = (zs[0], zs[zs.len() - 1]);
    let span = zs.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);

    // Scale parameters are optimized as logarithms.
    let objective = |p: &[f64]| -> (f64, f64, Vec<f64>) {
        let scale = p[0].exp();
        let mut model = Vec::with_capacity(zs.len());
        let mut jac = vec![Vec::with_capacity(zs.len()); p.len()];
        for &x in &zs {
            match family {
                SpatialFamily::LinearAbs => {
                    let s = x.abs() / scale;
                    model.push(2.0 * (1.0 + s).ln());
                    jac[0].push(-2.0 * s / (1.0 + s));
                }
                SpatialFamily::QuadraticAbs => {
                    let s = x.abs() / scale;
                    let q = 1.0 + s + s * s;
                    model.push(2.0 * q.ln());
                    jac[0].push(-2.0 * (s + 2.0 * s * s) / q);
                }
                SpatialFamily::Gaussian => {
                    let z = (x + p[1]) / scale;
                    model.push(z * z);
                    jac[0].push(-2.0 * z * z);
                    jac[1].push(2.0 * z / scale);
                }
            }
        }
        profiled_rss(&logs, &model, &jac)
    };
    let (lo, hi) = match family {
        SpatialFamily::Gaussian => (vec![(1e-6f64).ln(), -100.0 * span], vec![(1e6f64).ln(), 100.0 * span]),
        _ => (vec![(1e-6f64).ln()], vec![(1e6f64).ln()]),
    };
    let f = |p: &[f64]| {
        let (r, _, g) = objective(p);
        (r, g)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in 0..STARTS {
        let scale0 = 10f64.powf(-1.0 + 4.0 * k as f64 / (STARTS - 1) as f64);
        let mut start = vec![scale0.ln()];
        if family == SpatialFamily::Gaussian {
            start.push(0.0);
        }
        let (p, r) = minimize_box(&f, &start, &lo, &hi, 500);
        if best.as_ref().map_or(true, |b| r < b.1) {
            best = Some((p, r));
        }
    }
    let (p, _) = best.expect("at least one start");
    let (rss, log_a, _) = objective(&p);
    let degenerate = p.iter().zip(lo.iter().zip(&hi)).any(|(v, (l, h))| v <= l || v >= h);
    let params = match family {
        SpatialFamily::Gaussian => FitParams::Gaussian { sigma: p[0].exp(), x_shift: p[1] },
        SpatialFamily::LinearAbs => FitParams::LinearAbs { x0: p[0].exp() },
        SpatialFamily::QuadraticAbs => FitParams::QuadraticAbs { x0: p[0].exp() },
    };
    Ok(finish_fit(params, log_a, rss, window, &zs, &logs, degenerate))
}

/// Fits the density envelope of a snapshot on `window`, after uniform
/// resampling with step [`FIT_RESAMPLE_STEP`].
pub fn fit_spatial_envelope(
    snapshot: &FieldState,
    grid: &ChebGrid,
    family: SpatialFamily,
    window: SpatialWindow,
) -> Result<FitResult> {
    let l = grid.half_length();
    let hi = window.x_max.min(l);
    if !(hi > window.x_min) || window.x_min < -l {
        return Err(invalid(format!("fit window [{}, {}] is empty on [-{l}, {l}]", window.x_min, window.x_max)));
    }
    let full = grid.embed(&snapshot.values);
    let (xs, vs) = grid.resample_uniform(&full, window.x_min, hi, FIT_RESAMPLE_STEP)?;
    let density: Vec<f64> = vs.iter().map(|z| z.norm_sqr()).collect();
    fit_spatial_profile(&xs, &density, family)
}

/// Default exponent of temporal envelope fits.
pub const TEMPORAL_KAPPA: f64 = 2.0;
const MIN_TEMPORAL_PEAKS: usize = 4;
const OFFSET_LOG_BOUNDS: (f64, f64) = (-10.0, 12.0);

/// Fits `value(t) ≈ A [1 + (t+s0)/t0]^{-κ}` in log space.
///
/// Only `A t0^κ` and `t0 + s0` are identified by data; the split uses
/// `amplitude` when given and the largest peak value otherwise.
pub fn fit_temporal_envelope(peaks: &[(f64, f64)], kappa: f64, amplitude: Option<f64>) -> Result<FitResult> {
    if peaks.len() < MIN_TEMPORAL_PEAKS {
        return Err(invalid(format!("temporal fit needs {MIN_TEMPORAL_PEAKS} peaks, got {}", peaks.len())));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(invalid(format!("fit exponent must be positive, got {kappa}")));
    }
    if peaks.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite() && p.0.is_finite())) {
        return Err(invalid("peak values must be positive and finite"));
    }
    let ts: Vec<f64> = peaks.iter().map(|p| p.0).collect();
    let logs: Vec<f64> = peaks.iter().map(|p| p.1.ln()).collect();
    let t_min = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // value = B (c + t)^{-κ}, c = -t_min + e^η
    let objective = |p: &[f64]| -> (f64, f64, Vec<f64>) {
        let e = p[0].exp();
        let c = -t_min + e;
        let model: Vec<f64> = ts.iter().map(|&t| kappa * (c + t).ln()).collect();
        let jac = vec![ts.iter().map(|&t| kappa * e / (c + t)).collect()];
        profiled_rss(&logs, &model, &jac)
    };
    let f = |p: &[f64]| {
        let (r, _, g) = objective(p);
        (r, g)
    };
    let (lo, hi) = (vec![OFFSET_LOG_BOUNDS.0], vec![OFFSET_LOG_BOUNDS.1]);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for k in 0..STARTS {
        let eta0 = OFFSET_LOG_BOUNDS.0 + (OFFSET_LOG_BOUNDS.1 - OFFSET_LOG_BOUNDS.0) * (k as f64 + 0.5) / STARTS as f64;
        let (p, r) = minimize_box(&f, &[eta0], &lo, &hi, 500);
        if best.as_ref().map_or(true, |b| r < b.1) {
            best = Some((p, r));
        }
    }
    let (p, _) = best.expect("at least one start");
    let (rss, log_b, _) = objective(&p);
    let degenerate = p[0] >= OFFSET_LOG_BOUNDS.1 - 1e-9 || p[0] <= OFFSET_LOG_BOUNDS.0 + 1e-9;
    let c = -t_min + p[0].exp();
    let a = amplitude.unwrap_or_else(|| peaks.iter().map(|p| p.1).fold(0.0, f64::max));
    if !(a > 0.0) {
        return Err(invalid(format!("envelope amplitude must be positive, got {a}")));
    }
    let t0 = ((log_b - a.ln()) / kappa).exp();
    let s0 = c - t0;
    let log_amplitude = a.ln();
    Ok(finish_fit(FitParams::Temporal { s0, t0, kappa }, log_amplitude, rss, (t_min, t_max), &ts, &logs, degenerate))
}

/// Rogue-wave event located on the center density series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRWEvent {
    pub t_star: f64,
    /// `peak_density / 9`
    pub p0_est: f64,
    /// Median density over `5 ≤ |x| ≤ 15` at the profile time.
    pub p0_background: f64,
    pub peak_density: f64,
    /// Relative discrete L² error of the density over `|x| ≤ 10`.
    pub profile_l2_error: f64,
    /// Relative discrete L² error of the center density over `|t − t_star| ≤ 1.5`.
    pub center_series_error: f64,
    /// Snapshot time used for the profile comparison.
    pub profile_time: f64,
}

pub const PROFILE_HALF_WIDTH: f64 = 10.0;
pub const CENTER_HALF_WINDOW: f64 = 1.5;

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Symmetric-band median of the density, sampled with step 0.5.
fn band_median(grid: &ChebGrid, full: &[Complex64], inner: f64, outer: f64) -> Result<Option<f64>> {
    let l = grid.half_length();
    let outer = outer.min(l);
    if outer < inner {
        return Ok(None);
    }
    let (xs, vs) = grid.resample_uniform(full, inner, outer, FIT_RESAMPLE_STEP)?;
    let mut d: Vec<f64> = vs.iter().map(|z| z.norm_sqr()).collect();
    for x in xs {
        d.push(grid.interpolate(full, -x)?.norm_sqr());
    }
    Ok(median(d))
}

fn relative_l2(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (num, den) = pairs.fold((0.0, 0.0), |(n, d), (a, b)| (n + (a - b).powi(2), d + b * b));
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        f64::INFINITY
    }
}

/// Locates the largest center-density maximum in `[t_lo, t_hi]` and compares
/// the field with the rational rogue-wave profile it implies.
pub fn characterize_prw_event(traj: &Trajectory, grid: &ChebGrid, search: (f64, f64)) -> Result<PRWEvent> {
    let (t_lo, t_hi) = search;
    let idx: Vec<usize> = (0..traj.center_series.len())
        .filter(|&i| (t_lo..=t_hi).contains(&traj.center_series[i].0))
        .collect();
    if idx.is_empty() {
        return Err(Error::NoEvent(format!("no center samples in [{t_lo}, {t_hi}]")));
    }
    let k = *idx.iter().max_by(|&&a, &&b| traj.center_series[a].1.total_cmp(&traj.center_series[b].1)).unwrap();
    if k == idx[0] || k == idx[idx.len() - 1] {
        return Err(Error::NoEvent(format!("center density has no interior maximum in [{t_lo}, {t_hi}]")));
    }
    // Parabola through the maximum and its neighbours.
    let (t0, v0) = traj.center_series[k - 1];
    let (t1, v1) = traj.center_series[k];
    let (t2, v2) = traj.center_series[k + 1];
    let d01 = (v1 - v0) / (t1 - t0);
    let d12 = (v2 - v1) / (t2 - t1);
    let curv = (d12 - d01) / (t2 - t0);
    let (t_star, peak_density) = if curv < 0.0 {
        let ts = (0.5 * (t0 + t1) - d01 / (2.0 * curv)).clamp(t0, t2);
        let v = v0 + d01 * (ts - t0) + curv * (ts - t0) * (ts - t1);
        (ts, v.max(v1))
    } else {
        (t1, v1)
    };
    if !(peak_density > 0.0) {
        return Err(Error::NoEvent("center density vanishes".into()));
    }
    let p0_est = peak_density / 9.0;
    let prw = PRWParams::new(t_star, p0_est)?;

    let snap = traj.snapshot_near(t_star).ok_or_else(|| Error::NoEvent("trajectory has no snapshots".into()))?;
    let full = grid.embed(&snap.values);
    let p0_background = band_median(grid, &full, 5.0, 15.0)?.unwrap_or(0.0);
    let profile_l2_error = relative_l2(
        grid.nodes()
            .iter()
            .zip(&full)
            .filter(|(x, _)| x.abs() <= PROFILE_HALF_WIDTH)
            .map(|(&x, u)| (u.norm_sqr(), eval_prw(x, snap.t, &prw).norm_sqr())),
    );
    let center_series_error = relative_l2(
        traj.center_series
            .iter()
            .filter(|(t, _)| (t - t_star).abs() <= CENTER_HALF_WINDOW)
            .map(|&(t, v)| (v, eval_prw(0.0, t, &prw).norm_sqr())),
    );
    Ok(PRWEvent {
        t_star,
        p0_est,
        p0_background,
        peak_density,
        profile_l2_error,
        center_series_error,
        profile_time: snap.t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportMetrics {
    /// Median density over `8 ≤ |x| ≤ 20`; `None` for a vanishing field.
    pub h_s: Option<f64>,
    /// Mean over both sides of the first `|x| ≥ 20` where the density drops
    /// below `h_s/2`; `None` when either side never crosses inside the
    /// outermost interior nodes.
    pub w_s: Option<f64>,
}

/// Amplitude and half-width of the decaying support around an event.
pub fn support_metrics(snapshot: &FieldState, grid: &ChebGrid) -> Result<SupportMetrics> {
    let full = grid.embed(&snapshot.values);
    let h_s = band_median(grid, &full, 8.0, 20.0)?.filter(|&h| h > 0.0);
    let Some(h) = h_s else {
        return Ok(SupportMetrics { h_s: None, w_s: None });
    };
    // Stop at the last interior node: the wall itself always forces a crossing.
    let edge = grid.interior_nodes().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let half = 0.5 * h;
    let mut sides = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let mut prev: Option<(f64, f64)> = None;
        let mut crossing = None;
        let mut x = 20.0;
        while x <= edge {
            let d = grid.interpolate(&full, sign * x)?.norm_sqr();
            if d < half {
                crossing = Some(match prev {
                    Some((xp, dp)) if dp > d => xp + (dp - half) / (dp - d) * (x - xp),
                    _ => x,
                });
                break;
            }
            prev = Some((x, d));
            x += FIT_RESAMPLE_STEP;
        }
        match crossing {
            Some(c) => sides.push(c),
            None => return Ok(SupportMetrics { h_s, w_s: None }),
        }
    }
    Ok(SupportMetrics { h_s, w_s: Some(0.5 * (sides[0] + sides[1])) })
}
