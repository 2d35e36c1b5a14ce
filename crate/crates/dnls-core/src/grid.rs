//! Chebyshev–Gauss–Lobatto collocation on `[-L, L]`.
//!
//! Nodes run from `+L` down to `-L`. The evolving state lives on the `N - 1`
//! interior nodes; boundary values are identically zero.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::transform::ChebTransform;

#[derive(Debug, Clone)]
pub struct ChebGrid {
    degree: usize,
    half_length: f64,
    nodes: Vec<f64>,
    d1: Vec<f64>,
    d2_interior: Vec<f64>,
    qweights: Vec<f64>,
    abs_weights: Vec<f64>,
    sign_weights: Vec<f64>,
    bary: Vec<f64>,
}

impl ChebGrid {
    /// Builds nodes, differentiation matrices and quadrature weights.
    pub fn new(degree: usize, half_length: f64) -> Result<Self> {
        if degree < 2 {
            return Err(invalid(format!("grid degree must be >= 2, got {degree}")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(invalid(format!("half-length must be positive, got {half_length}")));
        }
        let n = degree;
        let m = n + 1;
        let nodes: Vec<f64> = (0..m)
            .map(|j| {
                // Symmetric evaluation keeps x[j] = -x[n-j] bit-exactly.
                half_length * (PI * (n as f64 - 2.0 * j as f64) / (2.0 * n as f64)).sin()
            })
            .collect();

        let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
        let mut d1 = vec![0.0; m * m];
        for i in 0..m {
            let mut row_sum = 0.0;
            for j in 0..m {
                if i == j {
                    continue;
                }
                // x_i - x_j through the product formula avoids cancellation.
                let diff = 2.0
                    * ((i + j) as f64 * PI / (2.0 * n as f64)).sin()
                    * ((j as f64 - i as f64) * PI / (2.0 * n as f64)).sin();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let v = c(i) / c(j) * sign / diff;
                d1[i * m + j] = v;
                row_sum += v;
            }
            d1[i * m + i] = -row_sum;
        }
        for v in d1.iter_mut() {
            *v /= half_length;
        }

        let full_d2 = linalg::matmul_square(&d1, &d1, m);
        let k = n - 1;
        let mut d2_interior = vec![0.0; k * k];
        for i in 0..k {
            d2_interior[i * k..(i + 1) * k].copy_from_slice(&full_d2[(i + 1) * m + 1..(i + 1) * m + 1 + k]);
        }
        drop(full_d2);

        let qweights = clenshaw_curtis(n).into_iter().map(|w| w * half_length).collect();
        let abs_weights = moment_weights(n, abs_chebyshev_moment)
            .into_iter()
            .map(|w| w * half_length * half_length)
            .collect();
        let sign_weights = moment_weights(n, sign_chebyshev_moment)
            .into_iter()
            .map(|w| w * half_length)
            .collect();
        let bary = (0..m)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n { 0.5 * s } else { s }
            })
            .collect();

        Ok(Self { degree: n, half_length, nodes, d1, d2_interior, qweights, abs_weights, sign_weights, bary })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.degree]
    }

    pub fn interior_len(&self) -> usize {
        self.degree - 1
    }

    /// Row-major `(N+1) x (N+1)` first-derivative matrix.
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    /// Row-major `(N-1) x (N-1)` second-derivative matrix on interior nodes.
    pub fn d2_interior(&self) -> &[f64] {
        &self.d2_interior
    }

    pub fn qweights(&self) -> &[f64] {
        &self.qweights
    }

    /// Product-quadrature weights for `∫ |x| g(x) dx` with `g` smooth.
    /// They integrate the kink of `|x|` exactly instead of resolving it.
    pub fn abs_weights(&self) -> &[f64] {
        &self.abs_weights
    }

    /// Product-quadrature weights for `∫ sign(x) g(x) dx` with `g` smooth.
    pub fn sign_weights(&self) -> &[f64] {
        &self.sign_weights
    }

    /// Pads interior values with the zero boundary values.
    pub fn embed(&self, interior: &[Complex64]) -> Vec<Complex64> {
        let mut full = Vec::with_capacity(self.degree + 1);
        full.push(Complex64::new(0.0, 0.0));
        full.extend_from_slice(interior);
        full.push(Complex64::new(0.0, 0.0));
        full
    }

    fn check_full(&self, len: usize) -> Result<()> {
        if len != self.degree + 1 {
            return Err(invalid(format!("expected {} nodal values, got {len}", self.degree + 1)));
        }
        Ok(())
    }

    pub fn quadrature(&self, values: &[Complex64]) -> Result<Complex64> {
        self.check_full(values.len())?;
        Ok(values.iter().zip(&self.qweights).map(|(v, w)| v * w).sum())
    }

    pub fn quadrature_real(&self, values: &[f64]) -> Result<f64> {
        self.check_full(values.len())?;
        Ok(values.iter().zip(&self.qweights).map(|(v, w)| v * w).sum())
    }

    /// Barycentric interpolation of nodal data at `x`.
    pub fn interpolate(&self, values: &[Complex64], x: f64) -> Result<Complex64> {
        self.check_full(values.len())?;
        let l = self.half_length;
        if !(x >= -l && x <= l) {
            return Err(Error::OutOfDomain { x, lo: -l, hi: l });
        }
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for ((&xj, &wj), &fj) in self.nodes.iter().zip(&self.bary).zip(values) {
            let d = x - xj;
            if d == 0.0 {
                return Ok(fj);
            }
            let t = wj / d;
            num += fj * t;
            den += t;
        }
        Ok(num / den)
    }

    /// Linear functional weights `c` with `interpolate(v, x) = Σ c_j v_j`.
    pub fn interpolation_row(&self, x: f64) -> Result<Vec<f64>> {
        let l = self.half_length;
        if !(x >= -l && x <= l) {
            return Err(Error::OutOfDomain { x, lo: -l, hi: l });
        }
        let mut row = vec![0.0; self.degree + 1];
        if let Some(j) = self.nodes.iter().position(|&xj| xj == x) {
            row[j] = 1.0;
            return Ok(row);
        }
        let mut den = 0.0;
        for (j, (&xj, &wj)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let t = wj / (x - xj);
            row[j] = t;
            den += t;
        }
        for r in row.iter_mut() {
            *r /= den;
        }
        Ok(row)
    }

    /// Interpolates onto `x_lo, x_lo + step, ...` up to `x_hi` inclusive.
    pub fn resample_uniform(
        &self,
        values: &[Complex64],
        x_lo: f64,
        x_hi: f64,
        step: f64,
    ) -> Result<(Vec<f64>, Vec<Complex64>)> {
        if !(step > 0.0) || x_hi < x_lo {
            return Err(invalid("uniform resample needs step > 0 and x_hi >= x_lo"));
        }
        let count = ((x_hi - x_lo) / step + 1e-9).floor() as usize + 1;
        let mut xs = Vec::with_capacity(count);
        let mut vs = Vec::with_capacity(count);
        for k in 0..count {
            let x = x_lo + step * k as f64;
            xs.push(x);
            vs.push(self.interpolate(values, x)?);
        }
        Ok((xs, vs))
    }

    /// First derivative of nodal data with the dense matrix.
    pub fn apply_d1(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_full(values.len())?;
        Ok(linalg::matvec(&self.d1, self.degree + 1, values))
    }

    /// Second derivative on interior nodes of a field vanishing at `±L`.
    pub fn apply_d2_interior(&self, interior: &[Complex64]) -> Result<Vec<Complex64>> {
        if interior.len() != self.degree - 1 {
            return Err(invalid(format!(
                "expected {} interior values, got {}",
                self.degree - 1,
                interior.len()
            )));
        }
        Ok(linalg::matvec(&self.d2_interior, self.degree - 1, interior))
    }
}

/// Clenshaw–Curtis weights on `[-1, 1]` for the nodes `cos(jπ/N)`.
pub(crate) fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let mut v = vec![1.0; n.saturating_sub(1)];
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            for (j, vj) in v.iter_mut().enumerate() {
                let theta = PI * (j + 1) as f64 / nf;
                *vj -= 2.0 * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (j, vj) in v.iter_mut().enumerate() {
            let theta = PI * (j + 1) as f64 / nf;
            *vj -= (nf * theta).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for (j, vj) in v.iter_mut().enumerate() {
                let theta = PI * (j + 1) as f64 / nf;
                *vj -= 2.0 * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (j, vj) in v.iter().enumerate() {
        w[j + 1] = 2.0 * vj / nf;
    }
    w
}

/// `∫_0^{π/2} sin(mθ) dθ`.
fn half_sine(m: i64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let c = match m.rem_euclid(4) {
        0 => 1.0,
        2 => -1.0,
        _ => 0.0,
    };
    (1.0 - c) / m as f64
}

/// `∫_{-1}^{1} |s| T_k(s) ds`.
fn abs_chebyshev_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    // 2 ∫_0^{π/2} cosθ sinθ cos(kθ) dθ
    let k = k as i64;
    0.5 * (half_sine(2 + k) + half_sine(2 - k))
}

/// `∫_{-1}^{1} sign(s) T_k(s) ds`.
fn sign_chebyshev_moment(k: usize) -> f64 {
    if k % 2 == 0 {
        return 0.0;
    }
    // 2 ∫_0^{π/2} sinθ cos(kθ) dθ
    let k = k as i64;
    half_sine(1 + k) + half_sine(1 - k)
}

/// Weights `∫_{-1}^{1} K(s) ℓ_j(s) ds` from the Chebyshev moments of a kernel `K`.
fn moment_weights(n: usize, moment: fn(usize) -> f64) -> Vec<f64> {
    let nf = n as f64;
    let moments: Vec<f64> = (0..=n).map(moment).collect();
    let cbar = |k: usize| if k == 0 || k == n { 2.0 } else { 1.0 };
    (0..=n)
        .map(|j| {
            let mut s = 0.0;
            for (k, &mk) in moments.iter().enumerate() {
                if mk == 0.0 {
                    continue;
                }
                let ang = PI * ((j * k) % (2 * n)) as f64 / nf;
                s += 2.0 / (nf * cbar(k)) * ang.cos() * mk;
            }
            s / cbar(j)
        })
        .collect()
}

/// Selects how derivatives of nodal data are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeBackend {
    #[default]
    Dense,
    Transform,
}

/// Owns the scratch space needed to differentiate repeatedly on one grid.
pub struct Differentiator<'g> {
    grid: &'g ChebGrid,
    transform: Option<ChebTransform>,
    re: Vec<f64>,
    im: Vec<f64>,
    out_re: Vec<f64>,
    out_im: Vec<f64>,
    full: Vec<Complex64>,
    full_out: Vec<Complex64>,
}

impl<'g> Differentiator<'g> {
    pub fn new(grid: &'g ChebGrid, backend: DerivativeBackend) -> Self {
        let transform = match backend {
            DerivativeBackend::Dense => None,
            DerivativeBackend::Transform => Some(ChebTransform::new(grid.degree, grid.half_length)),
        };
        let m = grid.degree + 1;
        let zero = Complex64::new(0.0, 0.0);
        Self {
            grid,
            transform,
            re: vec![0.0; m],
            im: vec![0.0; m],
            out_re: vec![0.0; m],
            out_im: vec![0.0; m],
            full: vec![zero; m],
            full_out: vec![zero; m],
        }
    }

    pub fn grid(&self) -> &'g ChebGrid {
        self.grid
    }

    pub fn backend(&self) -> DerivativeBackend {
        if self.transform.is_some() { DerivativeBackend::Transform } else { DerivativeBackend::Dense }
    }

    /// `out = D2_interior · interior`.
    pub fn second_interior(&mut self, interior: &[Complex64], out: &mut [Complex64]) {
        let k = self.grid.degree - 1;
        debug_assert_eq!(interior.len(), k);
        match &mut self.transform {
            Some(tr) => {
                self.full[1..=k].copy_from_slice(interior);
                tr.second(&self.full, &mut self.full_out);
                out.copy_from_slice(&self.full_out[1..=k]);
            }
            None => {
                for (i, z) in interior.iter().enumerate() {
                    self.re[i] = z.re;
                    self.im[i] = z.im;
                }
                linalg::matvec_split(
                    &self.grid.d2_interior,
                    k,
                    &self.re[..k],
                    &self.im[..k],
                    &mut self.out_re[..k],
                    &mut self.out_im[..k],
                );
                for (i, o) in out.iter_mut().enumerate() {
                    *o = Complex64::new(self.out_re[i], self.out_im[i]);
                }
            }
        }
    }

    /// `out = D1 · full` on all `N + 1` nodes.
    pub fn first_full(&mut self, full: &[Complex64], out: &mut [Complex64]) {
        let m = self.grid.degree + 1;
        debug_assert_eq!(full.len(), m);
        match &mut self.transform {
            Some(tr) => tr.first(full, out),
            None => {
                for (i, z) in full.iter().enumerate() {
                    self.re[i] = z.re;
                    self.im[i] = z.im;
                }
                linalg::matvec_split(&self.grid.d1, m, &self.re, &self.im, &mut self.out_re, &mut self.out_im);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = Complex64::new(self.out_re[i], self.out_im[i]);
                }
            }
        }
    }
}
