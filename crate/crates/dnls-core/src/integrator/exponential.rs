//! Exponential time differencing in the eigenbasis of the
//! interior second-derivative matrix.
//!
//! The matrix commutes with the reflection `x -> -x`, so it is diagonalised
//! as two blocks of half size acting on the even and odd parts of the field.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64;

use super::{error_norm, StepKernel, Tolerances};
use crate::error::{invalid, Error, Result};
use crate::grid::ChebGrid;
use crate::linalg::matvec_split;
use crate::model::{check_finite, DriverSampler, ModelParams};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
struct EigenBlock {
    size: usize,
    eigenvalues: Vec<f64>,
    vecs: Vec<f64>,
    inv: Vec<f64>,
}

impl EigenBlock {
    fn new(block: &[f64], size: usize) -> Result<Self> {
        if size == 0 {
            return Ok(Self { size, eigenvalues: vec![], vecs: vec![], inv: vec![] });
        }
        let m = Mat::<f64>::from_fn(size, size, |i, j| block[i * size + j]);
        let evd = m.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let vals = evd.S().column_vector();
        let u = evd.U();
        let mut eigenvalues = Vec::with_capacity(size);
        let mut vecs = vec![0.0; size * size];
        for j in 0..size {
            let lam = vals[j];
            let lam = Complex64::new(lam.re, lam.im);
            if lam.im.abs() > 1e-6 * lam.norm().max(1.0) {
                return Err(Error::Eigen(format!("complex eigenvalue {lam} in a real-spectrum block")));
            }
            eigenvalues.push(lam.re);
            // Rotate the column to be real, then scale to unit max-modulus.
            let mut pivot = Complex64::new(0.0, 0.0);
            for i in 0..size {
                let z = u[(i, j)];
                let z = Complex64::new(z.re, z.im);
                if z.norm() > pivot.norm() {
                    pivot = z;
                }
            }
            let scale = 1.0 / pivot;
            for i in 0..size {
                let z = u[(i, j)];
                vecs[i * size + j] = (Complex64::new(z.re, z.im) * scale).re;
            }
        }
        let v = Mat::<f64>::from_fn(size, size, |i, j| vecs[i * size + j]);
        let vinv = v.partial_piv_lu().inverse();
        let mut inv = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..size {
                inv[i * size + j] = vinv[(i, j)];
            }
        }
        Ok(Self { size, eigenvalues, vecs, inv })
    }
}

/// Eigen-decomposition of the interior second-derivative matrix, split by parity.
#[derive(Debug, Clone)]
pub struct ParityEigenBasis {
    dim: usize,
    pairs: usize,
    has_mid: bool,
    even: EigenBlock,
    odd: EigenBlock,
}

/// Split-plane scratch for basis changes.
#[derive(Debug, Clone)]
pub(crate) struct BasisScratch {
    in_re: Vec<f64>,
    in_im: Vec<f64>,
    even_re: Vec<f64>,
    even_im: Vec<f64>,
    odd_re: Vec<f64>,
    odd_im: Vec<f64>,
}

impl ParityEigenBasis {
    pub fn new(grid: &ChebGrid) -> Result<Self> {
        let n = grid.interior_len();
        let d = grid.d2_interior();
        let pairs = n / 2;
        let has_mid = n % 2 == 1;
        let he = pairs + has_mid as usize;
        let mirror = |j: usize| n - 1 - j;
        let mut even = vec![0.0; he * he];
        for i in 0..he {
            for j in 0..pairs {
                even[i * he + j] = d[i * n + j] + d[i * n + mirror(j)];
            }
            if has_mid {
                even[i * he + pairs] = d[i * n + pairs];
            }
        }
        let mut odd = vec![0.0; pairs * pairs];
        for i in 0..pairs {
            for j in 0..pairs {
                odd[i * pairs + j] = d[i * n + j] - d[i * n + mirror(j)];
            }
        }
        let even = EigenBlock::new(&even, he)?;
        let odd = EigenBlock::new(&odd, pairs)?;
        Ok(Self { dim: n, pairs, has_mid, even, odd })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues in coordinate order (even block first).
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.even.eigenvalues.iter().chain(&self.odd.eigenvalues).copied().collect()
    }

    pub(crate) fn scratch(&self) -> BasisScratch {
        let he = self.even.size;
        BasisScratch {
            in_re: vec![0.0; he],
            in_im: vec![0.0; he],
            even_re: vec![0.0; he],
            even_im: vec![0.0; he],
            odd_re: vec![0.0; self.pairs],
            odd_im: vec![0.0; self.pairs],
        }
    }

    /// `u = V w`.
    pub(crate) fn from_eigen(&self, w: &[Complex64], u: &mut [Complex64], s: &mut BasisScratch) {
        let he = self.even.size;
        let p = self.pairs;
        for (i, z) in w[..he].iter().enumerate() {
            s.in_re[i] = z.re;
            s.in_im[i] = z.im;
        }
        matvec_split(&self.even.vecs, he, &s.in_re, &s.in_im, &mut s.even_re, &mut s.even_im);
        for (i, z) in w[he..].iter().enumerate() {
            s.in_re[i] = z.re;
            s.in_im[i] = z.im;
        }
        matvec_split(&self.odd.vecs, p, &s.in_re[..p], &s.in_im[..p], &mut s.odd_re, &mut s.odd_im);
        for i in 0..p {
            let e = Complex64::new(s.even_re[i], s.even_im[i]);
            let o = Complex64::new(s.odd_re[i], s.odd_im[i]);
            u[i] = e + o;
            u[self.dim - 1 - i] = e - o;
        }
        if self.has_mid {
            u[p] = Complex64::new(s.even_re[p], s.even_im[p]);
        }
    }

    /// `w = V⁻¹ u`.
    pub(crate) fn to_eigen(&self, u: &[Complex64], w: &mut [Complex64], s: &mut BasisScratch) {
        let he = self.even.size;
        let p = self.pairs;
        for i in 0..p {
            let e = 0.5 * (u[i] + u[self.dim - 1 - i]);
            s.in_re[i] = e.re;
            s.in_im[i] = e.im;
        }
        if self.has_mid {
            s.in_re[p] = u[p].re;
            s.in_im[p] = u[p].im;
        }
        matvec_split(&self.even.inv, he, &s.in_re, &s.in_im, &mut s.even_re, &mut s.even_im);
        for i in 0..p {
            let o = 0.5 * (u[i] - u[self.dim - 1 - i]);
            s.in_re[i] = o.re;
            s.in_im[i] = o.im;
        }
        matvec_split(&self.odd.inv, p, &s.in_re[..p], &s.in_im[..p], &mut s.odd_re, &mut s.odd_im);
        for i in 0..he {
            w[i] = Complex64::new(s.even_re[i], s.even_im[i]);
        }
        for i in 0..p {
            w[he + i] = Complex64::new(s.odd_re[i], s.odd_im[i]);
        }
    }

    /// Applies `D2_interior` through the decomposition; used to check it.
    pub fn apply_d2(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut s = self.scratch();
        let mut w = vec![Complex64::new(0.0, 0.0); self.dim];
        self.to_eigen(u, &mut w, &mut s);
        for (z, lam) in w.iter_mut().zip(self.eigenvalues()) {
            *z *= lam;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.from_eigen(&w, &mut out, &mut s);
        out
    }
}

/// `φ1, φ2, φ3` at `z`.
fn phi123(z: Complex64) -> [Complex64; 3] {
    if z.norm() < 1.0 {
        // φ_k(z) = Σ z^j / (j + k)!
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            for j in 1..=k + 1 {
                term /= j as f64;
            }
            let mut acc = term;
            for j in 1..24 {
                term *= z / (j + k + 1) as f64;
                acc += term;
            }
            *o = acc;
        }
        out
    } else {
        let p1 = (z.exp() - 1.0) / z;
        let p2 = (p1 - 1.0) / z;
        let p3 = (p2 - 0.5) / z;
        [p1, p2, p3]
    }
}

/// Diagonal coefficients of one Krogstad step of size `h`.
#[derive(Debug, Clone, Default)]
struct StepFactors {
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    p1_half: Vec<Complex64>,
    p2_half: Vec<Complex64>,
    p1: Vec<Complex64>,
    p2: Vec<Complex64>,
    b1: Vec<Complex64>,
    b23: Vec<Complex64>,
    b4: Vec<Complex64>,
}

impl StepFactors {
    fn new(mu: &[Complex64], h: f64) -> Self {
        let mut f = Self::default();
        for &m in mu {
            let z = m * h;
            let [q1, q2, _] = phi123(0.5 * z);
            let [p1, p2, p3] = phi123(z);
            f.e_half.push((0.5 * z).exp());
            f.e_full.push(z.exp());
            f.p1_half.push(q1);
            f.p2_half.push(q2);
            f.p1.push(p1);
            f.p2.push(p2);
            f.b1.push(p1 - 3.0 * p2 + 4.0 * p3);
            f.b23.push(2.0 * p2 - 4.0 * p3);
            f.b4.push(4.0 * p3 - p2);
        }
        f
    }
}

/// Exponential time differencing: the linear part `(i/2)D2 − γ` is
/// integrated exactly and the cubic term and forcing through φ-functions
/// (Krogstad's fourth-order scheme), so forcing that reaches the stiff
/// boundary modes does not limit the step. The error is estimated by step
/// doubling; the two half steps are kept.
pub struct EtdKernel<'a> {
    basis: &'a ParityEigenBasis,
    mu: Vec<Complex64>,
    sampler: DriverSampler,
    forcing: Vec<Complex64>,
    t: f64,
    h: f64,
    cached_h: f64,
    full: StepFactors,
    half: StepFactors,
    w: Vec<Complex64>,
    u: Vec<Complex64>,
    /// Nonlinear term at the current state, eigen coordinates.
    n0: Vec<Complex64>,
    n0_valid: bool,
    w_new: Vec<Complex64>,
    u_new: Vec<Complex64>,
    w_coarse: Vec<Complex64>,
    w_mid: Vec<Complex64>,
    n_mid: Vec<Complex64>,
    stage: [Vec<Complex64>; 3],
    ns: [Vec<Complex64>; 3],
    phys: Vec<Complex64>,
    nl: Vec<Complex64>,
    scratch: BasisScratch,
}

impl<'a> EtdKernel<'a> {
    pub fn new(
        basis: &'a ParityEigenBasis,
        grid: &ChebGrid,
        params: &ModelParams,
        t0: f64,
        u0: &[Complex64],
    ) -> Result<Self> {
        let n = basis.dim();
        if u0.len() != n || grid.interior_len() != n {
            return Err(invalid("state, grid and eigenbasis sizes disagree"));
        }
        check_finite(u0, t0)?;
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let mu = basis.eigenvalues().into_iter().map(|lam| I * (0.5 * lam) - params.gamma).collect();
        let mut kern = Self {
            basis,
            mu,
            sampler: DriverSampler::new(&params.driver, grid.interior_nodes()),
            forcing: zero.clone(),
            t: t0,
            h: 0.0,
            cached_h: f64::NAN,
            full: StepFactors::default(),
            half: StepFactors::default(),
            w: zero.clone(),
            u: u0.to_vec(),
            n0: zero.clone(),
            n0_valid: false,
            w_new: zero.clone(),
            u_new: zero.clone(),
            w_coarse: zero.clone(),
            w_mid: zero.clone(),
            n_mid: zero.clone(),
            stage: std::array::from_fn(|_| zero.clone()),
            ns: std::array::from_fn(|_| zero.clone()),
            phys: zero.clone(),
            nl: zero,
            scratch: basis.scratch(),
        };
        basis.to_eigen(u0, &mut kern.w, &mut kern.scratch);
        Ok(kern)
    }

    /// Eigen coordinates of `i|u|²u − i f(t)` for the state `w`.
    fn eval(&mut self, t: f64, w: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.basis.from_eigen(w, &mut self.phys, &mut self.scratch);
        self.sampler.sample_into(t, &mut self.forcing)?;
        for ((o, &v), &f) in self.nl.iter_mut().zip(&self.phys).zip(&self.forcing) {
            *o = I * (v.norm_sqr() * v - f);
        }
        check_finite(&self.nl, t)?;
        self.basis.to_eigen(&self.nl, out, &mut self.scratch);
        Ok(())
    }

    /// One Krogstad step from `(t, w)` with `n0 = N(w)`.
    fn krogstad(&mut self, half: bool, t: f64, h: f64, w: &[Complex64], n0: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let mut stage = std::mem::take(&mut self.stage);
        let mut ns = std::mem::take(&mut self.ns);
        let res = self.krogstad_inner(half, t, h, w, n0, out, &mut stage, &mut ns);
        self.stage = stage;
        self.ns = ns;
        res
    }

    #[allow(clippy::too_many_arguments)]
    fn krogstad_inner(
        &mut self,
        half: bool,
        t: f64,
        h: f64,
        w: &[Complex64],
        n0: &[Complex64],
        out: &mut [Complex64],
        stage: &mut [Vec<Complex64>; 3],
        ns: &mut [Vec<Complex64>; 3],
    ) -> Result<()> {
        let f = if half { &self.half } else { &self.full };
        for i in 0..w.len() {
            stage[0][i] = f.e_half[i] * w[i] + 0.5 * h * f.p1_half[i] * n0[i];
        }
        self.eval(t + 0.5 * h, &stage[0], &mut ns[0])?;
        let f = if half { &self.half } else { &self.full };
        for i in 0..w.len() {
            stage[1][i] = stage[0][i] + h * f.p2_half[i] * (ns[0][i] - n0[i]);
        }
        self.eval(t + 0.5 * h, &stage[1], &mut ns[1])?;
        let f = if half { &self.half } else { &self.full };
        for i in 0..w.len() {
            stage[2][i] = f.e_full[i] * w[i] + h * (f.p1[i] * n0[i] + 2.0 * f.p2[i] * (ns[1][i] - n0[i]));
        }
        self.eval(t + h, &stage[2], &mut ns[2])?;
        let f = if half { &self.half } else { &self.full };
        for i in 0..w.len() {
            out[i] = f.e_full[i] * w[i] + h * (f.b1[i] * n0[i] + f.b23[i] * (ns[0][i] + ns[1][i]) + f.b4[i] * ns[2][i]);
        }
        Ok(())
    }

    fn prepare_factors(&mut self, h: f64) {
        if h != self.cached_h {
            self.full = StepFactors::new(&self.mu, h);
            self.half = StepFactors::new(&self.mu, 0.5 * h);
            self.cached_h = h;
        }
    }
}

impl StepKernel for EtdKernel<'_> {
    fn dim(&self) -> usize {
        self.u.len()
    }

    fn time(&self) -> f64 {
        self.t
    }

    fn state(&self) -> &[Complex64] {
        &self.u
    }

    fn attempt(&mut self, h: f64, tol: Tolerances, y_new: &mut [Complex64]) -> Result<f64> {
        let w = std::mem::take(&mut self.w);
        let mut n0 = std::mem::take(&mut self.n0);
        let res = self.attempt_inner(h, &w, &mut n0);
        self.w = w;
        self.n0 = n0;
        res?;
        self.basis.from_eigen(&self.w_new, &mut self.u_new, &mut self.scratch);
        // Richardson estimate of the local error of the half-step solution.
        for (c, f) in self.w_coarse.iter_mut().zip(&self.w_new) {
            *c = (f - *c) / 15.0;
        }
        self.basis.from_eigen(&self.w_coarse, &mut self.phys, &mut self.scratch);
        self.h = h;
        y_new.copy_from_slice(&self.u_new);
        Ok(error_norm(&self.phys, &self.u_new, tol))
    }

    fn accept(&mut self) {
        std::mem::swap(&mut self.w, &mut self.w_new);
        std::mem::swap(&mut self.u, &mut self.u_new);
        self.n0_valid = false;
        self.t += self.h;
    }

    fn set_time(&mut self, t: f64) {
        self.t = t;
    }
}

impl EtdKernel<'_> {
    fn attempt_inner(&mut self, h: f64, w: &[Complex64], n0: &mut [Complex64]) -> Result<()> {
        if !self.n0_valid {
            self.eval(self.t, w, n0)?;
            self.n0_valid = true;
        }
        self.prepare_factors(h);
        let t = self.t;
        let mut coarse = std::mem::take(&mut self.w_coarse);
        let mut mid = std::mem::take(&mut self.w_mid);
        let mut n_mid = std::mem::take(&mut self.n_mid);
        let mut fine = std::mem::take(&mut self.w_new);
        let res = (|| {
            self.krogstad(false, t, h, w, n0, &mut coarse)?;
            self.krogstad(true, t, 0.5 * h, w, n0, &mut mid)?;
            self.eval(t + 0.5 * h, &mid, &mut n_mid)?;
            self.krogstad(true, t + 0.5 * h, 0.5 * h, &mid, &n_mid, &mut fine)
        })();
        self.w_coarse = coarse;
        self.w_mid = mid;
        self.n_mid = n_mid;
        self.w_new = fine;
        res
    }
}
