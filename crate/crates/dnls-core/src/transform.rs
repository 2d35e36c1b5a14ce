//! Fast derivative backend: Chebyshev coefficients by an FFT of the even
//! extension, the coefficient recurrence for `d/ds`, and an FFT back.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct ChebTransform {
    degree: usize,
    half_length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    coeffs: Vec<Complex64>,
    deriv: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl ChebTransform {
    pub fn new(degree: usize, half_length: f64) -> Self {
        let len = 2 * degree;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let zero = Complex64::new(0.0, 0.0);
        Self {
            degree,
            half_length,
            forward,
            inverse,
            buf: vec![zero; len],
            coeffs: vec![zero; degree + 1],
            deriv: vec![zero; degree + 1],
            scratch: vec![zero; scratch_len],
        }
    }

    fn load_coefficients(&mut self, values: &[Complex64]) {
        let n = self.degree;
        self.buf[..=n].copy_from_slice(values);
        for j in 1..n {
            self.buf[2 * n - j] = values[j];
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        let nf = n as f64;
        for k in 0..=n {
            let cbar = if k == 0 || k == n { 2.0 } else { 1.0 };
            self.coeffs[k] = self.buf[k] / (nf * cbar);
        }
    }

    /// Replaces `coeffs` by the coefficients of its derivative in `x`.
    fn differentiate_coefficients(&mut self) {
        let n = self.degree;
        let zero = Complex64::new(0.0, 0.0);
        self.deriv[n] = zero;
        let mut next = zero; // b_{k+1}
        let mut cur = zero; // b_k
        for k in (1..=n).rev() {
            let prev = next + self.coeffs[k] * (2.0 * k as f64);
            self.deriv[k - 1] = prev;
            next = cur;
            cur = prev;
        }
        self.deriv[0] *= 0.5;
        let scale = 1.0 / self.half_length;
        for k in 0..=n {
            self.coeffs[k] = self.deriv[k] * scale;
        }
    }

    fn store_values(&mut self, out: &mut [Complex64]) {
        let n = self.degree;
        self.buf[0] = self.coeffs[0];
        self.buf[n] = self.coeffs[n];
        for k in 1..n {
            let h = self.coeffs[k] * 0.5;
            self.buf[k] = h;
            self.buf[2 * n - k] = h;
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        out.copy_from_slice(&self.buf[..=n]);
    }

    /// First derivative at all nodes.
    pub fn first(&mut self, values: &[Complex64], out: &mut [Complex64]) {
        self.load_coefficients(values);
        self.differentiate_coefficients();
        self.store_values(out);
    }

    /// Second derivative at all nodes.
    pub fn second(&mut self, values: &[Complex64], out: &mut [Complex64]) {
        self.load_coefficients(values);
        self.differentiate_coefficients();
        self.differentiate_coefficients();
        self.store_values(out);
    }
}
