//! Small dense kernels. Matrices are row-major `f64`; complex vectors are
//! split into real and imaginary planes so the inner loop stays real.

use num_complex::Complex64;

/// `y = A x` for a real `rows x cols` matrix and a split complex vector.
pub fn matvec_split(
    a: &[f64],
    cols: usize,
    x_re: &[f64],
    x_im: &[f64],
    y_re: &mut [f64],
    y_im: &mut [f64],
) {
    debug_assert_eq!(x_re.len(), cols);
    for (i, row) in a.chunks_exact(cols).enumerate() {
        let mut ar = [0.0f64; 4];
        let mut ai = [0.0f64; 4];
        let rc = row.chunks_exact(4);
        let xrc = x_re.chunks_exact(4);
        let xic = x_im.chunks_exact(4);
        let (rr, xrr, xir) = (rc.remainder(), xrc.remainder(), xic.remainder());
        for ((r, p), q) in rc.zip(xrc).zip(xic) {
            for k in 0..4 {
                ar[k] += r[k] * p[k];
                ai[k] += r[k] * q[k];
            }
        }
        let mut sr = (ar[0] + ar[1]) + (ar[2] + ar[3]);
        let mut si = (ai[0] + ai[1]) + (ai[2] + ai[3]);
        for ((r, p), q) in rr.iter().zip(xrr).zip(xir) {
            sr += r * p;
            si += r * q;
        }
        y_re[i] = sr;
        y_im[i] = si;
    }
}

/// Complex convenience wrapper around [`matvec_split`].
pub fn matvec(a: &[f64], cols: usize, x: &[Complex64]) -> Vec<Complex64> {
    let rows = a.len() / cols;
    let (xr, xi) = split(x);
    let mut yr = vec![0.0; rows];
    let mut yi = vec![0.0; rows];
    matvec_split(a, cols, &xr, &xi, &mut yr, &mut yi);
    join(&yr, &yi)
}

pub fn split(x: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    (x.iter().map(|z| z.re).collect(), x.iter().map(|z| z.im).collect())
}

pub fn join(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()
}

/// Row-major product of two square matrices via faer.
pub fn matmul_square(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let ma = faer::MatRef::from_row_major_slice(a, n, n);
    let mb = faer::MatRef::from_row_major_slice(b, n, n);
    let c = ma * mb;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = c[(i, j)];
        }
    }
    out
}
