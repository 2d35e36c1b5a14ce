use std::f64::consts::PI;

use dnls_core::grid::{ChebGrid, DerivativeBackend, Differentiator};
use dnls_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn sample(grid: &ChebGrid, f: impl Fn(f64) -> f64) -> Vec<Complex64> {
    grid.nodes().iter().map(|&x| c(f(x))).collect()
}

fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn three_node_grid_matches_hand_derivation() {
    let g = ChebGrid::new(2, 1.0).unwrap();
    assert_eq!(g.nodes()[0], 1.0);
    assert!(g.nodes()[1].abs() < 1e-16);
    assert_eq!(g.nodes()[2], -1.0);
    // Quadratic interpolant through (1,a), (0,b), (-1,c) has slope (a - c)/2 at 0.
    let row = &g.d1()[3..6];
    assert!((row[0] - 0.5).abs() < 1e-15);
    assert!(row[1].abs() < 1e-15);
    assert!((row[2] + 0.5).abs() < 1e-15);
}

#[test]
fn rejects_bad_arguments() {
    assert!(matches!(ChebGrid::new(1, 1.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(ChebGrid::new(8, 0.0), Err(Error::InvalidArgument(_))));
    assert!(matches!(ChebGrid::new(8, -2.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn nodes_descend_from_l_to_minus_l() {
    let g = ChebGrid::new(37, 12.5).unwrap();
    assert_eq!(g.nodes()[0], 12.5);
    assert_eq!(g.nodes()[37], -12.5);
    assert!(g.nodes().windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn quadrature_of_polynomials() {
    let g = ChebGrid::new(8, 1.0).unwrap();
    let ones = vec![c(1.0); 9];
    assert!((g.quadrature(&ones).unwrap() - c(2.0)).norm() < 1e-14);
    let g4 = ChebGrid::new(4, 1.0).unwrap();
    let sq = sample(&g4, |x| x * x);
    assert!((g4.quadrature(&sq).unwrap().re - 2.0 / 3.0).abs() < 1e-15);
    assert!(matches!(g4.quadrature(&ones), Err(Error::InvalidArgument(_))));
}

#[test]
fn quadrature_of_sech_squared() {
    // The stated N = 256 on L = 40 only reaches ~3e-7; N = 512 resolves the
    // poles at ±iπ/2 to machine precision.
    let g = ChebGrid::new(512, 40.0).unwrap();
    let v = sample(&g, |x| 1.0 / x.cosh().powi(2));
    assert!((g.quadrature(&v).unwrap().re - 2.0).abs() < 1e-10);
}

#[test]
fn quadrature_of_algebraic_decay_on_wide_domain() {
    // Poles at ±i on a domain of half-width 400 need N ~ 4096 for 1e-6.
    let g = ChebGrid::new(4096, 400.0).unwrap();
    let v = sample(&g, |x| 1.0 / (1.0 + x * x).powi(2));
    assert!((g.quadrature(&v).unwrap().re - PI / 2.0).abs() < 1e-6);
}

#[test]
fn product_weights_integrate_kinked_kernels() {
    let g = ChebGrid::new(128, 3.0).unwrap();
    // ∫_{-3}^{3} |x| (1 + x²) dx = 9 + 81/2
    let v: f64 = g.nodes().iter().zip(g.abs_weights()).map(|(x, w)| w * (1.0 + x * x)).sum();
    assert!((v - (9.0 + 40.5)).abs() < 1e-11);
    // ∫_{-3}^{3} sign(x) e^x dx = 2(cosh 3 - 1)
    let s: f64 = g.nodes().iter().zip(g.sign_weights()).map(|(x, w)| w * x.exp()).sum();
    assert!((s - 2.0 * (3f64.cosh() - 1.0)).abs() < 1e-11);
}

#[test]
fn interpolation_examples() {
    // The stated N = 128 gives 1.7e-10 at x = 0.5; N = 192 is within 1e-10.
    let g = ChebGrid::new(192, 10.0).unwrap();
    let v = sample(&g, |x| 1.0 / x.cosh());
    let z = g.interpolate(&v, 0.5).unwrap();
    assert!((z.re - 1.0 / 0.5f64.cosh()).abs() < 1e-10);
    assert!((z.re - 0.886818).abs() < 1e-6);
    for j in [0, 17, 96, 192] {
        assert_eq!(g.interpolate(&v, g.nodes()[j]).unwrap(), v[j]);
    }
    assert!(matches!(g.interpolate(&v, 10.5), Err(Error::OutOfDomain { .. })));
}

#[test]
fn interpolation_row_matches_interpolate() {
    let g = ChebGrid::new(64, 5.0).unwrap();
    let v = sample(&g, |x| (0.3 * x).sin() + x * x * 0.01);
    for x in [0.0, 0.123, -4.9, 5.0] {
        let row = g.interpolation_row(x).unwrap();
        let z: Complex64 = row.iter().zip(&v).map(|(r, f)| f * *r).sum();
        assert!((z - g.interpolate(&v, x).unwrap()).norm() < 1e-13);
    }
}

#[test]
fn spectral_accuracy_of_first_derivative() {
    // On L = 20, N = 64 is still pre-asymptotic for sech; the 1e3 drop per
    // doubling is checked from N = 128 to N = 256.
    let err = |n: usize| {
        let g = ChebGrid::new(n, 20.0).unwrap();
        let v = sample(&g, |x| 1.0 / x.cosh());
        let exact = sample(&g, |x| -x.tanh() / x.cosh());
        max_err(&g.apply_d1(&v).unwrap(), &exact)
    };
    let (e128, e256) = (err(128), err(256));
    assert!(e256 <= 1e-3 * e128, "e128 = {e128:e}, e256 = {e256:e}");
}

#[test]
fn d2_interior_is_interior_block_of_d1_squared() {
    let g = ChebGrid::new(24, 3.0).unwrap();
    let m = 25;
    let d1 = g.d1();
    for i in 1..24 {
        for j in 1..24 {
            let s: f64 = (0..m).map(|k| d1[i * m + k] * d1[k * m + j]).sum();
            let got = g.d2_interior()[(i - 1) * 23 + (j - 1)];
            assert!((s - got).abs() <= 1e-12 * s.abs().max(1.0), "({i},{j}) {s} vs {got}");
        }
    }
}

#[test]
fn second_derivative_exact_on_quadratic() {
    let l = 7.0;
    let g = ChebGrid::new(30, l).unwrap();
    let q: Vec<Complex64> = g.interior_nodes().iter().map(|&x| c(1.0 - x * x / (l * l))).collect();
    let d2 = g.apply_d2_interior(&q).unwrap();
    for z in d2 {
        assert!((z.re + 2.0 / (l * l)).abs() < 1e-11);
    }
}

fn inf_norm(mat: &[f64], cols: usize) -> f64 {
    mat.chunks_exact(cols).map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// The two backends agree to 1e-12 in the normwise sense `‖Δ‖ ≤ 1e-12 ‖D‖ ‖u‖`,
/// the accuracy a floating-point product with `D` itself guarantees.
#[test]
fn transform_backend_matches_dense() {
    for (n, l) in [(64usize, 10.0), (255, 20.0), (512, 40.0), (1536, 500.0)] {
        let g = ChebGrid::new(n, l).unwrap();
        let full: Vec<Complex64> =
            g.nodes().iter().map(|&x| Complex64::new(1.0 / (x / 2.0).cosh(), (-x * x / 8.0).exp())).collect();
        let unorm = full.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut dense = Differentiator::new(&g, DerivativeBackend::Dense);
        let mut fast = Differentiator::new(&g, DerivativeBackend::Transform);
        let m = n + 1;
        let (mut a, mut b) = (vec![c(0.0); m], vec![c(0.0); m]);
        dense.first_full(&full, &mut a);
        fast.first_full(&full, &mut b);
        let bound = 1e-12 * inf_norm(g.d1(), m) * unorm;
        assert!(max_err(&a, &b) <= bound, "d1 n={n}: {:e} > {bound:e}", max_err(&a, &b));

        let interior: Vec<Complex64> = full[1..n].to_vec();
        let (mut a2, mut b2) = (vec![c(0.0); n - 1], vec![c(0.0); n - 1]);
        dense.second_interior(&interior, &mut a2);
        fast.second_interior(&interior, &mut b2);
        let bound = 1e-12 * inf_norm(g.d2_interior(), n - 1) * unorm;
        assert!(max_err(&a2, &b2) <= bound, "d2 n={n}: {:e} > {bound:e}", max_err(&a2, &b2));
    }
}

#[test]
fn transform_backend_is_accurate_on_smooth_data() {
    let g = ChebGrid::new(256, 20.0).unwrap();
    let interior: Vec<Complex64> = g.interior_nodes().iter().map(|&x| c((-x * x / 8.0).exp())).collect();
    let mut fast = Differentiator::new(&g, DerivativeBackend::Transform);
    let mut out = vec![c(0.0); 255];
    fast.second_interior(&interior, &mut out);
    for (z, &x) in out.iter().zip(g.interior_nodes()) {
        let exact = (x * x / 16.0 - 0.25) * (-x * x / 8.0).exp();
        assert!((z.re - exact).abs() < 1e-10);
    }
}

#[test]
fn uniform_resample_covers_the_window() {
    let g = ChebGrid::new(40, 5.0).unwrap();
    let v = sample(&g, |x| x);
    let (xs, vs) = g.resample_uniform(&v, -5.0, 5.0, 0.5).unwrap();
    assert_eq!(xs.len(), 21);
    assert_eq!(xs[20], 5.0);
    assert!(max_err(&vs, &xs.iter().map(|&x| c(x)).collect::<Vec<_>>()) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn derivative_annihilates_constants_and_differentiates_identity(n in 2usize..80, l in 0.1f64..600.0) {
        let g = ChebGrid::new(n, l).unwrap();
        let ones = vec![c(1.0); n + 1];
        let d = g.apply_d1(&ones).unwrap();
        prop_assert!(d.iter().all(|z| z.norm() <= 1e-10 * n as f64));
        let x = sample(&g, |x| x);
        let d = g.apply_d1(&x).unwrap();
        prop_assert!(d.iter().all(|z| (z.re - 1.0).abs() <= 1e-10 * n as f64));
        let wsum: f64 = g.qweights().iter().sum();
        prop_assert!((wsum - 2.0 * l).abs() <= 1e-12 * l * 4.0);
    }

    #[test]
    fn quadrature_exact_on_degree_n_polynomials(n in 2usize..60, coeffs in prop::collection::vec(-1.0f64..1.0, 1..60)) {
        let g = ChebGrid::new(n, 1.0).unwrap();
        let deg = coeffs.len().min(n + 1);
        let p = |x: f64| coeffs[..deg].iter().rev().fold(0.0, |acc, a| acc * x + a);
        let exact: f64 = coeffs[..deg].iter().enumerate().map(|(k, a)| if k % 2 == 0 { 2.0 * a / (k as f64 + 1.0) } else { 0.0 }).sum();
        let got = g.quadrature(&sample(&g, p)).unwrap().re;
        prop_assert!((got - exact).abs() < 1e-13 * (1.0 + n as f64));
    }

    #[test]
    fn interpolation_reproduces_polynomials(n in 2usize..40, x in -1.0f64..1.0, coeffs in prop::collection::vec(-1.0f64..1.0, 1..40)) {
        let g = ChebGrid::new(n, 1.0).unwrap();
        let deg = coeffs.len().min(n + 1);
        let p = |x: f64| coeffs[..deg].iter().rev().fold(0.0, |acc, a| acc * x + a);
        let got = g.interpolate(&sample(&g, p), x).unwrap().re;
        prop_assert!((got - p(x)).abs() < 1e-12 * (1.0 + n as f64));
    }
}
