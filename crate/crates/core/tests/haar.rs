use std::f64::consts::PI;

use num_complex::Complex64;
use qudit_control::linalg::unitarity_error;
use qudit_control::optimizer::{haar_random_state, haar_random_unitary};

const SAMPLES: usize = 10_000;

/// One-sample Kolmogorov–Smirnov statistic scaled by √N.
fn ks_scaled(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    d * n.sqrt()
}

// Asymptotic 1% critical value of √N·D.
const CRITICAL: f64 = 1.628;

fn beta_1_dm1_cdf(d: usize) -> impl Fn(f64) -> f64 {
    move |x| 1.0 - (1.0 - x).powi(d as i32 - 1)
}

#[test]
fn state_component_follows_beta_marginal() {
    for d in [2, 10] {
        let xs: Vec<f64> = (0..SAMPLES as u64)
            .map(|s| haar_random_state(d, s).unwrap()[0].norm_sqr())
            .collect();
        let ks = ks_scaled(xs, beta_1_dm1_cdf(d));
        assert!(ks < CRITICAL, "d = {d}: {ks}");
    }
}

#[test]
fn unitary_entry_follows_beta_marginal() {
    let xs: Vec<f64> = (0..SAMPLES as u64 / 4)
        .map(|s| haar_random_unitary(10, s).unwrap()[(3, 7)].norm_sqr())
        .collect();
    assert!(ks_scaled(xs, beta_1_dm1_cdf(10)) < CRITICAL);
}

#[test]
fn two_dimensional_eigenphase_spacing() {
    // Joint density ∝ |e^{iθ1} − e^{iθ2}|², so the spacing φ ∈ [0, 2π) has
    // CDF (φ − sin φ) / 2π.
    let xs: Vec<f64> = (0..SAMPLES as u64)
        .map(|s| {
            let u = haar_random_unitary(2, s).unwrap();
            assert!(unitarity_error(&u) < 1e-12);
            let tr = u[(0, 0)] + u[(1, 1)];
            let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
            let disc = (tr * tr - Complex64::new(4.0, 0.0) * det).sqrt();
            let (a, b) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
            (a.arg() - b.arg()).rem_euclid(2.0 * PI)
        })
        .collect();
    let ks = ks_scaled(xs, |phi| (phi - phi.sin()) / (2.0 * PI));
    assert!(ks < CRITICAL, "{ks}");
}

#[test]
fn eigenphases_are_uniform() {
    // A uniformly random eigenvalue of each sample, selected independently of the spectrum.
    let xs: Vec<f64> = (0..SAMPLES as u64)
        .map(|s| {
            let u = haar_random_unitary(10, s).unwrap();
            let ev = u.schur().eigenvalues().expect("complex Schur form is triangular");
            ev[(s % 10) as usize].arg()
        })
        .collect();
    let ks = ks_scaled(xs, |a| (a + PI) / (2.0 * PI));
    assert!(ks < CRITICAL, "{ks}");
}

#[test]
fn eigenphases_are_not_uniform_pairs() {
    // Sanity check on the test itself: independent uniform phases fail it.
    let xs: Vec<f64> = (0..SAMPLES)
        .map(|k| ((k as f64 * 0.618_033_988_75).fract()) * 2.0 * PI)
        .collect();
    assert!(ks_scaled(xs, |phi| (phi - phi.sin()) / (2.0 * PI)) > CRITICAL);
}

#[test]
fn small_dimensions_are_rejected() {
    assert!(haar_random_state(1, 0).is_err());
    assert!(haar_random_unitary(0, 0).is_err());
}
