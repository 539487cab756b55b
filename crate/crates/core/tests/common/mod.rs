#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vbb_core::problem::QuadraticProblem;
use vbb_core::stepsize::{build_memory, StepMemory};

/// Spectrum log-uniform in `[1, 10^log_kappa]` with both ends present.
pub fn random_spectrum(rng: &mut ChaCha8Rng, n: usize, log_kappa: f64) -> Vec<f64> {
    let mut spectrum: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => 10f64.powf(log_kappa),
            _ => 10f64.powf(rng.gen_range(0.0..=log_kappa)),
        })
        .collect();
    spectrum.sort_by(|a, b| b.partial_cmp(a).unwrap());
    spectrum
}

/// Orthogonal factor of the QR decomposition of a Gaussian-ish matrix.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

pub fn random_problem(
    rng: &mut ChaCha8Rng,
    n: usize,
    log_kappa: f64,
    rotate: bool,
) -> QuadraticProblem {
    let spectrum = random_spectrum(rng, n, log_kappa);
    let x_star: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    if rotate {
        let q = random_orthogonal(rng, n);
        QuadraticProblem::rotated(&spectrum, &q, x_star).unwrap()
    } else {
        QuadraticProblem::new(spectrum, x_star).unwrap()
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect()
}

/// A memory `(s, y = A s)` from a random diagonal SPD matrix; curvature is
/// positive by construction.
pub fn random_memory(rng: &mut ChaCha8Rng) -> StepMemory {
    loop {
        let n = rng.gen_range(2..=12);
        let log_kappa = rng.gen_range(0.1..6.0);
        let spectrum = random_spectrum(rng, n, log_kappa);
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = s.iter().zip(&spectrum).map(|(si, l)| si * l).collect();
        let zero = vec![0.0; n];
        if let Ok(mem) = build_memory(&zero, &s, &zero, &y) {
            if mem.sin_theta() < 1.0 {
                return mem;
            }
        }
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
