//! Density checks for the wrapped normal.

#![allow(dead_code)]

use std::f64::consts::TAU;

use cfm_core::wrapped::{augmented_density, choose_truncation, wrapped_density};

pub fn trapezoid_periodic<F: Fn(f64) -> f64>(f: F, points: usize) -> f64 {
    let h = TAU / points as f64;
    (0..points).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

pub fn integrates_to_one() {
    for sigma2 in [0.01, 0.25, 1.0, 9.0] {
        let trunc = choose_truncation(sigma2);
        let total = trapezoid_periodic(|y| wrapped_density(y, 1.0, sigma2, trunc).unwrap(), 20_000);
        assert!((total - 1.0).abs() < 1e-8, "sigma2 = {sigma2}: {total}");
    }
}

pub fn augmentation_marginalizes_to_the_density() {
    for sigma2 in [0.01, 0.5, 3.0] {
        let trunc = choose_truncation(sigma2);
        for i in 0..64 {
            let y = i as f64 * TAU / 64.0;
            let mean = -2.3 + 0.1 * i as f64;
            let sum: f64 = trunc
                .range()
                .map(|m| augmented_density(y, m, mean, sigma2).unwrap())
                .sum();
            let direct = wrapped_density(y, mean, sigma2, trunc).unwrap();
            assert!((sum - direct).abs() < 1e-12, "{sum} vs {direct}");
        }
    }
}

pub fn wide_variance_is_flat() {
    let sigma2 = 100.0;
    let trunc = choose_truncation(sigma2);
    for i in 0..1000 {
        let y = i as f64 * TAU / 1000.0;
        for mean in [0.0, 1.3, -4.0] {
            let d = wrapped_density(y, mean, sigma2, trunc).unwrap();
            assert!((d - 1.0 / TAU).abs() < 1e-4, "y = {y}: {d}");
        }
    }
}
