//! Small numeric helpers shared across modules.

use alloc::vec::Vec;
use core::f64::consts::TAU;

/// Reduces `x` onto the half-open circle `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x - TAU * libm::floor(x / TAU);
    // floor can leave r == TAU (or a hair below zero) through rounding
    if !(0.0..TAU).contains(&r) {
        0.0
    } else {
        r
    }
}

/// Reduces `x` onto `(-π, π]`.
pub fn wrap_signed(x: f64) -> f64 {
    let r = wrap_phase(x);
    if r > core::f64::consts::PI {
        r - TAU
    } else {
        r
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Quantile of already sorted data, linear interpolation between order
/// statistics (position `(len - 1) * q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let pos = (len - 1) as f64 * q.clamp(0.0, 1.0);
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(len - 1);
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

/// SplitMix64 finalizer, used to derive independent seeds from a master seed.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_phase_half_open() {
        assert_eq!(wrap_phase(TAU), 0.0);
        assert_eq!(wrap_phase(0.0), 0.0);
        assert!((wrap_phase(6.4) - (6.4 - TAU)).abs() < 1e-15);
        assert!((wrap_phase(3.0 - 3.5) - (3.0 - 3.5 + TAU)).abs() < 1e-15);
        let tiny = wrap_phase(-1e-18);
        assert!((0.0..TAU).contains(&tiny));
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile(&xs, 0.05) - 1.15).abs() < 1e-12);
        assert_eq!(quantile(&[0.2], 0.95), 0.2);
    }
}
