//! Wrapped normal density and the latent wrap-count augmentation.
//!
//! A real-line value `w ~ N(mean, σ²)` reduced mod 2π has density
//!
//! ```text
//! f(y) = (2πσ²)^{-1/2} Σ_m exp{-(y - mean + 2πm)² / (2σ²)}
//! ```
//!
//! Augmenting with the integer `Z` gives the joint
//! `f(y, Z = m) = φ(y - mean + 2πm; 0, σ²)`, so that given `Z` the likelihood
//! of `mean` is Gaussian. The infinite sum is truncated to `|m| <= M̃`.

use core::f64::consts::{PI, TAU};

use rand::Rng;

use crate::{Error, Result};

/// Bound `M̃ >= 1` on `|Z|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct WrapTruncation(u32);

impl WrapTruncation {
    pub fn new(bound: u32) -> Result<Self> {
        if bound == 0 {
            return Err(Error::InvalidTruncation(bound));
        }
        Ok(Self(bound))
    }

    pub fn bound(self) -> u32 {
        self.0
    }

    pub fn range(self) -> core::ops::RangeInclusive<i32> {
        -(self.0 as i32)..=self.0 as i32
    }
}

fn check_variance(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::NonpositiveVariance(sigma2));
    }
    Ok(())
}

/// `M̃ = max(1, ceil((6σ + 2π) / 2π))`.
pub fn choose_truncation(sigma2: f64) -> WrapTruncation {
    let sigma = libm::sqrt(sigma2.max(0.0));
    let m = libm::ceil((6.0 * sigma + TAU) / TAU);
    // saturates for absurd variances
    let m = if m.is_finite() {
        m.min(u32::MAX as f64) as u32
    } else {
        u32::MAX
    };
    WrapTruncation(m.max(1))
}

/// A truncation wide enough for a specific residual: the dominant wrap count
/// `≈ -residual / 2π` plus the `σ²` margin of [`choose_truncation`].
pub fn covering_truncation(residual: f64, sigma2: f64) -> WrapTruncation {
    let base = choose_truncation(sigma2).bound();
    let shift = libm::ceil(libm::fabs(residual) / TAU);
    let shift = if shift.is_finite() {
        shift.min(1e6) as u32
    } else {
        1_000_000
    };
    WrapTruncation(base.saturating_add(shift))
}

fn log_normal_const(sigma2: f64) -> f64 {
    -0.5 * libm::log(TAU * sigma2)
}

/// Log of the truncated wrapped normal density, via log-sum-exp.
pub fn wrapped_log_density(y: f64, mean: f64, sigma2: f64, truncation: WrapTruncation) -> Result<f64> {
    check_variance(sigma2)?;
    let d = y - mean;
    let exponent = |m: i32| {
        let x = d + TAU * m as f64;
        -x * x / (2.0 * sigma2)
    };
    let max = truncation.range().map(exponent).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = truncation.range().map(|m| libm::exp(exponent(m) - max)).sum();
    Ok(log_normal_const(sigma2) + max + libm::log(sum))
}

/// Truncated wrapped normal density of the circular value `y`.
pub fn wrapped_density(y: f64, mean: f64, sigma2: f64, truncation: WrapTruncation) -> Result<f64> {
    wrapped_log_density(y, mean, sigma2, truncation).map(libm::exp)
}

/// Joint density `f(y, Z = wrap)` of the augmented model.
pub fn augmented_density(y: f64, wrap: i32, mean: f64, sigma2: f64) -> Result<f64> {
    check_variance(sigma2)?;
    let x = y - mean + TAU * wrap as f64;
    Ok(libm::exp(log_normal_const(sigma2) - x * x / (2.0 * sigma2)))
}

/// Normalized probabilities `P(Z = m)`, `m = -M̃..=M̃`, written into `out`
/// (length `2M̃ + 1`).
pub fn wrap_count_probabilities(residual: f64, sigma2: f64, truncation: WrapTruncation, out: &mut [f64]) -> Result<()> {
    check_variance(sigma2)?;
    let bound = truncation.bound() as i32;
    assert_eq!(out.len(), (2 * bound + 1) as usize);
    let mode = dominant_wrap(residual, bound);
    let log_weight = |m: i32| {
        let x = residual + TAU * m as f64;
        let xm = residual + TAU * mode as f64;
        (xm * xm - x * x) / (2.0 * sigma2)
    };
    let mut total = 0.0;
    for (slot, m) in out.iter_mut().zip(truncation.range()) {
        *slot = libm::exp(log_weight(m));
        total += *slot;
    }
    for slot in out.iter_mut() {
        *slot /= total;
    }
    Ok(())
}

/// The `m` in `[-bound, bound]` maximizing `φ(residual; -2πm, σ²)`.
fn dominant_wrap(residual: f64, bound: i32) -> i32 {
    let m = libm::round(-residual / TAU);
    m.clamp(-bound as f64, bound as f64) as i32
}

/// Draws `Z` from `P(Z = m) ∝ φ(residual; -2πm, σ²)` on `[-M̃, M̃]`.
///
/// Weights are formed relative to the dominant term, so tiny `σ²` cannot
/// underflow the normalizer.
pub fn sample_wrap_count<R: Rng + ?Sized>(residual: f64, sigma2: f64, truncation: WrapTruncation, rng: &mut R) -> i32 {
    debug_assert!(sigma2 > 0.0);
    let bound = truncation.bound() as i32;
    let mode = dominant_wrap(residual, bound);
    let xm = residual + TAU * mode as f64;
    let inv = 1.0 / (2.0 * sigma2);
    let weight = |m: i32| {
        let x = residual + TAU * m as f64;
        libm::exp((xm * xm - x * x) * inv)
    };
    let total: f64 = (-bound..=bound).map(weight).sum();
    let mut u = rng.random::<f64>() * total;
    for m in -bound..=bound {
        let w = weight(m);
        if u < w {
            return m;
        }
        u -= w;
    }
    // rounding leftovers land on the mode
    mode
}

/// Circular uniform density, the `σ² → ∞` limit of the wrapped normal.
pub const UNIFORM_DENSITY: f64 = 1.0 / (2.0 * PI);
