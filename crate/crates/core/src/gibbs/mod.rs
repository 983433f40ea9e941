//! Gibbs sampler for the hierarchical wrapped functional model.
//!
//! One sweep updates, in this order, the coefficients `a`, channel means `μ`,
//! grand means `β`, the variances `τ²`, `γ²`, `σ²`, and the latent wrap
//! counts `Z`. All blocks are conditionally conjugate given the wrap counts.

mod chain;
mod rng;
mod updates;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

pub use chain::{Draw, PosteriorChain, Traces, WrapCounts};
pub use rng::SweepRng;
pub use updates::Sampler;

use crate::linalg::Cholesky;
use crate::phase_data::PhaseDataset;
use crate::spline::BasisMatrix;
use crate::stats::wrap_signed;
use crate::{Error, Result};

/// Prior hyperparameters: `β_l ~ N(A0, B0)`, `τ_l² ~ IG(ν_τ, η_τ)`,
/// `γ_l² ~ IG(ν_γ, η_γ)`, `σ² ~ IG(ν_σ, η_σ)` (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Hyperparams {
    pub a0: f64,
    pub b0: f64,
    pub nu_tau: f64,
    pub eta_tau: f64,
    pub nu_gamma: f64,
    pub eta_gamma: f64,
    pub nu_sigma: f64,
    pub eta_sigma: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            a0: 0.0,
            b0: 100.0,
            nu_tau: 2.0,
            eta_tau: 2.0,
            nu_gamma: 2.0,
            eta_gamma: 2.0,
            nu_sigma: 2.0,
            eta_sigma: 2.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !self.a0.is_finite() {
            return Err(Error::InvalidHyperparams("A0 must be finite"));
        }
        let positive = [
            (self.b0, "B0 must be positive"),
            (self.nu_tau, "nu_tau must be positive"),
            (self.eta_tau, "eta_tau must be positive"),
            (self.nu_gamma, "nu_gamma must be positive"),
            (self.eta_gamma, "eta_gamma must be positive"),
            (self.nu_sigma, "nu_sigma must be positive"),
            (self.eta_sigma, "eta_sigma must be positive"),
        ];
        for (value, why) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidHyperparams(why));
            }
        }
        Ok(())
    }
}

/// The seven conditional blocks, in sweep order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
#[repr(u8)]
pub enum Block {
    Coefficients = 1,
    Mu = 2,
    Beta = 3,
    Tau2 = 4,
    Gamma2 = 5,
    Sigma2 = 6,
    WrapCounts = 7,
}

impl Block {
    pub const SWEEP_ORDER: [Block; 7] = [
        Block::Coefficients,
        Block::Mu,
        Block::Beta,
        Block::Tau2,
        Block::Gamma2,
        Block::Sigma2,
        Block::WrapCounts,
    ];
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ChainConfig {
    pub burnin: usize,
    /// Post-burn-in sweeps; every `thin`-th one is stored.
    pub samples: usize,
    pub thin: usize,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            burnin: 1000,
            samples: 1000,
            thin: 1,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidChainConfig("samples must be at least 1"));
        }
        if self.thin == 0 {
            return Err(Error::InvalidChainConfig("thin must be at least 1"));
        }
        if self.thin > self.samples {
            return Err(Error::InvalidChainConfig("thin exceeds samples, no draw would be kept"));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        self.samples / self.thin
    }

    pub fn update_order(&self) -> &'static [Block; 7] {
        &Block::SWEEP_ORDER
    }
}

/// One Gibbs state. Arrays are row-major: `a[s][k][l]`, `mu[k][l]`,
/// `z[s][k][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub subjects: usize,
    pub channels: usize,
    pub n_times: usize,
    pub n_basis: usize,
    pub a: Vec<f64>,
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
    pub tau2: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub sigma2: f64,
    pub z: Vec<i32>,
}

impl ModelState {
    /// A state with every coefficient zero, unit variances and no wraps.
    pub fn zeros(subjects: usize, channels: usize, n_times: usize, n_basis: usize) -> Self {
        Self {
            subjects,
            channels,
            n_times,
            n_basis,
            a: vec![0.0; subjects * channels * n_basis],
            mu: vec![0.0; channels * n_basis],
            beta: vec![0.0; n_basis],
            tau2: vec![1.0; n_basis],
            gamma2: vec![1.0; n_basis],
            sigma2: 1.0,
            z: vec![0; subjects * channels * n_times],
        }
    }

    pub fn coefficients(&self, subject: usize, channel: usize) -> &[f64] {
        let start = (subject * self.channels + channel) * self.n_basis;
        &self.a[start..start + self.n_basis]
    }

    pub fn wraps(&self, subject: usize, channel: usize) -> &[i32] {
        let start = (subject * self.channels + channel) * self.n_times;
        &self.z[start..start + self.n_times]
    }

    pub fn variances_positive(&self) -> bool {
        self.sigma2 > 0.0 && self.tau2.iter().all(|&v| v > 0.0) && self.gamma2.iter().all(|&v| v > 0.0)
    }
}

/// Unwraps a circular series by continuity: each step is the signed increment
/// in `(-π, π]`.
pub fn unwrap_by_continuity(series: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let mut acc = match series.first() {
        Some(&y) => y,
        None => return out,
    };
    out.push(acc);
    for w in series.windows(2) {
        acc += wrap_signed(w[1] - w[0]);
        out.push(acc);
    }
    out
}

/// Deterministic starting state: each series is unwrapped by continuity and
/// fitted by least squares, `Z` holds the wrap counts of that unwrapping,
/// `μ` and `β` are averages of the fits, `τ² = γ² = 1`, `σ² = 0.25`.
pub fn initialize(data: &PhaseDataset, basis: &BasisMatrix, hyper: &Hyperparams) -> Result<ModelState> {
    hyper.validate()?;
    check_basis(data, basis)?;
    let (n, p, t, l) = (data.subjects(), data.channels(), data.times(), basis.n_basis());
    let gram = Cholesky::factor(&basis.gram(), l)?;
    let mut state = ModelState::zeros(n, p, t, l);
    state.sigma2 = 0.25;

    let mut rhs = vec![0.0; l];
    for s in 0..n {
        for k in 0..p {
            let unit = s * p + k;
            let y = data.series(s, k);
            let unwrapped = unwrap_by_continuity(y);
            for j in 0..t {
                state.z[unit * t + j] = libm::round((unwrapped[j] - y[j]) / TAU) as i32;
            }
            basis.project(&unwrapped, &mut rhs);
            gram.solve(&mut rhs);
            state.a[unit * l..(unit + 1) * l].copy_from_slice(&rhs);
        }
    }
    for k in 0..p {
        for li in 0..l {
            let sum: f64 = (0..n).map(|s| state.a[(s * p + k) * l + li]).sum();
            state.mu[k * l + li] = sum / n as f64;
        }
    }
    for li in 0..l {
        let sum: f64 = (0..p).map(|k| state.mu[k * l + li]).sum();
        state.beta[li] = sum / p as f64;
    }
    Ok(state)
}

fn check_basis(data: &PhaseDataset, basis: &BasisMatrix) -> Result<()> {
    if basis.n_times() != data.times() {
        return Err(Error::DimensionMismatch {
            what: "basis columns vs time points",
            expected: data.times(),
            found: basis.n_times(),
        });
    }
    Ok(())
}

/// Initializes, runs `burnin + samples` sweeps and keeps every `thin`-th
/// post-burn-in state.
///
/// The output depends only on the seed: every unit draws from its own
/// substream, so any thread count gives the same chain.
pub fn run_chain(
    data: &PhaseDataset,
    basis: &BasisMatrix,
    hyper: &Hyperparams,
    config: &ChainConfig,
) -> Result<PosteriorChain> {
    config.validate()?;
    let sampler = Sampler::new(data, basis, *hyper)?;
    let state = initialize(data, basis, hyper)?;
    sampler.run(state, config)
}
