//! Circular phase datasets, their validation, and the synthetic generator
//! that draws data from the hierarchical wrapped functional model.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::gibbs::Hyperparams;
use crate::spline::BasisMatrix;
use crate::stats::wrap_phase;
use crate::{Error, Result};

/// Ordered observation times `t_1 < ... < t_T`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::GridTooShort(points.len()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::NonIncreasingGrid { index: i + 1 });
            }
        }
        Ok(Self { points })
    }

    /// `count` equally spaced points on `[0, 1]`.
    pub fn uniform(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::GridTooShort(count));
        }
        let step = 1.0 / (count - 1) as f64;
        let mut points: Vec<f64> = (0..count).map(|j| j as f64 * step).collect();
        points[count - 1] = 1.0;
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0], self.points[self.points.len() - 1])
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(grid: TimeGrid) -> Self {
        grid.points
    }
}

/// Circular observations `Y[s][k][j]`, each in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDataset {
    values: Vec<f64>,
    subjects: usize,
    channels: usize,
    grid: TimeGrid,
}

impl PhaseDataset {
    /// Builds a dataset from row-major `[subject][channel][time]` values and
    /// validates it.
    pub fn new(values: Vec<f64>, subjects: usize, channels: usize, grid: TimeGrid) -> Result<Self> {
        let dataset = Self {
            values,
            subjects,
            channels,
            grid,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    /// Reduces every value mod 2π before validating.
    pub fn new_wrapped(mut values: Vec<f64>, subjects: usize, channels: usize, grid: TimeGrid) -> Result<Self> {
        for v in &mut values {
            *v = wrap_phase(*v);
        }
        Self::new(values, subjects, channels, grid)
    }

    /// Checks dimensions and the `[0, 2π)` range, reporting the first offender.
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 {
            return Err(Error::DimensionMismatch {
                what: "subjects",
                expected: 1,
                found: 0,
            });
        }
        if self.channels == 0 {
            return Err(Error::DimensionMismatch {
                what: "channels",
                expected: 1,
                found: 0,
            });
        }
        let expected = self.subjects * self.channels * self.grid.len();
        if self.values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "phase values",
                expected,
                found: self.values.len(),
            });
        }
        let t = self.grid.len();
        for (i, &v) in self.values.iter().enumerate() {
            if !(0.0..TAU).contains(&v) {
                return Err(Error::OutOfRangePhase {
                    subject: i / (self.channels * t),
                    channel: (i / t) % self.channels,
                    time: i % t,
                    value: v,
                });
            }
        }
        Ok(())
    }

    pub fn subjects(&self) -> usize {
        self.subjects
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn times(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, subject: usize, channel: usize, time: usize) -> f64 {
        self.values[self.offset(subject, channel) + time]
    }

    /// The time series of one (subject, channel) pair.
    pub fn series(&self, subject: usize, channel: usize) -> &[f64] {
        let start = self.offset(subject, channel);
        &self.values[start..start + self.times()]
    }

    /// All channels of one subject, `[channel][time]`.
    pub fn subject(&self, subject: usize) -> &[f64] {
        let len = self.channels * self.times();
        &self.values[subject * len..(subject + 1) * len]
    }

    fn offset(&self, subject: usize, channel: usize) -> usize {
        (subject * self.channels + channel) * self.times()
    }
}

/// The latent quantities behind a simulated dataset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenerativeTruth {
    pub subjects: usize,
    pub channels: usize,
    pub n_basis: usize,
    /// Coefficients `a[s][k][l]`.
    pub a: Vec<f64>,
    /// Channel means `mu[k][l]`.
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
    pub tau2: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub sigma2: f64,
    /// `(Σ_l a_kl B_lj) mod 2π`, indexed `[s][k][j]`.
    pub clean_phase: Vec<f64>,
}

impl GenerativeTruth {
    /// The noiseless phases as a dataset on the given grid.
    pub fn clean_dataset(&self, grid: &TimeGrid) -> Result<PhaseDataset> {
        PhaseDataset::new(self.clean_phase.clone(), self.subjects, self.channels, grid.clone())
    }
}

/// Generator settings. Any of `beta`, `tau2`, `gamma2`, `sigma2` may be fixed
/// instead of drawn from the prior; fixed variances may be zero.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SimulationConfig {
    pub hyper: Hyperparams,
    pub beta: Option<Vec<f64>>,
    pub tau2: Option<Vec<f64>>,
    pub gamma2: Option<Vec<f64>>,
    pub sigma2: Option<f64>,
}

fn fixed_or_draw<F>(fixed: &Option<Vec<f64>>, len: usize, what: &'static str, mut draw: F) -> Result<Vec<f64>>
where
    F: FnMut() -> f64,
{
    match fixed {
        Some(values) => {
            if values.len() != len {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: len,
                    found: values.len(),
                });
            }
            Ok(values.clone())
        }
        None => Ok((0..len).map(|_| draw()).collect()),
    }
}

fn check_nonnegative(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidHyperparams(what));
    }
    Ok(())
}

fn inverse_gamma<R: rand::Rng>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let gamma = Gamma::new(shape, 1.0 / rate).expect("validated shape and rate");
    1.0 / gamma.sample(rng)
}

/// Draws `(Y, truth)` from the hierarchy
/// `β_l ~ N(A0, B0)`, `μ_kl ~ N(β_l, γ_l²)`, `a_kl^(s) ~ N(μ_kl, τ_l²)`,
/// `Y = (B a + ε) mod 2π` with `ε ~ N(0, σ²)`.
pub fn simulate_dataset(
    subjects: usize,
    channels: usize,
    basis: &BasisMatrix,
    config: &SimulationConfig,
    seed: u64,
) -> Result<(PhaseDataset, GenerativeTruth)> {
    if subjects == 0 || channels == 0 {
        return Err(Error::DimensionMismatch {
            what: "subjects and channels",
            expected: 1,
            found: 0,
        });
    }
    config.hyper.validate()?;
    let h = &config.hyper;
    let l_count = basis.n_basis();
    let t_count = basis.n_times();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let beta = fixed_or_draw(&config.beta, l_count, "beta", || {
        h.a0 + libm::sqrt(h.b0) * normal(&mut rng)
    })?;
    let tau2 = fixed_or_draw(&config.tau2, l_count, "tau2", || {
        inverse_gamma(h.nu_tau, h.eta_tau, &mut rng)
    })?;
    let gamma2 = fixed_or_draw(&config.gamma2, l_count, "gamma2", || {
        inverse_gamma(h.nu_gamma, h.eta_gamma, &mut rng)
    })?;
    let sigma2 = match config.sigma2 {
        Some(v) => v,
        None => inverse_gamma(h.nu_sigma, h.eta_sigma, &mut rng),
    };
    check_nonnegative(&tau2, "tau2 must be nonnegative")?;
    check_nonnegative(&gamma2, "gamma2 must be nonnegative")?;
    check_nonnegative(&[sigma2], "sigma2 must be nonnegative")?;
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidHyperparams("beta must be finite"));
    }

    let mut mu = vec![0.0; channels * l_count];
    for k in 0..channels {
        for l in 0..l_count {
            mu[k * l_count + l] = beta[l] + libm::sqrt(gamma2[l]) * normal(&mut rng);
        }
    }
    let mut a = vec![0.0; subjects * channels * l_count];
    for s in 0..subjects {
        for k in 0..channels {
            for l in 0..l_count {
                a[(s * channels + k) * l_count + l] = mu[k * l_count + l] + libm::sqrt(tau2[l]) * normal(&mut rng);
            }
        }
    }

    let sigma = libm::sqrt(sigma2);
    let mut clean_phase = vec![0.0; subjects * channels * t_count];
    let mut observed = vec![0.0; subjects * channels * t_count];
    let mut curve = vec![0.0; t_count];
    for (unit, coef) in a.chunks(l_count).enumerate() {
        basis.combine(coef, &mut curve);
        for j in 0..t_count {
            let idx = unit * t_count + j;
            clean_phase[idx] = wrap_phase(curve[j]);
            observed[idx] = wrap_phase(curve[j] + sigma * normal(&mut rng));
        }
    }

    let dataset = PhaseDataset::new(observed, subjects, channels, basis.grid().clone())?;
    let truth = GenerativeTruth {
        subjects,
        channels,
        n_basis: l_count,
        a,
        mu,
        beta,
        tau2,
        gamma2,
        sigma2,
        clean_phase,
    };
    Ok((dataset, truth))
}
