//! Phase locking values: the direct estimate from observed phases and the
//! posterior distribution implied by a fitted chain.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::gibbs::{Draw, PosteriorChain};
use crate::phase_data::PhaseDataset;
use crate::spline::BasisMatrix;
use crate::stats::quantile_sorted;
use crate::{Error, Result};

/// Symmetric `p × p` matrix of PLVs with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlvMatrix {
    channels: usize,
    values: Vec<f64>,
}

impl PlvMatrix {
    pub fn identity(channels: usize) -> Self {
        let mut values = vec![0.0; channels * channels];
        for k in 0..channels {
            values[k * channels + k] = 1.0;
        }
        Self { channels, values }
    }

    /// Builds a matrix from the upper triangle listed in [`pairs`] order.
    pub fn from_upper(channels: usize, upper: &[f64]) -> Result<Self> {
        let expected = pair_count(channels);
        if upper.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "upper triangle",
                expected,
                found: upper.len(),
            });
        }
        let mut m = Self::identity(channels);
        for ((k, kp), &v) in pairs(channels).zip(upper) {
            m.set(k, kp, v);
        }
        Ok(m)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, k: usize, kp: usize) -> f64 {
        self.values[k * self.channels + kp]
    }

    fn set(&mut self, k: usize, kp: usize, v: f64) {
        self.values[k * self.channels + kp] = v;
        self.values[kp * self.channels + k] = v;
    }

    /// Off-diagonal entries `k < k'` in row-major order.
    pub fn upper(&self) -> Vec<f64> {
        pairs(self.channels).map(|(k, kp)| self.get(k, kp)).collect()
    }
}

/// Number of unordered channel pairs, `p (p - 1) / 2`.
pub fn pair_count(channels: usize) -> usize {
    channels * channels.saturating_sub(1) / 2
}

/// Unordered pairs `(k, k')` with `k < k'`, row-major.
pub fn pairs(channels: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..channels).flat_map(move |k| (k + 1..channels).map(move |kp| (k, kp)))
}

/// `|T⁻¹ Σ_j exp{i(θ_j − φ_j)}|`.
pub fn plv_pair(theta: &[f64], phi: &[f64]) -> f64 {
    debug_assert_eq!(theta.len(), phi.len());
    let (mut re, mut im) = (0.0, 0.0);
    for (a, b) in theta.iter().zip(phi) {
        let d = a - b;
        re += libm::cos(d);
        im += libm::sin(d);
    }
    let t = theta.len() as f64;
    (libm::hypot(re, im) / t).min(1.0)
}

/// PLV matrix of one subject, `phases[k * T + j]`.
pub fn subject_plv(phases: &[f64], channels: usize, times: usize) -> PlvMatrix {
    let mut m = PlvMatrix::identity(channels);
    for (k, kp) in pairs(channels) {
        let v = plv_pair(
            &phases[k * times..(k + 1) * times],
            &phases[kp * times..(kp + 1) * times],
        );
        m.set(k, kp, v);
    }
    m
}

/// Entrywise mean of matrices of equal size.
pub fn average(mats: &[PlvMatrix]) -> PlvMatrix {
    let channels = mats.first().map_or(0, |m| m.channels);
    let mut out = PlvMatrix::identity(channels);
    for (k, kp) in pairs(channels) {
        let sum: f64 = mats.iter().map(|m| m.get(k, kp)).sum();
        out.set(k, kp, sum / mats.len() as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaivePlv {
    pub per_subject: Vec<PlvMatrix>,
    pub averaged: PlvMatrix,
}

/// Direct PLV of the observed phases, per subject and averaged over subjects.
pub fn naive_plv(data: &PhaseDataset) -> NaivePlv {
    let per_subject: Vec<PlvMatrix> = (0..data.subjects())
        .map(|s| subject_plv(data.subject(s), data.channels(), data.times()))
        .collect();
    let averaged = average(&per_subject);
    NaivePlv { per_subject, averaged }
}

/// Subject-averaged PLV of unit phasors `(cos, sin)` laid out `[s][k][j]`.
fn phasor_plv(cos: &[f64], sin: &[f64], subjects: usize, channels: usize, times: usize) -> PlvMatrix {
    let mut out = PlvMatrix::identity(channels);
    for (k, kp) in pairs(channels) {
        let mut total = 0.0;
        for s in 0..subjects {
            let a = (s * channels + k) * times;
            let b = (s * channels + kp) * times;
            let (mut re, mut im) = (0.0, 0.0);
            for j in 0..times {
                // e^{iθ} e^{-iφ}
                re += cos[a + j] * cos[b + j] + sin[a + j] * sin[b + j];
                im += sin[a + j] * cos[b + j] - cos[a + j] * sin[b + j];
            }
            total += (libm::hypot(re, im) / times as f64).min(1.0);
        }
        out.set(k, kp, total / subjects as f64);
    }
    out
}

fn draw_plv(draw: &Draw, chain: &PosteriorChain, basis: &BasisMatrix, with_wraps: bool) -> PlvMatrix {
    let (n, p, t, l) = (chain.subjects(), chain.channels(), chain.n_times(), chain.n_basis());
    let mut cos = vec![0.0; n * p * t];
    let mut sin = vec![0.0; n * p * t];
    let mut curve = vec![0.0; t];
    for unit in 0..n * p {
        basis.combine(&draw.a[unit * l..(unit + 1) * l], &mut curve);
        for j in 0..t {
            let mut theta = curve[j];
            if with_wraps {
                theta -= TAU * draw.z.get(unit * t + j) as f64;
            }
            cos[unit * t + j] = libm::cos(theta);
            sin[unit * t + j] = libm::sin(theta);
        }
    }
    phasor_plv(&cos, &sin, n, p, t)
}

fn check_chain(chain: &PosteriorChain, basis: &BasisMatrix) -> Result<()> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    if basis.n_basis() != chain.n_basis() {
        return Err(Error::DimensionMismatch {
            what: "basis functions vs chain",
            expected: chain.n_basis(),
            found: basis.n_basis(),
        });
    }
    if basis.n_times() != chain.n_times() {
        return Err(Error::DimensionMismatch {
            what: "basis time points vs chain",
            expected: chain.n_times(),
            found: basis.n_times(),
        });
    }
    Ok(())
}

fn map_draws<F>(chain: &PosteriorChain, f: F) -> Vec<PlvMatrix>
where
    F: Fn(&Draw) -> PlvMatrix + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        chain.draws().par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        chain.draws().iter().map(f).collect()
    }
}

/// Subject-averaged PLV of every retained draw, on the observation grid.
///
/// The denoised phase is `Σ_l a_l B_l(t_j) − 2π Z_j`; the wrap term is an
/// integer multiple of 2π and cannot change a PLV, so it is skipped here.
/// [`posterior_plv_verified`] evaluates both forms.
pub fn posterior_plv(chain: &PosteriorChain, basis: &BasisMatrix) -> Result<Vec<PlvMatrix>> {
    check_chain(chain, basis)?;
    Ok(map_draws(chain, |d| draw_plv(d, chain, basis, false)))
}

/// Like [`posterior_plv`], but also evaluates the phases with the wrap term
/// and fails if any entry differs by more than `1e-12`.
pub fn posterior_plv_verified(chain: &PosteriorChain, basis: &BasisMatrix) -> Result<Vec<PlvMatrix>> {
    check_chain(chain, basis)?;
    let fast = map_draws(chain, |d| draw_plv(d, chain, basis, false));
    let full = map_draws(chain, |d| draw_plv(d, chain, basis, true));
    let worst = fast
        .iter()
        .zip(&full)
        .flat_map(|(a, b)| a.values.iter().zip(&b.values).map(|(x, y)| libm::fabs(x - y)))
        .fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(Error::WrapInvariance { difference: worst });
    }
    Ok(fast)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairSummary {
    pub k: usize,
    pub kprime: usize,
    /// Posterior mean.
    pub plv_mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Fraction of draws with PLV `>= threshold`.
    pub p_exceed: f64,
    /// `p_exceed >= cut`.
    pub edge: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlvSummary {
    pub channels: usize,
    pub draws: usize,
    pub threshold: f64,
    pub cut: f64,
    pub pairs: Vec<PairSummary>,
}

impl PlvSummary {
    pub fn means(&self) -> PlvMatrix {
        let upper: Vec<f64> = self.pairs.iter().map(|p| p.plv_mean).collect();
        PlvMatrix::from_upper(self.channels, &upper).expect("one summary per pair")
    }

    pub fn exceedance(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.p_exceed).collect()
    }

    pub fn edges(&self) -> Vec<bool> {
        self.pairs.iter().map(|p| p.edge).collect()
    }
}

/// Posterior mean, central 95% interval (linear interpolation between order
/// statistics), exceedance probability `P(PLV >= threshold)` and the edge
/// decision `p >= cut` for every pair.
pub fn summarize(draws: &[PlvMatrix], threshold: f64, cut: f64) -> Result<PlvSummary> {
    let first = draws.first().ok_or(Error::EmptyChain)?;
    let channels = first.channels;
    if let Some(bad) = draws.iter().find(|m| m.channels != channels) {
        return Err(Error::DimensionMismatch {
            what: "PLV draw channels",
            expected: channels,
            found: bad.channels,
        });
    }
    let count = draws.len() as f64;
    let mut values = Vec::with_capacity(draws.len());
    let pairs = pairs(channels)
        .map(|(k, kp)| {
            values.clear();
            values.extend(draws.iter().map(|m| m.get(k, kp)));
            let plv_mean = values.iter().sum::<f64>() / count;
            let exceed = values.iter().filter(|&&v| v >= threshold).count() as f64 / count;
            values.sort_by(f64::total_cmp);
            PairSummary {
                k,
                kprime: kp,
                plv_mean,
                ci_low: quantile_sorted(&values, 0.025),
                ci_high: quantile_sorted(&values, 0.975),
                p_exceed: exceed,
                edge: exceed >= cut,
            }
        })
        .collect();
    Ok(PlvSummary {
        channels,
        draws: draws.len(),
        threshold,
        cut,
        pairs,
    })
}
