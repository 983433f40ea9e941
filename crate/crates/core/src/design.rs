//! Synthetic datasets with a known connectivity structure.
//!
//! Channels are split into contiguous clusters. Every channel in cluster `g`
//! follows the curve `2π·g·separation·t` plus its own smooth deviation
//! `A·cos(2πmt)` or `A·sin(2πmt)`; deviations within a cluster are mutually
//! orthogonal on `[0, 1]`. Within-cluster pairs then lock with PLV close to
//! `J0(A)·J0(A')`, while pairs across clusters drift apart and barely lock.
//! Channel curves are projected onto the spline basis so the noiseless data lie
//! in the model class; subjects jitter around the channel coefficients.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Cholesky;
use crate::phase_data::{GenerativeTruth, PhaseDataset, TimeGrid};
use crate::spline::{BasisMatrix, BasisSpec};
use crate::stats::wrap_phase;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ClusterDesign {
    pub subjects: usize,
    pub channels: usize,
    pub clusters: usize,
    pub times: usize,
    pub basis: BasisSpec,
    /// Deviation amplitudes are spread evenly over `[low, high]` within each
    /// cluster.
    pub amplitude: (f64, f64),
    /// Cycles over the record separating neighbouring clusters.
    pub separation: f64,
    /// Standard deviation of the subject-level coefficient jitter.
    pub subject_sd: f64,
    /// Standard deviation of the observation noise of the base dataset.
    pub noise_sd: f64,
}

impl Default for ClusterDesign {
    fn default() -> Self {
        Self {
            subjects: 10,
            channels: 10,
            clusters: 2,
            times: 100,
            basis: BasisSpec::default(),
            amplitude: (0.4, 1.0),
            separation: 4.0,
            subject_sd: 0.03,
            noise_sd: 0.0,
        }
    }
}

impl ClusterDesign {
    fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.channels == 0 || self.clusters == 0 {
            return Err(Error::InvalidHyperparams(
                "design needs subjects, channels and clusters",
            ));
        }
        if self.clusters > self.channels {
            return Err(Error::InvalidHyperparams("more clusters than channels"));
        }
        let (lo, hi) = self.amplitude;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidHyperparams(
                "amplitude range must satisfy 0 <= low <= high",
            ));
        }
        if !(self.subject_sd >= 0.0 && self.noise_sd >= 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidHyperparams("design spreads must be nonnegative"));
        }
        Ok(())
    }

    /// Cluster index of every channel.
    pub fn membership(&self) -> Vec<usize> {
        (0..self.channels).map(|k| k * self.clusters / self.channels).collect()
    }

    /// Mean phase curve of channel `k` at time `t ∈ [0, 1]`.
    fn channel_curve(&self, k: usize, members: &[usize], t: f64) -> f64 {
        let g = members[k];
        let rank = members[..k].iter().filter(|&&c| c == g).count();
        let size = members.iter().filter(|&&c| c == g).count();
        let (lo, hi) = self.amplitude;
        let amp = if size > 1 {
            lo + (hi - lo) * rank as f64 / (size - 1) as f64
        } else {
            lo
        };
        let cycles = (rank / 2 + 1) as f64;
        let shape = if rank % 2 == 0 {
            libm::cos(TAU * cycles * t)
        } else {
            libm::sin(TAU * cycles * t)
        };
        TAU * self.separation * g as f64 * t + amp * shape
    }

    pub fn generate(&self, seed: u64) -> Result<(PhaseDataset, GenerativeTruth)> {
        self.validate()?;
        let grid = TimeGrid::uniform(self.times)?;
        let basis = self.basis.build(&grid)?;
        let l_count = basis.n_basis();
        let t_count = self.times;
        let members = self.membership();

        let chol = Cholesky::factor(&basis.gram(), l_count)?;
        let (t0, t1) = grid.domain();
        let mut mu = vec![0.0; self.channels * l_count];
        let mut curve = vec![0.0; t_count];
        for k in 0..self.channels {
            for (j, &t) in grid.points().iter().enumerate() {
                curve[j] = self.channel_curve(k, &members, (t - t0) / (t1 - t0));
            }
            let coef = &mut mu[k * l_count..(k + 1) * l_count];
            basis.project(&curve, coef);
            chol.solve(coef);
        }

        let mut beta = vec![0.0; l_count];
        for k in 0..self.channels {
            for l in 0..l_count {
                beta[l] += mu[k * l_count + l] / self.channels as f64;
            }
        }
        let gamma2: Vec<f64> = (0..l_count)
            .map(|l| {
                (0..self.channels)
                    .map(|k| (mu[k * l_count + l] - beta[l]).powi(2))
                    .sum::<f64>()
                    / self.channels as f64
            })
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; self.subjects * self.channels * l_count];
        for s in 0..self.subjects {
            for k in 0..self.channels {
                for l in 0..l_count {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    a[(s * self.channels + k) * l_count + l] = mu[k * l_count + l] + self.subject_sd * z;
                }
            }
        }
        let (clean_phase, observed) = render(&basis, &a, self.noise_sd, &mut rng);
        let data = PhaseDataset::new(observed, self.subjects, self.channels, grid)?;
        let truth = GenerativeTruth {
            subjects: self.subjects,
            channels: self.channels,
            n_basis: l_count,
            a,
            mu,
            beta,
            tau2: vec![self.subject_sd * self.subject_sd; l_count],
            gamma2,
            sigma2: self.noise_sd * self.noise_sd,
            clean_phase,
        };
        Ok((data, truth))
    }
}

fn render<R: Rng>(basis: &BasisMatrix, a: &[f64], noise_sd: f64, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let l_count = basis.n_basis();
    let t_count = basis.n_times();
    let units = a.len() / l_count;
    let mut clean = vec![0.0; units * t_count];
    let mut observed = vec![0.0; units * t_count];
    let mut curve = vec![0.0; t_count];
    for (unit, coef) in a.chunks(l_count).enumerate() {
        basis.combine(coef, &mut curve);
        for j in 0..t_count {
            let z: f64 = StandardNormal.sample(rng);
            clean[unit * t_count + j] = wrap_phase(curve[j]);
            observed[unit * t_count + j] = wrap_phase(curve[j] + noise_sd * z);
        }
    }
    (clean, observed)
}
