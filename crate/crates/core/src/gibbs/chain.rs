use alloc::vec::Vec;

use super::{ChainConfig, Hyperparams, ModelState};
use crate::{Error, Result};

/// Wrap counts stored in the narrowest signed integer that holds them all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WrapCounts {
    I8(Vec<i8>),
    I16(Vec<i16>),
    I32(Vec<i32>),
}

impl WrapCounts {
    pub fn from_counts(z: &[i32]) -> Self {
        let (lo, hi) = z.iter().fold((0i32, 0i32), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo >= i8::MIN as i32 && hi <= i8::MAX as i32 {
            WrapCounts::I8(z.iter().map(|&v| v as i8).collect())
        } else if lo >= i16::MIN as i32 && hi <= i16::MAX as i32 {
            WrapCounts::I16(z.iter().map(|&v| v as i16).collect())
        } else {
            WrapCounts::I32(z.to_vec())
        }
    }

    pub fn len(&self) -> usize {
        match self {
            WrapCounts::I8(v) => v.len(),
            WrapCounts::I16(v) => v.len(),
            WrapCounts::I32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bytes per stored count.
    pub fn width(&self) -> usize {
        match self {
            WrapCounts::I8(_) => 1,
            WrapCounts::I16(_) => 2,
            WrapCounts::I32(_) => 4,
        }
    }

    pub fn get(&self, i: usize) -> i32 {
        match self {
            WrapCounts::I8(v) => v[i] as i32,
            WrapCounts::I16(v) => v[i] as i32,
            WrapCounts::I32(v) => v[i],
        }
    }

    pub fn to_vec(&self) -> Vec<i32> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

/// One retained draw: what is needed to rebuild the denoised phases.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    /// `a[s][k][l]`.
    pub a: Vec<f64>,
    /// `Z[s][k][j]`.
    pub z: WrapCounts,
    pub sigma2: f64,
}

/// Scalar traces, draw-major (`beta[d * L + l]`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Traces {
    pub beta: Vec<f64>,
    pub tau2: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub sigma2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorChain {
    subjects: usize,
    channels: usize,
    n_times: usize,
    n_basis: usize,
    config: ChainConfig,
    hyper: Hyperparams,
    draws: Vec<Draw>,
    traces: Traces,
}

impl PosteriorChain {
    pub(crate) fn new(state: &ModelState, config: ChainConfig, hyper: Hyperparams) -> Self {
        let retained = config.retained();
        let l = state.n_basis;
        Self {
            subjects: state.subjects,
            channels: state.channels,
            n_times: state.n_times,
            n_basis: l,
            config,
            hyper,
            draws: Vec::with_capacity(retained),
            traces: Traces {
                beta: Vec::with_capacity(retained * l),
                tau2: Vec::with_capacity(retained * l),
                gamma2: Vec::with_capacity(retained * l),
                sigma2: Vec::with_capacity(retained),
            },
        }
    }

    pub(crate) fn push(&mut self, state: &ModelState) {
        self.draws.push(Draw {
            a: state.a.clone(),
            z: WrapCounts::from_counts(&state.z),
            sigma2: state.sigma2,
        });
        self.traces.beta.extend_from_slice(&state.beta);
        self.traces.tau2.extend_from_slice(&state.tau2);
        self.traces.gamma2.extend_from_slice(&state.gamma2);
        self.traces.sigma2.push(state.sigma2);
    }

    /// Reassembles a chain read back from storage, checking every size.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        subjects: usize,
        channels: usize,
        n_times: usize,
        n_basis: usize,
        config: ChainConfig,
        hyper: Hyperparams,
        draws: Vec<Draw>,
        traces: Traces,
    ) -> Result<Self> {
        let units = subjects * channels;
        for d in &draws {
            if d.a.len() != units * n_basis {
                return Err(Error::DimensionMismatch {
                    what: "draw coefficients",
                    expected: units * n_basis,
                    found: d.a.len(),
                });
            }
            if d.z.len() != units * n_times {
                return Err(Error::DimensionMismatch {
                    what: "draw wrap counts",
                    expected: units * n_times,
                    found: d.z.len(),
                });
            }
        }
        let count = draws.len();
        let sizes = [
            (traces.beta.len(), count * n_basis, "beta trace"),
            (traces.tau2.len(), count * n_basis, "tau2 trace"),
            (traces.gamma2.len(), count * n_basis, "gamma2 trace"),
            (traces.sigma2.len(), count, "sigma2 trace"),
        ];
        for (found, expected, what) in sizes {
            if found != expected {
                return Err(Error::DimensionMismatch { what, expected, found });
            }
        }
        Ok(Self {
            subjects,
            channels,
            n_times,
            n_basis,
            config,
            hyper,
            draws,
            traces,
        })
    }

    pub fn subjects(&self) -> usize {
        self.subjects
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn draws(&self) -> &[Draw] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn traces(&self) -> &Traces {
        &self.traces
    }

    pub fn posterior_mean_sigma2(&self) -> f64 {
        crate::stats::mean(&self.traces.sigma2)
    }

    /// Posterior mean of `a`, `[s][k][l]`.
    pub fn posterior_mean_coefficients(&self) -> Vec<f64> {
        let mut mean = alloc::vec![0.0; self.subjects * self.channels * self.n_basis];
        for d in &self.draws {
            for (m, a) in mean.iter_mut().zip(&d.a) {
                *m += a;
            }
        }
        let count = self.draws.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= count);
        mean
    }
}
