use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{check_basis, Block, ChainConfig, Hyperparams, ModelState, PosteriorChain, SweepRng};
use crate::linalg::Cholesky;
use crate::phase_data::PhaseDataset;
use crate::spline::{BasisMatrix, MAX_BASIS};
use crate::wrapped::{covering_truncation, sample_wrap_count};
use crate::Result;

/// Draws from `IG(shape, rate)` as the reciprocal of a gamma draw, kept
/// strictly positive and finite.
pub(crate) fn inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let gamma = Gamma::new(shape, 1.0 / rate).expect("shape and rate are positive");
    let x = 1.0 / gamma.sample(rng);
    x.clamp(f64::MIN_POSITIVE, f64::MAX)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Applies `f(unit, chunk)` to consecutive `chunk`-sized pieces of `data`,
/// in parallel when the `parallel` feature is on.
fn for_each_unit<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

enum Factors {
    Shared(Cholesky),
    PerUnit(Vec<Cholesky>),
}

impl Factors {
    fn get(&self, unit: usize) -> &Cholesky {
        match self {
            Factors::Shared(c) => c,
            Factors::PerUnit(all) => &all[unit],
        }
    }
}

/// Full-conditional updates for one dataset and basis. The basis Gram matrix
/// `Σ_j B_j B_jᵀ` is computed once.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    data: &'a PhaseDataset,
    basis: &'a BasisMatrix,
    hyper: Hyperparams,
    gram: Vec<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(data: &'a PhaseDataset, basis: &'a BasisMatrix, hyper: Hyperparams) -> Result<Self> {
        hyper.validate()?;
        check_basis(data, basis)?;
        Ok(Self {
            data,
            basis,
            hyper,
            gram: basis.gram(),
        })
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    /// Posterior precision `Ã = σ⁻² Σ_j B_j B_jᵀ + diag(1/τ²)`, shared by all
    /// `(s, k)`.
    pub fn coefficient_precision(&self, state: &ModelState) -> Vec<f64> {
        let l = state.n_basis;
        let inv_s2 = 1.0 / state.sigma2;
        let mut prec: Vec<f64> = self.gram.iter().map(|g| g * inv_s2).collect();
        for i in 0..l {
            prec[i * l + i] += 1.0 / state.tau2[i];
        }
        prec
    }

    /// `B̃ = σ⁻² Σ_j B_j (Y_j + 2π Z_j) + diag(1/τ²) μ_k`.
    pub fn coefficient_rhs(&self, state: &ModelState, subject: usize, channel: usize) -> Vec<f64> {
        let mut rhs = vec![0.0; state.n_basis];
        self.fill_rhs(state, &state.z, subject * state.channels + channel, &mut rhs);
        rhs
    }

    /// Reads everything but `a` from `state`; `z` is passed separately so the
    /// caller can hold `a` mutably.
    fn fill_rhs(&self, state: &ModelState, z: &[i32], unit: usize, rhs: &mut [f64]) {
        let l = state.n_basis;
        let t = state.n_times;
        let k = unit % state.channels;
        let inv_s2 = 1.0 / state.sigma2;
        let y = self.data.series(unit / state.channels, k);
        let z = &z[unit * t..(unit + 1) * t];
        rhs.fill(0.0);
        for (j, (&yj, &zj)) in y.iter().zip(z).enumerate() {
            let target = (yj + TAU * zj as f64) * inv_s2;
            for (r, b) in rhs.iter_mut().zip(self.basis.column(j)) {
                *r += b * target;
            }
        }
        for i in 0..l {
            rhs[i] += state.mu[k * l + i] / state.tau2[i];
        }
    }

    /// `a_k^(s) ~ N(Ã⁻¹ B̃, Ã⁻¹)` for every `(s, k)`, with one factorization
    /// of `Ã` per call.
    pub fn update_coefficients(&self, state: &mut ModelState, rng: &SweepRng) -> Result<()> {
        let chol = Cholesky::factor(&self.coefficient_precision(state), state.n_basis)?;
        self.draw_coefficients(state, rng, Factors::Shared(chol));
        Ok(())
    }

    /// Same draw with `Ã` refactored for every unit.
    #[doc(hidden)]
    pub fn update_coefficients_unshared(&self, state: &mut ModelState, rng: &SweepRng) -> Result<()> {
        let units = state.subjects * state.channels;
        let mut all = Vec::with_capacity(units);
        for _ in 0..units {
            all.push(Cholesky::factor(&self.coefficient_precision(state), state.n_basis)?);
        }
        self.draw_coefficients(state, rng, Factors::PerUnit(all));
        Ok(())
    }

    fn draw_coefficients(&self, state: &mut ModelState, rng: &SweepRng, factors: Factors) {
        let l = state.n_basis;
        let mut a = core::mem::take(&mut state.a);
        let view: &ModelState = state;
        for_each_unit(&mut a, l, |unit, coef| {
            let chol = factors.get(unit);
            let mut work = [0.0; MAX_BASIS];
            let rhs = &mut work[..l];
            self.fill_rhs(view, &view.z, unit, rhs);
            // a = R⁻ᵀ (R⁻¹ B̃ + ξ) has mean Ã⁻¹ B̃ and covariance Ã⁻¹
            chol.forward(rhs);
            let mut unit_rng = rng.unit(Block::Coefficients, unit as u64);
            for r in rhs.iter_mut() {
                *r += normal(&mut unit_rng);
            }
            chol.backward(rhs);
            coef.copy_from_slice(rhs);
        });
        state.a = a;
    }

    /// `μ_kl ~ N(v (Σ_s a_kl / τ_l² + β_l / γ_l²), v)`, `v = (n/τ_l² + 1/γ_l²)⁻¹`.
    pub fn update_mu(&self, state: &mut ModelState, rng: &SweepRng) {
        let (n, p, l) = (state.subjects, state.channels, state.n_basis);
        for k in 0..p {
            let mut unit_rng = rng.unit(Block::Mu, k as u64);
            for li in 0..l {
                let sum_a: f64 = (0..n).map(|s| state.a[(s * p + k) * l + li]).sum();
                let var = 1.0 / (n as f64 / state.tau2[li] + 1.0 / state.gamma2[li]);
                let mean = var * (sum_a / state.tau2[li] + state.beta[li] / state.gamma2[li]);
                state.mu[k * l + li] = mean + libm::sqrt(var) * normal(&mut unit_rng);
            }
        }
    }

    /// `β_l ~ N(v (Σ_k μ_kl / γ_l² + A0/B0), v)`, `v = (p/γ_l² + 1/B0)⁻¹`.
    pub fn update_beta(&self, state: &mut ModelState, rng: &SweepRng) {
        let (p, l) = (state.channels, state.n_basis);
        let h = &self.hyper;
        for li in 0..l {
            let mut unit_rng = rng.unit(Block::Beta, li as u64);
            let sum_mu: f64 = (0..p).map(|k| state.mu[k * l + li]).sum();
            let var = 1.0 / (p as f64 / state.gamma2[li] + 1.0 / h.b0);
            let mean = var * (sum_mu / state.gamma2[li] + h.a0 / h.b0);
            state.beta[li] = mean + libm::sqrt(var) * normal(&mut unit_rng);
        }
    }

    /// `τ_l² ~ IG(ν_τ + np/2, η_τ + ½ Σ_s Σ_k (a_kl − μ_kl)²)`.
    pub fn update_tau2(&self, state: &mut ModelState, rng: &SweepRng) {
        let (n, p, l) = (state.subjects, state.channels, state.n_basis);
        for li in 0..l {
            let mut unit_rng = rng.unit(Block::Tau2, li as u64);
            let mut ss = 0.0;
            for s in 0..n {
                for k in 0..p {
                    let d = state.a[(s * p + k) * l + li] - state.mu[k * l + li];
                    ss += d * d;
                }
            }
            let shape = self.hyper.nu_tau + (n * p) as f64 / 2.0;
            state.tau2[li] = inverse_gamma(shape, self.hyper.eta_tau + 0.5 * ss, &mut unit_rng);
        }
    }

    /// `γ_l² ~ IG(ν_γ + p/2, η_γ + ½ Σ_k (μ_kl − β_l)²)`.
    pub fn update_gamma2(&self, state: &mut ModelState, rng: &SweepRng) {
        let (p, l) = (state.channels, state.n_basis);
        for li in 0..l {
            let mut unit_rng = rng.unit(Block::Gamma2, li as u64);
            let ss: f64 = (0..p)
                .map(|k| {
                    let d = state.mu[k * l + li] - state.beta[li];
                    d * d
                })
                .sum();
            let shape = self.hyper.nu_gamma + p as f64 / 2.0;
            state.gamma2[li] = inverse_gamma(shape, self.hyper.eta_gamma + 0.5 * ss, &mut unit_rng);
        }
    }

    /// `Σ_{s,k,j} (Y − B a + 2π Z)²`.
    pub fn residual_sum_of_squares(&self, state: &ModelState) -> f64 {
        let (l, t) = (state.n_basis, state.n_times);
        let mut total = 0.0;
        for unit in 0..state.subjects * state.channels {
            let coef = &state.a[unit * l..(unit + 1) * l];
            let y = self.data.series(unit / state.channels, unit % state.channels);
            for j in 0..t {
                let fit: f64 = self.basis.column(j).iter().zip(coef).map(|(b, c)| b * c).sum();
                let r = y[j] - fit + TAU * state.z[unit * t + j] as f64;
                total += r * r;
            }
        }
        total
    }

    /// `σ² ~ IG(ν_σ + npT/2, η_σ + ½ Σ (Y − B a + 2π Z)²)`.
    pub fn update_sigma2(&self, state: &mut ModelState, rng: &SweepRng) {
        let ss = self.residual_sum_of_squares(state);
        let count = (state.subjects * state.channels * state.n_times) as f64;
        let mut unit_rng = rng.unit(Block::Sigma2, 0);
        state.sigma2 = inverse_gamma(
            self.hyper.nu_sigma + count / 2.0,
            self.hyper.eta_sigma + 0.5 * ss,
            &mut unit_rng,
        );
    }

    /// Resamples every `Z_kj^(s)` from its multinomial conditional given the
    /// residual `Y − B a`. The support is wide enough to hold the dominant wrap
    /// plus the `σ²` margin.
    pub fn update_wrap_counts(&self, state: &mut ModelState, rng: &SweepRng) {
        let (l, t, p) = (state.n_basis, state.n_times, state.channels);
        let sigma2 = state.sigma2;
        let a = &state.a;
        for_each_unit(&mut state.z, t, |unit, z| {
            let coef = &a[unit * l..(unit + 1) * l];
            let y = self.data.series(unit / p, unit % p);
            let mut unit_rng = rng.unit(Block::WrapCounts, unit as u64);
            for j in 0..t {
                let fit: f64 = self.basis.column(j).iter().zip(coef).map(|(b, c)| b * c).sum();
                let residual = y[j] - fit;
                let truncation = covering_truncation(residual, sigma2);
                z[j] = sample_wrap_count(residual, sigma2, truncation, &mut unit_rng);
            }
        });
    }

    pub fn update(&self, block: Block, state: &mut ModelState, rng: &SweepRng) -> Result<()> {
        match block {
            Block::Coefficients => self.update_coefficients(state, rng)?,
            Block::Mu => self.update_mu(state, rng),
            Block::Beta => self.update_beta(state, rng),
            Block::Tau2 => self.update_tau2(state, rng),
            Block::Gamma2 => self.update_gamma2(state, rng),
            Block::Sigma2 => self.update_sigma2(state, rng),
            Block::WrapCounts => self.update_wrap_counts(state, rng),
        }
        Ok(())
    }

    /// One full sweep in the fixed block order.
    pub fn sweep(&self, state: &mut ModelState, rng: &SweepRng) -> Result<()> {
        for block in Block::SWEEP_ORDER {
            self.update(block, state, rng)?;
        }
        Ok(())
    }

    pub fn run(&self, mut state: ModelState, config: &ChainConfig) -> Result<PosteriorChain> {
        config.validate()?;
        let mut chain = PosteriorChain::new(&state, config.clone(), self.hyper);
        for it in 0..config.burnin + config.samples {
            self.sweep(&mut state, &SweepRng::new(config.seed, it as u64))?;
            if it >= config.burnin && (it - config.burnin + 1).is_multiple_of(config.thin) {
                chain.push(&state);
            }
        }
        Ok(chain)
    }
}
