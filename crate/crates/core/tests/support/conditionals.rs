//! Monte Carlo checks of every full conditional against its closed form,
//! plus a joint "getting it right" test of the whole sweep.

#![allow(clippy::needless_range_loop, dead_code)]

use std::f64::consts::TAU;

use cfm_core::gibbs::{Hyperparams, ModelState, Sampler, SweepRng};
use cfm_core::stats::wrap_phase;
use cfm_core::{BasisMatrix, PhaseDataset, SplineConfig, TimeGrid};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DRAWS: usize = 100_000;

struct Moments {
    mean: f64,
    var: f64,
    m4: f64,
    n: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Moments { mean, var, m4, n }
}

/// Sample mean and variance within three standard errors of the targets.
fn assert_moments(xs: &[f64], mean: f64, var: f64, label: &str) {
    let m = moments(xs);
    let se_mean = (var / m.n).sqrt();
    assert!(
        (m.mean - mean).abs() <= 3.0 * se_mean,
        "{label}: mean {} vs {mean} (se {se_mean})",
        m.mean
    );
    let se_var = ((m.m4 - m.var * m.var) / m.n).sqrt();
    assert!(
        (m.var - var).abs() <= 3.0 * se_var,
        "{label}: var {} vs {var} (se {se_var})",
        m.var
    );
}

fn assert_mean(xs: &[f64], mean: f64, var: f64, label: &str) {
    let m = moments(xs);
    let se = (var / m.n).sqrt();
    assert!(
        (m.mean - mean).abs() <= 3.0 * se,
        "{label}: mean {} vs {mean} (se {se})",
        m.mean
    );
}

fn ig_mean(shape: f64, rate: f64) -> f64 {
    rate / (shape - 1.0)
}

fn ig_var(shape: f64, rate: f64) -> f64 {
    rate * rate / ((shape - 1.0).powi(2) * (shape - 2.0))
}

fn basis(degree: u32, knots: usize, times: usize) -> BasisMatrix {
    let grid = TimeGrid::uniform(times).unwrap();
    SplineConfig::equally_spaced(degree, knots, grid.domain())
        .unwrap()
        .evaluate_grid(&grid)
        .unwrap()
}

fn dataset(n: usize, p: usize, t: usize, seed: u64) -> PhaseDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * p * t)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            wrap_phase(2.0 * z)
        })
        .collect();
    PhaseDataset::new(values, n, p, TimeGrid::uniform(t).unwrap()).unwrap()
}

/// A state with arbitrary but fixed values.
fn fixed_state(n: usize, p: usize, t: usize, l: usize) -> ModelState {
    let mut s = ModelState::zeros(n, p, t, l);
    for (i, a) in s.a.iter_mut().enumerate() {
        *a = 0.3 * (i as f64).sin() + 0.1 * i as f64;
    }
    for (i, m) in s.mu.iter_mut().enumerate() {
        *m = 0.5 - 0.2 * i as f64;
    }
    for (i, b) in s.beta.iter_mut().enumerate() {
        *b = 0.25 * i as f64 - 0.1;
    }
    for (i, v) in s.tau2.iter_mut().enumerate() {
        *v = 0.4 + 0.3 * i as f64;
    }
    for (i, v) in s.gamma2.iter_mut().enumerate() {
        *v = 1.5 - 0.2 * i as f64;
    }
    s.sigma2 = 0.3;
    for (i, z) in s.z.iter_mut().enumerate() {
        *z = (i % 3) as i32 - 1;
    }
    s
}

pub fn coefficients_match_dense_oracle() {
    let (t, l) = (5, 2);
    let b = basis(1, 0, t);
    let data = dataset(1, 1, t, 11);
    let mut state = fixed_state(1, 1, t, l);
    state.tau2 = vec![0.7, 2.0];
    state.mu = vec![0.4, -1.1];
    state.sigma2 = 0.5;
    let sampler = Sampler::new(&data, &b, Hyperparams::default()).unwrap();

    // oracle: explicit dense matrices and a general inverse
    let bm = DMatrix::from_fn(l, t, |i, j| b.get(i, j));
    let d_tau = DMatrix::from_diagonal(&DVector::from_iterator(l, state.tau2.iter().map(|v| 1.0 / v)));
    let precision = &bm * bm.transpose() / state.sigma2 + &d_tau;
    let target = DVector::from_iterator(t, (0..t).map(|j| data.get(0, 0, j) + TAU * state.z[j] as f64));
    let rhs = &bm * target / state.sigma2 + &d_tau * DVector::from_column_slice(&state.mu);
    let cov = precision.clone().try_inverse().unwrap();
    let mean = &cov * rhs;

    let mut draws = (0..l).map(|_| Vec::with_capacity(DRAWS)).collect::<Vec<_>>();
    for i in 0..DRAWS {
        let mut s = state.clone();
        sampler
            .update_coefficients(&mut s, &SweepRng::new(5, i as u64))
            .unwrap();
        for (li, d) in draws.iter_mut().enumerate() {
            d.push(s.a[li]);
        }
    }
    for li in 0..l {
        assert_moments(&draws[li], mean[li], cov[(li, li)], &format!("a[{li}]"));
    }
    let m0 = moments(&draws[0]).mean;
    let m1 = moments(&draws[1]).mean;
    let c01 = draws[0]
        .iter()
        .zip(&draws[1])
        .map(|(x, y)| (x - m0) * (y - m1))
        .sum::<f64>()
        / (DRAWS as f64 - 1.0);
    let se = ((cov[(0, 0)] * cov[(1, 1)] + cov[(0, 1)].powi(2)) / DRAWS as f64).sqrt();
    assert!((c01 - cov[(0, 1)]).abs() <= 3.0 * se, "cov {c01} vs {}", cov[(0, 1)]);
}

pub fn coefficients_flat_prior_and_tight_prior_limits() {
    let t = 5;
    let b = basis(0, 0, t);
    assert_eq!(b.n_basis(), 1);
    let data = dataset(1, 1, t, 3);
    let sampler = Sampler::new(&data, &b, Hyperparams::default()).unwrap();

    let mut state = ModelState::zeros(1, 1, t, 1);
    state.sigma2 = 1.0;
    state.tau2 = vec![1e12];
    state.mu = vec![3.0];
    state.z = vec![0, 1, -1, 2, 0];
    let flat: f64 = (0..t).map(|j| data.get(0, 0, j) + TAU * state.z[j] as f64).sum::<f64>() / t as f64;
    let draws: Vec<f64> = (0..20_000)
        .map(|i| {
            let mut s = state.clone();
            sampler.update_coefficients(&mut s, &SweepRng::new(1, i)).unwrap();
            s.a[0]
        })
        .collect();
    assert_mean(&draws, flat, 1.0 / t as f64, "flat prior");

    state.tau2 = vec![1e-12];
    for i in 0..100 {
        let mut s = state.clone();
        sampler.update_coefficients(&mut s, &SweepRng::new(2, i)).unwrap();
        assert!((s.a[0] - 3.0).abs() < 1e-4);
    }
}

pub fn shared_factorization_is_bit_identical() {
    let (n, p, t) = (3, 4, 30);
    let b = basis(3, 4, t);
    let data = dataset(n, p, t, 8);
    let state = fixed_state(n, p, t, b.n_basis());
    let sampler = Sampler::new(&data, &b, Hyperparams::default()).unwrap();
    let rng = SweepRng::new(77, 3);
    let mut shared = state.clone();
    let mut unshared = state;
    sampler.update_coefficients(&mut shared, &rng).unwrap();
    sampler.update_coefficients_unshared(&mut unshared, &rng).unwrap();
    assert_eq!(shared.a, unshared.a);
}

pub fn mu_conditional() {
    let (n, p, t, l) = (2, 1, 4, 1);
    let b = basis(0, 0, t);
    let data = dataset(n, p, t, 1);
    let sampler = Sampler::new(&data, &b, Hyperparams::default()).unwrap();
    let mut state = ModelState::zeros(n, p, t, l);
    state.a = vec![1.0, 2.0];
    state.tau2 = vec![1.0];
    state.gamma2 = vec![1.0];
    state.beta = vec![0.0];
    let draws: Vec<f64> = (0..DRAWS)
        .map(|i| {
            let mut s = state.clone();
            sampler.update_mu(&mut s, &SweepRng::new(4, i as u64));
            s.mu[0]
        })
        .collect();
    // Σa = 3, n = 2: mean 1, variance 1/3
    assert_moments(&draws, 1.0, 1.0 / 3.0, "mu");

    state.gamma2 = vec![1e14];
    let draws: Vec<f64> = (0..2000)
        .map(|i| {
            let mut s = state.clone();
            sampler.update_mu(&mut s, &SweepRng::new(5, i as u64));
            s.mu[0]
        })
        .collect();
    assert_mean(&draws, 1.5, 0.5, "mu, flat gamma");
}

pub fn mu_conditional_general() {
    let (n, p, t) = (3, 2, 6);
    let b = basis(1, 1, t);
    let l = b.n_basis();
    let data = dataset(n, p, t, 2);
    let sampler = Sampler::new(&data, &b, Hyperparams::default()).unwrap();
    let state = fixed_state(n, p, t, l);
    let mut draws = (0..p * l).map(|_| Vec::with_capacity(DRAWS)).collect::<Vec<_>>();
    for i in 0..DRAWS {
        let mut s = state.clone();
        sampler.update_mu(&mut s, &SweepRng::new(6, i as u64));
        for (d, v) in draws.iter_mut().zip(&s.mu) {
            d.push(*v);
        }
    }
    for k in 0..p {
        for li in 0..l {
            let sum_a: f64 = (0..n).map(|s| state.a[(s * p + k) * l + li]).sum();
            let prec = n as f64 / state.tau2[li] + 1.0 / state.gamma2[li];
            let mean = (sum_a / state.tau2[li] + state.beta[li] / state.gamma2[li]) / prec;
            assert_moments(&draws[k * l + li], mean, 1.0 / prec, &format!("mu[{k}][{li}]"));
        }
    }
}

pub fn beta_conditional() {
    let t = 4;
    let b = basis(0, 0, t);
    let data = dataset(1, 1, t, 1);
    let hyper = Hyperparams {
        a0: 0.0,
        b0: 1.0,
        ..Default::default()
    };
    let sampler = Sampler::new(&data, &b, hyper).unwrap();
    let mut state = ModelState::zeros(1, 1, t, 1);
    state.mu = vec![2.0];
    state.gamma2 = vec![1.0];
    let draws: Vec<f64> = (0..DRAWS)
        .map(|i| {
            let mut s = state.clone();
            sampler.update_beta(&mut s, &SweepRng::new(7, i as u64));
            s.beta[0]
        })
        .collect();
    assert_moments(&draws, 1.0, 0.5, "beta");

    // B0 → ∞: mean → average of μ
    let (p, t) = (3, 4);
    let data = dataset(1, p, t, 1);
    let wide = Hyperparams {
        b0: 1e14,
        ..Default::default()
    };
    let sampler = Sampler::new(&data, &b, wide).unwrap();
    let mut state = ModelState::zeros(1, p, t, 1);
    state.mu = vec![1.0, 2.0, 4.5];
    state.gamma2 = vec![0.6];
    let draws: Vec<f64> = (0..DRAWS)
        .map(|i| {
            let mut s = state.clone();
            sampler.update_beta(&mut s, &SweepRng::new(8, i as u64));
            s.beta[0]
        })
        .collect();
    assert_moments(&draws, 7.5 / 3.0, 0.2, "beta, flat prior");
}

pub fn tau2_conditional() {
    let t = 4;
    let b = basis(0, 0, t);
    let data = dataset(1, 1, t, 1);
    let hyper = Hyperparams {
        nu_tau: 2.0,
        eta_tau: 1.0,
        ..Default::default()
    };
    let sampler = Sampler::new(&data, &b, hyper).unwrap();
    let mut state = ModelState::zeros(1, 1, t, 1);
    state.a = vec![2f64.sqrt()];
    state.mu = vec![0.0];
    let draws: Vec<f64> = (0..DRAWS)
        .map(|i| {
            let mut s = state.clone();
            sampler.update_tau2(&mut s, &SweepRng::new(9, i as u64));
            s.tau2[0]
        })
        .collect();
    // IG(2.5, 2): mean 4/3, variance (2²)/(1.5² · 0.5)
    assert_mean(&draws, 4.0 / 3.0, ig_var(2.5, 2.0), "tau2 example");
    assert!((ig_mean(2.5, 2.0) - 4.0 / 3.0).abs() < 1e-15);

    let (n, p) = (3, 4);
    let data = dataset(n, p, t, 1);
    let b = basis(1, 0, t);
    let hyper = Hyperparams {
        nu_tau: 3.0,
        eta_tau: 0.5,
        ..Default::default()
    };
    let sampler = Sampler::new(&data, &b, hyper).unwrap();
    let state = fixed_state(n, p, t, 2);
    let mut draws = (0..2).map(|_| Vec::with_capacity(DRAWS)).collect::<Vec<_>>();
    for i in 0..DRAWS {
        let mut s = state.clone();
        sampler.update_tau2(&mut s, &SweepRng::new(10, i as u64));
        draws[0].push(s.tau2[0]);
        draws[1].push(s.tau2[1]);
    }
    for li in 0..2 {
        let ss: f64 = (0..n)
            .flat_map(|s| (0..p).map(move |k| (s, k)))
            .map(|(s, k)| (state.a[(s * p + k) * 2 + li] - state.mu[k * 2 + li]).powi(2))
            .sum();
        let shape = 3.0 + (n * p) as f64 / 2.0;
        let rate = 0.5 + ss / 2.0;
        assert_moments(&draws[li], ig_mean(shape, rate), ig_var(shape, rate), "tau2");
    }

    // zero residuals leave the prior rate
    let mut zero = fixed_state(n, p, t, 2);
    for s in 0..n {
        for k in 0..p {
            for li in 0..2 {
                zero.a[(s * p + k) * 2 + li] = zero.mu[k * 2 + li];
            }
        }
    }
    let draws: Vec<f64> = (0..DRAWS)
        .map(|i| {
            let mut s = zero.clone();
            sampler.update_tau2(&mut s, &SweepRng::new(11, i as u64));
            s.tau2[1]
        })
        .collect();
    assert_moments(&draws, ig_mean(9.0, 0.5), ig_var(9.0, 0.5), "tau2, zero residuals");
}

pub fn gamma2_conditional() {
    let (n, p, t) = (2, 6, 4);
    let b = basis(1, 0, t);
    let data = dataset(n, p, t, 1);
    let hyper = Hyperparams {
        nu_gamma: 2.5,
        eta_gamma: 1.5,
        ..Default::default()
    };
    let sampler = Sampler::new(&data, &b, hyper).unwrap();
    let state = fixed_state(n, p, t, 2);
    let mut draws = (0..2).map(|_| Vec::with_capacity(DRAWS)).collect::<Vec<_>>();
    for i in 0..DRAWS {
        let mut s = state.clone();
        sampler.update_gamma2(&mut s, &SweepRng::new(12, i as u64));
        draws[0].push(s.gamma2[0]);
        draws[1].push(s.gamma2[1]);
    }
    for li in 0..2 {
        let ss: f64 = (0..p).map(|k| (state.mu[k * 2 + li] - state.beta[li]).powi(2)).sum();
        let shape = 2.5 + p as f64 / 2.0;
        let rate = 1.5 + ss / 2.0;
        assert_moments(&draws[li], ig_mean(shape, rate), ig_var(shape, rate), "gamma2");
    }
}

pub fn sigma2_conditional() {
    let t = 4;
    let b = basis(0, 0, t);
    let data = dataset(1, 1, t, 21);
    let hyper = Hyperparams {
        nu_sigma: 2.0,
        eta_sigma: 2.0,
        ..Default::default()
    };
    let sampler = Sampler::new(&data, &b, hyper).unwrap();
    let mut state = ModelState::zeros(1, 1, t, 1);
    state.a = vec![1.0];
    state.z = vec![0, 1, 0, -1];
    let ss: f64 = (0..t)
        .map(|j| (data.get(0, 0, j) - 1.0 + TAU * state.z[j] as f64).powi(2))
        .sum();
    assert!((sampler.residual_sum_of_squares(&state) - ss).abs() < 1e-12);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|i| {
            let mut s = state.clone();
            sampler.update_sigma2(&mut s, &SweepRng::new(13, i as u64));
            s.sigma2
        })
        .collect();
    // shape ν_σ + npT/2 = 4
    let rate = 2.0 + ss / 2.0;
    assert_moments(&draws, ig_mean(4.0, rate), ig_var(4.0, rate), "sigma2");

    // all residuals zero: IG(ν̃, η_σ)
    let constant = PhaseDataset::new(vec![1.0; t], 1, 1, TimeGrid::uniform(t).unwrap()).unwrap();
    let sampler = Sampler::new(&constant, &b, hyper).unwrap();
    state.z = vec![0; t];
    let draws: Vec<f64> = (0..DRAWS)
        .map(|i| {
            let mut s = state.clone();
            sampler.update_sigma2(&mut s, &SweepRng::new(14, i as u64));
            s.sigma2
        })
        .collect();
    assert_moments(&draws, ig_mean(4.0, 2.0), ig_var(4.0, 2.0), "sigma2, zero residuals");
}

pub fn wrap_count_conditional() {
    let t = 3;
    let b = basis(0, 0, t);
    let values = vec![0.5, 3.0, 6.0];
    let data = PhaseDataset::new(values.clone(), 1, 1, TimeGrid::uniform(t).unwrap()).unwrap();
    let sampler = Sampler::new(&data, &b, Hyperparams::default()).unwrap();
    let mut state = ModelState::zeros(1, 1, t, 1);
    state.a = vec![-9.0];
    state.sigma2 = 1.2;
    let mut counts = vec![std::collections::BTreeMap::<i32, usize>::new(); t];
    for i in 0..DRAWS {
        let mut s = state.clone();
        sampler.update_wrap_counts(&mut s, &SweepRng::new(15, i as u64));
        for j in 0..t {
            *counts[j].entry(s.z[j]).or_default() += 1;
        }
    }
    for j in 0..t {
        let r = values[j] + 9.0;
        // exact conditional over a generous support
        let weight = |m: i32| (-(r + TAU * m as f64).powi(2) / (2.0 * 1.2)).exp();
        let total: f64 = (-40..=40).map(weight).sum();
        for m in -40..=40 {
            let p = weight(m) / total;
            let freq = *counts[j].get(&m).unwrap_or(&0) as f64 / DRAWS as f64;
            let se = (p * (1.0 - p) / DRAWS as f64).sqrt();
            assert!((freq - p).abs() <= 3.0 * se + 1e-9, "j={j} m={m}: {freq} vs {p}");
        }
    }
}

/// Successive-conditional simulator: alternate a full sweep with a fresh
/// draw of `(Y, Z)` from the likelihood. The stationary distribution of the
/// parameters is then the prior, whose moments are known.
pub fn getting_it_right() {
    let (n, p, t) = (2, 2, 8);
    let b = basis(2, 0, t);
    let l = b.n_basis();
    assert_eq!(l, 3);
    let hyper = Hyperparams {
        a0: 0.5,
        b0: 1.0,
        nu_tau: 6.0,
        eta_tau: 5.0,
        nu_gamma: 6.0,
        eta_gamma: 5.0,
        nu_sigma: 6.0,
        eta_sigma: 2.5,
    };
    let iterations = 200_000;
    let burn = 1_000;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

    let mut state = ModelState::zeros(n, p, t, l);
    state.beta = vec![0.5; l];
    state.sigma2 = 0.5;
    for v in state.mu.iter_mut() {
        *v = 0.5;
    }
    for v in state.a.iter_mut() {
        *v = 0.5;
    }
    let grid = TimeGrid::uniform(t).unwrap();
    let mut beta = Vec::new();
    let mut tau2 = Vec::new();
    let mut gamma2 = Vec::new();
    let mut sigma2 = Vec::new();
    let mut curve = vec![0.0; t];
    for it in 0..iterations {
        // regenerate data given the current parameters
        let mut values = vec![0.0; n * p * t];
        let sigma = state.sigma2.sqrt();
        for unit in 0..n * p {
            b.combine(&state.a[unit * l..(unit + 1) * l], &mut curve);
            for j in 0..t {
                let w = curve[j] + sigma * normal();
                let y = wrap_phase(w);
                values[unit * t + j] = y;
                state.z[unit * t + j] = ((w - y) / TAU).round() as i32;
            }
        }
        let data = PhaseDataset::new(values, n, p, grid.clone()).unwrap();
        let sampler = Sampler::new(&data, &b, hyper).unwrap();
        sampler.sweep(&mut state, &SweepRng::new(1234, it as u64)).unwrap();
        if it >= burn {
            beta.push(state.beta[1]);
            tau2.push(state.tau2[0]);
            gamma2.push(state.gamma2[2]);
            sigma2.push(state.sigma2);
        }
    }

    // batch means account for autocorrelation
    let check = |xs: &[f64], target: f64, label: &str| {
        let batches = 50;
        let size = xs.len() / batches;
        let means: Vec<f64> = xs
            .chunks(size)
            .take(batches)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let m = moments(&means);
        let se = (m.var / batches as f64).sqrt();
        assert!(
            (m.mean - target).abs() <= 3.0 * se,
            "{label}: {} vs prior {target} (se {se})",
            m.mean
        );
    };
    check(&beta, 0.5, "beta mean");
    let beta_sq: Vec<f64> = beta.iter().map(|x| (x - 0.5).powi(2)).collect();
    check(&beta_sq, 1.0, "beta variance");
    check(&tau2, ig_mean(6.0, 5.0), "tau2");
    check(&gamma2, ig_mean(6.0, 5.0), "gamma2");
    check(&sigma2, ig_mean(6.0, 2.5), "sigma2");
}
