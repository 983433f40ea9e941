//! Randomized invariants of the phase locking value.

#![allow(dead_code)]

use std::f64::consts::TAU;

use cfm_core::gibbs::{ChainConfig, Draw, Hyperparams, PosteriorChain, Traces, WrapCounts};
use cfm_core::plv::{plv_pair, posterior_plv, posterior_plv_verified};
use cfm_core::stats::wrap_phase;
use cfm_core::{SplineConfig, TimeGrid};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub const CASES: u32 = 1000;
pub const TOL: f64 = 1e-12;

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

pub fn phases(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..TAU, len)
}

pub fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|t| (phases(t), phases(t)))
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

pub fn self_locking_is_one() -> Result<(), String> {
    report(runner().run(&(2usize..40).prop_flat_map(phases), |x| {
        prop_assert!((plv_pair(&x, &x) - 1.0).abs() < TOL);
        Ok(())
    }))
}

pub fn common_shift_invariance() -> Result<(), String> {
    report(runner().run(&(pair(), -10.0f64..10.0), |((x, y), c)| {
        let xs: Vec<f64> = x.iter().map(|v| wrap_phase(v + c)).collect();
        let ys: Vec<f64> = y.iter().map(|v| wrap_phase(v + c)).collect();
        prop_assert!((plv_pair(&x, &y) - plv_pair(&xs, &ys)).abs() < TOL);
        Ok(())
    }))
}

pub fn whole_turn_invariance() -> Result<(), String> {
    let strategy = (pair(), prop::collection::vec(-5i32..5, 40));
    report(runner().run(&strategy, |((x, y), m)| {
        let xs: Vec<f64> = x.iter().zip(&m).map(|(v, k)| v + TAU * *k as f64).collect();
        prop_assert!((plv_pair(&x, &y) - plv_pair(&xs, &y)).abs() < TOL);
        Ok(())
    }))
}

/// Denoised phases with and without the wrap counts give the same PLV.
pub fn wrap_counts_do_not_change_posterior_plv() -> Result<(), String> {
    let (n, p, t) = (2, 3, 6);
    let grid = TimeGrid::uniform(t).unwrap();
    let basis = SplineConfig::equally_spaced(2, 1, grid.domain())
        .unwrap()
        .evaluate_grid(&grid)
        .unwrap();
    let l = basis.n_basis();
    let strategy = (
        prop::collection::vec(-20.0f64..20.0, n * p * l),
        prop::collection::vec(-3i32..=3, n * p * t),
        1usize..3,
    );
    report(runner().run(&strategy, |(coef, z, draws)| {
        let list: Vec<Draw> = (0..draws)
            .map(|d| Draw {
                a: coef.iter().map(|c| c * (d + 1) as f64).collect(),
                z: WrapCounts::from_counts(&z),
                sigma2: 1.0,
            })
            .collect();
        let traces = Traces {
            beta: vec![0.0; draws * l],
            tau2: vec![1.0; draws * l],
            gamma2: vec![1.0; draws * l],
            sigma2: vec![1.0; draws],
        };
        let chain = PosteriorChain::from_parts(
            n,
            p,
            t,
            l,
            ChainConfig {
                burnin: 0,
                samples: draws,
                thin: 1,
                seed: 0,
            },
            Hyperparams::default(),
            list,
            traces,
        )
        .unwrap();
        let fast = posterior_plv(&chain, &basis).unwrap();
        let checked = posterior_plv_verified(&chain, &basis).unwrap();
        for (a, b) in fast.iter().zip(&checked) {
            for (x, y) in a.upper().iter().zip(b.upper()) {
                prop_assert!((x - y).abs() < TOL);
            }
        }
        Ok(())
    }))
}
