#[path = "support/signal.rs"]
mod checks;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use cfm::signal::{analytic_signal, bandpass, extract, hilbert_phase, BandSpec, RawSignal};
use cfm_core::stats::wrap_signed;
use checks::{alpha, interior, tone, FS};
use proptest::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

#[test]
fn stopband_tone_is_removed() {
    checks::stopband_tone_is_removed();
}

#[test]
fn cosine_phase_is_a_ramp() {
    checks::cosine_phase_is_a_ramp();
}

#[test]
fn filtered_phase_is_a_ramp() {
    checks::filtered_phase_is_a_ramp();
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

#[test]
fn passband_tone_keeps_amplitude() {
    let x = tone(10.0, 2500, 0.3);
    let y = bandpass(&RawSignal::new(vec![x.clone()], FS).unwrap(), &alpha()).unwrap();
    let y = &y.samples()[0];
    let range = interior(x.len());
    let ratio = rms(&y[range.clone()]) / rms(&x[range.clone()]);
    assert!((ratio - 1.0).abs() < 0.01, "gain {ratio}");
    // zero phase: output tracks the input sample by sample
    let worst = range.map(|j| (y[j] - x[j]).abs()).fold(0.0, f64::max);
    assert!(worst < 0.01, "max deviation {worst}");
}

#[test]
fn constant_input_is_removed() {
    let x = vec![3.0; 2500];
    let y = bandpass(&RawSignal::new(vec![x], FS).unwrap(), &alpha()).unwrap();
    let peak = y.samples()[0][interior(2500)]
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    assert!(peak < 1e-3 * 3.0, "DC residual {peak}");
}

#[test]
fn cosine_phase_ramp_off_bin() {
    // 10.3 Hz does not complete a whole number of cycles in the record
    let x = tone(10.3, 1000, 0.0);
    let phase = hilbert_phase(&RawSignal::new(vec![x], FS).unwrap()).unwrap();
    for j in interior(1000) {
        let expected = TAU * 10.3 * j as f64 / FS;
        let err = wrap_signed(phase[0][j] - expected).abs();
        assert!(err < 5e-2, "j={j}: {err}");
    }
}

#[test]
fn sine_lags_cosine_by_quarter_turn() {
    let c = tone(10.0, 250, 0.0);
    let s = tone(10.0, 250, -FRAC_PI_2);
    let pc = hilbert_phase(&RawSignal::new(vec![c], FS).unwrap()).unwrap();
    let ps = hilbert_phase(&RawSignal::new(vec![s], FS).unwrap()).unwrap();
    for j in interior(250) {
        let err = wrap_signed(ps[0][j] - (pc[0][j] - FRAC_PI_2)).abs();
        assert!(err < 1e-2, "j={j}: {err}");
    }
}

#[test]
fn phases_are_half_open() {
    let x: Vec<f64> = (0..301).map(|j| ((j * 7919) % 113) as f64 - 56.0).collect();
    let phase = hilbert_phase(&RawSignal::new(vec![x], FS).unwrap()).unwrap();
    assert!(phase[0].iter().all(|&p| (0.0..TAU).contains(&p)));
}

fn negative_energy_fraction(x: &[f64]) -> f64 {
    let mut z = analytic_signal(x);
    let n = z.len();
    FftPlanner::new().plan_fft_forward(n).process(&mut z);
    let energy = |c: &Complex<f64>| c.norm_sqr();
    let total: f64 = z.iter().map(energy).sum();
    let negative: f64 = z[n / 2 + 1..].iter().map(energy).sum();
    negative / total
}

#[test]
fn analytic_signal_has_no_negative_frequencies() {
    for n in [250, 251, 256, 1000] {
        let x: Vec<f64> = (0..n)
            .map(|j| (0.3 * j as f64).sin() + 0.5 * (1.7 * j as f64 + 0.2).cos())
            .collect();
        let frac = negative_energy_fraction(&x);
        assert!(frac < 1e-20, "n={n}: {frac}");
    }
}

#[test]
fn extraction_truncates_and_flags_edges() {
    let x = tone(10.0, 2500, 0.0);
    let e = extract(&RawSignal::new(vec![x.clone(), x], FS).unwrap(), &alpha(), Some(100)).unwrap();
    assert_eq!(e.phases.len(), 2);
    assert!(e.phases.iter().all(|ch| ch.len() == 100));
    assert_eq!(e.reliable, (250, 2250));
    assert_eq!(e.flagged, 100);
    assert_eq!(e.filter_taps, 313);
    assert!(extract(
        &RawSignal::new(vec![vec![0.0; 2500]], FS).unwrap(),
        &alpha(),
        Some(3000)
    )
    .is_err());
    assert!(matches!(
        extract(
            &RawSignal::new(vec![vec![0.0; 2500]], FS).unwrap(),
            &BandSpec::new(8.0, 200.0),
            None
        ),
        Err(cfm::CfmError::BandOutOfRange { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bandpass_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in 0u64..1000,
    ) {
        let len = 800;
        let x: Vec<f64> = (0..len).map(|j| ((j as u64 * 2654435761 + seed) % 1000) as f64 / 500.0 - 1.0).collect();
        let y: Vec<f64> = (0..len).map(|j| (0.21 * j as f64 + seed as f64).sin() + (PI * j as f64 / 7.0).cos()).collect();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let run = |s: Vec<f64>| bandpass(&RawSignal::new(vec![s], FS).unwrap(), &alpha()).unwrap().into_samples().remove(0);
        let fx = run(x);
        let fy = run(y);
        let fm = run(mix);
        for j in 0..len {
            prop_assert!((fm[j] - (a * fx[j] + b * fy[j])).abs() < 1e-10);
        }
    }
}
