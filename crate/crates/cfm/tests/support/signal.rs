//! Phase extraction checks on pure tones.

#![allow(dead_code)]

use std::f64::consts::TAU;

use cfm::signal::{bandpass, extract, hilbert_phase, BandSpec, RawSignal};
use cfm_core::stats::wrap_signed;

pub const FS: f64 = 250.0;

pub fn tone(freq: f64, len: usize, phase: f64) -> Vec<f64> {
    (0..len).map(|j| (TAU * freq * j as f64 / FS + phase).cos()).collect()
}

pub fn alpha() -> BandSpec {
    BandSpec::new(8.0, 15.0)
}

pub fn interior(len: usize) -> std::ops::Range<usize> {
    len / 10..len - len / 10
}

/// Largest interior distance between a phase track and the 10 Hz ramp.
fn ramp_error(phase: &[f64], freq: f64) -> f64 {
    interior(phase.len())
        .map(|j| wrap_signed(phase[j] - TAU * freq * j as f64 / FS).abs())
        .fold(0.0, f64::max)
}

pub fn cosine_phase_is_a_ramp() {
    let x = tone(10.0, 250, 0.0);
    let phase = hilbert_phase(&RawSignal::new(vec![x], FS).unwrap()).unwrap();
    let err = ramp_error(&phase[0], 10.0);
    assert!(err < 1e-2, "raw tone: {err}");
}

pub fn filtered_phase_is_a_ramp() {
    let x = tone(10.0, 2500, 0.0);
    let out = extract(&RawSignal::new(vec![x], FS).unwrap(), &alpha(), None).unwrap();
    let err = ramp_error(&out.phases[0], 10.0);
    assert!(err < 1e-2, "filtered tone: {err}");
}

pub fn stopband_tone_is_removed() {
    let x = tone(40.0, 2500, 0.0);
    let y = bandpass(&RawSignal::new(vec![x], FS).unwrap(), &alpha()).unwrap();
    let peak = y.samples()[0][interior(2500)]
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    assert!(peak < 0.01, "40 Hz residual {peak}");
}
