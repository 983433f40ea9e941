//! Band-limited instantaneous phase: a zero-phase windowed-sinc bandpass
//! followed by the FFT analytic signal.

use std::f64::consts::PI;

use cfm_core::stats::wrap_phase;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{CfmError, Result};

/// Multichannel recording, `samples[channel][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSignal {
    samples: Vec<Vec<f64>>,
    fs: f64,
}

impl RawSignal {
    pub fn new(samples: Vec<Vec<f64>>, fs: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(CfmError::Signal(format!("sampling rate must be positive, got {fs}")));
        }
        let len = samples.first().map_or(0, Vec::len);
        for (k, ch) in samples.iter().enumerate() {
            if ch.len() != len {
                return Err(CfmError::Signal(format!(
                    "channel {k} has {} samples, channel 0 has {len}",
                    ch.len()
                )));
            }
            if let Some(j) = ch.iter().position(|v| !v.is_finite()) {
                return Err(CfmError::Signal(format!("non-finite sample at channel {k}, index {j}")));
            }
        }
        Ok(Self { samples, fs })
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn channels(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_samples(self) -> Vec<Vec<f64>> {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub low: f64,
    pub high: f64,
}

impl BandSpec {
    pub fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        let nyquist = fs / 2.0;
        if !(self.low > 0.0 && self.low < self.high && self.high < nyquist) {
            return Err(CfmError::BandOutOfRange {
                low: self.low,
                high: self.high,
                nyquist,
            });
        }
        Ok(())
    }
}

impl std::str::FromStr for BandSpec {
    type Err = String;

    /// Parses `low:high` in Hz.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| format!("expected low:high, got {s:?}"))?;
        let low = lo.trim().parse().map_err(|e| format!("band low {lo:?}: {e}"))?;
        let high = hi.trim().parse().map_err(|e| format!("band high {hi:?}: {e}"))?;
        Ok(Self { low, high })
    }
}

/// Number of filter taps minus one: ten periods of the lower band edge,
/// rounded to an even count.
pub fn filter_order(fs: f64, band: &BandSpec) -> usize {
    2 * (5.0 * fs / band.low).round().max(1.0) as usize
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hamming-windowed sinc bandpass taps, scaled to unit gain at the band
/// centre.
pub fn design_bandpass(fs: f64, band: &BandSpec) -> Result<Vec<f64>> {
    band.validate(fs)?;
    let order = filter_order(fs, band);
    let (lo, hi) = (band.low / fs, band.high / fs);
    let half = order as f64 / 2.0;
    let mut taps: Vec<f64> = (0..=order)
        .map(|n| {
            let x = n as f64 - half;
            let window = 0.54 - 0.46 * (2.0 * PI * n as f64 / order as f64).cos();
            window * (2.0 * hi * sinc(2.0 * hi * x) - 2.0 * lo * sinc(2.0 * lo * x))
        })
        .collect();
    let centre = (lo + hi) / 2.0;
    let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, h)| {
        let w = 2.0 * PI * centre * (n as f64 - half);
        (re + h * w.cos(), im + h * w.sin())
    });
    let gain = (re * re + im * im).sqrt();
    taps.iter_mut().for_each(|h| *h /= gain);
    Ok(taps)
}

/// `pad` samples mirrored at each end, edge sample included.
fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 2 * pad);
    out.extend(x[..pad].iter().rev());
    out.extend_from_slice(x);
    out.extend(x[x.len() - pad..].iter().rev());
    out
}

fn causal_fir(taps: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let reach = i.min(taps.len() - 1);
            (0..=reach).map(|m| taps[m] * x[i - m]).sum()
        })
        .collect()
}

/// Forward pass, time reversal, second pass, time reversal: the two group
/// delays cancel and the magnitude response is squared.
pub fn filtfilt(taps: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let pad = taps.len();
    if x.len() <= pad {
        return Err(CfmError::Signal(format!(
            "signal of {} samples is too short for a {}-tap filter",
            x.len(),
            taps.len()
        )));
    }
    let padded = reflect_pad(x, pad);
    let mut y = causal_fir(taps, &padded);
    y.reverse();
    let mut y = causal_fir(taps, &y);
    y.reverse();
    Ok(y[pad..pad + x.len()].to_vec())
}

pub fn bandpass(signal: &RawSignal, band: &BandSpec) -> Result<RawSignal> {
    let taps = design_bandpass(signal.fs, band)?;
    let samples = signal
        .samples
        .par_iter()
        .map(|ch| filtfilt(&taps, ch))
        .collect::<Result<Vec<_>>>()?;
    Ok(RawSignal { samples, fs: signal.fs })
}

/// Analytic signal of a real series: keep DC (and Nyquist for even length),
/// double positive frequencies, drop negative ones.
pub fn analytic_signal(x: &[f64]) -> Vec<Complex<f64>> {
    let n = x.len();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward.process(&mut buf);
    for (m, c) in buf.iter_mut().enumerate() {
        let h = if m == 0 || (n.is_multiple_of(2) && m == n / 2) {
            1.0
        } else if m < n.div_ceil(2) {
            2.0
        } else {
            0.0
        };
        *c *= h / n as f64;
    }
    inverse.process(&mut buf);
    buf
}

/// Instantaneous phase in `[0, 2π)`; `atan2(0, 0)` is taken as 0.
pub fn hilbert_phase(signal: &RawSignal) -> Result<Vec<Vec<f64>>> {
    if signal.len() < 4 {
        return Err(CfmError::Signal(format!(
            "need at least 4 samples for the analytic signal, got {}",
            signal.len()
        )));
    }
    Ok(signal
        .samples
        .par_iter()
        .map(|ch| {
            analytic_signal(ch)
                .iter()
                .map(|c| wrap_phase(c.im.atan2(c.re)) + 0.0)
                .collect()
        })
        .collect())
}

/// Phases of one recording plus the span considered free of edge effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseExtraction {
    /// `phases[channel][time]`, possibly truncated.
    #[serde(skip)]
    pub phases: Vec<Vec<f64>>,
    pub fs: f64,
    pub band: BandSpec,
    pub filter_taps: usize,
    /// Samples in the full record before truncation.
    pub source_len: usize,
    /// Half-open range of source samples outside the first and last 10%.
    pub reliable: (usize, usize),
    /// Number of retained samples that fall outside `reliable`.
    pub flagged: usize,
}

/// Bandpass, analytic phase, then keep the first `take` samples if given.
pub fn extract(signal: &RawSignal, band: &BandSpec, take: Option<usize>) -> Result<PhaseExtraction> {
    let filtered = bandpass(signal, band)?;
    let mut phases = hilbert_phase(&filtered)?;
    let source_len = signal.len();
    let kept = match take {
        Some(t) if t > source_len => {
            return Err(CfmError::Signal(format!(
                "cannot take {t} samples from a record of {source_len}"
            )))
        }
        Some(t) => t,
        None => source_len,
    };
    phases.iter_mut().for_each(|ch| ch.truncate(kept));
    let edge = source_len / 10;
    let reliable = (edge, source_len - edge);
    let flagged = (0..kept).filter(|&j| j < reliable.0 || j >= reliable.1).count();
    Ok(PhaseExtraction {
        phases,
        fs: signal.fs,
        band: *band,
        filter_taps: filter_order(signal.fs, band) + 1,
        source_len,
        reliable,
        flagged,
    })
}
