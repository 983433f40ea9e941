//! Noise-robustness protocol: inject noise into a clean dataset, estimate
//! PLVs directly and through the fitted model, and score both against a
//! reference ("grand truth") by absolute error, threshold classification,
//! and calibration of the exceedance probabilities.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::gibbs::{run_chain, ChainConfig, Hyperparams};
use crate::phase_data::{GenerativeTruth, PhaseDataset};
use crate::plv::{naive_plv, pair_count, posterior_plv, summarize, PlvMatrix, PlvSummary};
use crate::spline::BasisSpec;
use crate::stats::{mean, mix_seed, quantile_sorted, wrap_phase};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NoiseKind {
    /// `N(0, b²)`
    Gaussian,
    /// `U(-b, b)`
    Uniform,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, level: f64) -> Result<Self> {
        let spec = Self { kind, level };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0) || !self.level.is_finite() {
            return Err(Error::InvalidNoiseLevel(self.level));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            NoiseKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                self.level * z
            }
            NoiseKind::Uniform => self.level * (2.0 * rng.random::<f64>() - 1.0),
        }
    }
}

/// `Ỹ = (Y + ε) mod 2π` with i.i.d. `ε` per entry.
pub fn inject_noise(data: &PhaseDataset, spec: &NoiseSpec, seed: u64) -> Result<PhaseDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = data
        .values()
        .iter()
        .map(|&y| wrap_phase(y + spec.sample(&mut rng)))
        .collect();
    PhaseDataset::new(values, data.subjects(), data.channels(), data.grid().clone())
}

/// Mean and pointwise 5% / 95% quantiles of `|estimate − truth|` over pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorSummary {
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

fn check_channels(truth: &PlvMatrix, other: usize, what: &'static str) -> Result<()> {
    if truth.channels() != other {
        return Err(Error::DimensionMismatch {
            what,
            expected: truth.channels(),
            found: other,
        });
    }
    Ok(())
}

pub fn error_summary(truth: &PlvMatrix, estimate: &PlvMatrix) -> Result<ErrorSummary> {
    check_channels(truth, estimate.channels(), "estimate channels")?;
    let mut diffs: Vec<f64> = truth
        .upper()
        .iter()
        .zip(estimate.upper())
        .map(|(t, e)| libm::fabs(e - t))
        .collect();
    diffs.sort_by(f64::total_cmp);
    Ok(ErrorSummary {
        mean: mean(&diffs),
        q05: quantile_sorted(&diffs, 0.05),
        q95: quantile_sorted(&diffs, 0.95),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub level: f64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub error: ErrorSummary,
}

/// One [`ErrorSummary`] per noise level.
pub fn error_curves(truth: &PlvMatrix, estimates: &[(f64, PlvMatrix)]) -> Result<Vec<CurvePoint>> {
    estimates
        .iter()
        .map(|(level, est)| {
            Ok(CurvePoint {
                level: *level,
                error: error_summary(truth, est)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassificationMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    /// `TP / (TP + FN)`; `None` when the truth has no positives.
    pub tpr: Option<f64>,
    /// `2TP / (2TP + FP + FN)`; `None` when there are no positives on
    /// either side.
    pub f1: Option<f64>,
}

/// Scores per-pair edge decisions against `truth >= threshold`.
pub fn classification_metrics(truth: &PlvMatrix, decisions: &[bool], threshold: f64) -> Result<ClassificationMetrics> {
    let upper = truth.upper();
    if decisions.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            what: "edge decisions",
            expected: upper.len(),
            found: decisions.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&t, &d) in upper.iter().zip(decisions) {
        match (t >= threshold, d) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let tpr = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
    let f1 = (2 * tp + fp + fn_ > 0).then(|| 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64);
    Ok(ClassificationMetrics {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
        tpr,
        f1,
    })
}

/// Calibration bin edges. Bins are half-open except the last, `[0.8, 1]`.
pub const CALIBRATION_EDGES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_probability: Option<f64>,
    /// Fraction of the bin's pairs whose true PLV is at least the threshold.
    pub empirical_frequency: Option<f64>,
}

fn calibration_bin(p: f64) -> usize {
    CALIBRATION_EDGES[1..5].iter().position(|&edge| p < edge).unwrap_or(4)
}

/// Groups pairs by exceedance probability and compares each group's mean
/// probability with how often the true PLV actually reaches the threshold.
pub fn calibration_table(exceedance: &[f64], truth: &PlvMatrix, threshold: f64) -> Result<Vec<CalibrationBin>> {
    let upper = truth.upper();
    if exceedance.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            what: "exceedance probabilities",
            expected: upper.len(),
            found: exceedance.len(),
        });
    }
    Ok(calibration_from(
        exceedance.iter().copied().zip(upper.iter().map(|&t| t >= threshold)),
    ))
}

fn calibration_from(items: impl Iterator<Item = (f64, bool)>) -> Vec<CalibrationBin> {
    let mut count = [0usize; 5];
    let mut sum_p = [0.0; 5];
    let mut hits = [0usize; 5];
    for (p, exceeded) in items {
        let b = calibration_bin(p);
        count[b] += 1;
        sum_p[b] += p;
        hits[b] += exceeded as usize;
    }
    (0..5)
        .map(|b| CalibrationBin {
            lower: CALIBRATION_EDGES[b],
            upper: CALIBRATION_EDGES[b + 1],
            count: count[b],
            mean_probability: (count[b] > 0).then(|| sum_p[b] / count[b] as f64),
            empirical_frequency: (count[b] > 0).then(|| hits[b] as f64 / count[b] as f64),
        })
        .collect()
}

/// Basis, priors and chain settings for one model fit.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ModelConfig {
    pub basis: BasisSpec,
    pub hyper: Hyperparams,
    pub chain: ChainConfig,
}

/// Fits the model and summarizes the posterior PLV. Returns the summary and
/// the posterior mean of `σ²`.
pub fn fit_plv(data: &PhaseDataset, model: &ModelConfig, threshold: f64, cut: f64) -> Result<(PlvSummary, f64)> {
    let basis = model.basis.build(data.grid())?;
    let chain = run_chain(data, &basis, &model.hyper, &model.chain)?;
    let draws = posterior_plv(&chain, &basis)?;
    Ok((summarize(&draws, threshold, cut)?, chain.posterior_mean_sigma2()))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ExperimentConfig {
    /// One cell per entry.
    pub noise: Vec<NoiseSpec>,
    pub threshold: f64,
    pub cut: f64,
    pub seed: u64,
    pub model: ModelConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            noise: Vec::new(),
            threshold: 0.7,
            cut: 0.5,
            seed: 0,
            model: ModelConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Gaussian levels 0.1..=0.6 and uniform levels 0.2..=1.2.
    pub fn standard_levels(kind: NoiseKind) -> Vec<NoiseSpec> {
        let step = match kind {
            NoiseKind::Gaussian => 0.1,
            NoiseKind::Uniform => 0.2,
        };
        (1..=6)
            .map(|i| NoiseSpec {
                kind,
                level: step * i as f64,
            })
            .collect()
    }
}

/// Where the reference PLVs come from.
pub enum Baseline<'a> {
    /// Real data: the reference is the model-based posterior mean PLV of the
    /// clean data.
    Observed(&'a PhaseDataset),
    /// Simulated data: the reference is the PLV of the noiseless phases.
    Synthetic {
        data: &'a PhaseDataset,
        truth: &'a GenerativeTruth,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TruthSource {
    GenerativeTruth,
    CleanModelFit,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruthBlock {
    pub source: TruthSource,
    /// Reference PLV per pair, in pair order.
    pub plv: Vec<f64>,
    /// Direct PLV of the clean dataset.
    pub naive_clean: Vec<f64>,
    /// Model-based PLV of the clean dataset, when it was fitted.
    pub model_clean: Option<Vec<f64>>,
    pub positives: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodReport {
    pub error: ErrorSummary,
    pub metrics: ClassificationMetrics,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellReport {
    pub noise: NoiseSpec,
    pub naive: MethodReport,
    pub model: MethodReport,
    pub calibration: Vec<CalibrationBin>,
    pub posterior_mean_sigma2: f64,
    pub naive_plv: Vec<f64>,
    pub model_plv: Vec<f64>,
    pub exceedance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub channels: usize,
    pub pairs: usize,
    pub config: ExperimentConfig,
    pub truth: TruthBlock,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    /// Calibration over every cell of one noise kind.
    pub fn pooled_calibration(&self, kind: NoiseKind) -> Vec<CalibrationBin> {
        let threshold = self.config.threshold;
        let truth = &self.truth.plv;
        calibration_from(
            self.cells
                .iter()
                .filter(|c| c.noise.kind == kind)
                .flat_map(|c| c.exceedance.iter().zip(truth).map(|(&p, &t)| (p, t >= threshold))),
        )
    }

    pub fn curve(&self, kind: NoiseKind, model: bool) -> Vec<CurvePoint> {
        self.cells
            .iter()
            .filter(|c| c.noise.kind == kind)
            .map(|c| CurvePoint {
                level: c.noise.level,
                error: if model { c.model.error } else { c.naive.error },
            })
            .collect()
    }
}

fn run_cell(index: usize, clean: &PhaseDataset, truth: &PlvMatrix, config: &ExperimentConfig) -> Result<CellReport> {
    let spec = config.noise[index];
    let noisy = inject_noise(clean, &spec, mix_seed(config.seed, 2 * index as u64 + 1))?;
    let naive = naive_plv(&noisy).averaged;
    let naive_decisions: Vec<bool> = naive.upper().iter().map(|&v| v >= config.threshold).collect();

    let mut model = config.model.clone();
    model.chain.seed = mix_seed(config.seed, 2 * index as u64 + 2);
    let (summary, sigma2) = fit_plv(&noisy, &model, config.threshold, config.cut)?;
    let estimate = summary.means();
    let exceedance = summary.exceedance();

    Ok(CellReport {
        noise: spec,
        naive: MethodReport {
            error: error_summary(truth, &naive)?,
            metrics: classification_metrics(truth, &naive_decisions, config.threshold)?,
        },
        model: MethodReport {
            error: error_summary(truth, &estimate)?,
            metrics: classification_metrics(truth, &summary.edges(), config.threshold)?,
        },
        calibration: calibration_table(&exceedance, truth, config.threshold)?,
        posterior_mean_sigma2: sigma2,
        naive_plv: naive.upper(),
        model_plv: estimate.upper(),
        exceedance,
    })
}

/// Runs every noise cell of `config` against the baseline.
///
/// Each cell derives its noise and chain seeds from `config.seed` and its
/// index, so the report is a pure function of the inputs.
pub fn run_experiment(baseline: Baseline<'_>, config: &ExperimentConfig) -> Result<ExperimentReport> {
    for spec in &config.noise {
        spec.validate()?;
    }
    let (clean, truth_block) = match baseline {
        Baseline::Synthetic { data, truth } => {
            let truth_plv = naive_plv(&truth.clean_dataset(data.grid())?).averaged;
            let block = TruthBlock {
                source: TruthSource::GenerativeTruth,
                plv: truth_plv.upper(),
                naive_clean: naive_plv(data).averaged.upper(),
                model_clean: None,
                positives: 0,
            };
            (data, block)
        }
        Baseline::Observed(data) => {
            let mut model = config.model.clone();
            model.chain.seed = mix_seed(config.seed, 0);
            let (summary, _) = fit_plv(data, &model, config.threshold, config.cut)?;
            let plv = summary.means().upper();
            let block = TruthBlock {
                source: TruthSource::CleanModelFit,
                plv: plv.clone(),
                naive_clean: naive_plv(data).averaged.upper(),
                model_clean: Some(plv),
                positives: 0,
            };
            (data, block)
        }
    };
    let mut truth_block = truth_block;
    truth_block.positives = truth_block.plv.iter().filter(|&&v| v >= config.threshold).count();
    let truth = PlvMatrix::from_upper(clean.channels(), &truth_block.plv)?;

    #[cfg(feature = "parallel")]
    let cells: Result<Vec<CellReport>> = {
        use rayon::prelude::*;
        (0..config.noise.len())
            .into_par_iter()
            .map(|i| run_cell(i, clean, &truth, config))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cells: Result<Vec<CellReport>> = (0..config.noise.len())
        .map(|i| run_cell(i, clean, &truth, config))
        .collect();

    Ok(ExperimentReport {
        channels: clean.channels(),
        pairs: pair_count(clean.channels()),
        config: config.clone(),
        truth: truth_block,
        cells: cells?,
    })
}
