//! One function per subcommand, taking a validated configuration.

use std::path::{Path, PathBuf};

use cfm_core::experiment::{run_experiment, Baseline, ExperimentReport};
use cfm_core::plv::{posterior_plv_verified, NaivePlv};
use cfm_core::spline::WARN_BASIS;
use cfm_core::{
    naive_plv, posterior_plv, run_chain, simulate_dataset, summarize, GenerativeTruth, PhaseDataset, PlvSummary,
    TimeGrid,
};
use serde::Serialize;

use crate::config::{DesignKind, RunConfig};
use crate::error::{CfmError, Result};
use crate::io::{self, ChainSidecar};
use crate::report;
use crate::signal::{extract, PhaseExtraction, RawSignal};

fn warn_large_basis(config: &RunConfig) {
    let l = config.basis.n_basis();
    if l > WARN_BASIS {
        eprintln!("warning: {l} basis functions; the truncated power basis is poorly conditioned above {WARN_BASIS}");
    }
}

/// `data.csv` → `data.truth.json`.
pub fn truth_path(out: &Path) -> PathBuf {
    out.with_extension("truth.json")
}

#[derive(Debug, Serialize)]
pub struct SimulationRecord<'a> {
    pub config: &'a RunConfig,
    /// Subject-averaged PLV of the noiseless phases, one entry per pair.
    pub plv: Vec<f64>,
    pub truth: &'a GenerativeTruth,
}

pub fn generate(config: &RunConfig, design: DesignKind) -> Result<(PhaseDataset, GenerativeTruth)> {
    let s = &config.simulate;
    match design {
        DesignKind::Prior => {
            let grid = TimeGrid::uniform(s.times)?;
            let basis = config.basis.build(&grid)?;
            let mut prior = s.prior.clone();
            prior.hyper = config.hyper;
            Ok(simulate_dataset(s.subjects, s.channels, &basis, &prior, config.seed)?)
        }
        DesignKind::Cluster => {
            let mut design = s.cluster.clone();
            design.subjects = s.subjects;
            design.channels = s.channels;
            design.times = s.times;
            design.basis = config.basis.clone();
            Ok(design.generate(config.seed)?)
        }
    }
}

pub fn cmd_simulate(config: &RunConfig, out: &Path, truth_out: Option<&Path>) -> Result<PathBuf> {
    config.validate_simulate()?;
    let (data, truth) = generate(config, config.simulate.design)?;
    io::save_dataset(out, &data)?;
    let truth_file = truth_out.map_or_else(|| truth_path(out), Path::to_path_buf);
    let plv = naive_plv(&truth.clean_dataset(data.grid())?).averaged.upper();
    io::write_json(
        &truth_file,
        &SimulationRecord {
            config,
            plv,
            truth: &truth,
        },
    )?;
    Ok(truth_file)
}

#[derive(Debug, Serialize)]
struct ExtractionRecord<'a> {
    inputs: &'a [PathBuf],
    subjects: Vec<PhaseExtraction>,
}

/// One input file per subject, each a channel-by-time CSV.
pub fn cmd_extract_phase(config: &RunConfig, inputs: &[PathBuf], out: &Path) -> Result<PathBuf> {
    let settings = &config.signal;
    let fs = settings.fs.ok_or_else(|| CfmError::Config("--fs is required".into()))?;
    let band = settings
        .band
        .ok_or_else(|| CfmError::Config("--band is required".into()))?;
    band.validate(fs)?;
    if inputs.is_empty() {
        return Err(CfmError::Config("at least one input file is required".into()));
    }

    let mut values = Vec::new();
    let mut records = Vec::new();
    let mut shape: Option<(usize, usize)> = None;
    for path in inputs {
        let signal = RawSignal::new(io::load_signal_csv(path)?, fs)?;
        let extraction = extract(&signal, &band, settings.take)?;
        let dims = (extraction.phases.len(), extraction.phases[0].len());
        if let Some(expected) = shape.filter(|&s| s != dims) {
            return Err(CfmError::Format {
                path: path.clone(),
                message: format!(
                    "{} channels x {} samples, earlier inputs gave {} x {}",
                    dims.0, dims.1, expected.0, expected.1
                ),
            });
        }
        shape = Some(dims);
        values.extend(extraction.phases.iter().flatten().copied());
        records.push(extraction);
    }
    let (p, t) = shape.expect("at least one input");
    let data = PhaseDataset::new(values, inputs.len(), p, TimeGrid::uniform(t)?)?;
    io::save_dataset(out, &data)?;
    let meta = out.with_extension("meta.json");
    io::write_json(
        &meta,
        &ExtractionRecord {
            inputs,
            subjects: records,
        },
    )?;
    Ok(meta)
}

pub fn cmd_fit(config: &RunConfig, input: &Path, out: &Path) -> Result<ChainSidecar> {
    config.validate_model()?;
    warn_large_basis(config);
    let data = io::load_dataset(input, &config.layout)?;
    let basis = config.basis.build(data.grid())?;
    let chain = run_chain(&data, &basis, &config.hyper, &config.chain)?;
    let sidecar = ChainSidecar::new(&chain, config.basis.clone(), data.grid(), Some(input.to_path_buf()));
    io::save_chain(out, &chain, &sidecar)?;
    Ok(sidecar)
}

#[derive(Debug, Serialize)]
pub struct PlvRecord<'a> {
    pub chain: &'a Path,
    pub sidecar: &'a ChainSidecar,
    pub threshold: f64,
    pub cut: f64,
    pub verified: bool,
    pub summary: &'a PlvSummary,
    /// Direct PLV of the observed data, when supplied.
    pub naive: Option<NaivePlvRecord>,
}

#[derive(Debug, Serialize)]
pub struct NaivePlvRecord {
    pub data: PathBuf,
    pub averaged: Vec<f64>,
    pub per_subject: Vec<Vec<f64>>,
}

impl NaivePlvRecord {
    fn new(data: &Path, plv: NaivePlv) -> Self {
        Self {
            data: data.to_path_buf(),
            averaged: plv.averaged.upper(),
            per_subject: plv.per_subject.iter().map(|m| m.upper()).collect(),
        }
    }
}

/// Writes `summary.json` and `edges.csv` into `out`.
pub fn cmd_plv(
    config: &RunConfig,
    chain_path: &Path,
    data: Option<&Path>,
    verify: bool,
    out: &Path,
) -> Result<PlvSummary> {
    config.validate_summary()?;
    let (chain, sidecar) = io::load_chain(chain_path)?;
    let basis = sidecar.basis.build(&sidecar.time_grid()?)?;
    let draws = if verify {
        posterior_plv_verified(&chain, &basis)?
    } else {
        posterior_plv(&chain, &basis)?
    };
    let summary = summarize(&draws, config.threshold, config.cut)?;
    let naive = match data {
        Some(path) => Some(NaivePlvRecord::new(
            path,
            naive_plv(&io::load_dataset(path, &config.layout)?),
        )),
        None => None,
    };
    io::write_json(
        out.join("summary.json"),
        &PlvRecord {
            chain: chain_path,
            sidecar: &sidecar,
            threshold: config.threshold,
            cut: config.cut,
            verified: verify,
            summary: &summary,
            naive,
        },
    )?;
    report::write_edges_csv(out.join("edges.csv"), &summary)?;
    Ok(summary)
}

/// Runs the noise experiment on `data`, or on a synthetic baseline when no
/// dataset is given, and writes the report, tables and plot files.
pub fn cmd_experiment(config: &RunConfig, data: Option<&Path>, out: &Path) -> Result<ExperimentReport> {
    config.validate_experiment()?;
    warn_large_basis(config);
    let experiment = config.experiment();
    let report = match data {
        Some(path) => {
            let observed = io::load_dataset(path, &config.layout)?;
            run_experiment(Baseline::Observed(&observed), &experiment)?
        }
        None => {
            config.validate_simulate()?;
            let (data, truth) = generate(config, config.experiment_design)?;
            run_experiment(
                Baseline::Synthetic {
                    data: &data,
                    truth: &truth,
                },
                &experiment,
            )?
        }
    };
    report::write_experiment(out, &report)?;
    io::write_json(out.join("run.json"), config)?;
    report::emit_gnuplot(out.join("plots"), &report)?;
    Ok(report)
}

pub fn cmd_report(report_path: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let report: ExperimentReport = io::read_json(report_path)?;
    report::emit_gnuplot(out, &report)
}
