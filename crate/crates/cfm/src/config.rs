//! Run configuration: defaults, then an optional JSON file, then flags.

use std::path::Path;

use cfm_core::design::ClusterDesign;
use cfm_core::experiment::{ExperimentConfig, ModelConfig, NoiseKind, NoiseSpec};
use cfm_core::gibbs::{ChainConfig, Hyperparams};
use cfm_core::spline::{BasisSpec, MAX_BASIS};
use cfm_core::SimulationConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CfmError, Result};
use crate::io::CsvLayout;
use crate::signal::BandSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSettings {
    pub subjects: usize,
    pub channels: usize,
    pub times: usize,
    /// `prior` draws from the hierarchy, `cluster` uses [`ClusterDesign`].
    pub design: DesignKind,
    pub prior: SimulationConfig,
    pub cluster: ClusterDesign,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        Self {
            subjects: 10,
            channels: 5,
            times: 100,
            design: DesignKind::Prior,
            prior: SimulationConfig::default(),
            cluster: ClusterDesign::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    #[default]
    Prior,
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSettings {
    pub fs: Option<f64>,
    pub band: Option<BandSpec>,
    pub take: Option<usize>,
}

/// Everything a subcommand may need. Each subcommand reads the parts it uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub basis: BasisSpec,
    pub hyper: Hyperparams,
    pub threshold: f64,
    pub cut: f64,
    pub noise: Vec<NoiseKind>,
    /// Noise levels applied to every kind; empty means the standard grid.
    pub levels: Vec<f64>,
    /// Seed for simulation and for the experiment's noise and chains.
    pub seed: u64,
    /// Synthetic baseline for experiments run without a dataset.
    pub experiment_design: DesignKind,
    pub threads: Option<usize>,
    pub layout: CsvLayout,
    pub simulate: SimulateSettings,
    pub signal: SignalSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chain: ChainConfig::default(),
            basis: BasisSpec::default(),
            hyper: Hyperparams::default(),
            threshold: 0.7,
            cut: 0.5,
            noise: vec![NoiseKind::Gaussian],
            levels: Vec::new(),
            seed: 0,
            experiment_design: DesignKind::Cluster,
            threads: None,
            layout: CsvLayout::default(),
            simulate: SimulateSettings::default(),
            signal: SignalSettings::default(),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CfmError {
    CfmError::Config(e.to_string())
}

fn unit_interval(value: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(CfmError::Config(format!("{what} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

impl RunConfig {
    /// Defaults overlaid with the file at `path`, if any.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CfmError::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| CfmError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn validate_model(&self) -> Result<()> {
        self.chain.validate().map_err(usage)?;
        self.hyper.validate().map_err(usage)?;
        let l = self.basis.n_basis();
        if l > MAX_BASIS {
            return Err(CfmError::Config(format!(
                "{l} basis functions exceed the limit of {MAX_BASIS}"
            )));
        }
        Ok(())
    }

    pub fn validate_summary(&self) -> Result<()> {
        unit_interval(self.threshold, "threshold")?;
        unit_interval(self.cut, "cut")
    }

    pub fn validate_experiment(&self) -> Result<()> {
        self.validate_model()?;
        self.validate_summary()?;
        if self.noise.is_empty() {
            return Err(CfmError::Config("at least one noise kind is required".into()));
        }
        for spec in self.noise_specs() {
            spec.validate().map_err(usage)?;
        }
        Ok(())
    }

    pub fn validate_simulate(&self) -> Result<()> {
        let s = &self.simulate;
        if s.subjects == 0 || s.channels == 0 || s.times < 2 {
            return Err(CfmError::Config(
                "simulation needs at least one subject and channel and two time points".into(),
            ));
        }
        self.hyper.validate().map_err(usage)
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            basis: self.basis.clone(),
            hyper: self.hyper,
            chain: self.chain.clone(),
        }
    }

    /// One cell per (kind, level); the standard grid per kind when no levels
    /// are given.
    pub fn noise_specs(&self) -> Vec<NoiseSpec> {
        self.noise
            .iter()
            .flat_map(|&kind| {
                if self.levels.is_empty() {
                    ExperimentConfig::standard_levels(kind)
                } else {
                    self.levels.iter().map(|&level| NoiseSpec { kind, level }).collect()
                }
            })
            .collect()
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            noise: self.noise_specs(),
            threshold: self.threshold,
            cut: self.cut,
            seed: self.seed,
            model: self.model(),
        }
    }
}
