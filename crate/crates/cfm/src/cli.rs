//! Command-line definitions and the mapping from flags onto [`RunConfig`].

use std::path::PathBuf;

use cfm_core::experiment::NoiseKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands;
use crate::config::{DesignKind, RunConfig};
use crate::error::{CfmError, Result};
use crate::io::CsvShape;
use crate::signal::BandSpec;

#[derive(Debug, Parser)]
#[command(
    name = "cfm",
    version,
    about = "Noise-robust phase-locking values from a hierarchical wrapped-normal model"
)]
pub struct Cli {
    /// JSON configuration; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CFM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    Long,
    Column,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    Gaussian,
    Uniform,
}

impl From<Noise> for NoiseKind {
    fn from(n: Noise) -> Self {
        match n {
            Noise::Gaussian => NoiseKind::Gaussian,
            Noise::Uniform => NoiseKind::Uniform,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct BasisArgs {
    /// Spline degree q.
    #[arg(long)]
    pub degree: Option<u32>,
    /// Number of equally spaced interior knots K.
    #[arg(long)]
    pub knots: Option<usize>,
}

#[derive(Debug, Default, Args)]
pub struct InputArgs {
    /// CSV layout of phase inputs.
    #[arg(long, value_enum)]
    pub layout: Option<Layout>,
    /// Reduce out-of-range phases mod 2π instead of rejecting them.
    #[arg(long)]
    pub wrap: bool,
}

#[derive(Debug, Default, Args)]
pub struct SummaryArgs {
    /// PLV level an edge must reach.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Posterior probability needed to declare an edge.
    #[arg(long)]
    pub cut: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub subjects: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub times: Option<usize>,
    #[arg(long, value_enum)]
    pub design: Option<DesignKind>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic dataset and record the generating truth.
    Simulate {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        basis: BasisArgs,
        /// Fix the observation noise variance.
        #[arg(long)]
        sigma2: Option<f64>,
        /// Fix every subject-level variance.
        #[arg(long)]
        tau2: Option<f64>,
        /// Fix every channel-level variance.
        #[arg(long)]
        gamma2: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dataset path; `.cfm` selects the binary format.
        #[arg(long)]
        out: PathBuf,
        /// Truth record (default: next to the dataset).
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Bandpass and Hilbert-transform raw signals into phases.
    ExtractPhase {
        /// One channel-by-time CSV per subject.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Sampling rate in Hz.
        #[arg(long)]
        fs: Option<f64>,
        /// Passband as `low:high` in Hz.
        #[arg(long)]
        band: Option<BandSpec>,
        /// Keep only the first T samples.
        #[arg(long)]
        take: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Gibbs sampler and store the chain.
    Fit {
        input: PathBuf,
        #[command(flatten)]
        input_args: InputArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        basis: BasisArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Chain file; the sidecar goes next to it with a `.json` extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize posterior PLVs from a stored chain.
    Plv {
        chain: PathBuf,
        #[command(flatten)]
        summary: SummaryArgs,
        /// Also report the direct PLV of this dataset.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        input_args: InputArgs,
        /// Recompute every draw with the wrap counts and compare.
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Noise-robustness experiment against a clean baseline.
    Experiment {
        /// Clean dataset; without it a synthetic baseline is generated.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        input_args: InputArgs,
        #[arg(long, value_enum, value_delimiter = ',')]
        noise: Vec<Noise>,
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
        #[command(flatten)]
        summary: SummaryArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        basis: BasisArgs,
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn an experiment report into gnuplot data files and scripts.
    Report {
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ChainArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.chain.burnin, self.burnin);
        set(&mut c.chain.samples, self.samples);
        set(&mut c.chain.thin, self.thin);
    }
}

impl BasisArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.basis.degree, self.degree);
        if let Some(k) = self.knots {
            c.basis.n_knots = k;
            c.basis.knots = None;
        }
    }
}

impl InputArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(layout) = self.layout {
            c.layout.shape = match layout {
                Layout::Long => CsvShape::Long,
                Layout::Column => CsvShape::Column,
            };
        }
        if self.wrap {
            c.layout.wrap_on_load = true;
        }
    }
}

impl SummaryArgs {
    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.threshold, self.threshold);
        set(&mut c.cut, self.cut);
    }
}

impl DesignArgs {
    fn apply(&self, c: &mut RunConfig, design: &mut DesignKind) {
        set(&mut c.simulate.subjects, self.subjects);
        set(&mut c.simulate.channels, self.channels);
        set(&mut c.simulate.times, self.times);
        set(design, self.design);
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CfmError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CfmError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Resolves the configuration and runs the subcommand.
pub fn run(cli: Cli) -> Result<()> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    set(&mut config.threads, cli.threads.map(Some));
    configure_threads(config.threads)?;

    match cli.command {
        Command::Simulate {
            design,
            basis,
            sigma2,
            tau2,
            gamma2,
            seed,
            out,
            truth,
        } => {
            let mut kind = config.simulate.design;
            design.apply(&mut config, &mut kind);
            config.simulate.design = kind;
            basis.apply(&mut config);
            set(&mut config.seed, seed);
            let l = config.basis.n_basis();
            let prior = &mut config.simulate.prior;
            if let Some(v) = sigma2 {
                prior.sigma2 = Some(v);
                config.simulate.cluster.noise_sd = v.max(0.0).sqrt();
            }
            if let Some(v) = tau2 {
                prior.tau2 = Some(vec![v; l]);
                config.simulate.cluster.subject_sd = v.max(0.0).sqrt();
            }
            if let Some(v) = gamma2 {
                prior.gamma2 = Some(vec![v; l]);
            }
            let truth_file = commands::cmd_simulate(&config, &out, truth.as_deref())?;
            println!("wrote {} and {}", out.display(), truth_file.display());
        }
        Command::ExtractPhase {
            inputs,
            fs,
            band,
            take,
            out,
        } => {
            let s = &mut config.signal;
            s.fs = fs.or(s.fs);
            s.band = band.or(s.band);
            s.take = take.or(s.take);
            let meta = commands::cmd_extract_phase(&config, &inputs, &out)?;
            println!("wrote {} and {}", out.display(), meta.display());
        }
        Command::Fit {
            input,
            input_args,
            chain,
            basis,
            seed,
            out,
        } => {
            input_args.apply(&mut config);
            chain.apply(&mut config);
            basis.apply(&mut config);
            set(&mut config.chain.seed, seed);
            let sidecar = commands::cmd_fit(&config, &input, &out)?;
            println!(
                "wrote {} ({} draws, seed {})",
                out.display(),
                sidecar.draws,
                sidecar.seed
            );
        }
        Command::Plv {
            chain,
            summary,
            data,
            input_args,
            verify,
            out,
        } => {
            summary.apply(&mut config);
            input_args.apply(&mut config);
            let s = commands::cmd_plv(&config, &chain, data.as_deref(), verify, &out)?;
            let edges = s.pairs.iter().filter(|p| p.edge).count();
            println!("{} pairs, {edges} edges; wrote {}", s.pairs.len(), out.display());
        }
        Command::Experiment {
            data,
            input_args,
            noise,
            levels,
            summary,
            chain,
            basis,
            design,
            seed,
            out,
        } => {
            input_args.apply(&mut config);
            if !noise.is_empty() {
                config.noise = noise.into_iter().map(NoiseKind::from).collect();
            }
            if !levels.is_empty() {
                config.levels = levels;
            }
            summary.apply(&mut config);
            chain.apply(&mut config);
            basis.apply(&mut config);
            let mut kind = config.experiment_design;
            design.apply(&mut config, &mut kind);
            config.experiment_design = kind;
            set(&mut config.seed, seed);
            let report = commands::cmd_experiment(&config, data.as_deref(), &out)?;
            for c in &report.cells {
                println!(
                    "{} b={}: naive MAE {:.4}, model MAE {:.4}",
                    c.noise.kind.name(),
                    c.noise.level,
                    c.naive.error.mean,
                    c.model.error.mean
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Report { report, out } => {
            let written = commands::cmd_report(&report, &out)?;
            println!("wrote {} files to {}", written.len(), out.display());
        }
    }
    Ok(())
}
