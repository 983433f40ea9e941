//! Noise-robust phase locking values from a hierarchical wrapped functional
//! model.
//!
//! Observed phases `Y ∈ [0, 2π)` are modeled as real-line curves
//! `W = Σ_l a_l B_l(t) + ε` reduced mod 2π, with random-effect coefficients
//! shared across subjects and channels. A Gibbs sampler with latent wrap
//! counts fits the model; posterior draws of the denoised curves give
//! posterior distributions of the phase locking value (PLV).
//!
//! The crate is `no_std` and needs only `alloc`. The `parallel` feature runs
//! per-unit sampler updates on rayon (this pulls in `std`); the `serde`
//! feature derives serialization for configuration and report types.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(feature = "parallel")]
extern crate std;

pub mod design;
mod error;
pub mod experiment;
pub mod gibbs;
mod linalg;
pub mod phase_data;
pub mod plv;
pub mod spline;
pub mod stats;
pub mod wrapped;

pub use error::{Error, Result};
pub use gibbs::{run_chain, ChainConfig, Hyperparams, ModelState, PosteriorChain, Sampler};
pub use phase_data::{simulate_dataset, GenerativeTruth, PhaseDataset, SimulationConfig, TimeGrid};
pub use plv::{naive_plv, posterior_plv, summarize, PlvMatrix, PlvSummary};
pub use spline::{BasisMatrix, BasisSpec, SplineConfig};
