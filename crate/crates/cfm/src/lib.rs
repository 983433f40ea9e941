//! File formats, signal preprocessing and the command-line pipeline around
//! [`cfm_core`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod signal;

pub use error::{CfmError, Result};
