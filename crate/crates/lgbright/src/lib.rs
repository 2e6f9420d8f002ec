//! Command-line front end, file formats and parallel execution for
//! `lgbright-core`.
//!
//! * [`config`]: JSON run configuration with defaults and flag overrides.
//! * [`model_io`]: dispersion models as JSON documents.
//! * [`output`]: CSV tables, JSON envelopes, manifests, plot scripts.
//! * [`parallel`]: rayon executor.
//! * [`cli`]: the `lgbright` subcommands.

pub mod cli;
pub mod config;
pub mod error;
pub mod model_io;
pub mod output;
pub mod parallel;

pub use error::{CliError, CliResult};
