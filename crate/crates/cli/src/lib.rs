//! Command-line front end: configuration, single runs, batch sweeps, score
//! tables, certificates and SVG plots.

pub mod batch;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod svg;

pub use commands::GlobalOpts;
pub use config::ExperimentConfig;
pub use error::CliError;
