//! IO, file formats, and the command-line front end for the certification
//! library: model JSON, dataset CSV, IDX ingestion, train-config files,
//! certification reports, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod idx;
pub mod model_io;
pub mod report;

pub use error::CliError;
