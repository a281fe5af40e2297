// SPDX-License-Identifier: MIT OR Apache-2.0

//! Batch front end for changepoint detection: configuration, data
//! ingestion, orchestration and JSON result documents.

pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod run;

pub use config::{ConfigMap, DataFormat, ModelConfig, RunConfig};
pub use error::{CliError, CliResult};
pub use report::{BayesFactorReport, DetectReport};
