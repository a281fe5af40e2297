// SPDX-License-Identifier: MIT OR Apache-2.0

pub mod error;
pub mod gmrf;
pub mod grid;
pub mod logspace;
pub mod prior;
pub mod recursions;
pub mod segmodels;
pub mod simulate;

pub use error::{Error, Result};
pub use grid::ReducedGrid;
pub use logspace::{log_sum_exp, LogWeight};
pub use prior::{log_delta, log_z_k, KPrior};
pub use recursions::{analyze, AnalysisOptions, ChangepointResult, SegmentTable};
pub use segmodels::SegmentMarginal;
