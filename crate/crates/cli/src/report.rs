// SPDX-License-Identifier: MIT OR Apache-2.0

//! Result documents. Non-finite numbers are written as `null` and read back
//! as `-inf`.

use std::collections::BTreeMap;

use cpfilter_core::gmrf::HyperPoint;
use cpfilter_core::recursions::FillDiagnostics;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ingest::IngestSummary;

pub(crate) mod nullable {
    use super::*;

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mapped: Vec<Option<f64>> = values.iter().map(|v| v.is_finite().then_some(*v)).collect();
        mapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect())
    }
}

pub(crate) mod nullable_scalar {
    use super::*;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        value.is_finite().then_some(*value).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub spacing: usize,
    pub points: usize,
    pub segment_pairs: usize,
    /// Grid-size diagnostic `n_r` and its `n_r (n_r + 1) / 2` pair count.
    pub reported_size: usize,
    pub reported_evaluation_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub start: usize,
    pub end: usize,
    pub hyper: HyperPoint,
    pub intercept: f64,
    #[serde(with = "nullable_scalar")]
    pub log_marginal: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub linear_predictor: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub phases: BTreeMap<String, f64>,
}

impl Timings {
    pub fn record(&mut self, phase: &str, seconds: f64) {
        self.phases.insert(phase.to_string(), seconds);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub tool: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub data: IngestSummary,
    /// Observations were divided by this sample standard deviation.
    pub scale_factor: Option<f64>,
    pub grid: GridSummary,
    #[serde(with = "nullable")]
    pub log_marginal_by_k: Vec<f64>,
    pub posterior_k: Vec<f64>,
    pub map_k: usize,
    pub map_positions_grid: Vec<usize>,
    pub map_positions: Vec<usize>,
    pub map_positions_refined: Vec<usize>,
    pub refinement_sweeps: usize,
    pub samples: Option<Vec<Vec<usize>>>,
    /// GMRF models only: per-segment hyperparameter maxima at the refined
    /// changepoints.
    pub segments: Option<Vec<SegmentSummary>>,
    pub diagnostics: RunDiagnostics,
    pub timings: Timings,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub table: FillDiagnostics,
    /// GMRF segments where no hyperparameter node converged.
    pub failed_gmrf_segments: usize,
    pub rng: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesFactorEntry {
    pub k: usize,
    #[serde(with = "nullable_scalar")]
    pub log_marginal_a: f64,
    #[serde(with = "nullable_scalar")]
    pub log_marginal_b: f64,
    /// `pi_a(y | k) / pi_b(y | k)`; `null` when either side is impossible.
    pub bayes_factor: Option<f64>,
    pub log_bayes_factor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesFactorReport {
    pub tool: String,
    pub version: String,
    pub config_a: BTreeMap<String, String>,
    pub config_b: BTreeMap<String, String>,
    pub data: IngestSummary,
    pub grid: GridSummary,
    pub entries: Vec<BayesFactorEntry>,
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub status: String,
    pub kind: String,
    pub exit_code: u8,
    pub message: String,
    pub config: Option<BTreeMap<String, String>>,
    pub timings: Timings,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result documents serialize");
    s.push('\n');
    s
}
