// SPDX-License-Identifier: MIT OR Apache-2.0

//! Readers for nucleotide FASTA, numeric series and event-date lists.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use cpfilter_core::segmodels::Nucleotide;
use serde::{Deserialize, Serialize};

use crate::config::{DataConfig, DataFormat};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Observations {
    Nucleotides(Vec<Nucleotide>),
    Values(Vec<f64>),
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Nucleotides(v) => v.len(),
            Observations::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// What was read, for the result document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub path: String,
    pub format: String,
    pub n: usize,
    pub details: BTreeMap<String, String>,
}

pub fn ingest(config: &DataConfig) -> CliResult<(Observations, IngestSummary)> {
    let text = std::fs::read_to_string(&config.path).map_err(|e| CliError::io(&config.path, e))?;
    let path = config.path.display().to_string();
    let (obs, format, details) = match config.format {
        DataFormat::Fasta => {
            let (seq, header) = parse_fasta(&text)?;
            let mut details = BTreeMap::new();
            details.insert("header".to_string(), header);
            (Observations::Nucleotides(seq), "fasta", details)
        }
        DataFormat::Csv => (Observations::Values(parse_numeric(&text)?), "csv", BTreeMap::new()),
        DataFormat::EventDates => {
            let dates = parse_dates(&text)?;
            let weekly = weekly_counts(&dates, config.week_origin)?;
            let details = BTreeMap::from([
                ("events".to_string(), dates.len().to_string()),
                ("first_event".to_string(), weekly.first_event.to_string()),
                ("last_event".to_string(), weekly.last_event.to_string()),
                ("week_origin".to_string(), weekly.origin.to_string()),
                ("weeks".to_string(), weekly.counts.len().to_string()),
                ("convention".to_string(), WEEK_CONVENTION.to_string()),
            ]);
            (Observations::Values(weekly.counts), "event_dates", details)
        }
    };
    if obs.is_empty() {
        return Err(CliError::Data(format!("{path} holds no observations")));
    }
    let summary = IngestSummary {
        path,
        format: format.to_string(),
        n: obs.len(),
        details,
    };
    Ok((obs, summary))
}

/// Single-record FASTA over `A, C, G, T` (either case).
pub fn parse_fasta(text: &str) -> CliResult<(Vec<Nucleotide>, String)> {
    let mut header = None;
    let mut seq = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if let Some(h) = line.strip_prefix('>') {
            if header.is_some() {
                return Err(CliError::Data(format!("line {}: expected a single FASTA record", i + 1)));
            }
            header = Some(h.trim().to_string());
            continue;
        }
        if line.starts_with(';') {
            continue;
        }
        for (col, byte) in line.bytes().enumerate() {
            if byte.is_ascii_whitespace() {
                continue;
            }
            let base = Nucleotide::from_ascii(byte).ok_or_else(|| {
                CliError::Data(format!(
                    "line {}, column {}: unknown nucleotide `{}`",
                    i + 1,
                    col + 1,
                    byte.escape_ascii()
                ))
            })?;
            seq.push(base);
        }
    }
    Ok((seq, header.unwrap_or_default()))
}

/// One finite number per line. A trailing newline is allowed; any other
/// blank line is an error.
pub fn parse_numeric(text: &str) -> CliResult<Vec<f64>> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            let field = line.trim();
            if field.is_empty() {
                return Err(CliError::Data(format!("line {}: blank line", i + 1)));
            }
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Data(format!("line {}: `{field}` is not a finite number", i + 1))),
            }
        })
        .collect()
}

/// ISO `YYYY-MM-DD` dates, one per line, in any order.
pub fn parse_dates(text: &str) -> CliResult<Vec<NaiveDate>> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            let field = line.trim();
            if field.is_empty() {
                return Err(CliError::Data(format!("line {}: blank line", i + 1)));
            }
            NaiveDate::parse_from_str(field, "%Y-%m-%d")
                .map_err(|_| CliError::Data(format!("line {}: `{field}` is not a YYYY-MM-DD date", i + 1)))
        })
        .collect()
}

pub const WEEK_CONVENTION: &str =
    "consecutive 7-day blocks starting at the week origin, through the week holding the last event";

#[derive(Clone, Debug, PartialEq)]
pub struct WeeklyCounts {
    pub counts: Vec<f64>,
    pub origin: NaiveDate,
    pub first_event: NaiveDate,
    pub last_event: NaiveDate,
}

/// Events per week from `origin` (default: the first event) to the week
/// containing the last event, inclusive.
pub fn weekly_counts(dates: &[NaiveDate], origin: Option<NaiveDate>) -> CliResult<WeeklyCounts> {
    let first_event = *dates.iter().min().ok_or_else(|| CliError::Data("no event dates".into()))?;
    let last_event = *dates.iter().max().expect("nonempty");
    let origin = origin.unwrap_or(first_event);
    if origin > first_event {
        return Err(CliError::Data(format!(
            "week origin {origin} falls after the first event {first_event}"
        )));
    }
    let week = |d: NaiveDate| ((d - origin).num_days() / 7) as usize;
    let mut counts = vec![0.0; week(last_event) + 1];
    for &d in dates {
        counts[week(d)] += 1.0;
    }
    Ok(WeeklyCounts {
        counts,
        origin,
        first_event,
        last_event,
    })
}

/// Writes one value per line in a form [`parse_numeric`] reads back exactly.
pub fn write_numeric(path: &Path, values: &[f64]) -> CliResult<()> {
    let mut text = String::with_capacity(values.len() * 20);
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
