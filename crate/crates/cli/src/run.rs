// SPDX-License-Identifier: MIT OR Apache-2.0

//! Orchestration: ingest, table fill, recursions, search and reporting.

use std::path::Path;
use std::time::Instant;

use cpfilter_core::gmrf::{latent_field_given_changepoints, GmrfSegmentModel};
use cpfilter_core::recursions::{
    backward_recursions, log_marginals, map_positions, posterior_over_k, refine_positions, sample_positions,
    RecursionTable, SegmentTable,
};
use cpfilter_core::segmodels::{GaussianConjugate, MultinomialDirichlet, PoissonGamma, SegmentMarginal};
use cpfilter_core::simulate::RNG_ALGORITHM;
use cpfilter_core::{LogWeight, ReducedGrid};

use crate::config::{ModelConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest, IngestSummary, Observations};
use crate::report::{
    BayesFactorEntry, BayesFactorReport, DetectReport, GridSummary, RunDiagnostics, SegmentSummary, Timings,
};

pub const TOOL: &str = "cpfilter";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Any segment model the CLI can build.
#[derive(Debug)]
pub enum Provider {
    Multinomial(MultinomialDirichlet),
    Gaussian(GaussianConjugate),
    Poisson(PoissonGamma),
    Gmrf(Box<GmrfSegmentModel>),
}

impl SegmentMarginal for Provider {
    fn len(&self) -> usize {
        match self {
            Provider::Multinomial(m) => m.len(),
            Provider::Gaussian(m) => m.len(),
            Provider::Poisson(m) => m.len(),
            Provider::Gmrf(m) => m.len(),
        }
    }

    fn min_segment_len(&self) -> usize {
        match self {
            Provider::Gmrf(m) => m.min_segment_len(),
            _ => 1,
        }
    }

    fn log_marginal(&self, start: usize, end: usize) -> cpfilter_core::Result<LogWeight> {
        match self {
            Provider::Multinomial(m) => m.log_marginal(start, end),
            Provider::Gaussian(m) => m.log_marginal(start, end),
            Provider::Poisson(m) => m.log_marginal(start, end),
            Provider::Gmrf(m) => m.log_marginal(start, end),
        }
    }
}

/// Loaded, preprocessed data and the model built on it.
#[derive(Debug)]
pub struct Prepared {
    pub provider: Provider,
    pub summary: IngestSummary,
    pub scale_factor: Option<f64>,
    pub grid: ReducedGrid,
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn prepare(config: &RunConfig, timings: &mut Timings) -> CliResult<Prepared> {
    let clock = Instant::now();
    let (obs, summary) = ingest(&config.data)?;
    timings.record("ingest", clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let mut scale_factor = None;
    let provider = match (&config.model, obs) {
        (ModelConfig::MultinomialDirichlet { alpha }, Observations::Nucleotides(seq)) => {
            Provider::Multinomial(MultinomialDirichlet::new(&seq, *alpha).map_err(CliError::from_core_data)?)
        }
        (model, Observations::Values(mut values)) => {
            if config.scale {
                if values.len() < 2 {
                    return Err(CliError::Data("scaling needs at least two observations".into()));
                }
                let sd = sample_sd(&values);
                if !(sd.is_finite() && sd > 0.0) {
                    return Err(CliError::Data("cannot scale a constant series".into()));
                }
                values.iter_mut().for_each(|v| *v /= sd);
                scale_factor = Some(sd);
            }
            match model {
                ModelConfig::GaussianConjugate { prior } => {
                    Provider::Gaussian(GaussianConjugate::new(&values, *prior).map_err(CliError::from_core_data)?)
                }
                ModelConfig::PoissonGamma { prior } => {
                    Provider::Poisson(PoissonGamma::new(&values, *prior).map_err(CliError::from_core_data)?)
                }
                ModelConfig::Gmrf {
                    latent,
                    obs,
                    rule,
                    min_segment_len,
                } => Provider::Gmrf(Box::new(
                    GmrfSegmentModel::new(values, latent.clone(), obs.clone(), *rule)
                        .map_err(CliError::from_core_data)?
                        .with_min_segment_len(*min_segment_len),
                )),
                ModelConfig::MultinomialDirichlet { .. } => unreachable!("checked during config resolution"),
            }
        }
        _ => return Err(CliError::Config("data format does not match the model".into())),
    };
    let grid = ReducedGrid::new(provider.len(), config.spacing).map_err(CliError::from_core_config)?;
    timings.record("model_setup", clock.elapsed().as_secs_f64());
    Ok(Prepared {
        provider,
        summary,
        scale_factor,
        grid,
    })
}

pub fn grid_summary(grid: &ReducedGrid) -> GridSummary {
    GridSummary {
        n: grid.n(),
        spacing: grid.spacing(),
        points: grid.len(),
        segment_pairs: grid.segment_count(),
        reported_size: grid.reported_size(),
        reported_evaluation_count: grid.reported_evaluation_count(),
    }
}

/// Table and recursions for a prepared run.
pub struct Filtered {
    pub table: SegmentTable,
    pub recursion: RecursionTable,
    pub log_marginal_by_k: Vec<f64>,
}

pub fn filter(config: &RunConfig, prepared: &Prepared, timings: &mut Timings) -> CliResult<Filtered> {
    let clock = Instant::now();
    let table = SegmentTable::fill(&prepared.provider, &prepared.grid, config.workers).map_err(CliError::from_core_data)?;
    timings.record("table_fill", clock.elapsed().as_secs_f64());
    let clock = Instant::now();
    let recursion = backward_recursions(&table, config.k_prior.max_k());
    let log_marginal_by_k = log_marginals(&recursion, &table);
    timings.record("recursions", clock.elapsed().as_secs_f64());
    Ok(Filtered {
        table,
        recursion,
        log_marginal_by_k,
    })
}

fn segment_summaries(
    config: &RunConfig,
    provider: &Provider,
    changepoints: &[usize],
) -> CliResult<Option<Vec<SegmentSummary>>> {
    let Provider::Gmrf(model) = provider else {
        return Ok(None);
    };
    let fits = latent_field_given_changepoints(model, changepoints).map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(Some(
        fits.into_iter()
            .map(|f| SegmentSummary {
                start: f.start,
                end: f.end,
                hyper: f.hyper,
                intercept: f.intercept,
                log_marginal: f.log_marginal,
                linear_predictor: config.latent_field.then_some(f.linear_predictor),
            })
            .collect(),
    ))
}

fn failed_gmrf_segments(provider: &Provider) -> usize {
    match provider {
        Provider::Gmrf(m) => m.failed_segments(),
        _ => 0,
    }
}

/// Full detection run. `timings` is filled as phases complete so callers can
/// report partial progress on failure.
pub fn detect(config: &RunConfig, timings: &mut Timings) -> CliResult<DetectReport> {
    let total = Instant::now();
    let prepared = prepare(config, timings)?;
    let filtered = filter(config, &prepared, timings)?;
    let grid = &prepared.grid;

    let clock = Instant::now();
    let posterior_k = posterior_over_k(&filtered.log_marginal_by_k, &config.k_prior)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let map_k = posterior_k
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
        .0;
    let map_positions_grid =
        map_positions(&filtered.recursion, &filtered.table, map_k).map_err(|e| CliError::Numerical(e.to_string()))?;
    let map_times: Vec<usize> = map_positions_grid.iter().map(|&c| grid.time(c)).collect();
    timings.record("map_search", clock.elapsed().as_secs_f64());

    let clock = Instant::now();
    let (refined, sweeps) = if config.refine {
        let r = refine_positions(&prepared.provider, &map_times, grid.spacing(), config.max_sweeps)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        (r.positions, r.sweeps)
    } else {
        (map_times.clone(), 0)
    };
    timings.record("refine", clock.elapsed().as_secs_f64());

    let samples = if config.samples > 0 {
        let clock = Instant::now();
        let draws = sample_positions(&filtered.recursion, &filtered.table, map_k, config.seed, config.samples)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        timings.record("sampling", clock.elapsed().as_secs_f64());
        Some(draws.into_iter().map(|d| d.into_iter().map(|c| grid.time(c)).collect()).collect())
    } else {
        None
    };

    let clock = Instant::now();
    let segments = segment_summaries(config, &prepared.provider, &refined)?;
    if segments.is_some() {
        timings.record("latent_fields", clock.elapsed().as_secs_f64());
    }
    timings.record("total", total.elapsed().as_secs_f64());

    Ok(DetectReport {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        config: config.echo.clone(),
        data: prepared.summary.clone(),
        scale_factor: prepared.scale_factor,
        grid: grid_summary(grid),
        log_marginal_by_k: filtered.log_marginal_by_k,
        posterior_k,
        map_k,
        map_positions_grid,
        map_positions: map_times,
        map_positions_refined: refined,
        refinement_sweeps: sweeps,
        samples,
        segments,
        diagnostics: RunDiagnostics {
            table: filtered.table.diagnostics().clone(),
            failed_gmrf_segments: failed_gmrf_segments(&prepared.provider),
            rng: RNG_ALGORITHM.to_string(),
        },
        timings: timings.clone(),
    })
}

/// Re-runs refinement from the grid MAP positions of an earlier report.
pub fn refine_report(config: &RunConfig, previous: &DetectReport, timings: &mut Timings) -> CliResult<DetectReport> {
    let total = Instant::now();
    let prepared = prepare(config, timings)?;
    if prepared.grid.n() != previous.grid.n || prepared.grid.spacing() != previous.grid.spacing {
        return Err(CliError::Config(format!(
            "result was computed for n={} g={}, config gives n={} g={}",
            previous.grid.n,
            previous.grid.spacing,
            prepared.grid.n(),
            prepared.grid.spacing()
        )));
    }
    let clock = Instant::now();
    let r = refine_positions(&prepared.provider, &previous.map_positions, config.spacing, config.max_sweeps)
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    timings.record("refine", clock.elapsed().as_secs_f64());
    let clock = Instant::now();
    let segments = segment_summaries(config, &prepared.provider, &r.positions)?;
    if segments.is_some() {
        timings.record("latent_fields", clock.elapsed().as_secs_f64());
    }
    timings.record("total", total.elapsed().as_secs_f64());
    Ok(DetectReport {
        config: config.echo.clone(),
        map_positions_refined: r.positions,
        refinement_sweeps: r.sweeps,
        segments,
        timings: timings.clone(),
        ..previous.clone()
    })
}

/// `B_k = pi_a(y | k) / pi_b(y | k)` for each requested `k`.
pub fn bayes_factors(
    config_a: &RunConfig,
    config_b: &RunConfig,
    ks: &[usize],
    timings: &mut Timings,
) -> CliResult<BayesFactorReport> {
    if config_a.data != config_b.data {
        return Err(CliError::Config("both models must read the same data source and format".into()));
    }
    if config_a.spacing != config_b.spacing {
        return Err(CliError::Config("both models must use the same grid spacing".into()));
    }
    if config_a.k_prior != config_b.k_prior {
        return Err(CliError::Config("both models must use the same changepoint prior".into()));
    }
    if config_a.scale != config_b.scale {
        return Err(CliError::Config("both models must apply the same scaling".into()));
    }
    let mut ta = Timings::default();
    let mut tb = Timings::default();
    let prepared_a = prepare(config_a, &mut ta)?;
    let prepared_b = prepare(config_b, &mut tb)?;
    if prepared_a.grid != prepared_b.grid {
        return Err(CliError::Data("the two models see different series lengths".into()));
    }
    let filtered_a = filter(config_a, &prepared_a, &mut ta)?;
    let filtered_b = filter(config_b, &prepared_b, &mut tb)?;
    for (phase, secs) in ta.phases {
        timings.record(&format!("a.{phase}"), secs);
    }
    for (phase, secs) in tb.phases {
        timings.record(&format!("b.{phase}"), secs);
    }
    let max_k = config_a.k_prior.max_k();
    let entries = ks
        .iter()
        .map(|&k| {
            if k > max_k {
                return Err(CliError::Config(format!("k = {k} exceeds prior.k.max = {max_k}")));
            }
            let (a, b) = (filtered_a.log_marginal_by_k[k], filtered_b.log_marginal_by_k[k]);
            let finite = a.is_finite() && b.is_finite();
            Ok(BayesFactorEntry {
                k,
                log_marginal_a: a,
                log_marginal_b: b,
                bayes_factor: finite.then(|| (a - b).exp()),
                log_bayes_factor: finite.then_some(a - b),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(BayesFactorReport {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        config_a: config_a.echo.clone(),
        config_b: config_b.echo.clone(),
        data: prepared_a.summary.clone(),
        grid: grid_summary(&prepared_a.grid),
        entries,
        timings: timings.clone(),
    })
}

pub fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
