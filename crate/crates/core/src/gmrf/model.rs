// SPDX-License-Identifier: MIT OR Apache-2.0

use std::sync::atomic::{AtomicUsize, Ordering};

use super::hyper::{HyperGrid, HyperRule};
use super::laplace::{newton_gaussian_approx, GaussianApprox, NewtonOptions};
use super::{LatentSpec, ObsSpec};
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, LogWeight};
use crate::segmodels::{check_range, SegmentMarginal};

/// Shortest segment scored by GMRF models; anything shorter is `-inf`.
pub const DEFAULT_MIN_SEGMENT_LEN: usize = 5;

/// Outcome of integrating one segment over the hyperparameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridEvaluation {
    /// `log P(t, s)`; `-inf` when every node failed.
    pub log_marginal: LogWeight,
    /// Laplace value plus log prior plus log weight at each node, `-inf`
    /// where Newton failed.
    pub node_terms: Vec<f64>,
    /// Node maximizing Laplace value plus log prior.
    pub best_node: Option<usize>,
    pub failures: usize,
}

/// Integrates the Laplace marginal of `y` over `grid`.
///
/// Every node is solved from the same data-driven starting point, so the
/// result does not depend on node order.
pub fn hyper_grid_log_marginal(
    y: &[f64],
    latent: &LatentSpec,
    obs: &ObsSpec,
    grid: &HyperGrid,
    options: &NewtonOptions,
) -> Result<GridEvaluation> {
    if grid.is_empty() {
        return Err(Error::invalid("hyperparameter grid is empty"));
    }
    let mut node_terms = Vec::with_capacity(grid.len());
    let mut failures = 0;
    let mut best: Option<(usize, f64)> = None;
    for (i, node) in grid.nodes().iter().enumerate() {
        match newton_gaussian_approx(y, latent, obs, &node.point, None, options) {
            Ok(approx) => {
                let score = approx.log_marginal() + node.log_prior;
                if best.is_none_or(|(_, b)| score > b) {
                    best = Some((i, score));
                }
                node_terms.push(score + node.log_weight);
            }
            Err(Error::InvalidArgument(msg)) => return Err(Error::InvalidArgument(msg)),
            Err(_) => {
                failures += 1;
                node_terms.push(f64::NEG_INFINITY);
            }
        }
    }
    Ok(GridEvaluation {
        log_marginal: log_sum_exp(&node_terms),
        node_terms,
        best_node: best.map(|(i, _)| i),
        failures,
    })
}

/// Latent-GMRF segment model over a fixed series.
#[derive(Debug)]
pub struct GmrfSegmentModel {
    data: Vec<f64>,
    latent: LatentSpec,
    obs: ObsSpec,
    grid: HyperGrid,
    min_len: usize,
    options: NewtonOptions,
    failed_segments: AtomicUsize,
}

impl Clone for GmrfSegmentModel {
    fn clone(&self) -> Self {
        Self {
            data: self.data.clone(),
            latent: self.latent.clone(),
            obs: self.obs.clone(),
            grid: self.grid.clone(),
            min_len: self.min_len,
            options: self.options,
            failed_segments: AtomicUsize::new(self.failed_segments()),
        }
    }
}

impl GmrfSegmentModel {
    pub fn new(data: Vec<f64>, latent: LatentSpec, obs: ObsSpec, rule: HyperRule) -> Result<Self> {
        let grid = HyperGrid::new(&latent, &obs, rule)?;
        Self::with_grid(data, latent, obs, grid)
    }

    pub fn with_grid(data: Vec<f64>, latent: LatentSpec, obs: ObsSpec, grid: HyperGrid) -> Result<Self> {
        latent.validate()?;
        obs.validate()?;
        if data.is_empty() {
            return Err(Error::invalid("empty series"));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite observation at index {}", i + 1)));
        }
        if matches!(obs, ObsSpec::PoissonLog) {
            if let Some(i) = data.iter().position(|&v| v < 0.0 || v.fract() != 0.0) {
                return Err(Error::invalid(format!(
                    "Poisson observations must be nonnegative integers; index {} is {}",
                    i + 1,
                    data[i]
                )));
            }
        }
        if grid.is_empty() {
            return Err(Error::invalid("hyperparameter grid is empty"));
        }
        Ok(Self {
            data,
            latent,
            obs,
            grid,
            min_len: DEFAULT_MIN_SEGMENT_LEN,
            options: NewtonOptions::default(),
            failed_segments: AtomicUsize::new(0),
        })
    }

    pub fn with_min_segment_len(mut self, min_len: usize) -> Self {
        self.min_len = min_len.max(1);
        self
    }

    pub fn with_newton_options(mut self, options: NewtonOptions) -> Self {
        self.options = options;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn latent(&self) -> &LatentSpec {
        &self.latent
    }

    pub fn obs(&self) -> &ObsSpec {
        &self.obs
    }

    pub fn grid(&self) -> &HyperGrid {
        &self.grid
    }

    /// Segments for which every grid node failed to converge.
    pub fn failed_segments(&self) -> usize {
        self.failed_segments.load(Ordering::Relaxed)
    }

    pub fn evaluate(&self, start: usize, end: usize) -> Result<GridEvaluation> {
        check_range(start, end, self.data.len())?;
        hyper_grid_log_marginal(&self.data[start - 1..end], &self.latent, &self.obs, &self.grid, &self.options)
    }

    /// Grid evaluation plus the Gaussian approximation at the best node.
    pub fn fit(&self, start: usize, end: usize) -> Result<(GridEvaluation, GaussianApprox)> {
        let eval = self.evaluate(start, end)?;
        let best = eval.best_node.ok_or_else(|| {
            Error::Numerical(format!("no hyperparameter node converged on segment {start}..={end}"))
        })?;
        let point = &self.grid.nodes()[best].point;
        let approx = newton_gaussian_approx(&self.data[start - 1..end], &self.latent, &self.obs, point, None, &self.options)?;
        Ok((eval, approx))
    }
}

impl SegmentMarginal for GmrfSegmentModel {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn min_segment_len(&self) -> usize {
        self.min_len
    }

    fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight> {
        check_range(start, end, self.data.len())?;
        if end - start + 1 < self.min_len {
            return Ok(f64::NEG_INFINITY);
        }
        let eval = self.evaluate(start, end)?;
        if eval.best_node.is_none() {
            self.failed_segments.fetch_add(1, Ordering::Relaxed);
        }
        Ok(eval.log_marginal)
    }
}
