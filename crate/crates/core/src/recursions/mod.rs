// SPDX-License-Identifier: MIT OR Apache-2.0

//! Backward filtering recursions on a reduced grid.
//!
//! Segment marginals `P(t_r + 1, t_s)` are cached once per grid pair in a
//! [`SegmentTable`]; a single [`RecursionTable`] indexed by the number of
//! changepoints still to come then serves every model size `k`. At spacing
//! one the recursions are exact.

mod backward;
mod sample;
mod search;
mod table;

pub use backward::{
    backward_recursions, bayes_factor, log_marginal_given_k, log_marginals, posterior_over_k, RecursionTable,
};
pub use sample::sample_positions;
pub use search::{conditional_log_weights, map_positions, refine_positions, segmentation_log_marginal, Refinement};
pub use table::{FillDiagnostics, SegmentTable};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::ReducedGrid;
use crate::prior::KPrior;
use crate::segmodels::SegmentMarginal;

/// Sweep limit for [`refine_positions`].
pub const DEFAULT_MAX_SWEEPS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Table-fill threads; 0 uses the rayon default.
    pub workers: usize,
    pub refine: bool,
    pub max_sweeps: usize,
    /// Posterior draws at the MAP number of changepoints.
    pub samples: usize,
    pub seed: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            refine: true,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            samples: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangepointResult {
    /// `log pi(y | k)` for `k = 0..=max_k`.
    pub log_marginal_by_k: Vec<f64>,
    pub posterior_k: Vec<f64>,
    pub map_k: usize,
    /// Grid slots of the greedy MAP changepoints.
    pub map_positions_grid: Vec<usize>,
    /// Times `t_c` of those slots.
    pub map_positions: Vec<usize>,
    pub map_positions_refined: Vec<usize>,
    pub refinement_sweeps: usize,
    /// Posterior draws (times) at `map_k`.
    pub samples: Option<Vec<Vec<usize>>>,
    pub table_diagnostics: FillDiagnostics,
}

/// Fills the table for `grid` and runs [`analyze_table`].
pub fn analyze<M: SegmentMarginal + ?Sized>(
    provider: &M,
    grid: &ReducedGrid,
    prior: &KPrior,
    options: &AnalysisOptions,
) -> Result<ChangepointResult> {
    let table = SegmentTable::fill(provider, grid, options.workers)?;
    analyze_table(provider, &table, prior, options)
}

/// Posterior over `k`, greedy MAP positions, optional refinement and draws.
pub fn analyze_table<M: SegmentMarginal + ?Sized>(
    provider: &M,
    table: &SegmentTable,
    prior: &KPrior,
    options: &AnalysisOptions,
) -> Result<ChangepointResult> {
    prior.validate()?;
    let grid = table.grid();
    let b = backward_recursions(table, prior.max_k());
    let log_marginal_by_k = log_marginals(&b, table);
    let posterior_k = posterior_over_k(&log_marginal_by_k, prior)?;
    let map_k = posterior_k
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
        .0;
    let map_positions_grid = map_positions(&b, table, map_k)?;
    let map_times: Vec<usize> = map_positions_grid.iter().map(|&c| grid.time(c)).collect();
    let (refined, sweeps) = if options.refine {
        let r = refine_positions(provider, &map_times, grid.spacing(), options.max_sweeps)?;
        (r.positions, r.sweeps)
    } else {
        (map_times.clone(), 0)
    };
    let samples = if options.samples > 0 {
        let draws = sample_positions(&b, table, map_k, options.seed, options.samples)?;
        Some(draws.into_iter().map(|d| d.into_iter().map(|c| grid.time(c)).collect()).collect())
    } else {
        None
    };
    Ok(ChangepointResult {
        log_marginal_by_k,
        posterior_k,
        map_k,
        map_positions_grid,
        map_positions: map_times,
        map_positions_refined: refined,
        refinement_sweeps: sweeps,
        samples,
        table_diagnostics: table.diagnostics().clone(),
    })
}
