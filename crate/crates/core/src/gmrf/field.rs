// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::model::GmrfSegmentModel;
use super::HyperPoint;
use crate::error::{Error, Result};
use crate::segmodels::SegmentMarginal;

/// Posterior-mode summary of one segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    /// 1-based inclusive bounds.
    pub start: usize,
    pub end: usize,
    /// Hyperparameters at the node maximizing Laplace marginal plus prior.
    pub hyper: HyperPoint,
    /// `log P(start, end)` over the full grid.
    pub log_marginal: f64,
    pub intercept: f64,
    pub field: Vec<f64>,
    /// `intercept + field[i]`.
    pub linear_predictor: Vec<f64>,
}

/// Fits every segment implied by `changepoints` (the last index of each
/// segment but the final one) and returns them in order.
pub fn latent_field_given_changepoints(model: &GmrfSegmentModel, changepoints: &[usize]) -> Result<Vec<SegmentFit>> {
    let n = model.len();
    let mut prev = 0;
    for &c in changepoints {
        if c <= prev || c >= n {
            return Err(Error::invalid(format!(
                "changepoints must be strictly increasing within 1..{n}, got {changepoints:?}"
            )));
        }
        prev = c;
    }
    let mut bounds: Vec<usize> = Vec::with_capacity(changepoints.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(changepoints);
    bounds.push(n);
    bounds
        .windows(2)
        .map(|w| {
            let (start, end) = (w[0] + 1, w[1]);
            let (eval, approx) = model.fit(start, end)?;
            let best = eval.best_node.expect("fit returns a best node");
            Ok(SegmentFit {
                start,
                end,
                hyper: model.grid().nodes()[best].point,
                log_marginal: eval.log_marginal,
                intercept: approx.intercept(),
                field: approx.field().to_vec(),
                linear_predictor: approx.linear_predictor(),
            })
        })
        .collect()
}

/// Concatenated linear predictor across fitted segments.
pub fn concatenated_linear_predictor(fits: &[SegmentFit]) -> Vec<f64> {
    fits.iter().flat_map(|f| f.linear_predictor.iter().copied()).collect()
}
