// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment marginal likelihoods.
//!
//! A segment model supplies `log P(start, end)`, the log marginal likelihood
//! of observations `y[start..=end]` with segment parameters integrated out.
//! Indices are 1-based and inclusive throughout, matching the time indexing
//! used by the recursions.

mod gaussian;
mod multinomial;
mod poisson;

pub use gaussian::{GaussianConjugate, NormalInverseGamma};
pub use multinomial::{MultinomialDirichlet, Nucleotide};
pub use poisson::{GammaPrior, PoissonGamma};

use crate::error::{Error, Result};
use crate::logspace::LogWeight;

/// Source of segment log marginal likelihoods over a fixed series.
pub trait SegmentMarginal: Sync {
    /// Number of observations in the underlying series.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shortest segment the model can score with a finite value.
    fn min_segment_len(&self) -> usize {
        1
    }

    /// `log P(start, end)` for the 1-based inclusive range `start..=end`.
    fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight>;
}

impl<M: SegmentMarginal + ?Sized> SegmentMarginal for &M {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn min_segment_len(&self) -> usize {
        (**self).min_segment_len()
    }

    fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight> {
        (**self).log_marginal(start, end)
    }
}

impl<M: SegmentMarginal + ?Sized> SegmentMarginal for Box<M> {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn min_segment_len(&self) -> usize {
        (**self).min_segment_len()
    }

    fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight> {
        (**self).log_marginal(start, end)
    }
}

pub(crate) fn check_range(start: usize, end: usize, n: usize) -> Result<()> {
    if start == 0 || start > end || end > n {
        return Err(Error::invalid(format!(
            "segment {start}..={end} outside 1..={n}"
        )));
    }
    Ok(())
}

/// Constant log marginal for every segment; used to probe prior behavior.
#[derive(Clone, Copy, Debug)]
pub struct ConstantMarginal {
    pub n: usize,
    pub value: LogWeight,
}

impl SegmentMarginal for ConstantMarginal {
    fn len(&self) -> usize {
        self.n
    }

    fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight> {
        check_range(start, end, self.n)?;
        Ok(self.value)
    }
}
