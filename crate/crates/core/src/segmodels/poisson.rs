// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{check_range, SegmentMarginal};
use crate::error::{Error, Result};
use crate::logspace::LogWeight;

/// Gamma(shape, rate) prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.shape.is_finite() && self.shape > 0.0 && self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::invalid(format!(
                "gamma prior needs shape > 0 and rate > 0, got ({}, {})",
                self.shape, self.rate
            )));
        }
        Ok(())
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }
}

/// Poisson counts with a segment-constant rate under a Gamma prior.
#[derive(Clone, Debug)]
pub struct PoissonGamma {
    prior: GammaPrior,
    sum: Vec<f64>,
    sum_ln_factorial: Vec<f64>,
}

impl PoissonGamma {
    pub fn new(counts: &[f64], prior: GammaPrior) -> Result<Self> {
        prior.validate()?;
        if counts.is_empty() {
            return Err(Error::invalid("empty series"));
        }
        let mut sum = Vec::with_capacity(counts.len() + 1);
        let mut sum_ln_factorial = Vec::with_capacity(counts.len() + 1);
        let (mut s, mut f) = (0.0, 0.0);
        sum.push(0.0);
        sum_ln_factorial.push(0.0);
        for (i, &c) in counts.iter().enumerate() {
            if !(c.is_finite() && c >= 0.0 && c.fract() == 0.0) {
                return Err(Error::invalid(format!(
                    "count at index {} must be a nonnegative integer, got {c}",
                    i + 1
                )));
            }
            s += c;
            f += ln_gamma(c + 1.0);
            sum.push(s);
            sum_ln_factorial.push(f);
        }
        Ok(Self {
            prior,
            sum,
            sum_ln_factorial,
        })
    }

    pub fn prior(&self) -> &GammaPrior {
        &self.prior
    }
}

impl SegmentMarginal for PoissonGamma {
    fn len(&self) -> usize {
        self.sum.len() - 1
    }

    fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight> {
        check_range(start, end, self.len())?;
        let GammaPrior { shape, rate } = self.prior;
        let m = (end - start + 1) as f64;
        let total = self.sum[end] - self.sum[start - 1];
        let ln_fact = self.sum_ln_factorial[end] - self.sum_ln_factorial[start - 1];
        Ok(shape * rate.ln() - ln_gamma(shape) + ln_gamma(shape + total)
            - (shape + total) * (rate + m).ln()
            - ln_fact)
    }
}
