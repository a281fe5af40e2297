// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{check_range, SegmentMarginal};
use crate::error::{Error, Result};
use crate::logspace::LogWeight;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Normal-inverse-gamma prior: `sigma^2 ~ IG(shape, rate)`,
/// `mu | sigma^2 ~ N(mean, sigma^2 / kappa)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalInverseGamma {
    pub mean: f64,
    pub kappa: f64,
    pub shape: f64,
    pub rate: f64,
}

impl Default for NormalInverseGamma {
    fn default() -> Self {
        Self {
            mean: 0.0,
            kappa: 0.01,
            shape: 1.0,
            rate: 1.0,
        }
    }
}

impl NormalInverseGamma {
    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(Error::invalid(format!("NIG mean must be finite, got {}", self.mean)));
        }
        for (name, value) in [("kappa", self.kappa), ("shape", self.shape), ("rate", self.rate)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!(
                    "NIG {name} must be finite and > 0, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// I.i.d. Gaussian segments with unknown mean and variance under a
/// normal-inverse-gamma prior. Each `P(t, s)` is O(1) from prefix sums.
#[derive(Clone, Debug)]
pub struct GaussianConjugate {
    prior: NormalInverseGamma,
    // prefix sums of (y - center) and (y - center)^2
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    center: f64,
}

impl GaussianConjugate {
    pub fn new(data: &[f64], prior: NormalInverseGamma) -> Result<Self> {
        prior.validate()?;
        if data.is_empty() {
            return Err(Error::invalid("empty series"));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite observation at index {}", i + 1)));
        }
        let center = data.iter().sum::<f64>() / data.len() as f64;
        let mut sum = Vec::with_capacity(data.len() + 1);
        let mut sum_sq = Vec::with_capacity(data.len() + 1);
        let (mut s1, mut s2) = (0.0, 0.0);
        sum.push(0.0);
        sum_sq.push(0.0);
        for y in data {
            let d = y - center;
            s1 += d;
            s2 += d * d;
            sum.push(s1);
            sum_sq.push(s2);
        }
        Ok(Self {
            prior,
            sum,
            sum_sq,
            center,
        })
    }

    pub fn prior(&self) -> &NormalInverseGamma {
        &self.prior
    }
}

impl SegmentMarginal for GaussianConjugate {
    fn len(&self) -> usize {
        self.sum.len() - 1
    }

    fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight> {
        check_range(start, end, self.len())?;
        let p = &self.prior;
        let m = (end - start + 1) as f64;
        let s1 = self.sum[end] - self.sum[start - 1];
        let s2 = self.sum_sq[end] - self.sum_sq[start - 1];
        let mean = s1 / m;
        let scatter = (s2 - s1 * mean).max(0.0);
        let offset = mean - (p.mean - self.center);
        let kappa_n = p.kappa + m;
        let shape_n = p.shape + 0.5 * m;
        let rate_n = p.rate + 0.5 * scatter + p.kappa * m * offset * offset / (2.0 * kappa_n);
        Ok(ln_gamma(shape_n) - ln_gamma(p.shape) + p.shape * p.rate.ln()
            - shape_n * rate_n.ln()
            + 0.5 * (p.kappa / kappa_n).ln()
            - 0.5 * m * LN_2PI)
    }
}
