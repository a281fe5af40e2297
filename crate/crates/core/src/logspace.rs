// SPDX-License-Identifier: MIT OR Apache-2.0

//! Log-domain arithmetic.
//!
//! Every probability handled by the recursions is stored as its natural
//! logarithm. Zero probability is `f64::NEG_INFINITY`; NaN never appears in
//! a well-formed value.

/// Natural logarithm of a nonnegative quantity. `-inf` encodes zero.
pub type LogWeight = f64;

/// `log(sum(exp(values)))`, returning `-inf` for an empty slice or when every
/// entry is `-inf`.
pub fn log_sum_exp(values: &[LogWeight]) -> LogWeight {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(!values.iter().any(|v| v.is_nan()), "NaN in log_sum_exp input");
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add_exp(a: LogWeight, b: LogWeight) -> LogWeight {
    debug_assert!(!a.is_nan() && !b.is_nan());
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Streaming log-sum-exp accumulator that rescales when a larger term
/// arrives, so a single pass suffices.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub const fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: LogWeight) {
        debug_assert!(!value.is_nan());
        if value == f64::NEG_INFINITY {
            return;
        }
        if value <= self.max {
            self.scaled_sum += (value - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - value).exp() + 1.0;
            self.max = value;
        }
    }

    pub fn value(&self) -> LogWeight {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

/// Normalizes log weights into probabilities (softmax). Returns `None` when
/// every entry is `-inf`.
pub fn normalize_log_weights(values: &[LogWeight]) -> Option<Vec<f64>> {
    let total = log_sum_exp(values);
    if !total.is_finite() {
        return None;
    }
    Some(values.iter().map(|v| (v - total).exp()).collect())
}
