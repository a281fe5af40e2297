// SPDX-License-Identifier: MIT OR Apache-2.0

//! Changepoint priors.
//!
//! Positions follow the even-numbered order statistics of `2k + 1` draws
//! without replacement from `{1, ..., m - 1}`. Conditional on `k`, the prior
//! factorizes into pairwise weights `delta(s | t) = t - s - 1` divided by
//! `Z_k = C(m - 1, 2k + 1)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::logspace::LogWeight;

/// `log delta(s | t) = log(t - s - 1)`; `-inf` for adjacent positions.
#[inline]
pub fn log_delta(s: usize, t: usize) -> Result<LogWeight> {
    if s >= t {
        return Err(Error::invalid(format!(
            "delta(s | t) needs s < t, got s={s}, t={t}"
        )));
    }
    Ok(log_delta_unchecked(s, t))
}

#[inline]
pub(crate) fn log_delta_unchecked(s: usize, t: usize) -> LogWeight {
    debug_assert!(s < t);
    let gap = t - s - 1;
    if gap == 0 {
        f64::NEG_INFINITY
    } else {
        (gap as f64).ln()
    }
}

/// `log C(n, r)` via log-gamma; `-inf` when `r > n`.
pub fn ln_binomial(n: usize, r: usize) -> LogWeight {
    if r > n {
        return f64::NEG_INFINITY;
    }
    if r == 0 || r == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(r as f64 + 1.0) - ln_gamma((n - r) as f64 + 1.0)
}

/// `log Z_k = log C(slots - 1, 2k + 1)`, where positions range over
/// `{1, ..., slots - 1}`. For full-resolution data `slots = n`; on a reduced
/// grid with `N` interior points `slots = N + 1`.
pub fn log_z_k(slots: usize, k: usize) -> LogWeight {
    if slots < 2 {
        return f64::NEG_INFINITY;
    }
    ln_binomial(slots - 1, 2 * k + 1)
}

/// Prior on the number of changepoints, supported on `{0, ..., max_k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KPrior {
    Uniform { max_k: usize },
    /// Poisson(mean) truncated to `{0, ..., max_k}` and renormalized.
    Poisson { mean: f64, max_k: usize },
}

impl KPrior {
    pub fn max_k(&self) -> usize {
        match *self {
            KPrior::Uniform { max_k } | KPrior::Poisson { max_k, .. } => max_k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let KPrior::Poisson { mean, .. } = *self {
            if !(mean.is_finite() && mean > 0.0) {
                return Err(Error::invalid(format!("Poisson prior mean must be > 0, got {mean}")));
            }
        }
        Ok(())
    }

    /// Normalized log prior weights for `k = 0..=max_k`.
    pub fn log_weights(&self) -> Vec<LogWeight> {
        let raw: Vec<f64> = match *self {
            KPrior::Uniform { max_k } => vec![0.0; max_k + 1],
            KPrior::Poisson { mean, max_k } => (0..=max_k)
                .map(|k| k as f64 * mean.ln() - mean - ln_gamma(k as f64 + 1.0))
                .collect(),
        };
        let total = crate::logspace::log_sum_exp(&raw);
        raw.into_iter().map(|w| w - total).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn big_binomial(n: u64, r: u64) -> BigUint {
        if r > n {
            return BigUint::from(0u32);
        }
        let mut acc = BigUint::from(1u32);
        for i in 0..r {
            acc *= BigUint::from(n - i);
            acc /= BigUint::from(i + 1);
        }
        acc
    }

    /// Natural log of a big integer, using its leading bits.
    fn big_ln(x: &BigUint) -> f64 {
        let bits = x.bits();
        if bits <= 1000 {
            let s = x.to_string();
            return s.parse::<f64>().unwrap().ln();
        }
        let shift = bits - 64;
        let top: BigUint = x >> shift;
        let top = top.to_string().parse::<f64>().unwrap();
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }

    #[test]
    fn delta_values() {
        assert!((log_delta(2, 5).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_delta(4, 5).unwrap(), f64::NEG_INFINITY);
        assert!((log_delta(0, 100).unwrap() - 99f64.ln()).abs() < 1e-15);
        assert!(log_delta(5, 5).is_err());
        assert!(log_delta(6, 5).is_err());
    }

    #[test]
    fn delta_finite_iff_gap_at_least_two() {
        for s in 0..20 {
            for t in (s + 1)..25 {
                assert_eq!(log_delta(s, t).unwrap().is_finite(), t - s >= 2);
            }
        }
    }

    #[test]
    fn z_k_small_cases() {
        assert!((log_z_k(5, 1) - 4f64.ln()).abs() < 1e-12);
        assert_eq!(log_z_k(5, 2), f64::NEG_INFINITY);
        assert!((log_z_k(5, 0) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn z_k_matches_big_integer_binomial() {
        let exact = big_binomial(999, 21);
        let rel = (log_z_k(1000, 10) - big_ln(&exact)).abs() / big_ln(&exact);
        assert!(rel < 1e-9, "relative error {rel}");

        for n in 2..=60u64 {
            for k in 0..=30u64 {
                let exact = big_binomial(n - 1, 2 * k + 1);
                let got = log_z_k(n as usize, k as usize);
                if exact == BigUint::from(0u32) {
                    assert_eq!(got, f64::NEG_INFINITY);
                } else {
                    let want = big_ln(&exact);
                    let err = (got - want).abs() / want.abs().max(1.0);
                    assert!(err < 1e-10, "n={n} k={k} got={got} want={want}");
                }
            }
        }
    }

    #[test]
    fn k_prior_weights_normalize() {
        for prior in [
            KPrior::Uniform { max_k: 20 },
            KPrior::Poisson { mean: 3.0, max_k: 15 },
        ] {
            let total: f64 = prior.log_weights().iter().map(|w| w.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let uniform = KPrior::Uniform { max_k: 3 }.log_weights();
        assert!(uniform.iter().all(|w| (w.exp() - 0.25).abs() < 1e-15));
        assert!(KPrior::Poisson { mean: -1.0, max_k: 3 }.validate().is_err());
    }
}
