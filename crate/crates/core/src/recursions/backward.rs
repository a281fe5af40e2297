// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::table::SegmentTable;
use crate::error::{Error, Result};
use crate::logspace::{normalize_log_weights, LogWeight};
use crate::prior::{log_z_k, KPrior};

/// `B_m(r)`: log probability of `y[t_r + 1..=n]` given a changepoint at slot
/// `r` followed by exactly `m` more, with the pairwise prior weights folded in.
///
/// One table serves every `k <= max_k`: the value for changepoint `j` of a
/// `k`-changepoint model is `B_{k - j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionTable {
    slots: usize,
    max_k: usize,
    /// Row `m` holds `B_m(r)` for `r = 0..slots - 1`; entry `r = 0` is unused
    /// and stored as `-inf`.
    values: Vec<LogWeight>,
}

impl RecursionTable {
    /// Largest number of changepoints the table supports.
    pub fn max_k(&self) -> usize {
        self.max_k
    }

    /// `B_m(r)` for `m < max_k` and `1 <= r <= N`.
    #[inline]
    pub fn get(&self, m: usize, r: usize) -> LogWeight {
        self.values[m * self.slots + r]
    }

    pub fn row(&self, m: usize) -> &[LogWeight] {
        &self.values[m * self.slots..(m + 1) * self.slots]
    }
}

/// `ln d` for `d = 0..len`, with `ln 0 = -inf`.
pub(crate) fn ln_gaps(len: usize) -> Vec<f64> {
    (0..len)
        .map(|d| if d == 0 { f64::NEG_INFINITY } else { (d as f64).ln() })
        .collect()
}

/// Log-sum-exp of `terms`, reusing the buffer.
#[inline]
pub(crate) fn lse_terms(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Fills `B_m(r)` for `m = 0..max_k`.
pub fn backward_recursions(table: &SegmentTable, max_k: usize) -> RecursionTable {
    let grid = table.grid();
    let slots = grid.slot_count();
    let last = slots - 1;
    let ln_gap = ln_gaps(slots);
    let mut values = vec![f64::NEG_INFINITY; max_k * slots];
    if max_k == 0 {
        return RecursionTable { slots, max_k, values };
    }
    for r in 1..last {
        values[r] = table.get(r, last) + ln_gap[last - r - 1];
    }
    let mut terms = Vec::with_capacity(slots);
    for m in 1..max_k {
        let (done, current) = values.split_at_mut(m * slots);
        let previous = &done[(m - 1) * slots..];
        for r in 1..last {
            let row = table.row(r);
            terms.clear();
            terms.extend((r + 1..last).map(|s| row[s - r - 1] + previous[s] + ln_gap[s - r - 1]));
            current[r] = lse_terms(&terms);
        }
    }
    RecursionTable { slots, max_k, values }
}

/// `log pi(y | k)` under the order-statistic changepoint prior.
pub fn log_marginal_given_k(b: &RecursionTable, table: &SegmentTable, k: usize) -> Result<LogWeight> {
    if k > b.max_k {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the recursion table maximum {}",
            b.max_k
        )));
    }
    let last = table.grid().slot_count() - 1;
    if k == 0 {
        return Ok(table.get(0, last));
    }
    let log_z = log_z_k(last, k);
    if log_z == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let row = table.row(0);
    let tail = b.row(k - 1);
    let terms: Vec<f64> = (1..last).map(|s| row[s - 1] + tail[s] + ((s - 1) as f64).ln()).collect();
    Ok(lse_terms(&terms) - log_z)
}

/// `log pi(y | k)` for `k = 0..=max_k`.
pub fn log_marginals(b: &RecursionTable, table: &SegmentTable) -> Vec<LogWeight> {
    (0..=b.max_k)
        .map(|k| log_marginal_given_k(b, table, k).expect("k within table range"))
        .collect()
}

/// `pi(k | y)` proportional to `pi(y | k) pi(k)` over `k = 0..=max_k`.
pub fn posterior_over_k(log_marginals: &[LogWeight], prior: &KPrior) -> Result<Vec<f64>> {
    prior.validate()?;
    let log_prior = prior.log_weights();
    if log_prior.len() != log_marginals.len() {
        return Err(Error::invalid(format!(
            "{} log marginals for a prior over {} values of k",
            log_marginals.len(),
            log_prior.len()
        )));
    }
    if log_marginals.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::invalid("log marginals must be finite or -inf"));
    }
    let joint: Vec<f64> = log_marginals.iter().zip(&log_prior).map(|(m, p)| m + p).collect();
    normalize_log_weights(&joint)
        .ok_or_else(|| Error::Numerical("every number of changepoints has zero posterior probability".into()))
}

/// `pi_a(y | k) / pi_b(y | k)`.
pub fn bayes_factor(log_marginal_a: LogWeight, log_marginal_b: LogWeight) -> Result<f64> {
    if !(log_marginal_a.is_finite() && log_marginal_b.is_finite()) {
        return Err(Error::invalid(format!(
            "Bayes factor needs finite log marginals, got {log_marginal_a} and {log_marginal_b}"
        )));
    }
    Ok((log_marginal_a - log_marginal_b).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ReducedGrid;
    use crate::logspace::log_sum_exp;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(n: usize, g: usize, seed: u64) -> SegmentTable {
        let grid = ReducedGrid::new(n, g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.segment_count()).map(|_| rng.random_range(-5.0..0.0)).collect();
        SegmentTable::from_values(&grid, values).unwrap()
    }

    #[test]
    fn hand_expanded_small_grid() {
        // N = 3 interior slots, sentinel 4.
        let table = random_table(4, 1, 1);
        let b = backward_recursions(&table, 2);
        let p = |r, s| table.get(r, s);
        let ln = |d: usize| (d as f64).ln();
        for r in 1..=3 {
            let expect = p(r, 4) + ln(4 - r - 1);
            assert!((b.get(0, r) - expect).abs() < 1e-14 || (expect == f64::NEG_INFINITY && b.get(0, r) == expect));
        }
        // B_1(1) only reaches s = 3 with a positive gap.
        let expect = p(1, 3) + b.get(0, 3) + ln(1);
        assert_eq!(b.get(1, 1), log_sum_exp(&[p(1, 2) + b.get(0, 2) + f64::NEG_INFINITY, expect]));
        assert_eq!(b.get(1, 3), f64::NEG_INFINITY);
    }

    #[test]
    fn zero_changepoints_is_the_whole_series() {
        let table = random_table(30, 3, 2);
        let b = backward_recursions(&table, 3);
        let last = table.grid().slot_count() - 1;
        assert_eq!(log_marginal_given_k(&b, &table, 0).unwrap(), table.get(0, last));
        assert!(log_marginal_given_k(&b, &table, 4).is_err());
    }

    #[test]
    fn infeasible_k_is_minus_infinity() {
        let table = random_table(6, 1, 3);
        let b = backward_recursions(&table, 4);
        // N = 5 admits at most 2 changepoints.
        assert!(log_marginal_given_k(&b, &table, 2).unwrap().is_finite());
        assert_eq!(log_marginal_given_k(&b, &table, 3).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn larger_tables_reuse_smaller_ones() {
        let table = random_table(80, 2, 4);
        let small = backward_recursions(&table, 2);
        let large = backward_recursions(&table, 5);
        for m in 0..2 {
            assert_eq!(small.row(m), large.row(m));
        }
    }

    #[test]
    fn posterior_of_equal_marginals_follows_the_prior() {
        let post = posterior_over_k(&[-3.0; 5], &KPrior::Uniform { max_k: 4 }).unwrap();
        assert!(post.iter().all(|p| (p - 0.2).abs() < 1e-15));
        assert!(posterior_over_k(&[f64::NEG_INFINITY; 3], &KPrior::Uniform { max_k: 2 }).is_err());
        assert!(posterior_over_k(&[0.0; 3], &KPrior::Uniform { max_k: 3 }).is_err());
    }

    #[test]
    fn bayes_factor_basics() {
        assert_eq!(bayes_factor(-12.5, -12.5).unwrap(), 1.0);
        assert!((bayes_factor(2f64.ln(), 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(bayes_factor(f64::NEG_INFINITY, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn posterior_sums_to_one_and_ignores_shifts(
            marginals in prop::collection::vec(-50.0f64..50.0, 1..12),
            shift in -1e3f64..1e3,
            mean in 0.1f64..10.0,
        ) {
            let prior = KPrior::Poisson { mean, max_k: marginals.len() - 1 };
            let post = posterior_over_k(&marginals, &prior).unwrap();
            prop_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = marginals.iter().map(|m| m + shift).collect();
            let post2 = posterior_over_k(&shifted, &prior).unwrap();
            for (a, b) in post.iter().zip(&post2) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn minus_infinity_patterns_never_produce_nan(
            seed in any::<u64>(),
            n in 3usize..40,
            g in 1usize..4,
            density in 0.0f64..1.0,
        ) {
            prop_assume!(g < n);
            let grid = ReducedGrid::new(n, g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..grid.segment_count())
                .map(|_| if rng.random::<f64>() < density { f64::NEG_INFINITY } else { rng.random_range(-20.0..5.0) })
                .collect();
            let table = SegmentTable::from_values(&grid, values).unwrap();
            let b = backward_recursions(&table, 6);
            prop_assert!(b.values.iter().all(|v| !v.is_nan()));
            let lm = log_marginals(&b, &table);
            prop_assert!(lm.iter().all(|v| !v.is_nan()));
            if let Ok(post) = posterior_over_k(&lm, &KPrior::Uniform { max_k: 6 }) {
                prop_assert!(post.iter().all(|p| p.is_finite()));
            }
        }
    }
}
