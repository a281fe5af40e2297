// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backward::RecursionTable;
use super::search::conditional_log_weights;
use super::table::SegmentTable;
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// Draws `count` changepoint vectors (grid slots) from `pi(c_1..c_k | y, k)`
/// by forward simulation. The same seed always gives the same draws.
pub fn sample_positions(
    b: &RecursionTable,
    table: &SegmentTable,
    k: usize,
    seed: u64,
    count: usize,
) -> Result<Vec<Vec<usize>>> {
    if k > b.max_k() {
        return Err(Error::invalid(format!("k = {k} exceeds the recursion table maximum {}", b.max_k())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Cumulative conditionals keyed by (changepoints remaining, previous slot).
    let mut cache: HashMap<(usize, usize), (Vec<usize>, Vec<f64>)> = HashMap::new();
    let mut draws = Vec::with_capacity(count);
    for _ in 0..count {
        let mut prev = 0;
        let mut draw = Vec::with_capacity(k);
        for j in 1..=k {
            let entry = match cache.entry((k - j, prev)) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    let weights = conditional_log_weights(b, table, k, j, prev);
                    let logs: Vec<f64> = weights.iter().map(|w| w.1).collect();
                    let total = log_sum_exp(&logs);
                    if !total.is_finite() {
                        return Err(Error::invalid(format!(
                            "no segmentation with {k} changepoints has positive probability"
                        )));
                    }
                    let mut acc = 0.0;
                    let cdf: Vec<f64> = logs
                        .iter()
                        .map(|l| {
                            acc += (l - total).exp();
                            acc
                        })
                        .collect();
                    e.insert((weights.into_iter().map(|w| w.0).collect(), cdf))
                }
            };
            let (slots, cdf) = &*entry;
            let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
            let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            prev = slots[idx];
            draw.push(prev);
        }
        draws.push(draw);
    }
    Ok(draws)
}
