// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::backward::{log_marginal_given_k, RecursionTable};
use super::table::SegmentTable;
use crate::error::{Error, Result};
use crate::logspace::LogWeight;
use crate::segmodels::SegmentMarginal;

/// Unnormalized `log Pr(c_j = s | c_{j-1} = prev, y, k)` for each candidate
/// slot `s = prev + 1..=N`.
pub fn conditional_log_weights(
    b: &RecursionTable,
    table: &SegmentTable,
    k: usize,
    j: usize,
    prev: usize,
) -> Vec<(usize, LogWeight)> {
    debug_assert!(1 <= j && j <= k && k <= b.max_k());
    let last = table.grid().slot_count() - 1;
    let row = table.row(prev);
    let tail = b.row(k - j);
    (prev + 1..last)
        .map(|s| {
            let gap = s - prev - 1;
            let ln_delta = if gap == 0 { f64::NEG_INFINITY } else { (gap as f64).ln() };
            (s, row[s - prev - 1] + tail[s] + ln_delta)
        })
        .collect()
}

fn ensure_feasible(b: &RecursionTable, table: &SegmentTable, k: usize) -> Result<()> {
    let lm = log_marginal_given_k(b, table, k)?;
    if !lm.is_finite() {
        return Err(Error::invalid(format!("no segmentation with {k} changepoints has positive probability")));
    }
    Ok(())
}

/// Greedy sequential maximization of `Pr(c_j | c_{j-1}, y, k)`, returning
/// grid slots `c_1 < ... < c_k`. Ties go to the smallest slot.
pub fn map_positions(b: &RecursionTable, table: &SegmentTable, k: usize) -> Result<Vec<usize>> {
    ensure_feasible(b, table, k)?;
    let mut prev = 0;
    let mut out = Vec::with_capacity(k);
    for j in 1..=k {
        let mut best = (0, f64::NEG_INFINITY);
        for (s, w) in conditional_log_weights(b, table, k, j, prev) {
            if w > best.1 {
                best = (s, w);
            }
        }
        debug_assert!(best.1.is_finite());
        out.push(best.0);
        prev = best.0;
    }
    Ok(out)
}

/// Outcome of local refinement around grid changepoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub positions: Vec<usize>,
    pub sweeps: usize,
    /// `sum log P` over all segments before the first sweep and after each.
    pub objective: Vec<f64>,
}

/// Total log marginal of the segmentation with changepoints `positions`.
pub fn segmentation_log_marginal<M: SegmentMarginal + ?Sized>(provider: &M, positions: &[usize]) -> Result<f64> {
    let n = provider.len();
    let mut total = 0.0;
    let mut start = 1;
    for &end in positions.iter().chain(std::iter::once(&n)) {
        total += provider.log_marginal(start, end)?;
        start = end + 1;
    }
    Ok(total)
}

/// Coordinate sweeps over `tau in [tau_j - g + 1, tau_j + g - 1]`, centred on
/// the current value of `tau_j`, so repeated sweeps can walk past the first
/// window.
///
/// Each update maximizes `log P(tau_{j-1} + 1, tau) + log P(tau + 1, tau_{j+1})`
/// with the left neighbour already updated in this sweep and the right one
/// not yet. A candidate only replaces the current value if strictly better,
/// and candidates leaving a segment shorter than the provider's minimum
/// length are skipped.
pub fn refine_positions<M: SegmentMarginal + ?Sized>(
    provider: &M,
    positions: &[usize],
    spacing: usize,
    max_sweeps: usize,
) -> Result<Refinement> {
    let n = provider.len();
    if spacing == 0 {
        return Err(Error::invalid("grid spacing must be positive"));
    }
    let mut prev = 0;
    for &p in positions {
        if p <= prev || p >= n {
            return Err(Error::invalid(format!(
                "positions must be strictly increasing within 1..{n}, got {positions:?}"
            )));
        }
        prev = p;
    }
    let min_len = provider.min_segment_len().max(1);
    let mut current = positions.to_vec();
    let mut objective = vec![segmentation_log_marginal(provider, &current)?];
    let mut sweeps = 0;
    if spacing == 1 || current.is_empty() {
        return Ok(Refinement { positions: current, sweeps, objective });
    }
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for j in 0..current.len() {
            let left = if j == 0 { 0 } else { current[j - 1] };
            let right = current.get(j + 1).copied().unwrap_or(n);
            let here = current[j];
            let lo = here.saturating_sub(spacing - 1).max(left + min_len);
            let hi = (here + spacing - 1).min(right.saturating_sub(min_len));
            let score = |tau: usize| -> Result<f64> {
                Ok(provider.log_marginal(left + 1, tau)? + provider.log_marginal(tau + 1, right)?)
            };
            let mut best = if here >= lo && here <= hi {
                (here, score(here)?)
            } else {
                (here, f64::NEG_INFINITY)
            };
            for tau in lo..=hi {
                if tau == here {
                    continue;
                }
                let value = score(tau)?;
                if value > best.1 {
                    best = (tau, value);
                }
            }
            if best.0 != here {
                current[j] = best.0;
                changed = true;
            }
        }
        objective.push(segmentation_log_marginal(provider, &current)?);
        if !changed {
            break;
        }
    }
    Ok(Refinement { positions: current, sweeps, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ReducedGrid;
    use crate::recursions::backward::backward_recursions;
    use crate::segmodels::{GaussianConjugate, NormalInverseGamma};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn shifted_series(n: usize, shifts: &[(usize, f64)], seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        (1..=n)
            .map(|t| {
                let level: f64 = shifts.iter().filter(|(at, _)| t > *at).map(|(_, d)| d).sum();
                level + noise.sample(&mut rng)
            })
            .collect()
    }

    fn gaussian(y: &[f64]) -> GaussianConjugate {
        GaussianConjugate::new(y, NormalInverseGamma::default()).unwrap()
    }

    #[test]
    fn conditionals_normalize() {
        let y = shifted_series(60, &[(20, 3.0), (40, -3.0)], 1);
        let model = gaussian(&y);
        let table = SegmentTable::fill(&model, &ReducedGrid::new(60, 2).unwrap(), 1).unwrap();
        let b = backward_recursions(&table, 3);
        let weights = conditional_log_weights(&b, &table, 2, 1, 0);
        let logs: Vec<f64> = weights.iter().map(|w| w.1).collect();
        let probs = crate::logspace::normalize_log_weights(&logs).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_shift_lands_on_nearest_grid_point() {
        let y = shifted_series(200, &[(97, 10.0)], 7);
        let model = gaussian(&y);
        for (g, expect) in [(1, 97), (5, 95), (10, 100)] {
            let grid = ReducedGrid::new(200, g).unwrap();
            let table = SegmentTable::fill(&model, &grid, 1).unwrap();
            let b = backward_recursions(&table, 1);
            let slots = map_positions(&b, &table, 1).unwrap();
            assert_eq!(grid.time(slots[0]), expect, "g={g}");
            let refined = refine_positions(&model, &[grid.time(slots[0])], g, 10).unwrap();
            assert_eq!(refined.positions, vec![97], "g={g}");
        }
    }

    #[test]
    fn refinement_is_identity_at_unit_spacing() {
        let y = shifted_series(50, &[(25, 2.0)], 3);
        let refined = refine_positions(&gaussian(&y), &[10, 30], 1, 10).unwrap();
        assert_eq!(refined.positions, vec![10, 30]);
        assert_eq!(refined.sweeps, 0);
    }

    #[test]
    fn refinement_objective_never_decreases() {
        for seed in 0..20 {
            let y = shifted_series(300, &[(43, 2.0), (151, -1.5), (160, 2.5), (230, -2.0)], seed);
            let model = gaussian(&y);
            let refined = refine_positions(&model, &[40, 150, 170, 240], 10, 10).unwrap();
            for w in refined.objective.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "seed {seed}: {:?}", refined.objective);
            }
            assert!(refined.positions.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn map_rejects_infeasible_k() {
        let y = shifted_series(8, &[], 1);
        let model = gaussian(&y);
        let table = SegmentTable::fill(&model, &ReducedGrid::new(8, 1).unwrap(), 1).unwrap();
        let b = backward_recursions(&table, 5);
        assert!(map_positions(&b, &table, 4).is_err());
        assert_eq!(map_positions(&b, &table, 0).unwrap(), Vec::<usize>::new());
    }
}
