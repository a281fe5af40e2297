// SPDX-License-Identifier: MIT OR Apache-2.0

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ReducedGrid;
use crate::logspace::LogWeight;
use crate::segmodels::SegmentMarginal;

/// At most this many provider failures are kept verbatim.
const MAX_RECORDED_FAILURES: usize = 32;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FillDiagnostics {
    pub evaluations: usize,
    /// Provider errors, stored in the table as `-inf`.
    pub failures: usize,
    /// Entries that are `-inf`, including failures and impossible segments.
    pub impossible: usize,
    /// `(start, end, message)` for the first few failures, in table order.
    pub failure_samples: Vec<(usize, usize, String)>,
}

/// `log P(t_r + 1, t_s)` for every slot pair `0 <= r < s <= N + 1`.
///
/// Stored as a packed upper triangle with rows indexed by `r`, so a fixed
/// start slot reads contiguously.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentTable {
    grid: ReducedGrid,
    values: Vec<LogWeight>,
    diagnostics: FillDiagnostics,
}

#[inline]
fn row_offset(slots: usize, r: usize) -> usize {
    // Row r holds slots - 1 - r entries.
    r * (slots - 1) - r * r.saturating_sub(1) / 2
}

impl SegmentTable {
    /// Evaluates every segment with `workers` threads (0 means the rayon
    /// default). Contents do not depend on the worker count.
    pub fn fill<M: SegmentMarginal + ?Sized>(provider: &M, grid: &ReducedGrid, workers: usize) -> Result<Self> {
        if provider.len() != grid.n() {
            return Err(Error::invalid(format!(
                "segment model covers {} observations but the grid spans {}",
                provider.len(),
                grid.n()
            )));
        }
        let slots = grid.slot_count();
        let fill_row = |r: usize| -> Vec<(LogWeight, Option<String>)> {
            let start = grid.time(r) + 1;
            (r + 1..slots)
                .map(|s| match provider.log_marginal(start, grid.time(s)) {
                    Ok(v) if v.is_nan() => (f64::NEG_INFINITY, Some("segment marginal is NaN".to_string())),
                    Ok(v) => (v, None),
                    Err(e) => (f64::NEG_INFINITY, Some(e.to_string())),
                })
                .collect()
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
        let rows: Vec<Vec<(LogWeight, Option<String>)>> =
            pool.install(|| (0..slots - 1).into_par_iter().map(fill_row).collect());

        let mut values = Vec::with_capacity(grid.segment_count());
        let mut diagnostics = FillDiagnostics::default();
        for (r, row) in rows.into_iter().enumerate() {
            for (offset, (value, failure)) in row.into_iter().enumerate() {
                if let Some(msg) = failure {
                    diagnostics.failures += 1;
                    if diagnostics.failure_samples.len() < MAX_RECORDED_FAILURES {
                        let s = r + 1 + offset;
                        diagnostics.failure_samples.push((grid.time(r) + 1, grid.time(s), msg));
                    }
                }
                if value == f64::NEG_INFINITY {
                    diagnostics.impossible += 1;
                }
                values.push(value);
            }
        }
        diagnostics.evaluations = values.len();
        Ok(Self {
            grid: grid.clone(),
            values,
            diagnostics,
        })
    }

    /// Table from precomputed values in row-major packed order.
    pub fn from_values(grid: &ReducedGrid, values: Vec<LogWeight>) -> Result<Self> {
        if values.len() != grid.segment_count() {
            return Err(Error::invalid(format!(
                "expected {} segment values, got {}",
                grid.segment_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::invalid("segment values must be finite or -inf"));
        }
        let impossible = values.iter().filter(|v| **v == f64::NEG_INFINITY).count();
        Ok(Self {
            grid: grid.clone(),
            diagnostics: FillDiagnostics {
                evaluations: values.len(),
                impossible,
                ..FillDiagnostics::default()
            },
            values,
        })
    }

    pub fn grid(&self) -> &ReducedGrid {
        &self.grid
    }

    pub fn diagnostics(&self) -> &FillDiagnostics {
        &self.diagnostics
    }

    /// Number of stored segments.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `log P(t_r + 1, t_s)`.
    #[inline]
    pub fn get(&self, r: usize, s: usize) -> LogWeight {
        debug_assert!(r < s && s < self.grid.slot_count());
        self.values[row_offset(self.grid.slot_count(), r) + (s - r - 1)]
    }

    /// `log P(t_r + 1, t_s)` for `s = r + 1..=N + 1`.
    #[inline]
    pub fn row(&self, r: usize) -> &[LogWeight] {
        let slots = self.grid.slot_count();
        let start = row_offset(slots, r);
        &self.values[start..start + (slots - 1 - r)]
    }

    /// Sub-table for a coarser grid whose points are all points of this one.
    pub fn restrict(&self, coarse: &ReducedGrid) -> Result<Self> {
        if !self.grid.nests(coarse) {
            return Err(Error::invalid(format!(
                "grid with spacing {} over n={} does not nest in spacing {} over n={}",
                coarse.spacing(),
                coarse.n(),
                self.grid.spacing(),
                self.grid.n()
            )));
        }
        let fine_slot = |slot: usize| self.grid.slot_of(coarse.time(slot)).expect("nested grid point");
        let slots = coarse.slot_count();
        let mut values = Vec::with_capacity(coarse.segment_count());
        for r in 0..slots - 1 {
            let fr = fine_slot(r);
            for s in r + 1..slots {
                values.push(self.get(fr, fine_slot(s)));
            }
        }
        let impossible = values.iter().filter(|v| **v == f64::NEG_INFINITY).count();
        Ok(Self {
            grid: coarse.clone(),
            diagnostics: FillDiagnostics {
                evaluations: 0,
                impossible,
                ..FillDiagnostics::default()
            },
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmodels::{ConstantMarginal, GaussianConjugate, NormalInverseGamma};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian(n: usize, seed: u64) -> GaussianConjugate {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        GaussianConjugate::new(&y, NormalInverseGamma::default()).unwrap()
    }

    #[test]
    fn entries_match_direct_evaluation() {
        let model = gaussian(37, 1);
        let grid = ReducedGrid::new(37, 4).unwrap();
        let table = SegmentTable::fill(&model, &grid, 1).unwrap();
        assert_eq!(table.len(), grid.segment_count());
        for r in 0..grid.slot_count() - 1 {
            for s in r + 1..grid.slot_count() {
                let direct = model.log_marginal(grid.time(r) + 1, grid.time(s)).unwrap();
                assert_eq!(table.get(r, s), direct);
                assert_eq!(table.row(r)[s - r - 1], direct);
            }
        }
    }

    #[test]
    fn trivial_provider_fills_zeros() {
        let grid = ReducedGrid::new(10, 1).unwrap();
        let table = SegmentTable::fill(&ConstantMarginal { n: 10, value: 0.0 }, &grid, 2).unwrap();
        assert_eq!(table.len(), 55);
        assert!(table.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn worker_count_does_not_change_contents() {
        let model = gaussian(300, 2);
        let grid = ReducedGrid::new(300, 3).unwrap();
        let one = SegmentTable::fill(&model, &grid, 1).unwrap();
        let four = SegmentTable::fill(&model, &grid, 4).unwrap();
        assert!(one.values.iter().zip(&four.values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn reported_size_for_long_series() {
        let grid = ReducedGrid::new(4050, 25).unwrap();
        let table = SegmentTable::fill(&ConstantMarginal { n: 4050, value: 0.0 }, &grid, 0).unwrap();
        assert_eq!(table.len(), 13_203);
        assert_eq!(grid.reported_evaluation_count(), 13_366);
    }

    #[test]
    fn restriction_matches_direct_fill() {
        let model = gaussian(61, 3);
        let fine = SegmentTable::fill(&model, &ReducedGrid::new(61, 2).unwrap(), 1).unwrap();
        let coarse_grid = ReducedGrid::new(61, 6).unwrap();
        let restricted = fine.restrict(&coarse_grid).unwrap();
        let direct = SegmentTable::fill(&model, &coarse_grid, 1).unwrap();
        assert_eq!(restricted.values, direct.values);
        assert!(fine.restrict(&ReducedGrid::new(61, 5).unwrap()).is_err());
    }

    struct Failing;
    impl SegmentMarginal for Failing {
        fn len(&self) -> usize {
            8
        }
        fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight> {
            if end - start == 2 {
                Err(Error::Numerical("boom".into()))
            } else {
                Ok(0.0)
            }
        }
    }

    #[test]
    fn provider_failures_become_minus_infinity() {
        let grid = ReducedGrid::new(8, 1).unwrap();
        let table = SegmentTable::fill(&Failing, &grid, 1).unwrap();
        assert_eq!(table.diagnostics().failures, 6);
        assert_eq!(table.get(0, 3), f64::NEG_INFINITY);
        assert_eq!(table.diagnostics().failure_samples[0], (1, 3, "numerical failure: boom".to_string()));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let grid = ReducedGrid::new(9, 1).unwrap();
        assert!(SegmentTable::fill(&ConstantMarginal { n: 8, value: 0.0 }, &grid, 1).is_err());
    }
}
