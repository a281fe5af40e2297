// SPDX-License-Identifier: MIT OR Apache-2.0

//! Reduced time index sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Candidate changepoint locations `t_i = i * g` for `i = 1..=N`, with
/// `t_N <= n - 1`.
///
/// Slots are addressed by index `r` in `0..=N+1`, where slot `0` is the
/// sentinel time `0` and slot `N + 1` is the sentinel time `n`. A changepoint
/// at slot `r` means the segment ending at `t_r` is followed by a segment
/// starting at `t_r + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedGrid {
    n: usize,
    spacing: usize,
    points: Vec<usize>,
}

impl ReducedGrid {
    pub fn new(n: usize, spacing: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 observations, got {n}")));
        }
        if spacing == 0 || spacing > n - 1 {
            return Err(Error::invalid(format!(
                "grid spacing must lie in 1..={}, got {spacing}",
                n - 1
            )));
        }
        let points = (1..).map(|i| i * spacing).take_while(|&t| t < n).collect();
        Ok(Self { n, spacing, points })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> usize {
        self.spacing
    }

    /// Interior candidate points `t_1 < ... < t_N`.
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// `N`, the number of interior candidate points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of slots including both sentinels, `N + 2`.
    pub fn slot_count(&self) -> usize {
        self.points.len() + 2
    }

    /// Time of slot `r`; slot `0` is time 0 and slot `N + 1` is time `n`.
    #[inline]
    pub fn time(&self, slot: usize) -> usize {
        if slot == 0 {
            0
        } else if slot <= self.points.len() {
            self.points[slot - 1]
        } else {
            debug_assert_eq!(slot, self.points.len() + 1);
            self.n
        }
    }

    /// Slot holding time `t`, if `t` is a grid point or a sentinel.
    pub fn slot_of(&self, t: usize) -> Option<usize> {
        if t == 0 {
            Some(0)
        } else if t == self.n {
            Some(self.points.len() + 1)
        } else if t.is_multiple_of(self.spacing) && t < self.n {
            Some(t / self.spacing)
        } else {
            None
        }
    }

    /// Number of distinct segments `(t_r + 1, t_s)` with `0 <= r < s <= N + 1`.
    pub fn segment_count(&self) -> usize {
        let slots = self.slot_count();
        slots * (slots - 1) / 2
    }

    /// `n_r = floor(n / g + 1 - 1{g = 1})`, the grid-size diagnostic used when
    /// quoting evaluation counts.
    pub fn reported_size(&self) -> usize {
        let extra = if self.spacing == 1 { 0 } else { 1 };
        self.n / self.spacing + extra
    }

    /// `n_r (n_r + 1) / 2` marginal-likelihood evaluations.
    pub fn reported_evaluation_count(&self) -> usize {
        let nr = self.reported_size();
        nr * (nr + 1) / 2
    }

    /// True when every point of `coarse` is also a point of `self`, so a
    /// segment table over `self` can serve `coarse`.
    pub fn nests(&self, coarse: &ReducedGrid) -> bool {
        self.n == coarse.n && coarse.spacing.is_multiple_of(self.spacing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_enumeration() {
        let grid = ReducedGrid::new(10, 3).unwrap();
        assert_eq!(grid.points(), &[3, 6, 9]);
        assert_eq!(grid.time(0), 0);
        assert_eq!(grid.time(4), 10);
        assert_eq!(grid.slot_of(6), Some(2));
        assert_eq!(grid.slot_of(7), None);
    }

    #[test]
    fn unit_spacing_covers_all_interior_points() {
        let grid = ReducedGrid::new(7, 1).unwrap();
        assert_eq!(grid.points(), &[1, 2, 3, 4, 5, 6]);
        assert_eq!(grid.reported_size(), 7);
    }

    #[test]
    fn exhaustive_small_grids() {
        for n in 2..=30 {
            for g in 1..n {
                let grid = ReducedGrid::new(n, g).unwrap();
                let expected: Vec<usize> = (1..n).filter(|t| t % g == 0).collect();
                assert_eq!(grid.points(), expected.as_slice(), "n={n} g={g}");
                assert!(!grid.is_empty());
            }
        }
    }

    #[test]
    fn reported_counts_for_well_log_sizes() {
        let full = ReducedGrid::new(4050, 1).unwrap();
        assert_eq!(full.reported_evaluation_count(), 8_203_275);
        let coarse = ReducedGrid::new(4050, 25).unwrap();
        assert_eq!(coarse.reported_evaluation_count(), 13_366);
        // ~8.2e6 and ~1.3e4 at two significant figures.
        assert_eq!((full.reported_evaluation_count() as f64 / 1e5).round(), 82.0);
        assert_eq!((coarse.reported_evaluation_count() as f64 / 1e3).round(), 13.0);
    }

    #[test]
    fn reported_size_differs_from_point_count() {
        let grid = ReducedGrid::new(100, 10).unwrap();
        assert_eq!(grid.len(), 9);
        assert_eq!(grid.reported_size(), 11);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(ReducedGrid::new(1, 1).is_err());
        assert!(ReducedGrid::new(10, 0).is_err());
        assert!(ReducedGrid::new(10, 10).is_err());
    }

    #[test]
    fn nesting() {
        let fine = ReducedGrid::new(100, 5).unwrap();
        assert!(fine.nests(&ReducedGrid::new(100, 10).unwrap()));
        assert!(!fine.nests(&ReducedGrid::new(100, 7).unwrap()));
        assert!(!fine.nests(&ReducedGrid::new(101, 10).unwrap()));
    }
}
