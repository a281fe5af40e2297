// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{check_range, SegmentMarginal};
use crate::error::{Error, Result};
use crate::logspace::LogWeight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Nucleotide {
    A = 0,
    C = 1,
    G = 2,
    T = 3,
}

impl Nucleotide {
    pub const ALL: [Nucleotide; 4] = [Self::A, Self::C, Self::G, Self::T];

    /// Case-insensitive parse of a single base letter.
    pub fn from_ascii(byte: u8) -> Option<Self> {
        match byte.to_ascii_uppercase() {
            b'A' => Some(Self::A),
            b'C' => Some(Self::C),
            b'G' => Some(Self::G),
            b'T' => Some(Self::T),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Multinomial segments over `{A, C, G, T}` with a symmetric
/// Dirichlet(alpha) prior on the base frequencies.
///
/// `P(t, s) = G(4a) / (G(a)^4 G(s - t + 1 + 4a)) * prod_j G(n_j + a)`.
#[derive(Clone, Debug)]
pub struct MultinomialDirichlet {
    alpha: f64,
    // prefix[i][j] = count of symbol j among the first i observations
    prefix: Vec<[u32; 4]>,
    ln_gamma_count: Vec<f64>,
    ln_gamma_len: Vec<f64>,
    constant: f64,
}

impl MultinomialDirichlet {
    pub fn new(sequence: &[Nucleotide], alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("Dirichlet alpha must be > 0, got {alpha}")));
        }
        let n = sequence.len();
        if n == 0 {
            return Err(Error::invalid("empty sequence"));
        }
        let mut prefix = Vec::with_capacity(n + 1);
        let mut running = [0u32; 4];
        prefix.push(running);
        for base in sequence {
            running[base.index()] += 1;
            prefix.push(running);
        }
        let ln_gamma_count = (0..=n).map(|j| ln_gamma(j as f64 + alpha)).collect();
        let ln_gamma_len = (0..=n).map(|j| ln_gamma(j as f64 + 4.0 * alpha)).collect();
        let constant = ln_gamma(4.0 * alpha) - 4.0 * ln_gamma(alpha);
        Ok(Self {
            alpha,
            prefix,
            ln_gamma_count,
            ln_gamma_len,
            constant,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Base counts within `start..=end` (1-based, inclusive).
    pub fn counts(&self, start: usize, end: usize) -> [u32; 4] {
        let hi = self.prefix[end];
        let lo = self.prefix[start - 1];
        [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2], hi[3] - lo[3]]
    }
}

impl SegmentMarginal for MultinomialDirichlet {
    fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    fn log_marginal(&self, start: usize, end: usize) -> Result<LogWeight> {
        check_range(start, end, self.len())?;
        let counts = self.counts(start, end);
        let body: f64 = counts.iter().map(|&c| self.ln_gamma_count[c as usize]).sum();
        Ok(self.constant - self.ln_gamma_len[end - start + 1] + body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Nucleotide::*;

    fn direct(seq: &[Nucleotide], alpha: f64) -> f64 {
        let mut counts = [0usize; 4];
        seq.iter().for_each(|b| counts[b.index()] += 1);
        ln_gamma(4.0 * alpha) - 4.0 * ln_gamma(alpha) - ln_gamma(seq.len() as f64 + 4.0 * alpha)
            + counts.iter().map(|&c| ln_gamma(c as f64 + alpha)).sum::<f64>()
    }

    #[test]
    fn single_symbol_is_one_quarter() {
        for alpha in [0.1, 1.0, 7.5] {
            let model = MultinomialDirichlet::new(&[G], alpha).unwrap();
            assert!((model.log_marginal(1, 1).unwrap() - 0.25f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn two_identical_bases() {
        // G(4) G(3) / G(6) = 6 * 2 / 120
        let model = MultinomialDirichlet::new(&[A, A], 1.0).unwrap();
        assert!((model.log_marginal(1, 2).unwrap() - 0.1f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn all_four_bases() {
        // G(4) / G(8) with unit counts: 6 / 5040
        let model = MultinomialDirichlet::new(&[A, C, G, T], 1.0).unwrap();
        let value = model.log_marginal(1, 4).unwrap();
        assert!((value - (6.0f64 / 5040.0).ln()).abs() < 1e-12);
        assert!((value - direct(&[A, C, G, T], 1.0)).abs() < 1e-12);
    }

    #[test]
    fn prefix_counts_match_naive_recount() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let seq: Vec<Nucleotide> = (0..300).map(|_| Nucleotide::ALL[rng.random_range(0..4)]).collect();
        let model = MultinomialDirichlet::new(&seq, 0.7).unwrap();
        for _ in 0..1000 {
            let a = rng.random_range(1..=300);
            let b = rng.random_range(1..=300);
            let (start, end) = (a.min(b), a.max(b));
            let mut naive = [0u32; 4];
            seq[start - 1..end].iter().for_each(|b| naive[b.index()] += 1);
            assert_eq!(model.counts(start, end), naive);
            let fresh = MultinomialDirichlet::new(&seq[start - 1..end], 0.7).unwrap();
            assert_eq!(
                model.log_marginal(start, end).unwrap(),
                fresh.log_marginal(1, end - start + 1).unwrap()
            );
        }
    }

    #[test]
    fn relabeling_invariance() {
        let seq = [A, A, C, G, T, T, T, G, A, C];
        let swap = |b: &Nucleotide| match b {
            A => T,
            T => A,
            C => G,
            G => C,
        };
        let relabeled: Vec<Nucleotide> = seq.iter().map(swap).collect();
        let m1 = MultinomialDirichlet::new(&seq, 1.3).unwrap();
        let m2 = MultinomialDirichlet::new(&relabeled, 1.3).unwrap();
        for start in 1..=10 {
            for end in start..=10 {
                assert_eq!(m1.log_marginal(start, end).unwrap(), m2.log_marginal(start, end).unwrap());
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MultinomialDirichlet::new(&[A], 0.0).is_err());
        assert!(MultinomialDirichlet::new(&[], 1.0).is_err());
        let model = MultinomialDirichlet::new(&[A, C], 1.0).unwrap();
        assert!(model.log_marginal(0, 1).is_err());
        assert!(model.log_marginal(2, 1).is_err());
        assert!(model.log_marginal(1, 3).is_err());
    }
}
