// SPDX-License-Identifier: MIT OR Apache-2.0

//! Symmetric tridiagonal systems, optionally bordered by one dense row and
//! column (an intercept coupled to every latent coordinate).

use crate::error::{Error, Result};

/// Cholesky factor `L` of a symmetric positive definite tridiagonal matrix,
/// stored as its diagonal and subdiagonal.
#[derive(Clone, Debug)]
pub struct TridiagCholesky {
    diag: Vec<f64>,
    sub: Vec<f64>,
}

impl TridiagCholesky {
    /// Factors the matrix with diagonal `diag` and off-diagonal `off`
    /// (`off[i]` couples `i` and `i + 1`).
    pub fn factor(diag: &[f64], off: &[f64]) -> Result<Self> {
        let m = diag.len();
        debug_assert!(m == 0 || off.len() == m - 1);
        let mut l_diag = Vec::with_capacity(m);
        let mut l_sub = Vec::with_capacity(m.saturating_sub(1));
        for i in 0..m {
            let mut pivot = diag[i];
            if i > 0 {
                let s = off[i - 1] / l_diag[i - 1];
                l_sub.push(s);
                pivot -= s * s;
            }
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Numerical(format!(
                    "tridiagonal matrix not positive definite at row {i} (pivot {pivot:e})"
                )));
            }
            l_diag.push(pivot.sqrt());
        }
        Ok(Self {
            diag: l_diag,
            sub: l_sub,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `log |A| = 2 sum log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.diag.iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = self.diag.len();
        debug_assert_eq!(b.len(), m);
        for i in 0..m {
            if i > 0 {
                b[i] -= self.sub[i - 1] * b[i - 1];
            }
            b[i] /= self.diag[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                b[i] -= self.sub[i] * b[i + 1];
            }
            b[i] /= self.diag[i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Factorization of
///
/// ```text
/// [ A   c ]
/// [ c'  h ]
/// ```
///
/// with `A` tridiagonal, via the Schur complement `h - c' A^{-1} c`.
#[derive(Clone, Debug)]
pub struct BorderedCholesky {
    inner: TridiagCholesky,
    border: Option<Border>,
}

#[derive(Clone, Debug)]
struct Border {
    coupling: Vec<f64>,
    solved_coupling: Vec<f64>,
    schur: f64,
}

impl BorderedCholesky {
    pub fn factor(diag: &[f64], off: &[f64], border: Option<(&[f64], f64)>) -> Result<Self> {
        let inner = TridiagCholesky::factor(diag, off)?;
        let border = match border {
            None => None,
            Some((coupling, corner)) => {
                let solved = inner.solve(coupling);
                let schur = corner - dot(coupling, &solved);
                if !(schur > 0.0) || !schur.is_finite() {
                    return Err(Error::Numerical(format!(
                        "bordered matrix not positive definite (Schur complement {schur:e})"
                    )));
                }
                Some(Border {
                    coupling: coupling.to_vec(),
                    solved_coupling: solved,
                    schur,
                })
            }
        };
        Ok(Self { inner, border })
    }

    /// Total dimension including the border.
    pub fn dim(&self) -> usize {
        self.inner.len() + usize::from(self.border.is_some())
    }

    pub fn log_det(&self) -> f64 {
        self.inner.log_det() + self.border.as_ref().map_or(0.0, |b| b.schur.ln())
    }

    /// Solves the full system; `rhs` has length `dim()`, border entry last.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.inner.len();
        match &self.border {
            None => self.inner.solve(rhs),
            Some(b) => {
                let mut x = self.inner.solve(&rhs[..m]);
                let last = (rhs[m] - dot(&b.coupling, &x)) / b.schur;
                for (xi, vi) in x.iter_mut().zip(&b.solved_coupling) {
                    *xi -= vi * last;
                }
                x.push(last);
                x
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
