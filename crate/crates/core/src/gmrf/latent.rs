// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{HyperPoint, LatentKind, LN_2PI};
use crate::error::{Error, Result};

/// Tridiagonal prior precision of a latent field segment.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentPrecision {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub log_det: f64,
}

impl LatentPrecision {
    /// Stationary AR(1): `x_1 ~ N(0, s2 / (1 - phi^2))`,
    /// `x_i | x_{i-1} ~ N(phi x_{i-1}, s2)`, with `tau = 1 / s2`.
    pub fn ar1(len: usize, phi: f64, tau: f64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(Error::invalid(format!("AR(1) needs |phi| < 1, got {phi}")));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("AR(1) precision must be > 0, got {tau}")));
        }
        let inner = tau * (1.0 + phi * phi);
        let mut diag = vec![inner; len];
        if len == 1 {
            diag[0] = tau * (1.0 - phi * phi);
        } else if len > 1 {
            diag[0] = tau;
            diag[len - 1] = tau;
        }
        let off = vec![-tau * phi; len.saturating_sub(1)];
        let log_det = len as f64 * tau.ln() + (1.0 - phi * phi).ln();
        Ok(Self { diag, off, log_det })
    }

    /// Random walk with `x_1 ~ N(0, 1 / initial_precision)` and increments of
    /// precision `tau`.
    pub fn rw1(len: usize, tau: f64, initial_precision: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0 && initial_precision > 0.0) {
            return Err(Error::invalid(format!(
                "random-walk precisions must be > 0, got ({tau}, {initial_precision})"
            )));
        }
        let mut diag = vec![2.0 * tau; len];
        if len >= 1 {
            diag[0] = initial_precision + if len > 1 { tau } else { 0.0 };
        }
        if len > 1 {
            diag[len - 1] = tau;
        }
        let off = vec![-tau; len.saturating_sub(1)];
        let log_det = initial_precision.ln() + (len.saturating_sub(1)) as f64 * tau.ln();
        Ok(Self { diag, off, log_det })
    }

    pub fn for_kind(kind: &LatentKind, len: usize, hyper: &HyperPoint) -> Result<Self> {
        match kind {
            LatentKind::Ar1 { .. } => Self::ar1(len, hyper.phi, hyper.latent_precision),
            LatentKind::Rw1 {
                initial_precision, ..
            } => Self::rw1(len, hyper.latent_precision, *initial_precision),
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `x' Q x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut total: f64 = self.diag.iter().zip(x).map(|(d, xi)| d * xi * xi).sum();
        for (i, o) in self.off.iter().enumerate() {
            total += 2.0 * o * x[i] * x[i + 1];
        }
        total
    }

    /// `Q x` written into `out`.
    pub fn multiply(&self, x: &[f64], out: &mut [f64]) {
        let m = self.diag.len();
        for i in 0..m {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < m {
                v += self.off[i] * x[i + 1];
            }
            out[i] = v;
        }
    }

    /// Zero-mean Gaussian log density with this precision.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * self.len() as f64 * LN_2PI + 0.5 * self.log_det - 0.5 * self.quadratic_form(x)
    }
}

/// Log density of a stationary AR(1) path with persistence `phi` and
/// innovation variance `innovation_var`.
pub fn ar1_log_prior(x: &[f64], phi: f64, innovation_var: f64) -> Result<f64> {
    if !(innovation_var.is_finite() && innovation_var > 0.0) {
        return Err(Error::invalid(format!(
            "innovation variance must be > 0, got {innovation_var}"
        )));
    }
    Ok(LatentPrecision::ar1(x.len(), phi, 1.0 / innovation_var)?.log_density(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normal_ln_pdf(x: f64, mean: f64, var: f64) -> f64 {
        -0.5 * (LN_2PI + var.ln()) - 0.5 * (x - mean) * (x - mean) / var
    }

    fn sequential_ar1(x: &[f64], phi: f64, var: f64) -> f64 {
        let mut total = normal_ln_pdf(x[0], 0.0, var / (1.0 - phi * phi));
        for i in 1..x.len() {
            total += normal_ln_pdf(x[i], phi * x[i - 1], var);
        }
        total
    }

    fn dense(q: &LatentPrecision) -> DMatrix<f64> {
        let m = q.len();
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                q.diag[i]
            } else if i + 1 == j {
                q.off[i]
            } else if j + 1 == i {
                q.off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn independence_limit() {
        let x = [0.3, -1.2, 2.0, 0.0];
        let want: f64 = x.iter().map(|&v| normal_ln_pdf(v, 0.0, 0.7)).sum();
        assert!((ar1_log_prior(&x, 0.0, 0.7).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn precision_form_matches_sequential_conditionals() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let m = rng.random_range(1..40);
            let phi = rng.random_range(-0.98..0.98);
            let var = rng.random_range(0.05..3.0);
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let got = ar1_log_prior(&x, phi, var).unwrap();
            assert!((got - sequential_ar1(&x, phi, var)).abs() < 1e-10);
        }
    }

    #[test]
    fn log_det_matches_dense_determinant() {
        for m in 1..=10 {
            for (phi, tau) in [(0.0, 1.0), (0.9, 400.0), (-0.4, 0.3)] {
                let q = LatentPrecision::ar1(m, phi, tau).unwrap();
                let det = dense(&q).determinant().ln();
                assert!((q.log_det - det).abs() < 1e-9, "m={m} phi={phi}");
                let formula = m as f64 * tau.ln() + (1.0 - phi * phi).ln();
                assert!((q.log_det - formula).abs() < 1e-12);
            }
            let q = LatentPrecision::rw1(m, 3.0, 0.01).unwrap();
            assert!((q.log_det - dense(&q).determinant().ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn rw1_matches_increment_form() {
        let x = [0.5, 0.7, 0.2, 0.9];
        let (tau, init) = (4.0, 0.1);
        let mut want = normal_ln_pdf(x[0], 0.0, 1.0 / init);
        for i in 1..x.len() {
            want += normal_ln_pdf(x[i], x[i - 1], 1.0 / tau);
        }
        let q = LatentPrecision::rw1(x.len(), tau, init).unwrap();
        assert!((q.log_density(&x) - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_unit_root() {
        assert!(ar1_log_prior(&[0.0], 1.0, 1.0).is_err());
        assert!(ar1_log_prior(&[0.0], -1.2, 1.0).is_err());
        assert!(ar1_log_prior(&[0.0], 0.5, 0.0).is_err());
    }
}
