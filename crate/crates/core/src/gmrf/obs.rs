// SPDX-License-Identifier: MIT OR Apache-2.0

use statrs::function::gamma::ln_gamma;

use super::{ObsSpec, LN_2PI};

/// Log likelihood of one observation and its derivatives with respect to the
/// linear predictor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObsTerms {
    pub loglik: f64,
    pub gradient: f64,
    /// `-d^2 loglik / d eta^2`.
    pub curvature: f64,
}

/// Observation terms at linear predictor `eta` (the intercept plus the field
/// value). `obs_precision` is only read for Gaussian observations.
#[inline]
pub fn obs_terms(kind: &ObsSpec, y: f64, eta: f64, obs_precision: Option<f64>) -> ObsTerms {
    match kind {
        ObsSpec::GaussianIdentity { .. } => {
            let tau = obs_precision.expect("Gaussian observations need a precision");
            let r = y - eta;
            ObsTerms {
                loglik: 0.5 * (tau.ln() - LN_2PI) - 0.5 * tau * r * r,
                gradient: tau * r,
                curvature: tau,
            }
        }
        ObsSpec::PoissonLog => {
            let rate = eta.exp();
            let ln_factorial = if y <= 1.0 { 0.0 } else { ln_gamma(y + 1.0) };
            ObsTerms {
                loglik: y * eta - rate - ln_factorial,
                gradient: y - rate,
                curvature: rate,
            }
        }
        ObsSpec::SvZeroMean => {
            let scaled = 0.5 * y * y * (-eta).exp();
            ObsTerms {
                loglik: -0.5 * (LN_2PI + eta) - scaled,
                gradient: -0.5 + scaled,
                curvature: scaled,
            }
        }
    }
}
