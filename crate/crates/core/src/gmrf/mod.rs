// SPDX-License-Identifier: MIT OR Apache-2.0

//! Laplace-approximated segment marginals for latent Gaussian Markov random
//! field models.
//!
//! A segment `y[t..=s]` is modelled as observations of a linear predictor
//! `eta_i = mu + x_i`, where `x` is an AR(1) or first-order random walk field
//! with hyperparameters `theta` and `mu` is an optional intercept with a
//! Normal prior. For fixed `theta` the latent vector is integrated out with a
//! Laplace approximation around the Newton mode; `theta` is then integrated
//! numerically over a deterministic grid.

mod field;
mod hyper;
mod laplace;
mod latent;
mod model;
mod obs;
pub mod tridiag;

pub use field::{concatenated_linear_predictor, latent_field_given_changepoints, SegmentFit};
pub use hyper::{HyperGrid, HyperNode, HyperRule};
pub use laplace::{laplace_log_marginal_given_hyper, newton_gaussian_approx, GaussianApprox, NewtonOptions};
pub use latent::{ar1_log_prior, LatentPrecision};
pub use model::{hyper_grid_log_marginal, GmrfSegmentModel, GridEvaluation, DEFAULT_MIN_SEGMENT_LEN};
pub use obs::{obs_terms, ObsTerms};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::segmodels::GammaPrior;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Normal(mean, sd^2) prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalPrior {
    pub mean: f64,
    pub sd: f64,
}

impl NormalPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.mean.is_finite() && self.sd.is_finite() && self.sd > 0.0) {
            return Err(Error::invalid(format!(
                "normal prior needs finite mean and sd > 0, got ({}, {})",
                self.mean, self.sd
            )));
        }
        Ok(())
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * LN_2PI - self.sd.ln() - 0.5 * z * z
    }
}

/// Persistence `phi = 2 * sigmoid(kappa) - 1`, the inverse of
/// `kappa = logit((1 + phi) / 2)`.
pub fn phi_from_kappa(kappa: f64) -> f64 {
    (0.5 * kappa).tanh()
}

pub fn kappa_from_phi(phi: f64) -> f64 {
    let p = 0.5 * (1.0 + phi);
    (p / (1.0 - p)).ln()
}

/// Latent field family and its hyperpriors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatentKind {
    /// Stationary AR(1) with `kappa = logit((1 + phi) / 2)` and innovation
    /// precision `sigma_x^{-2}`.
    Ar1 {
        kappa_prior: NormalPrior,
        precision_prior: GammaPrior,
    },
    /// First-order random walk. The first state has a fixed proper prior
    /// `N(0, 1 / initial_precision)` so segment marginals stay normalized.
    Rw1 {
        precision_prior: GammaPrior,
        initial_precision: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentSpec {
    pub kind: LatentKind,
    /// Intercept added to every linear predictor. For stochastic volatility
    /// observations this is `2 log beta`.
    pub intercept: Option<NormalPrior>,
}

impl LatentSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            LatentKind::Ar1 {
                kappa_prior,
                precision_prior,
            } => {
                kappa_prior.validate()?;
                precision_prior.validate()?;
            }
            LatentKind::Rw1 {
                precision_prior,
                initial_precision,
            } => {
                precision_prior.validate()?;
                if !(initial_precision.is_finite() && *initial_precision > 0.0) {
                    return Err(Error::invalid(format!(
                        "random-walk initial precision must be > 0, got {initial_precision}"
                    )));
                }
            }
        }
        if let Some(p) = &self.intercept {
            p.validate()?;
        }
        Ok(())
    }
}

/// Observation model for `y_i` given the linear predictor `eta_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObsSpec {
    /// `y_i ~ N(eta_i, sigma_y^2)` with a Gamma prior on `sigma_y^{-2}`.
    GaussianIdentity { precision_prior: GammaPrior },
    /// `y_i ~ Poisson(exp(eta_i))`.
    PoissonLog,
    /// `y_i ~ N(0, exp(eta_i))`, i.e. `N(0, beta^2 e^{x_i})` with the
    /// intercept carrying `2 log beta`.
    SvZeroMean,
}

impl ObsSpec {
    pub fn validate(&self) -> Result<()> {
        if let ObsSpec::GaussianIdentity { precision_prior } = self {
            precision_prior.validate()?;
        }
        Ok(())
    }
}

/// A point in hyperparameter space, in natural units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperPoint {
    /// `sigma_x^{-2}`.
    pub latent_precision: f64,
    /// AR(1) persistence; zero for random walks.
    pub phi: f64,
    /// `sigma_y^{-2}` for Gaussian observations.
    pub obs_precision: Option<f64>,
}

impl HyperPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.latent_precision.is_finite() && self.latent_precision > 0.0) {
            return Err(Error::invalid(format!(
                "latent precision must be > 0, got {}",
                self.latent_precision
            )));
        }
        if !(self.phi.abs() < 1.0) {
            return Err(Error::invalid(format!("|phi| must be < 1, got {}", self.phi)));
        }
        if let Some(p) = self.obs_precision {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!("observation precision must be > 0, got {p}")));
            }
        }
        Ok(())
    }
}
