// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::latent::LatentPrecision;
use super::obs::obs_terms;
use super::tridiag::BorderedCholesky;
use super::{HyperPoint, LatentSpec, NormalPrior, ObsSpec, LN_2PI};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Converged once the step or the gradient sup-norm falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            max_halvings: 40,
        }
    }
}

/// Gaussian approximation to `pi(x, mu | y, theta)` at its mode.
///
/// The precision is the tridiagonal block over the field plus, when an
/// intercept is present, a border row coupling the intercept to every field
/// coordinate.
#[derive(Clone, Debug)]
pub struct GaussianApprox {
    /// Field values followed by the intercept (when present).
    pub mode: Vec<f64>,
    pub has_intercept: bool,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub coupling: Vec<f64>,
    pub corner: f64,
    /// `log |precision|`.
    pub log_det: f64,
    /// `sum_i log pi(y_i | eta_i)` at the mode.
    pub loglik: f64,
    /// `log pi(x | theta) + log pi(mu)` at the mode.
    pub log_prior: f64,
    pub iterations: usize,
    /// Sup-norm of the gradient of the log posterior at the returned mode.
    pub gradient_norm: f64,
}

impl GaussianApprox {
    pub fn dim(&self) -> usize {
        self.mode.len()
    }

    /// Field values `x`.
    pub fn field(&self) -> &[f64] {
        let m = self.diag.len();
        &self.mode[..m]
    }

    pub fn intercept(&self) -> f64 {
        if self.has_intercept {
            self.mode[self.diag.len()]
        } else {
            0.0
        }
    }

    /// Linear predictor `mu + x_i` at the mode.
    pub fn linear_predictor(&self) -> Vec<f64> {
        let mu = self.intercept();
        self.field().iter().map(|x| x + mu).collect()
    }

    /// `log pi(y | theta) ~= log pi(y | z*) + log pi(z* | theta) - log pi_G(z* | y)`,
    /// where the Gaussian density at its own mode is `0.5 log|Q| - (d/2) log 2 pi`.
    pub fn log_marginal(&self) -> f64 {
        self.loglik + self.log_prior - 0.5 * self.log_det + 0.5 * self.dim() as f64 * LN_2PI
    }
}

struct Problem<'a> {
    y: &'a [f64],
    obs: &'a ObsSpec,
    obs_precision: Option<f64>,
    prior: LatentPrecision,
    intercept: Option<NormalPrior>,
}

struct Evaluation {
    objective: f64,
    loglik: f64,
    log_prior: f64,
    gradient: Vec<f64>,
    curvature: Vec<f64>,
}

impl Problem<'_> {
    fn m(&self) -> usize {
        self.y.len()
    }

    fn split<'z>(&self, z: &'z [f64]) -> (&'z [f64], f64) {
        let m = self.m();
        (&z[..m], if self.intercept.is_some() { z[m] } else { 0.0 })
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let (x, mu) = self.split(z);
        let loglik: f64 = self
            .y
            .iter()
            .zip(x)
            .map(|(&y, &xi)| obs_terms(self.obs, y, xi + mu, self.obs_precision).loglik)
            .sum();
        let mut log_prior = self.prior.log_density(x);
        if let Some(p) = &self.intercept {
            log_prior += p.ln_pdf(mu);
        }
        -(loglik + log_prior)
    }

    fn evaluate(&self, z: &[f64]) -> Evaluation {
        let m = self.m();
        let (x, mu) = self.split(z);
        let mut gradient = vec![0.0; z.len()];
        self.prior.multiply(x, &mut gradient[..m]);
        let mut curvature = Vec::with_capacity(m);
        let mut loglik = 0.0;
        let mut grad_sum = 0.0;
        for i in 0..m {
            let t = obs_terms(self.obs, self.y[i], x[i] + mu, self.obs_precision);
            loglik += t.loglik;
            gradient[i] -= t.gradient;
            grad_sum += t.gradient;
            curvature.push(t.curvature);
        }
        let mut log_prior = self.prior.log_density(x);
        if let Some(p) = &self.intercept {
            log_prior += p.ln_pdf(mu);
            gradient[m] = (mu - p.mean) / (p.sd * p.sd) - grad_sum;
        }
        Evaluation {
            objective: -(loglik + log_prior),
            loglik,
            log_prior,
            gradient,
            curvature,
        }
    }

    fn hessian(&self, curvature: &[f64]) -> (Vec<f64>, Option<f64>) {
        let diag: Vec<f64> = self.prior.diag.iter().zip(curvature).map(|(q, c)| q + c).collect();
        let corner = self
            .intercept
            .as_ref()
            .map(|p| 1.0 / (p.sd * p.sd) + curvature.iter().sum::<f64>());
        (diag, corner)
    }

    fn factor(&self, diag: &[f64], curvature: &[f64], corner: Option<f64>) -> Result<BorderedCholesky> {
        BorderedCholesky::factor(diag, &self.prior.off, corner.map(|h| (curvature, h)))
    }

    fn initial_point(&self) -> Vec<f64> {
        let m = self.m();
        let mut z = vec![0.0; m + usize::from(self.intercept.is_some())];
        if let Some(p) = &self.intercept {
            let mean = |f: &dyn Fn(f64) -> f64| self.y.iter().map(|&v| f(v)).sum::<f64>() / m as f64;
            let guess = match self.obs {
                ObsSpec::GaussianIdentity { .. } => mean(&|v| v),
                ObsSpec::PoissonLog => (mean(&|v| v) + 0.5 / m as f64).ln(),
                ObsSpec::SvZeroMean => (mean(&|v| v * v)).max(1e-300).ln(),
            };
            z[m] = if guess.is_finite() { guess } else { p.mean };
        }
        z
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Newton-Raphson on `log pi(x, mu | y, theta)` with step halving.
///
/// `start` warm-starts the iteration; it must have length `y.len()` plus one
/// when the `LatentSpec` carries an intercept.
pub fn newton_gaussian_approx(
    y: &[f64],
    latent: &LatentSpec,
    obs: &ObsSpec,
    hyper: &HyperPoint,
    start: Option<&[f64]>,
    options: &NewtonOptions,
) -> Result<GaussianApprox> {
    if y.is_empty() {
        return Err(Error::invalid("empty segment"));
    }
    hyper.validate()?;
    let obs_precision = match obs {
        ObsSpec::GaussianIdentity { .. } => Some(hyper.obs_precision.ok_or_else(|| {
            Error::invalid("Gaussian observations need an observation precision")
        })?),
        _ => None,
    };
    let problem = Problem {
        y,
        obs,
        obs_precision,
        prior: LatentPrecision::for_kind(&latent.kind, y.len(), hyper)?,
        intercept: latent.intercept,
    };
    let dim = y.len() + usize::from(latent.intercept.is_some());
    let mut z = match start {
        Some(s) if s.len() == dim && s.iter().all(|v| v.is_finite()) => s.to_vec(),
        _ => problem.initial_point(),
    };

    let mut eval = problem.evaluate(&z);
    let mut iterations = 0;
    loop {
        let (diag, corner) = problem.hessian(&eval.curvature);
        let chol = problem.factor(&diag, &eval.curvature, corner)?;
        let gradient_norm = sup_norm(&eval.gradient);
        let finish = |z: Vec<f64>, eval: Evaluation, chol: BorderedCholesky, diag: Vec<f64>, corner: Option<f64>, iterations| {
            GaussianApprox {
                mode: z,
                has_intercept: corner.is_some(),
                diag,
                off: problem.prior.off.clone(),
                coupling: if corner.is_some() { eval.curvature.clone() } else { Vec::new() },
                corner: corner.unwrap_or(0.0),
                log_det: chol.log_det(),
                loglik: eval.loglik,
                log_prior: eval.log_prior,
                iterations,
                gradient_norm: sup_norm(&eval.gradient),
            }
        };
        if gradient_norm < options.tolerance {
            return Ok(finish(z, eval, chol, diag, corner, iterations));
        }
        if iterations >= options.max_iterations {
            return Err(Error::NewtonFailure {
                iterations,
                gradient_norm,
                last_iterate: z,
            });
        }

        let step = chol.solve(&eval.gradient);
        let step_norm = sup_norm(&step);
        iterations += 1;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            let trial: Vec<f64> = z.iter().zip(&step).map(|(zi, si)| zi - scale * si).collect();
            let value = problem.objective(&trial);
            let slack = 1e-12 * eval.objective.abs().max(1.0);
            if value.is_finite() && value <= eval.objective + slack {
                accepted = Some(trial);
                break;
            }
            scale *= 0.5;
        }
        let Some(next) = accepted else {
            if step_norm < options.tolerance.sqrt() {
                // No representable descent remains; the current point is the mode.
                return Ok(finish(z, eval, chol, diag, corner, iterations));
            }
            return Err(Error::NewtonFailure {
                iterations,
                gradient_norm,
                last_iterate: z,
            });
        };
        z = next;
        eval = problem.evaluate(&z);
        if scale * step_norm < options.tolerance {
            let (diag, corner) = problem.hessian(&eval.curvature);
            let chol = problem.factor(&diag, &eval.curvature, corner)?;
            return Ok(finish(z, eval, chol, diag, corner, iterations));
        }
    }
}

/// Laplace approximation of `log pi(y | theta)` for one segment.
pub fn laplace_log_marginal_given_hyper(
    y: &[f64],
    latent: &LatentSpec,
    obs: &ObsSpec,
    hyper: &HyperPoint,
) -> Result<f64> {
    newton_gaussian_approx(y, latent, obs, hyper, None, &NewtonOptions::default())
        .map(|approx| approx.log_marginal())
}
