// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic quadrature over segment hyperparameters.
//!
//! Each hyperparameter is mapped to an unconstrained coordinate (log
//! precision, or `kappa` for AR(1) persistence). Along every coordinate the
//! nodes sit at evenly spaced prior quantiles; node `i` carries the prior
//! mass of the cell bounded by the midpoints to its neighbours (the outer
//! cells extend to infinity), so the rule integrates any bounded likelihood
//! against a proper prior. The full grid is the tensor product.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Gamma, Normal};

use super::{phi_from_kappa, HyperPoint, LatentKind, LatentSpec, NormalPrior, ObsSpec};
use crate::error::{Error, Result};
use crate::segmodels::GammaPrior;

/// Per-dimension node placement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperRule {
    pub nodes: usize,
    pub lower_quantile: f64,
    pub upper_quantile: f64,
}

impl Default for HyperRule {
    fn default() -> Self {
        Self {
            nodes: 9,
            lower_quantile: 0.01,
            upper_quantile: 0.99,
        }
    }
}

impl HyperRule {
    pub fn with_nodes(nodes: usize) -> Self {
        Self {
            nodes,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::invalid("hyperparameter grid needs at least one node per dimension"));
        }
        if !(0.0 < self.lower_quantile
            && self.lower_quantile < self.upper_quantile
            && self.upper_quantile < 1.0)
        {
            return Err(Error::invalid(format!(
                "quantile span must satisfy 0 < lower < upper < 1, got ({}, {})",
                self.lower_quantile, self.upper_quantile
            )));
        }
        Ok(())
    }

    fn probabilities(&self) -> Vec<f64> {
        if self.nodes == 1 {
            return vec![0.5];
        }
        let step = (self.upper_quantile - self.lower_quantile) / (self.nodes - 1) as f64;
        (0..self.nodes).map(|i| self.lower_quantile + step * i as f64).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub(super) enum Axis {
    LogGamma(GammaPrior),
    Normal(NormalPrior),
}

impl Axis {
    fn cdf(&self, u: f64) -> f64 {
        match *self {
            Axis::LogGamma(p) => gamma(p).cdf(u.exp()),
            Axis::Normal(p) => normal(p).cdf(u),
        }
    }

    fn quantile(&self, prob: f64) -> f64 {
        match *self {
            Axis::LogGamma(p) => gamma(p).inverse_cdf(prob).ln(),
            Axis::Normal(p) => normal(p).inverse_cdf(prob),
        }
    }

    /// Log density of the transformed coordinate.
    fn ln_density(&self, u: f64) -> f64 {
        match *self {
            Axis::LogGamma(p) => p.ln_pdf(u.exp()) + u,
            Axis::Normal(p) => normal(p).ln_pdf(u),
        }
    }

    pub(super) fn rule(&self, rule: &HyperRule) -> Vec<(f64, f64, f64)> {
        let coords: Vec<f64> = rule.probabilities().into_iter().map(|p| self.quantile(p)).collect();
        let n = coords.len();
        (0..n)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { self.cdf(0.5 * (coords[i - 1] + coords[i])) };
                let hi = if i + 1 == n { 1.0 } else { self.cdf(0.5 * (coords[i] + coords[i + 1])) };
                let log_prior = self.ln_density(coords[i]);
                let log_weight = (hi - lo).ln() - log_prior;
                (coords[i], log_prior, log_weight)
            })
            .collect()
    }
}

fn gamma(p: GammaPrior) -> Gamma {
    Gamma::new(p.shape, p.rate).expect("validated gamma prior")
}

fn normal(p: NormalPrior) -> Normal {
    Normal::new(p.mean, p.sd).expect("validated normal prior")
}

/// One quadrature node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperNode {
    pub point: HyperPoint,
    /// Unconstrained coordinates, in [`HyperGrid::dimension_names`] order.
    pub coords: Vec<f64>,
    /// Log prior density of `coords`.
    pub log_prior: f64,
    pub log_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    names: Vec<String>,
    nodes: Vec<HyperNode>,
    rule: HyperRule,
}

impl HyperGrid {
    pub fn new(latent: &LatentSpec, obs: &ObsSpec, rule: HyperRule) -> Result<Self> {
        latent.validate()?;
        obs.validate()?;
        rule.validate()?;
        let mut names = Vec::new();
        let mut axes = Vec::new();
        match &latent.kind {
            LatentKind::Ar1 {
                kappa_prior,
                precision_prior,
            } => {
                names.push("log_latent_precision".to_string());
                axes.push(Axis::LogGamma(*precision_prior));
                names.push("kappa".to_string());
                axes.push(Axis::Normal(*kappa_prior));
            }
            LatentKind::Rw1 { precision_prior, .. } => {
                names.push("log_latent_precision".to_string());
                axes.push(Axis::LogGamma(*precision_prior));
            }
        }
        if let ObsSpec::GaussianIdentity { precision_prior } = obs {
            names.push("log_obs_precision".to_string());
            axes.push(Axis::LogGamma(*precision_prior));
        }

        let rules: Vec<Vec<(f64, f64, f64)>> = axes.iter().map(|a| a.rule(&rule)).collect();
        let is_ar1 = matches!(latent.kind, LatentKind::Ar1 { .. });
        let mut nodes = Vec::new();
        let total: usize = rules.iter().map(Vec::len).product();
        for flat in 0..total {
            let mut rem = flat;
            let mut picks = vec![0usize; rules.len()];
            for d in (0..rules.len()).rev() {
                picks[d] = rem % rules[d].len();
                rem /= rules[d].len();
            }
            let coords: Vec<f64> = picks.iter().zip(&rules).map(|(&i, r)| r[i].0).collect();
            let log_prior = picks.iter().zip(&rules).map(|(&i, r)| r[i].1).sum();
            let log_weight = picks.iter().zip(&rules).map(|(&i, r)| r[i].2).sum();
            let mut it = coords.iter().copied();
            let latent_precision = it.next().unwrap().exp();
            let phi = if is_ar1 { phi_from_kappa(it.next().unwrap()) } else { 0.0 };
            let obs_precision = it.next().map(f64::exp);
            nodes.push(HyperNode {
                point: HyperPoint {
                    latent_precision,
                    phi,
                    obs_precision,
                },
                coords,
                log_prior,
                log_weight,
            });
        }
        Ok(Self { names, nodes, rule })
    }

    /// Grid with explicitly supplied nodes.
    pub fn from_nodes(names: Vec<String>, nodes: Vec<HyperNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("hyperparameter grid is empty"));
        }
        if nodes.iter().any(|n| !n.log_weight.is_finite() || !n.log_prior.is_finite()) {
            return Err(Error::invalid("hyperparameter node weights must be finite"));
        }
        Ok(Self {
            names,
            nodes,
            rule: HyperRule::with_nodes(0),
        })
    }

    pub fn nodes(&self) -> &[HyperNode] {
        &self.nodes
    }

    pub fn dimension_names(&self) -> &[String] {
        &self.names
    }

    pub fn rule(&self) -> &HyperRule {
        &self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
