// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded generators for synthetic changepoint data.
//!
//! Every generator is a pure function of its parameters and seed. The random
//! stream is [`RNG_ALGORITHM`]; record it alongside generated data so runs
//! can be reproduced elsewhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of the generator stream, versioned with the crate.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9/seed_from_u64";

/// Provenance recorded next to simulated series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetadata {
    pub generator: String,
    pub rng: String,
    pub seed: u64,
}

impl SimulationMetadata {
    pub fn new(generator: &str, seed: u64) -> Self {
        Self {
            generator: generator.to_string(),
            rng: RNG_ALGORITHM.to_string(),
            seed,
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Concatenated i.i.d. Gaussian segments.
pub fn gen_piecewise_gaussian(means: &[f64], sds: &[f64], lengths: &[usize], seed: u64) -> Result<Vec<f64>> {
    if means.len() != sds.len() || means.len() != lengths.len() {
        return Err(Error::invalid(format!(
            "segment lists differ in length: {} means, {} sds, {} lengths",
            means.len(),
            sds.len(),
            lengths.len()
        )));
    }
    for (i, (&m, &sd)) in means.iter().zip(sds).enumerate() {
        if !m.is_finite() || !(sd.is_finite() && sd >= 0.0) {
            return Err(Error::invalid(format!("segment {} has mean {m} and sd {sd}", i + 1)));
        }
    }
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(lengths.iter().sum());
    for ((&m, &sd), &len) in means.iter().zip(sds).zip(lengths) {
        out.extend((0..len).map(|_| m + sd * normal(&mut rng)));
    }
    Ok(out)
}

/// One stochastic-volatility segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SVSegmentParams {
    pub phi: f64,
    pub two_log_beta: f64,
    pub sigma_x: f64,
    pub length: usize,
}

impl SVSegmentParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi.abs() < 1.0) {
            return Err(Error::invalid(format!("|phi| must be < 1, got {}", self.phi)));
        }
        if !self.two_log_beta.is_finite() || !(self.sigma_x.is_finite() && self.sigma_x >= 0.0) {
            return Err(Error::invalid(format!(
                "volatility intercept {} and innovation sd {} must be finite, sd >= 0",
                self.two_log_beta, self.sigma_x
            )));
        }
        if self.length == 0 {
            return Err(Error::invalid("segment length must be at least 1"));
        }
        Ok(())
    }
}

/// Nine segments of a length-1000 series with changes at 200, 400, 600, 700,
/// 800, 850, 900 and 950.
pub fn default_sv_segments() -> Vec<SVSegmentParams> {
    let ends = [200, 400, 600, 700, 800, 850, 900, 950, 1000];
    let phi = [0.9, 0.8, 0.9, 0.7, 0.8, 0.9, 0.8, 0.9, 0.8];
    let two_log_beta = [0.0, 2.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.25, 0.0];
    let sigma_x = [0.01, 0.05, 0.01, 0.05, 0.01, 0.05, 0.01, 0.05, 0.01];
    let mut start = 0;
    (0..9)
        .map(|i| {
            let length = ends[i] - start;
            start = ends[i];
            SVSegmentParams {
                phi: phi[i],
                two_log_beta: two_log_beta[i],
                sigma_x: sigma_x[i],
                length,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvSimulation {
    pub series: Vec<f64>,
    /// AR(1) states `x_i`.
    pub latent: Vec<f64>,
    /// `2 log beta + x_i`, the log variance of `y_i`.
    pub log_variance: Vec<f64>,
    /// Last index of every segment but the final one.
    pub changepoints: Vec<usize>,
    pub metadata: SimulationMetadata,
}

/// `y_i ~ N(0, beta^2 e^{x_i})` with a stationary AR(1) `x` restarted in
/// every segment.
pub fn gen_sv(params: &[SVSegmentParams], seed: u64) -> Result<SvSimulation> {
    if params.is_empty() {
        return Err(Error::invalid("no segments given"));
    }
    for p in params {
        p.validate()?;
    }
    let mut rng = rng(seed);
    let total = params.iter().map(|p| p.length).sum();
    let mut series = Vec::with_capacity(total);
    let mut latent = Vec::with_capacity(total);
    let mut log_variance = Vec::with_capacity(total);
    let mut changepoints = Vec::with_capacity(params.len() - 1);
    for p in params {
        let mut x = p.sigma_x / (1.0 - p.phi * p.phi).sqrt() * normal(&mut rng);
        for i in 0..p.length {
            if i > 0 {
                x = p.phi * x + p.sigma_x * normal(&mut rng);
            }
            let lv = p.two_log_beta + x;
            latent.push(x);
            log_variance.push(lv);
            series.push((0.5 * lv).exp() * normal(&mut rng));
        }
        changepoints.push(series.len());
    }
    changepoints.pop();
    Ok(SvSimulation {
        series,
        latent,
        log_variance,
        changepoints,
        metadata: SimulationMetadata::new("stochastic_volatility", seed),
    })
}

/// Counts `y_i ~ Poisson(exp(alpha + x_i))` with stationary AR(1) `x`.
pub fn gen_poisson_ar1(n: usize, alpha: f64, phi: f64, sigma_x: f64, seed: u64) -> Result<Vec<u64>> {
    SVSegmentParams {
        phi,
        two_log_beta: alpha,
        sigma_x,
        length: n.max(1),
    }
    .validate()?;
    let mut rng = rng(seed);
    let mut x = sigma_x / (1.0 - phi * phi).sqrt() * normal(&mut rng);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            x = phi * x + sigma_x * normal(&mut rng);
        }
        let rate = (alpha + x).exp();
        let draw = if rate > 0.0 {
            Poisson::new(rate)
                .map_err(|e| Error::Numerical(format!("Poisson rate {rate}: {e}")))?
                .sample(&mut rng)
        } else {
            0.0
        };
        out.push(draw as u64);
    }
    Ok(out)
}
