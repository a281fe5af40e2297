// SPDX-License-Identifier: MIT OR Apache-2.0

//! Flat `key = value` run configuration.
//!
//! Keys use dotted section prefixes (`model.latent.kind = ar1`). Blank lines
//! and lines starting with `#` are ignored. Every key a run reads is echoed,
//! with its resolved value, into the result document.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use cpfilter_core::gmrf::{GammaPrior, HyperRule, LatentKind, LatentSpec, NormalPrior, ObsSpec, DEFAULT_MIN_SEGMENT_LEN};
use cpfilter_core::segmodels::NormalInverseGamma;
use cpfilter_core::KPrior;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable overriding `workers`.
pub const WORKERS_ENV: &str = "CPFILTER_WORKERS";

/// Raw key/value pairs in file order of precedence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = split_pair(line).ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1))
            })?;
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut map = Self::parse(&text)?;
        // Relative data paths are taken relative to the config file.
        if let Some(data) = map.entries.get_mut("data.path") {
            let p = PathBuf::from(&*data);
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(p).display().to_string();
                }
            }
        }
        Ok(map)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> CliResult<()> {
        let (key, value) = split_pair(assignment)
            .ok_or_else(|| CliError::Config(format!("override must look like key=value, got `{assignment}`")))?;
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }
}

fn split_pair(line: &str) -> Option<(&str, &str)> {
    let (key, value) = line.split_once('=')?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() || key.contains(char::is_whitespace) {
        return None;
    }
    Some((key, value))
}

/// Tracks which keys were consumed and records resolved values.
struct Reader<'a> {
    map: &'a ConfigMap,
    used: BTreeSet<String>,
    echo: BTreeMap<String, String>,
}

impl<'a> Reader<'a> {
    fn new(map: &'a ConfigMap) -> Self {
        Self {
            map,
            used: BTreeSet::new(),
            echo: BTreeMap::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.used.insert(key.to_string());
        self.map.get(key)
    }

    fn string(&mut self, key: &str, default: Option<&str>) -> CliResult<String> {
        let value = match (self.raw(key), default) {
            (Some(v), _) => v.to_string(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(CliError::Config(format!("missing required key `{key}`"))),
        };
        self.echo.insert(key.to_string(), value.clone());
        Ok(value)
    }

    fn choice(&mut self, key: &str, default: &str, allowed: &[&str]) -> CliResult<String> {
        let value = self.string(key, Some(default))?;
        if !allowed.contains(&value.as_str()) {
            return Err(CliError::Config(format!(
                "`{key}` must be one of {}, got `{value}`",
                allowed.join(", ")
            )));
        }
        Ok(value)
    }

    fn parsed<T: std::str::FromStr + ToString>(&mut self, key: &str, default: T) -> CliResult<T> {
        let value = match self.raw(key) {
            Some(v) => v
                .parse::<T>()
                .map_err(|_| CliError::Config(format!("`{key}` has invalid value `{v}`")))?,
            None => default,
        };
        self.echo.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    fn positive(&mut self, key: &str, default: f64) -> CliResult<f64> {
        let v: f64 = self.parsed(key, default)?;
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Config(format!("`{key}` must be finite and > 0, got {v}")));
        }
        Ok(v)
    }

    fn finite(&mut self, key: &str, default: f64) -> CliResult<f64> {
        let v: f64 = self.parsed(key, default)?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("`{key}` must be finite, got {v}")));
        }
        Ok(v)
    }

    fn finish(self) -> CliResult<BTreeMap<String, String>> {
        let unknown: Vec<&String> = self.map.entries.keys().filter(|k| !self.used.contains(*k)).collect();
        if !unknown.is_empty() {
            let names: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(CliError::Config(format!("unknown or unused keys: {}", names.join(", "))));
        }
        Ok(self.echo)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Fasta,
    Csv,
    EventDates,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub path: PathBuf,
    pub format: DataFormat,
    /// Start of week 0 for event-date data; `None` means the first event.
    pub week_origin: Option<chrono::NaiveDate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    MultinomialDirichlet {
        alpha: f64,
    },
    GaussianConjugate {
        prior: NormalInverseGamma,
    },
    PoissonGamma {
        prior: GammaPrior,
    },
    Gmrf {
        latent: LatentSpec,
        obs: ObsSpec,
        rule: HyperRule,
        min_segment_len: usize,
    },
}

impl ModelConfig {
    pub fn is_gmrf(&self) -> bool {
        matches!(self, ModelConfig::Gmrf { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub spacing: usize,
    pub k_prior: KPrior,
    pub refine: bool,
    pub max_sweeps: usize,
    /// Divide numeric observations by their sample standard deviation.
    pub scale: bool,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub latent_field: bool,
    /// Every key read, with its resolved value.
    pub echo: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn resolve(map: &ConfigMap) -> CliResult<Self> {
        let mut r = Reader::new(map);
        let data = resolve_data(&mut r)?;
        let model = resolve_model(&mut r)?;
        match (&model, data.format) {
            (ModelConfig::MultinomialDirichlet { .. }, DataFormat::Fasta) => {}
            (ModelConfig::MultinomialDirichlet { .. }, _) => {
                return Err(CliError::Config("the multinomial-Dirichlet model needs FASTA data".into()))
            }
            (_, DataFormat::Fasta) => {
                return Err(CliError::Config("FASTA data needs the multinomial-Dirichlet model".into()))
            }
            _ => {}
        }

        let spacing: usize = r.parsed("grid.spacing", 1)?;
        if spacing == 0 {
            return Err(CliError::Config("`grid.spacing` must be at least 1".into()));
        }
        let k_kind = r.choice("prior.k.kind", "uniform", &["uniform", "poisson"])?;
        let max_k: usize = r.parsed("prior.k.max", 20)?;
        let k_prior = if k_kind == "poisson" {
            KPrior::Poisson {
                mean: r.positive("prior.k.mean", 3.0)?,
                max_k,
            }
        } else {
            KPrior::Uniform { max_k }
        };

        let refine = r.parsed("refine.enabled", true)?;
        let max_sweeps = r.parsed("refine.max_sweeps", cpfilter_core::recursions::DEFAULT_MAX_SWEEPS)?;
        let scale_default = matches!(
            model,
            ModelConfig::Gmrf {
                obs: ObsSpec::GaussianIdentity { .. },
                ..
            }
        );
        let scale_raw = r.choice("preprocess.scale", "auto", &["auto", "true", "false"])?;
        let scale = match scale_raw.as_str() {
            "auto" => scale_default,
            other => other == "true",
        };
        r.echo.insert("preprocess.scale".into(), scale.to_string());
        if scale && !accepts_scaling(&model) {
            return Err(CliError::Config("scaling only applies to Gaussian observation models".into()));
        }
        let samples = r.parsed("sampling.count", 0usize)?;
        let seed = r.parsed("seed", 0u64)?;
        let workers = r.parsed("workers", 0usize)?;
        let output = r.raw("output.path").map(PathBuf::from);
        if let Some(p) = &output {
            r.echo.insert("output.path".into(), p.display().to_string());
        }
        let latent_field = if model.is_gmrf() {
            r.parsed("output.latent_field", false)?
        } else {
            false
        };
        let echo = r.finish()?;
        Ok(Self {
            data,
            model,
            spacing,
            k_prior,
            refine,
            max_sweeps,
            scale,
            samples,
            seed,
            workers,
            output,
            latent_field,
            echo,
        })
    }

    /// Applies the worker-count environment override, if set.
    pub fn apply_env(&mut self) -> CliResult<()> {
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            let workers = v
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a nonnegative integer, got `{v}`")))?;
            self.workers = workers;
            self.echo.insert("workers".into(), workers.to_string());
        }
        Ok(())
    }
}

fn accepts_scaling(model: &ModelConfig) -> bool {
    matches!(
        model,
        ModelConfig::GaussianConjugate { .. }
            | ModelConfig::Gmrf {
                obs: ObsSpec::GaussianIdentity { .. },
                ..
            }
    )
}

fn resolve_data(r: &mut Reader<'_>) -> CliResult<DataConfig> {
    let path = PathBuf::from(r.string("data.path", None)?);
    let format = match r.choice("data.format", "csv", &["fasta", "csv", "event_dates"])?.as_str() {
        "fasta" => DataFormat::Fasta,
        "csv" => DataFormat::Csv,
        _ => DataFormat::EventDates,
    };
    let week_origin = if format == DataFormat::EventDates {
        let raw = r.string("data.week_origin", Some("first_event"))?;
        if raw == "first_event" {
            None
        } else {
            Some(
                chrono::NaiveDate::parse_from_str(&raw, "%Y-%m-%d")
                    .map_err(|_| CliError::Config(format!("`data.week_origin` must be YYYY-MM-DD or first_event, got `{raw}`")))?,
            )
        }
    } else {
        None
    };
    Ok(DataConfig { path, format, week_origin })
}

fn resolve_model(r: &mut Reader<'_>) -> CliResult<ModelConfig> {
    let kind = r.choice(
        "model.kind",
        "gaussian_conjugate",
        &["multinomial_dirichlet", "gaussian_conjugate", "poisson_gamma", "gmrf"],
    )?;
    Ok(match kind.as_str() {
        "multinomial_dirichlet" => ModelConfig::MultinomialDirichlet {
            alpha: r.positive("model.alpha", 1.0)?,
        },
        "gaussian_conjugate" => {
            let d = NormalInverseGamma::default();
            ModelConfig::GaussianConjugate {
                prior: NormalInverseGamma {
                    mean: r.finite("model.nig.mean", d.mean)?,
                    kappa: r.positive("model.nig.kappa", d.kappa)?,
                    shape: r.positive("model.nig.shape", d.shape)?,
                    rate: r.positive("model.nig.rate", d.rate)?,
                },
            }
        }
        "poisson_gamma" => ModelConfig::PoissonGamma {
            prior: GammaPrior {
                shape: r.positive("model.gamma.shape", 1.0)?,
                rate: r.positive("model.gamma.rate", 1.0)?,
            },
        },
        _ => resolve_gmrf(r)?,
    })
}

fn resolve_gmrf(r: &mut Reader<'_>) -> CliResult<ModelConfig> {
    let obs_kind = r.choice("model.obs.kind", "poisson", &["gaussian", "poisson", "sv"])?;
    let obs = match obs_kind.as_str() {
        "gaussian" => ObsSpec::GaussianIdentity {
            precision_prior: GammaPrior {
                shape: r.positive("model.obs.precision_shape", 1.0)?,
                rate: r.positive("model.obs.precision_rate", 0.01)?,
            },
        },
        "poisson" => ObsSpec::PoissonLog,
        _ => ObsSpec::SvZeroMean,
    };
    let latent_kind = r.choice("model.latent.kind", "ar1", &["ar1", "rw1"])?;
    let precision_prior = GammaPrior {
        shape: r.positive("model.latent.precision_shape", 4.0)?,
        rate: r.positive("model.latent.precision_rate", 0.01)?,
    };
    let kind = if latent_kind == "ar1" {
        LatentKind::Ar1 {
            kappa_prior: NormalPrior {
                mean: r.finite("model.latent.kappa_mean", 3.0)?,
                sd: r.positive("model.latent.kappa_sd", 1.89)?,
            },
            precision_prior,
        }
    } else {
        LatentKind::Rw1 {
            precision_prior,
            initial_precision: r.positive("model.latent.initial_precision", 0.01)?,
        }
    };
    let intercept = if r.parsed("model.intercept.enabled", true)? {
        let sd_default = if obs == ObsSpec::SvZeroMean { 3.0 } else { 10.0 };
        Some(NormalPrior {
            mean: r.finite("model.intercept.mean", 0.0)?,
            sd: r.positive("model.intercept.sd", sd_default)?,
        })
    } else {
        None
    };
    let defaults = HyperRule::default();
    let rule = HyperRule {
        nodes: r.parsed("model.hyper.nodes", defaults.nodes)?,
        lower_quantile: r.finite("model.hyper.lower_quantile", defaults.lower_quantile)?,
        upper_quantile: r.finite("model.hyper.upper_quantile", defaults.upper_quantile)?,
    };
    let min_segment_len = r.parsed("model.min_segment_len", DEFAULT_MIN_SEGMENT_LEN)?;
    let latent = LatentSpec { kind, intercept };
    latent.validate().map_err(CliError::from_core_config)?;
    cpfilter_core::gmrf::HyperGrid::new(&latent, &obs, rule).map_err(CliError::from_core_config)?;
    Ok(ModelConfig::Gmrf {
        latent,
        obs,
        rule,
        min_segment_len,
    })
}
