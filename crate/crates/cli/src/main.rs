// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use cpfilter_core::simulate::{default_sv_segments, gen_piecewise_gaussian, gen_poisson_ar1, gen_sv, SimulationMetadata};
use serde::Serialize;

use cpfilter_cli::config::{ConfigMap, RunConfig};
use cpfilter_cli::error::{CliError, CliResult};
use cpfilter_cli::ingest::{ingest, write_numeric};
use cpfilter_cli::report::{to_json, DetectReport, ErrorReport, Timings};
use cpfilter_cli::run;

#[derive(Parser)]
#[command(name = "cpfilter", version, about = "Bayesian multiple changepoint detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration key, `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write the JSON document here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the data source and print a summary.
    IngestCheck(ConfigArgs),
    /// Run the full detection pipeline.
    Detect(ConfigArgs),
    /// Bayes factors between two segment models on the same data.
    BayesFactor {
        #[arg(long)]
        config_a: PathBuf,
        #[arg(long)]
        config_b: PathBuf,
        /// Numbers of changepoints to compare, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Override applied to both configurations.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Refine changepoints of an earlier `detect` result.
    Refine {
        #[command(flatten)]
        args: ConfigArgs,
        /// JSON document written by `detect`.
        #[arg(long)]
        result: PathBuf,
    },
    /// Write a synthetic series as one value per line plus `<output>.meta.json`.
    Simulate {
        #[arg(long, value_enum)]
        kind: SimKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        /// Segment means (piecewise-gaussian).
        #[arg(long, value_delimiter = ',')]
        means: Vec<f64>,
        /// Segment standard deviations (piecewise-gaussian).
        #[arg(long, value_delimiter = ',')]
        sds: Vec<f64>,
        /// Segment lengths (piecewise-gaussian).
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<usize>,
        /// Series length (poisson-ar1).
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.9)]
        phi: f64,
        #[arg(long, default_value_t = 0.3)]
        sigma_x: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SimKind {
    PiecewiseGaussian,
    Sv,
    PoissonAr1,
}

fn load_config(path: &Path, overrides: &[String]) -> CliResult<RunConfig> {
    let mut map = ConfigMap::load(path)?;
    for o in overrides {
        map.set(o)?;
    }
    let mut config = RunConfig::resolve(&map)?;
    config.apply_env()?;
    Ok(config)
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    #[serde(flatten)]
    metadata: &'a SimulationMetadata,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    changepoints: Option<&'a [usize]>,
}

fn simulate(kind: SimKind, seed: u64, output: &Path, cmd: &Command) -> CliResult<()> {
    let Command::Simulate {
        means,
        sds,
        lengths,
        n,
        alpha,
        phi,
        sigma_x,
        ..
    } = cmd
    else {
        unreachable!()
    };
    let cfg = |e: cpfilter_core::Error| CliError::from_core_config(e);
    let (series, metadata, changepoints) = match kind {
        SimKind::PiecewiseGaussian => {
            let series = gen_piecewise_gaussian(means, sds, lengths, seed).map_err(cfg)?;
            let cps: Vec<usize> = lengths
                .iter()
                .scan(0, |acc, l| {
                    *acc += l;
                    Some(*acc)
                })
                .collect();
            let cps = cps[..cps.len().saturating_sub(1)].to_vec();
            (series, SimulationMetadata::new("piecewise_gaussian", seed), Some(cps))
        }
        SimKind::Sv => {
            let sim = gen_sv(&default_sv_segments(), seed).map_err(cfg)?;
            (sim.series, sim.metadata, Some(sim.changepoints))
        }
        SimKind::PoissonAr1 => {
            let counts = gen_poisson_ar1(*n, *alpha, *phi, *sigma_x, seed).map_err(cfg)?;
            let series = counts.into_iter().map(|c| c as f64).collect();
            (series, SimulationMetadata::new("poisson_ar1", seed), None)
        }
    };
    write_numeric(output, &series)?;
    let meta = SimulationOutput {
        metadata: &metadata,
        n: series.len(),
        changepoints: changepoints.as_deref(),
    };
    let mut meta_path = output.as_os_str().to_owned();
    meta_path.push(".meta.json");
    let meta_path = PathBuf::from(meta_path);
    std::fs::write(&meta_path, to_json(&meta)).map_err(|e| CliError::io(&meta_path, e))
}

/// Output path and echoed configuration for error documents.
struct Context {
    output: Option<PathBuf>,
    config: Option<std::collections::BTreeMap<String, String>>,
}

fn execute(cli: &Cli, ctx: &mut Context, timings: &mut Timings) -> CliResult<()> {
    match &cli.command {
        Command::IngestCheck(args) => {
            ctx.output = args.output.clone();
            let config = load_config(&args.config, &args.overrides)?;
            ctx.config = Some(config.echo.clone());
            let clock = Instant::now();
            let (_, summary) = ingest(&config.data)?;
            timings.record("ingest", clock.elapsed().as_secs_f64());
            run::write_output(args.output.as_deref(), &to_json(&summary))
        }
        Command::Detect(args) => {
            ctx.output = args.output.clone();
            let config = load_config(&args.config, &args.overrides)?;
            ctx.config = Some(config.echo.clone());
            let output = args.output.clone().or(config.output.clone());
            ctx.output = output.clone();
            let report = run::detect(&config, timings)?;
            run::write_output(output.as_deref(), &to_json(&report))
        }
        Command::BayesFactor {
            config_a,
            config_b,
            k,
            overrides,
            output,
        } => {
            ctx.output = output.clone();
            let a = load_config(config_a, overrides)?;
            let b = load_config(config_b, overrides)?;
            let report = run::bayes_factors(&a, &b, k, timings)?;
            run::write_output(output.as_deref(), &to_json(&report))
        }
        Command::Refine { args, result } => {
            ctx.output = args.output.clone();
            let config = load_config(&args.config, &args.overrides)?;
            ctx.config = Some(config.echo.clone());
            let text = std::fs::read_to_string(result).map_err(|e| CliError::io(result, e))?;
            let previous: DetectReport = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: not a detect result: {e}", result.display())))?;
            let report = run::refine_report(&config, &previous, timings)?;
            run::write_output(args.output.as_deref(), &to_json(&report))
        }
        Command::Simulate { kind, seed, output, .. } => simulate(*kind, *seed, output, &cli.command),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut ctx = Context {
        output: None,
        config: None,
    };
    let mut timings = Timings::default();
    match execute(&cli, &mut ctx, &mut timings) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("cpfilter: {err}");
            let code = err.exit_code();
            if let Some(path) = &ctx.output {
                let report = ErrorReport {
                    status: "error".into(),
                    kind: err.kind().into(),
                    exit_code: code,
                    message: err.to_string(),
                    config: ctx.config.take(),
                    timings,
                };
                if let Err(e) = std::fs::write(path, to_json(&report)) {
                    eprintln!("cpfilter: cannot write error report to {}: {e}", path.display());
                }
            }
            ExitCode::from(code)
        }
    }
}
