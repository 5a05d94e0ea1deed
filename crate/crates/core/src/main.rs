use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use heavytail::concentration::Envelope;
use heavytail::harness::coverage::coverage_check;
use heavytail::harness::{run_experiment, write_outputs, ExperimentConfig, Format, Summary};
use heavytail::{Error, Result};

#[derive(Parser)]
#[command(
    name = "heavytail",
    version,
    about = "Heavy-tailed parameter-free online learning experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Jsonl,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Jsonl => Format::Jsonl,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Scalar,
    Vector,
    Squares,
}

impl From<Which> for Envelope {
    fn from(w: Which) -> Self {
        match w {
            Which::Scalar => Envelope::Scalar,
            Which::Vector => Envelope::Vector,
            Which::Squares => Envelope::SumSquares,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration over several seeds.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Number of seeds; overrides `run.seeds` in the config.
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Run one configuration for each value of a single parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `KEY=v1,v2,...` with KEY one of T, sigma, b, G, p, delta, epsilon.
        #[arg(long)]
        vary: String,
        #[arg(long)]
        seeds: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Empirical coverage of a concentration envelope.
    ConcentrationCheck {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_one(cfg: &ExperimentConfig, seeds: usize, out: &Path, format: Format) -> Result<Summary> {
    let start = Instant::now();
    let seed_list: Vec<u64> = (0..seeds as u64).collect();
    let output = run_experiment(cfg, &seed_list)?;
    write_outputs(out, format, &output)?;
    eprintln!(
        "{}: {} seeds x {} rounds in {:.2?}",
        out.display(),
        seeds,
        cfg.learner.horizon,
        start.elapsed()
    );
    Ok(output.summary)
}

fn parse_vary(spec: &str) -> Result<(String, Vec<f64>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("--vary expects KEY=v1,v2, got {spec:?}")))?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("bad sweep value {v:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::InvalidConfig(
            "--vary needs at least one value".into(),
        ));
    }
    Ok((key.trim().to_string(), values))
}

#[derive(Serialize)]
struct SweepEntry {
    key: String,
    value: f64,
    dir: String,
    summary: Summary,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            out,
            format,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seeds = seeds.unwrap_or(cfg.run.seeds);
            run_one(&cfg, seeds, &out, format.into())?;
        }
        Command::Sweep {
            config,
            vary,
            seeds,
            out,
            format,
        } => {
            let base = ExperimentConfig::load(&config)?;
            let (key, values) = parse_vary(&vary)?;
            let seeds = seeds.unwrap_or(base.run.seeds);
            let mut entries = Vec::new();
            for value in values {
                let mut cfg = base.clone();
                cfg.set(&key, value)?;
                let dir = format!("{key}={value}");
                let summary = run_one(&cfg, seeds, &out.join(&dir), format.into())?;
                entries.push(SweepEntry {
                    key: key.clone(),
                    value,
                    dir,
                    summary,
                });
            }
            write_json(&out.join("sweep.json"), &entries)?;
        }
        Command::ConcentrationCheck {
            which,
            runs,
            delta,
            horizon,
            seed,
            out,
        } => {
            let report = coverage_check(which.into(), runs, horizon, delta, seed)?;
            std::fs::create_dir_all(&out)?;
            write_json(
                &out.join(format!("coverage-{}.json", report.envelope)),
                &report,
            )?;
            println!(
                "{}: {}/{} paths covered ({:.4}), 99% CI [{:.4}, {:.4}], target {:.4}: {}",
                report.envelope,
                report.covered,
                report.runs,
                report.fraction,
                report.ci_low,
                report.ci_high,
                1.0 - delta,
                if report.pass { "pass" } else { "FAIL" }
            );
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_)
        | Error::UnknownLossSpec(_)
        | Error::MomentInfeasible { .. }
        | Error::DimensionMismatch { .. } => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
