use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Algorithm, ExperimentConfig, LearnerConfig};
use super::loss::{make_loss_stream, LossStream};
use super::noise::NoiseModel;
use super::rng::SeedStreams;
use super::trace::{regret_column, write_csv, write_jsonl, Format, RegretTrace, TraceRow};
use crate::base_olo::COST_SLACK;
use crate::clipping::{ClipConfig, ClippedLearner};
use crate::composite::{regret_bound_rhs, CompositeConfig, CompositeLearner};
use crate::dimension_free::{DimensionFreeLearner, ReductionParams};
use crate::error::{Error, Result};

pub const DEFAULT_COMPARATORS: [f64; 7] = [0.0, 0.1, -0.1, 1.0, -1.0, 10.0, -10.0];

/// A fixed comparator `u = scale * e` along the loss direction `e`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparator {
    pub column: String,
    pub label: String,
    pub scale: f64,
}

pub fn comparators(cfg: &ExperimentConfig, loss: &LossStream) -> Vec<Comparator> {
    let mut out: Vec<(String, f64)> = match &cfg.run.comparators {
        Some(list) => list.iter().map(|&s| (format!("u={s}"), s)).collect(),
        None => DEFAULT_COMPARATORS
            .iter()
            .map(|&s| (format!("u={s}"), s))
            .collect(),
    };
    if let Some(opt) = loss.offline_optimum() {
        out.push(("offline-optimum".into(), opt));
    }
    out.into_iter()
        .enumerate()
        .map(|(i, (label, scale))| Comparator {
            column: regret_column(i),
            label,
            scale,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum Learner {
    SubExp(CompositeLearner),
    HeavyTail(ClippedLearner),
    DimensionFree(DimensionFreeLearner),
}

impl Learner {
    pub fn new(cfg: &LearnerConfig) -> Result<Self> {
        cfg.validate()?;
        let LearnerConfig {
            sigma,
            lipschitz,
            moment_power,
            delta,
            epsilon,
            horizon,
            dimension,
            ..
        } = *cfg;
        Ok(match cfg.algorithm {
            Algorithm::SubExp1d => {
                let b = cfg.b.expect("validated");
                Learner::SubExp(CompositeLearner::new(CompositeConfig {
                    sigma,
                    b,
                    delta,
                    epsilon,
                    horizon,
                })?)
            }
            Algorithm::HeavyTail1d => {
                let clip = ClipConfig::optimal(sigma, lipschitz, moment_power, horizon)?;
                Learner::HeavyTail(ClippedLearner::new(clip, delta, epsilon, horizon)?)
            }
            Algorithm::DimensionFree => {
                Learner::DimensionFree(DimensionFreeLearner::new(ReductionParams {
                    dimension,
                    sigma,
                    lipschitz,
                    moment_power,
                    delta,
                    epsilon,
                    horizon,
                })?)
            }
        })
    }

    pub fn predict(&mut self, w: &mut [f64]) -> Result<()> {
        match self {
            Learner::SubExp(l) => w[0] = l.predict()?.w,
            Learner::HeavyTail(l) => w[0] = l.predict()?,
            Learner::DimensionFree(l) => w.copy_from_slice(&l.predict()?),
        }
        Ok(())
    }

    /// Consumes the gradient; returns whether any clipping occurred.
    pub fn update(&mut self, g: &[f64]) -> Result<bool> {
        match self {
            Learner::SubExp(l) => {
                l.update(g[0])?;
                Ok(false)
            }
            Learner::HeavyTail(l) => Ok(l.update(g[0])?.clipped),
            Learner::DimensionFree(l) => {
                let tau = l.direction().tau();
                let step = l.update(g)?;
                Ok(
                    step.magnitude_step.clipped
                        || g.iter().map(|x| x * x).sum::<f64>().sqrt() > tau,
                )
            }
        }
    }
}

/// Everything needed to simulate one seed.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub loss: LossStream,
    pub noise: NoiseModel,
    pub comparators: Vec<Comparator>,
    pub config_hash: String,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let l = &config.learner;
        l.validate()?;
        let loss = make_loss_stream(&config.loss, l.lipschitz, l.dimension)?;
        let noise = NoiseModel::from_config(&config.noise, l.sigma, l.moment_power)?;
        if l.algorithm == Algorithm::SubExp1d {
            let b = l.b.expect("validated");
            match noise.max_abs() {
                Some(s) if l.lipschitz + s <= b * (1.0 + COST_SLACK) => {}
                Some(s) => {
                    return Err(Error::config(format!(
                        "gradients up to G + noise = {} exceed b = {b}",
                        l.lipschitz + s
                    )))
                }
                None => return Err(Error::config("sub-exp-1d requires bounded noise")),
            }
        }
        let comparators = comparators(config, &loss);
        Ok(Self {
            config: config.clone(),
            loss,
            noise,
            comparators,
            config_hash: config.hash(),
        })
    }

    /// Runs one seed, handing each row to `on_row`. Returns the last row.
    pub fn simulate<F: FnMut(&TraceRow)>(&self, seed: u64, mut on_row: F) -> Result<TraceRow> {
        let l = &self.config.learner;
        let d = l.dimension;
        let streams = SeedStreams::new(self.config.run.master_seed, seed);
        let mut learner = Learner::new(l)?;
        let mut w = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut xi = vec![0.0; d];
        let mut row = TraceRow {
            t: 0,
            seed,
            iterate_norm: 0.0,
            loss: 0.0,
            grad_norm: 0.0,
            clipped: false,
            regret: vec![0.0; self.comparators.len()],
        };
        for t in 1..=l.horizon {
            let mut rng = streams.round(t);
            learner.predict(&mut w)?;
            let round = self.loss.draw(&mut rng);
            let loss = self.loss.eval(&round, &w, &mut g);
            self.noise.sample_vector(&mut rng, &mut xi);
            for (gi, x) in g.iter_mut().zip(&xi) {
                *gi += x;
            }
            let clipped = learner.update(&g)?;
            for (r, c) in row.regret.iter_mut().zip(&self.comparators) {
                *r += loss - self.loss.eval_scalar(&round, c.scale).0;
            }
            row.t = t;
            row.iterate_norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.loss = loss;
            row.grad_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.clipped = clipped;
            on_row(&row);
        }
        Ok(row)
    }

    pub fn trace(&self, seed: u64) -> Result<RegretTrace> {
        let mut rows = Vec::with_capacity(self.config.learner.horizon as usize);
        self.simulate(seed, |r| rows.push(r.clone()))?;
        Ok(RegretTrace {
            seed,
            config_hash: self.config_hash.clone(),
            rows,
        })
    }
}

/// High-probability regret bound at comparator norm `u`, when one is available
/// in closed form for the configured algorithm.
pub fn regret_envelope(cfg: &LearnerConfig, u: f64) -> Result<Option<f64>> {
    let LearnerConfig {
        sigma,
        lipschitz,
        moment_power: p,
        delta,
        epsilon,
        horizon,
        ..
    } = *cfg;
    match cfg.algorithm {
        Algorithm::SubExp1d => {
            let b = cfg
                .b
                .ok_or_else(|| Error::config("sub-exp-1d requires b"))?;
            Ok(Some(regret_bound_rhs(
                &CompositeConfig {
                    sigma,
                    b,
                    delta,
                    epsilon,
                    horizon,
                },
                u,
            )?))
        }
        Algorithm::HeavyTail1d => {
            let clip = ClipConfig::optimal(sigma, lipschitz, p, horizon)?;
            let composite = regret_bound_rhs(&clip.composite_config(delta, epsilon, horizon)?, u)?;
            let bias = 2.0 * clip.clipped_moment_bounds().0 * horizon as f64 * u.abs();
            Ok(Some(composite + bias))
        }
        Algorithm::DimensionFree => Ok(None),
    }
}

/// Nearest-rank empirical quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparatorSummary {
    pub column: String,
    pub label: String,
    pub scale: f64,
    pub median: f64,
    pub quantile_level: f64,
    pub quantile: f64,
    pub envelope: Option<f64>,
    /// Fraction of seeds whose final regret is at most the envelope.
    pub coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub algorithm: Algorithm,
    pub horizon: u64,
    pub seeds: usize,
    pub comparators: Vec<ComparatorSummary>,
}

pub fn summarize(setup: &Setup, finals: &[TraceRow]) -> Result<Summary> {
    let l = &setup.config.learner;
    let level = 1.0 - l.delta;
    let comparators = setup
        .comparators
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut v: Vec<f64> = finals.iter().map(|r| r.regret[k]).collect();
            v.sort_by(f64::total_cmp);
            let envelope = regret_envelope(l, c.scale)?;
            let coverage = envelope
                .map(|e| v.iter().filter(|&&r| r <= e).count() as f64 / v.len().max(1) as f64);
            Ok(ComparatorSummary {
                column: c.column.clone(),
                label: c.label.clone(),
                scale: c.scale,
                median: quantile(&v, 0.5),
                quantile_level: level,
                quantile: quantile(&v, level),
                envelope,
                coverage,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Summary {
        config_hash: setup.config_hash.clone(),
        algorithm: l.algorithm,
        horizon: l.horizon,
        seeds: finals.len(),
        comparators,
    })
}

/// Thread pool sized by `HEAVYTAIL_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("HEAVYTAIL_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::config(format!(
                "HEAVYTAIL_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::config(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub setup: Setup,
    pub traces: Vec<RegretTrace>,
    pub summary: Summary,
}

/// Runs every seed in parallel; traces come back in the order of `seeds`.
pub fn run_experiment(config: &ExperimentConfig, seeds: &[u64]) -> Result<ExperimentOutput> {
    let setup = Setup::new(config)?;
    let traces: Vec<RegretTrace> = thread_pool()?.install(|| {
        seeds
            .par_iter()
            .map(|&s| setup.trace(s))
            .collect::<Result<_>>()
    })?;
    let finals: Vec<TraceRow> = traces
        .iter()
        .filter_map(|t| t.rows.last().cloned())
        .collect();
    let summary = summarize(&setup, &finals)?;
    Ok(ExperimentOutput {
        setup,
        traces,
        summary,
    })
}

/// Like [`run_experiment`] but keeps only the final row of each seed.
pub fn run_final_rows(config: &ExperimentConfig, seeds: &[u64]) -> Result<(Setup, Vec<TraceRow>)> {
    let setup = Setup::new(config)?;
    let finals = thread_pool()?.install(|| {
        seeds
            .par_iter()
            .map(|&s| setup.simulate(s, |_| {}))
            .collect::<Result<_>>()
    })?;
    Ok((setup, finals))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes `trace.<ext>`, `comparators.json` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, format: Format, output: &ExperimentOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let file = BufWriter::new(File::create(
        dir.join(format!("trace.{}", format.extension())),
    )?);
    match format {
        Format::Csv => write_csv(file, output.setup.comparators.len(), &output.traces)?,
        Format::Jsonl => write_jsonl(file, &output.traces)?,
    }
    write_json(&dir.join("comparators.json"), &output.setup.comparators)?;
    write_json(&dir.join("summary.json"), &output.summary)
}
