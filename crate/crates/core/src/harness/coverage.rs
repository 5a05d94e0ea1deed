//! Monte-Carlo coverage of the concentration envelopes.
//!
//! * scalar: `X_t = w_t U_t` with `U_t ~ U[-1, 1]` and `w_t = 2^t 1e-6`;
//!   variance proxy `|w_t| / sqrt(3)`, range `2 |w_t|`, `nu = 1e-6`, checked
//!   two-sided with `delta / 2` per side.
//! * vector: `X_t = w_t Z_t` with `Z_t` an equal mixture of two planar
//!   Gaussians centred at `+-m`, truncated to the ball of radius `R`;
//!   `sigma_t^2 = w_t^2 (|m|^2 + 2 s^2)`, `b_t = |w_t| R`.
//! * squares: `Z_t ~ U[-1, 1]` i.i.d., `sigma^2 = 1/3`, `b = 1`, `nu = 1/sqrt(3)`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};

use super::rng::SeedStreams;
use crate::concentration::{Envelope, EnvelopeInputs};
use crate::error::{Error, Result};

const SCALAR_WEIGHT0: f64 = 1e-6;
const MIXTURE_MEAN: [f64; 2] = [1.0, 0.5];
const MIXTURE_SD: f64 = 0.5;
const MIXTURE_RADIUS: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub envelope: &'static str,
    pub runs: usize,
    pub horizon: usize,
    pub delta: f64,
    pub covered: usize,
    pub fraction: f64,
    pub confidence: f64,
    /// Clopper-Pearson interval for the coverage probability.
    pub ci_low: f64,
    pub ci_high: f64,
    pub pass: bool,
}

fn scalar_weights(horizon: usize) -> Vec<f64> {
    (1..=horizon)
        .map(|t| 2f64.powi(t as i32) * SCALAR_WEIGHT0)
        .collect()
}

fn mixture_second_moment() -> f64 {
    MIXTURE_MEAN.iter().map(|m| m * m).sum::<f64>() + 2.0 * MIXTURE_SD * MIXTURE_SD
}

/// Envelope path for `kind` at failure probability `delta`.
pub fn envelope_path(kind: Envelope, horizon: usize, delta: f64) -> Result<Vec<f64>> {
    let inputs = match kind {
        Envelope::Scalar => {
            let w = scalar_weights(horizon);
            EnvelopeInputs::new(
                w.iter().map(|w| w / 3f64.sqrt()).collect(),
                w.iter().map(|w| 2.0 * w).collect(),
                SCALAR_WEIGHT0,
                delta / 2.0,
            )?
        }
        Envelope::Vector => {
            let w = scalar_weights(horizon);
            let s = mixture_second_moment().sqrt();
            EnvelopeInputs::new(
                w.iter().map(|w| w * s).collect(),
                w.iter().map(|w| w * MIXTURE_RADIUS).collect(),
                SCALAR_WEIGHT0,
                delta,
            )?
        }
        Envelope::SumSquares => {
            let s = 1.0 / 3f64.sqrt();
            EnvelopeInputs::new(vec![s; horizon], vec![1.0; horizon], s, delta)?
        }
    };
    Ok(inputs.path(kind))
}

fn mixture_draw<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    loop {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let z = [
            sign * MIXTURE_MEAN[0] + MIXTURE_SD * rng.sample::<f64, _>(StandardNormal),
            sign * MIXTURE_MEAN[1] + MIXTURE_SD * rng.sample::<f64, _>(StandardNormal),
        ];
        if z[0] * z[0] + z[1] * z[1] <= MIXTURE_RADIUS * MIXTURE_RADIUS {
            return z;
        }
    }
}

/// Whether one simulated path stays under `envelope` for every round.
pub fn path_covered(kind: Envelope, envelope: &[f64], streams: &SeedStreams) -> bool {
    let mut rng = streams.round(0);
    match kind {
        Envelope::Scalar => {
            let mut sum = 0.0;
            let mut w = SCALAR_WEIGHT0;
            envelope.iter().all(|e| {
                w *= 2.0;
                sum += w * rng.random_range(-1.0..=1.0);
                sum.abs() <= *e
            })
        }
        Envelope::Vector => {
            let mut sum = [0.0f64; 2];
            let mut w = SCALAR_WEIGHT0;
            envelope.iter().all(|e| {
                w *= 2.0;
                let z = mixture_draw(&mut rng);
                sum[0] += w * z[0];
                sum[1] += w * z[1];
                sum[0].hypot(sum[1]) <= *e
            })
        }
        Envelope::SumSquares => {
            let mut sum = 0.0;
            envelope.iter().all(|e| {
                let z: f64 = rng.random_range(-1.0..=1.0);
                sum += z * z;
                sum <= *e
            })
        }
    }
}

/// Two-sided Clopper-Pearson interval at the given confidence.
pub fn clopper_pearson(successes: usize, trials: usize, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("valid beta")
            .inverse_cdf(alpha / 2.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("valid beta")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (low, high)
}

pub fn coverage_check(
    kind: Envelope,
    runs: usize,
    horizon: usize,
    delta: f64,
    master_seed: u64,
) -> Result<CoverageReport> {
    if runs == 0 || horizon == 0 {
        return Err(Error::config("runs and horizon must be positive"));
    }
    if horizon > 1000 {
        return Err(Error::config(
            "horizon above 1000 overflows the growing weights",
        ));
    }
    let envelope = envelope_path(kind, horizon, delta)?;
    let covered = (0..runs as u64)
        .into_par_iter()
        .filter(|&i| path_covered(kind, &envelope, &SeedStreams::new(master_seed, i)))
        .count();
    let confidence = 0.99;
    let (ci_low, ci_high) = clopper_pearson(covered, runs, confidence);
    Ok(CoverageReport {
        envelope: kind.name(),
        runs,
        horizon,
        delta,
        covered,
        fraction: covered as f64 / runs as f64,
        confidence,
        ci_low,
        ci_high,
        pass: ci_low > 1.0 - delta,
    })
}
