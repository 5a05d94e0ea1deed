//! Gradient clipping for heavy-tailed noise.
//!
//! Gradients are truncated to norm `tau`, and the bias this introduces is
//! cancelled by the linear regularizer `phi(w) = slope |w|`. The clipped and
//! regularized gradient is passed to the composite learner, whose `b` is
//! `tau + slope` and whose variance proxy is the clipped second moment bound.

use crate::composite::{CompositeConfig, CompositeLearner};
use crate::error::{Error, Result};
use crate::regularizer::PhiParams;

/// Scales `g` in place to norm at most `tau`. Returns whether it was scaled.
pub fn clip_in_place(g: &mut [f64], tau: f64) -> bool {
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= tau || norm == 0.0 {
        return false;
    }
    let scale = tau / norm;
    for x in g.iter_mut() {
        *x *= scale;
    }
    true
}

pub fn clip(g: &[f64], tau: f64) -> Vec<f64> {
    let mut out = g.to_vec();
    clip_in_place(&mut out, tau);
    out
}

/// Scalar truncation; exact at the boundary.
pub fn clip_scalar(g: f64, tau: f64) -> f64 {
    g.clamp(-tau, tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipConfig {
    pub tau: f64,
    pub moment_power: f64,
    pub sigma: f64,
    pub lipschitz: f64,
}

impl ClipConfig {
    pub fn new(tau: f64, moment_power: f64, sigma: f64, lipschitz: f64) -> Result<Self> {
        if !(moment_power > 1.0 && moment_power <= 2.0) {
            return Err(Error::config(format!(
                "moment power must be in (1, 2], got {moment_power}"
            )));
        }
        if !(sigma.is_finite() && sigma >= 0.0 && lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::config("sigma and G must be finite and nonnegative"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config(format!("tau must be positive, got {tau}")));
        }
        Ok(Self {
            tau,
            moment_power,
            sigma,
            lipschitz,
        })
    }

    /// `tau = T^(1/p) (sigma^p + G^p)^(1/p)`.
    pub fn optimal(sigma: f64, lipschitz: f64, moment_power: f64, horizon: u64) -> Result<Self> {
        let p = moment_power;
        let tau = ((horizon as f64) * (sigma.powf(p) + lipschitz.powf(p))).powf(1.0 / p);
        Self::new(tau, p, sigma, lipschitz)
    }

    fn moment_sum(&self) -> f64 {
        self.sigma.powf(self.moment_power) + self.lipschitz.powf(self.moment_power)
    }

    /// Bounds on `|E clip(g) - E g|` and on `E |clip(g)|^2`.
    pub fn clipped_moment_bounds(&self) -> (f64, f64) {
        let p = self.moment_power;
        let scale = 2f64.powf(p - 1.0) * self.moment_sum();
        (
            scale / self.tau.powf(p - 1.0),
            scale * self.tau.powf(2.0 - p),
        )
    }

    pub fn phi(&self) -> Result<PhiParams> {
        PhiParams::new(self.moment_power, self.sigma, self.lipschitz, self.tau)
    }

    /// Parameters of the composite learner that consumes clipped gradients.
    pub fn composite_config(
        &self,
        delta: f64,
        epsilon: f64,
        horizon: u64,
    ) -> Result<CompositeConfig> {
        let (slope, second_moment) = self.clipped_moment_bounds();
        let sigma = second_moment.sqrt();
        if sigma == 0.0 {
            return Err(Error::config("sigma and G cannot both be zero"));
        }
        Ok(CompositeConfig {
            sigma,
            b: self.tau + slope,
            delta,
            epsilon,
            horizon,
        })
    }
}

/// Result of one clipped round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipStep {
    pub w: f64,
    pub clipped: bool,
    pub clipped_grad: f64,
    /// Clipped gradient plus the regularizer gradient, as seen by the composite learner.
    pub surrogate_grad: f64,
}

#[derive(Debug, Clone)]
pub struct ClippedLearner {
    clip: ClipConfig,
    phi: PhiParams,
    composite: CompositeLearner,
    pending: Option<f64>,
}

impl ClippedLearner {
    pub fn new(clip: ClipConfig, delta: f64, epsilon: f64, horizon: u64) -> Result<Self> {
        let composite = CompositeLearner::new(clip.composite_config(delta, epsilon, horizon)?)?;
        Ok(Self {
            phi: clip.phi()?,
            clip,
            composite,
            pending: None,
        })
    }

    pub fn clip_config(&self) -> &ClipConfig {
        &self.clip
    }

    pub fn phi(&self) -> &PhiParams {
        &self.phi
    }

    pub fn composite(&self) -> &CompositeLearner {
        &self.composite
    }

    pub fn predict(&mut self) -> Result<f64> {
        let w = self.composite.predict()?.w;
        self.pending = Some(w);
        Ok(w)
    }

    pub fn update(&mut self, g: f64) -> Result<ClipStep> {
        if g.is_nan() {
            return Err(Error::CostOutOfRange {
                cost: g,
                bound: self.clip.tau,
            });
        }
        let w = self.pending.take().ok_or(Error::NoPendingPrediction)?;
        let clipped_grad = clip_scalar(g, self.clip.tau);
        let surrogate_grad = clipped_grad + self.phi.grad(w);
        self.composite.update(surrogate_grad)?;
        Ok(ClipStep {
            w,
            clipped: g.abs() > self.clip.tau,
            clipped_grad,
            surrogate_grad,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clip_examples() {
        assert_eq!(clip(&[3.0, 4.0], 2.5), vec![1.5, 2.0]);
        assert_eq!(clip(&[0.3, -0.4], 2.5), vec![0.3, -0.4]);
        assert_eq!(clip(&[0.0, 0.0, 0.0], 1.0), vec![0.0, 0.0, 0.0]);
        assert_eq!(clip_scalar(-7.0, 2.0), -2.0);
    }

    proptest! {
        #[test]
        fn clip_bounds_norm_and_keeps_direction(
            g in prop::collection::vec(-1e6f64..1e6, 1..8),
            tau in 1e-3f64..1e3,
        ) {
            let c = clip(&g, tau);
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(norm <= tau * (1.0 + 1e-12));
            let g_norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if g_norm > 0.0 {
                let ratio = norm / g_norm;
                for (a, b) in c.iter().zip(&g) {
                    prop_assert!((a - ratio * b).abs() <= 1e-12 * (1.0 + b.abs()));
                }
            }
        }
    }

    #[test]
    fn moment_bounds_hand_values() {
        let cfg = ClipConfig::optimal(3.0, 4.0, 2.0, 100).unwrap();
        assert!((cfg.tau - 50.0).abs() < 1e-12);
        let (bias, second) = cfg.clipped_moment_bounds();
        assert!((bias - 1.0).abs() < 1e-12);
        assert!((second - 50.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_tau_second_moment_identity() {
        for p in [1.1, 1.5, 2.0] {
            for t in [10u64, 1000] {
                let cfg = ClipConfig::optimal(1.3, 0.7, p, t).unwrap();
                let (_, second) = cfg.clipped_moment_bounds();
                let expected = 2f64.powf(p - 1.0) * cfg.tau * cfg.tau / t as f64;
                assert!((second - expected).abs() <= 1e-10 * expected);
            }
        }
    }

    #[test]
    fn bias_bound_decreases_in_tau() {
        let mut prev = f64::INFINITY;
        for tau in [1.0, 10.0, 100.0, 1e4, 1e8] {
            let bias = ClipConfig::new(tau, 2.0, 1.0, 1.0)
                .unwrap()
                .clipped_moment_bounds()
                .0;
            assert!(bias < prev);
            prev = bias;
        }
        assert!(prev < 1e-7);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ClipConfig::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ClipConfig::new(1.0, 2.5, 1.0, 1.0).is_err());
        assert!(ClipConfig::new(0.0, 2.0, 1.0, 1.0).is_err());
        assert!(ClipConfig::new(1.0, 2.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn first_round_passes_small_gradient_through() {
        let cfg = ClipConfig::optimal(1.0, 1.0, 1.5, 100).unwrap();
        let mut learner = ClippedLearner::new(cfg, 0.05, 1.0, 100).unwrap();
        assert_eq!(learner.predict().unwrap(), 0.0);
        let step = learner.update(0.25).unwrap();
        assert_eq!(step.surrogate_grad, 0.25);
        assert!(!step.clipped);
    }

    #[test]
    fn surrogate_gradient_stays_within_budget() {
        let cfg = ClipConfig::optimal(1.0, 1.0, 1.5, 1000).unwrap();
        let mut learner = ClippedLearner::new(cfg, 0.05, 1.0, 1000).unwrap();
        let bound = cfg.tau + cfg.clipped_moment_bounds().0;
        assert_eq!(bound, learner.composite().config().b);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut saw_clip = false;
        for t in 0..20_000 {
            learner.predict().unwrap();
            let g = if t % 7 == 0 {
                10.0 * cfg.tau
            } else {
                rng.random_range(-2.0..2.0) * cfg.tau
            };
            let step = learner.update(g).unwrap();
            saw_clip |= step.clipped;
            assert!(step.clipped_grad.abs() <= cfg.tau);
            assert!(step.surrogate_grad.abs() <= bound);
        }
        assert!(saw_clip);
    }
}
