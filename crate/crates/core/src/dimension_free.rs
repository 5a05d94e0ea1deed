//! Dimension-free learner: a scalar magnitude times a unit-ball direction.
//!
//! The direction learner runs FTRL with a quadratic regularizer over the unit
//! ball on clipped gradients. The magnitude learner is a [`ClippedLearner`]
//! fed the projections `<g_t, v_t>`.

use crate::clipping::{clip_in_place, ClipConfig, ClipStep, ClippedLearner};
use crate::error::{Error, Result};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `argmin_{|v| <= 1} <s, v> + |v|^2 / (2 eta)`.
pub fn ftrl_argmin(sum: &[f64], eta: f64) -> Vec<f64> {
    let n = norm(sum);
    if eta * n <= 1.0 {
        sum.iter().map(|s| -eta * s).collect()
    } else {
        sum.iter().map(|s| -s / n).collect()
    }
}

#[derive(Debug, Clone)]
pub struct DirectionLearner {
    clipped_sum: Vec<f64>,
    tau: f64,
    eta: f64,
    scratch: Vec<f64>,
}

impl DirectionLearner {
    pub fn new(dimension: usize, tau: f64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::config("dimension must be positive"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config(format!("tau must be positive, got {tau}")));
        }
        Ok(Self {
            clipped_sum: vec![0.0; dimension],
            tau,
            eta: 1.0 / tau,
            scratch: vec![0.0; dimension],
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn clipped_sum(&self) -> &[f64] {
        &self.clipped_sum
    }

    pub fn dimension(&self) -> usize {
        self.clipped_sum.len()
    }

    pub fn predict(&self) -> Vec<f64> {
        ftrl_argmin(&self.clipped_sum, self.eta)
    }

    pub fn update(&mut self, g: &[f64]) -> Result<()> {
        if g.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: g.len(),
            });
        }
        self.scratch.copy_from_slice(g);
        clip_in_place(&mut self.scratch, self.tau);
        for (s, c) in self.clipped_sum.iter_mut().zip(&self.scratch) {
            *s += c;
        }
        Ok(())
    }
}

/// Parameters shared by both halves of the reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionParams {
    pub dimension: usize,
    pub sigma: f64,
    pub lipschitz: f64,
    pub moment_power: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub horizon: u64,
}

impl ReductionParams {
    /// `sigma_1d = (sigma^p + 2 G^p)^(1/p)`.
    pub fn sigma_1d(&self) -> f64 {
        let p = self.moment_power;
        (self.sigma.powf(p) + 2.0 * self.lipschitz.powf(p)).powf(1.0 / p)
    }

    /// Clip configuration of the magnitude learner; its level is
    /// `T^(1/p) (sigma^p + 3 G^p)^(1/p)`.
    pub fn magnitude_clip(&self) -> Result<ClipConfig> {
        ClipConfig::optimal(
            self.sigma_1d(),
            self.lipschitz,
            self.moment_power,
            self.horizon,
        )
    }

    /// `T^(1/p) (sigma^p + G^p)^(1/p)`.
    pub fn direction_tau(&self) -> Result<f64> {
        Ok(ClipConfig::optimal(self.sigma, self.lipschitz, self.moment_power, self.horizon)?.tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionStep {
    pub w: Vec<f64>,
    pub magnitude: f64,
    pub direction: Vec<f64>,
    /// `<g_t, v_t>`, the scalar gradient sent to the magnitude learner.
    pub projected_grad: f64,
    pub magnitude_step: ClipStep,
}

#[derive(Debug, Clone)]
pub struct DimensionFreeLearner {
    params: ReductionParams,
    magnitude: ClippedLearner,
    direction: DirectionLearner,
    pending: Option<(f64, Vec<f64>)>,
}

impl DimensionFreeLearner {
    pub fn new(params: ReductionParams) -> Result<Self> {
        let clip = params.magnitude_clip()?;
        let magnitude = ClippedLearner::new(clip, params.delta, params.epsilon, params.horizon)?;
        let direction = DirectionLearner::new(params.dimension, params.direction_tau()?)?;
        Ok(Self {
            params,
            magnitude,
            direction,
            pending: None,
        })
    }

    pub fn params(&self) -> &ReductionParams {
        &self.params
    }

    pub fn magnitude(&self) -> &ClippedLearner {
        &self.magnitude
    }

    pub fn direction(&self) -> &DirectionLearner {
        &self.direction
    }

    pub fn predict(&mut self) -> Result<Vec<f64>> {
        let x = self.magnitude.predict()?;
        let v = self.direction.predict();
        let w = v.iter().map(|vi| x * vi).collect();
        self.pending = Some((x, v));
        Ok(w)
    }

    pub fn update(&mut self, g: &[f64]) -> Result<ReductionStep> {
        if g.len() != self.params.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.params.dimension,
                got: g.len(),
            });
        }
        let (x, v) = self.pending.take().ok_or(Error::NoPendingPrediction)?;
        let projected_grad = dot(g, &v);
        let magnitude_step = self.magnitude.update(projected_grad)?;
        self.direction.update(g)?;
        Ok(ReductionStep {
            w: v.iter().map(|vi| x * vi).collect(),
            magnitude: x,
            direction: v,
            projected_grad,
            magnitude_step,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(dimension: usize) -> ReductionParams {
        ReductionParams {
            dimension,
            sigma: 1.0,
            lipschitz: 1.0,
            moment_power: 1.5,
            delta: 0.05,
            epsilon: 1.0,
            horizon: 1000,
        }
    }

    #[test]
    fn argmin_examples() {
        assert_eq!(ftrl_argmin(&[0.0, 0.0], 1.0), vec![0.0, 0.0]);
        let v = ftrl_argmin(&[0.3, 0.4], 1.0);
        assert!((v[0] + 0.3).abs() < 1e-15 && (v[1] + 0.4).abs() < 1e-15);
        let v = ftrl_argmin(&[3.0, 4.0], 1.0);
        assert!((v[0] + 0.6).abs() < 1e-15 && (v[1] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn direction_update_clips_each_gradient() {
        let mut d = DirectionLearner::new(3, 2.0).unwrap();
        assert_eq!(d.eta() * d.tau(), 1.0);
        d.update(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.clipped_sum(), &[0.0, 0.0, 0.0]);
        d.update(&[4.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.clipped_sum(), &[2.0, 0.0, 0.0]);
        assert!(matches!(
            d.update(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut d = DirectionLearner::new(5, 0.5).unwrap();
        for _ in 0..1000 {
            let g: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            d.update(&g).unwrap();
            assert!(norm(&d.predict()) <= 1.0 + 1e-12);
        }
        assert!(norm(d.clipped_sum()) <= 1000.0 * 0.5);
    }

    #[test]
    fn reduction_parameters() {
        let p = ReductionParams {
            sigma: 3.0,
            lipschitz: 4.0,
            moment_power: 2.0,
            horizon: 100,
            ..params(2)
        };
        assert!((p.sigma_1d() - 41f64.sqrt()).abs() < 1e-12);
        assert!((p.magnitude_clip().unwrap().tau - 10.0 * 57f64.sqrt()).abs() < 1e-10);
        assert!((p.direction_tau().unwrap() - 50.0).abs() < 1e-12);

        let p = ReductionParams {
            lipschitz: 0.0,
            ..params(2)
        };
        let t = 1000f64.powf(1.0 / 1.5);
        assert_eq!(p.sigma_1d(), 1.0);
        assert!((p.magnitude_clip().unwrap().tau - t).abs() < 1e-9);
        assert!((p.direction_tau().unwrap() - t).abs() < 1e-9);
    }

    #[test]
    fn first_round_is_zero() {
        let mut learner = DimensionFreeLearner::new(params(4)).unwrap();
        assert_eq!(learner.predict().unwrap(), vec![0.0; 4]);
        let step = learner.update(&[1.0, -2.0, 0.5, 3.0]).unwrap();
        assert_eq!(step.projected_grad, 0.0);
        assert!(matches!(
            learner.update(&[0.0; 4]),
            Err(Error::NoPendingPrediction)
        ));
        learner.predict().unwrap();
        assert!(matches!(
            learner.update(&[0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projected_gradient_bounded_by_norm() {
        let mut learner = DimensionFreeLearner::new(params(6)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5000 {
            learner.predict().unwrap();
            let g: Vec<f64> = (0..6)
                .map(|i| rng.random_range(-1.0..1.0) + 0.3 * i as f64)
                .collect();
            let step = learner.update(&g).unwrap();
            assert!(norm(&step.direction) <= 1.0 + 1e-12);
            assert!(step.projected_grad.abs() <= norm(&g) * (1.0 + 1e-12));
        }
    }
}
