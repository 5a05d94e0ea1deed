use rand::Rng;

use super::config::LossConfig;
use crate::error::{Error, Result};

/// Losses are functions of `z = <e, w>` for a fixed unit direction `e`, each
/// `G`-Lipschitz in `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `|G z - target|`.
    Absolute { target: f64 },
    /// `max(0, 1 - y_t G z)` with random labels `y_t`.
    Hinge { label_bias: f64 },
    /// `slope G z` with `|slope| <= 1`.
    Linear { slope: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossStream {
    kind: LossKind,
    lipschitz: f64,
    direction: Vec<f64>,
}

/// Randomness drawn by the loss for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundLoss {
    label: f64,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Builds the per-round loss oracle described by `spec`.
pub fn make_loss_stream(spec: &LossConfig, lipschitz: f64, dimension: usize) -> Result<LossStream> {
    let kind = match spec.kind.as_str() {
        "absolute" => LossKind::Absolute {
            target: spec.target.unwrap_or(0.0),
        },
        "hinge" => {
            let label_bias = spec.label_bias.unwrap_or(0.0);
            if !(-1.0..=1.0).contains(&label_bias) {
                return Err(Error::config(format!(
                    "label_bias must be in [-1, 1], got {label_bias}"
                )));
            }
            LossKind::Hinge { label_bias }
        }
        "linear" => {
            let slope = spec.slope.unwrap_or(1.0);
            if !(-1.0..=1.0).contains(&slope) {
                return Err(Error::config(format!(
                    "slope must be in [-1, 1], got {slope}"
                )));
            }
            LossKind::Linear { slope }
        }
        other => return Err(Error::UnknownLossSpec(other.to_string())),
    };
    let direction = match &spec.direction {
        Some(d) => {
            if d.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: d.len(),
                });
            }
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::config(
                    "loss direction must be a nonzero finite vector",
                ));
            }
            d.iter().map(|x| x / n).collect()
        }
        None => vec![1.0 / (dimension as f64).sqrt(); dimension],
    };
    Ok(LossStream {
        kind,
        lipschitz,
        direction,
    })
}

impl LossStream {
    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> RoundLoss {
        let label = match self.kind {
            LossKind::Hinge { label_bias } => {
                if rng.random::<f64>() < 0.5 * (1.0 + label_bias) {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => 0.0,
        };
        RoundLoss { label }
    }

    pub fn project(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.direction).map(|(a, b)| a * b).sum()
    }

    /// Loss value and derivative with respect to `z`; kinks take derivative 0.
    pub fn eval_scalar(&self, round: &RoundLoss, z: f64) -> (f64, f64) {
        let g = self.lipschitz;
        match self.kind {
            LossKind::Absolute { target } => {
                let r = g * z - target;
                (r.abs(), g * sign(r))
            }
            LossKind::Hinge { .. } => {
                let margin = 1.0 - round.label * g * z;
                if margin > 0.0 {
                    (margin, -round.label * g)
                } else {
                    (0.0, 0.0)
                }
            }
            LossKind::Linear { slope } => (slope * g * z, slope * g),
        }
    }

    /// Loss value at `w`, writing the subgradient into `grad`.
    pub fn eval(&self, round: &RoundLoss, w: &[f64], grad: &mut [f64]) -> f64 {
        let (value, dz) = self.eval_scalar(round, self.project(w));
        for (g, e) in grad.iter_mut().zip(&self.direction) {
            *g = dz * e;
        }
        value
    }

    /// Minimizer of the expected loss along the direction, when one exists.
    pub fn offline_optimum(&self) -> Option<f64> {
        match self.kind {
            LossKind::Absolute { target } if self.lipschitz > 0.0 => Some(target / self.lipschitz),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(kind: &str) -> LossConfig {
        LossConfig {
            kind: kind.into(),
            target: None,
            label_bias: None,
            slope: None,
            direction: None,
        }
    }

    #[test]
    fn absolute_example() {
        let s = make_loss_stream(&spec("absolute"), 1.0, 1).unwrap();
        let r = s.draw(&mut ChaCha8Rng::seed_from_u64(0));
        let mut g = [0.0];
        assert_eq!(s.eval(&r, &[3.0], &mut g), 3.0);
        assert_eq!(g, [1.0]);
        assert_eq!(s.eval(&r, &[0.0], &mut g), 0.0);
        assert_eq!(g, [0.0]);
    }

    #[test]
    fn hinge_kink_has_zero_subgradient() {
        let s = make_loss_stream(
            &LossConfig {
                label_bias: Some(1.0),
                ..spec("hinge")
            },
            2.0,
            1,
        )
        .unwrap();
        let r = s.draw(&mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(s.eval_scalar(&r, 0.5), (0.0, 0.0));
        assert_eq!(s.eval_scalar(&r, 0.0), (1.0, -2.0));
    }

    #[test]
    fn unknown_kind() {
        assert!(
            matches!(make_loss_stream(&spec("huber"), 1.0, 1), Err(Error::UnknownLossSpec(k)) if k == "huber")
        );
    }

    #[test]
    fn lipschitz_audit() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (kind, g) in [("absolute", 1.5), ("hinge", 0.7), ("linear", 2.0)] {
            let cfg = LossConfig {
                target: Some(0.3),
                slope: Some(-1.0),
                ..spec(kind)
            };
            let s = make_loss_stream(&cfg, g, 3).unwrap();
            let mut grad = [0.0; 3];
            for _ in 0..10_000 {
                let r = s.draw(&mut rng);
                let a: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
                let b: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
                let d = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                let la = s.eval(&r, &a, &mut grad);
                let lb = s.eval(&r, &b, &mut grad);
                assert!((la - lb).abs() <= g * d * (1.0 + 1e-12) + 1e-12);
                assert!(grad.iter().map(|x| x * x).sum::<f64>().sqrt() <= g * (1.0 + 1e-12));
            }
        }
    }
}
