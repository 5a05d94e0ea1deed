use rand::Rng;
use rand_distr::{Distribution, Pareto, StandardNormal, StudentT};
use statrs::function::gamma::ln_gamma;

use super::config::NoiseConfig;
use crate::error::{Error, Result};

/// Zero-mean noise calibrated so that `E|X|^p` equals `target^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// `sign * scale * Pareto(1, tail_index)`.
    SymmetricPareto {
        tail_index: f64,
        scale: f64,
    },
    /// `scale * t(dof)`.
    StudentT {
        dof: f64,
        scale: f64,
    },
    /// Uniform on `[-half_width, half_width]`.
    BoundedUniform {
        half_width: f64,
    },
    None,
}

fn check_target(target: f64) -> Result<()> {
    if target.is_finite() && target >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "target sigma must be finite and nonnegative, got {target}"
        )))
    }
}

/// `E|T|^p` for a standard Student t with `dof > p`.
fn student_t_abs_moment(dof: f64, p: f64) -> f64 {
    let ln = 0.5 * p * dof.ln() + ln_gamma(0.5 * (p + 1.0)) + ln_gamma(0.5 * (dof - p))
        - 0.5 * std::f64::consts::PI.ln()
        - ln_gamma(0.5 * dof);
    ln.exp()
}

impl NoiseModel {
    pub fn symmetric_pareto(tail_index: f64, target: f64, p: f64) -> Result<Self> {
        check_target(target)?;
        if tail_index.is_nan() || tail_index <= p {
            return Err(Error::MomentInfeasible {
                tail_index,
                moment_power: p,
            });
        }
        // E|X|^p = scale^p * a / (a - p).
        let scale = target * ((tail_index - p) / tail_index).powf(1.0 / p);
        Ok(NoiseModel::SymmetricPareto { tail_index, scale })
    }

    pub fn student_t(dof: f64, target: f64, p: f64) -> Result<Self> {
        check_target(target)?;
        if dof.is_nan() || dof <= p {
            return Err(Error::MomentInfeasible {
                tail_index: dof,
                moment_power: p,
            });
        }
        let scale = target / student_t_abs_moment(dof, p).powf(1.0 / p);
        Ok(NoiseModel::StudentT { dof, scale })
    }

    pub fn bounded_uniform(target: f64, p: f64) -> Result<Self> {
        check_target(target)?;
        // E|X|^p = s^p / (p + 1).
        Ok(NoiseModel::BoundedUniform {
            half_width: target * (p + 1.0).powf(1.0 / p),
        })
    }

    pub fn from_config(cfg: &NoiseConfig, default_target: f64, p: f64) -> Result<Self> {
        let target = cfg.target_sigma.unwrap_or(default_target);
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::config(format!("noise kind {:?} requires {name}", cfg.kind)))
        };
        match cfg.kind.as_str() {
            "symmetric-pareto" => {
                Self::symmetric_pareto(need(cfg.tail_index, "tail_index")?, target, p)
            }
            "student-t" => Self::student_t(need(cfg.dof, "dof")?, target, p),
            "bounded-uniform" => Self::bounded_uniform(target, p),
            "none" => Ok(NoiseModel::None),
            other => Err(Error::config(format!("unknown noise kind {other:?}"))),
        }
    }

    /// Closed-form `E|X|^q`; infinite when the moment does not exist.
    pub fn abs_moment(&self, q: f64) -> f64 {
        match *self {
            NoiseModel::SymmetricPareto { tail_index, scale } => {
                if tail_index > q {
                    scale.powf(q) * tail_index / (tail_index - q)
                } else {
                    f64::INFINITY
                }
            }
            NoiseModel::StudentT { dof, scale } => {
                if dof > q {
                    scale.powf(q) * student_t_abs_moment(dof, q)
                } else {
                    f64::INFINITY
                }
            }
            NoiseModel::BoundedUniform { half_width } => half_width.powf(q) / (q + 1.0),
            NoiseModel::None => 0.0,
        }
    }

    /// Almost-sure bound on `|X|`, if any.
    pub fn max_abs(&self) -> Option<f64> {
        match *self {
            NoiseModel::BoundedUniform { half_width } => Some(half_width),
            NoiseModel::None => Some(0.0),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::SymmetricPareto { tail_index, scale } => {
                let magnitude: f64 = Pareto::new(1.0, tail_index)
                    .expect("valid pareto")
                    .sample(rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * scale * magnitude
            }
            NoiseModel::StudentT { dof, scale } => {
                scale * StudentT::new(dof).expect("valid student t").sample(rng)
            }
            NoiseModel::BoundedUniform { half_width } => {
                if half_width == 0.0 {
                    0.0
                } else {
                    rng.random_range(-half_width..=half_width)
                }
            }
            NoiseModel::None => 0.0,
        }
    }

    /// Fills `out` with a uniformly random direction scaled by a scalar draw,
    /// so that `E|X|^p` matches the scalar case.
    pub fn sample_vector<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        if let NoiseModel::None = self {
            out.fill(0.0);
            return;
        }
        if out.len() == 1 {
            out[0] = self.sample(rng);
            return;
        }
        let magnitude = self.sample(rng);
        loop {
            for x in out.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                let scale = magnitude / norm;
                out.iter_mut().for_each(|x| *x *= scale);
                return;
            }
        }
    }
}
