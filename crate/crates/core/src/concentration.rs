//! Time-uniform concentration envelopes for martingale difference sequences.
//!
//! Each envelope depends on the round only through the prefix sum of
//! variance proxies `V_t = sum_{i<=t} sigma_i^2` and the running maximum
//! `M_t = max_{i<=t} b_i`, together with a free scale `nu > 0` and the failure
//! probability `delta`. Logarithms are natural.

use crate::error::{Error, Result};

/// Which envelope to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Envelope {
    /// One-sided bound on a scalar sub-exponential sum.
    Scalar,
    /// Bound on the norm of a bounded vector-valued sum.
    Vector,
    /// Bound on a sum of bounded squares.
    SumSquares,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!(
            "delta must be in (0, 1], got {delta}"
        )))
    }
}

fn clamp_one(x: f64) -> f64 {
    x.max(1.0)
}

impl Envelope {
    pub const ALL: [Envelope; 3] = [Envelope::Scalar, Envelope::Vector, Envelope::SumSquares];

    pub fn name(self) -> &'static str {
        match self {
            Envelope::Scalar => "scalar",
            Envelope::Vector => "vector",
            Envelope::SumSquares => "sum-squares",
        }
    }

    /// Evaluates the envelope from `V_t` and `M_t`. Inputs are not validated.
    pub fn eval(self, var_sum: f64, max_b: f64, nu: f64, delta: f64) -> f64 {
        let m = nu.max(max_b);
        match self {
            Envelope::Scalar => {
                let inner = clamp_one((var_sum / (2.0 * nu * nu)).sqrt()).ln() + 2.0;
                let tail = (m / nu).ln() + 2.0;
                2.0 * (var_sum * (4.0 / delta * inner * inner).ln()).sqrt()
                    + 8.0 * m * (28.0 / delta * tail * tail).ln()
            }
            Envelope::Vector => {
                let inner = clamp_one((var_sum / (nu * nu)).sqrt()).ln() + 2.0;
                let tail = (2.0 * m / nu).ln() + 2.0;
                5.0 * (var_sum * (16.0 / delta * inner * inner).ln()).sqrt()
                    + 23.0 * m * (224.0 / delta * tail * tail).ln()
            }
            Envelope::SumSquares => {
                let inner = clamp_one((var_sum / (nu * nu)).sqrt()).ln() + 2.0;
                let tail = (2.0 * m / nu).ln() + 1.0;
                3.0 * var_sum * (4.0 / delta * inner * inner).ln()
                    + 20.0 * m * m * (112.0 / delta * tail * tail).ln()
            }
        }
    }
}

/// Per-round variance proxies and range bounds of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeInputs {
    sigma: Vec<f64>,
    b: Vec<f64>,
    nu: f64,
    delta: f64,
}

impl EnvelopeInputs {
    pub fn new(sigma: Vec<f64>, b: Vec<f64>, nu: f64, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if sigma.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: sigma.len(),
                got: b.len(),
            });
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::config(format!("nu must be positive, got {nu}")));
        }
        if sigma
            .iter()
            .chain(&b)
            .any(|x| !(x.is_finite() && *x >= 0.0))
        {
            return Err(Error::config(
                "sigma_i and b_i must be finite and nonnegative",
            ));
        }
        Ok(Self {
            sigma,
            b,
            nu,
            delta,
        })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn prefix(&self, t: usize) -> (f64, f64) {
        let v = self.sigma[..t].iter().map(|s| s * s).sum();
        let m = self.b[..t].iter().copied().fold(0.0, f64::max);
        (v, m)
    }

    /// Envelope after `t` rounds, `t <= len()`.
    pub fn at(&self, kind: Envelope, t: usize) -> Result<f64> {
        if t > self.len() {
            return Err(Error::config(format!(
                "round {t} beyond {} recorded rounds",
                self.len()
            )));
        }
        let (v, m) = self.prefix(t);
        Ok(kind.eval(v, m, self.nu, self.delta))
    }

    /// Envelope for every round `1..=len()`.
    pub fn path(&self, kind: Envelope) -> Vec<f64> {
        let mut v = 0.0;
        let mut m = 0.0f64;
        self.sigma
            .iter()
            .zip(&self.b)
            .map(|(s, b)| {
                v += s * s;
                m = m.max(*b);
                kind.eval(v, m, self.nu, self.delta)
            })
            .collect()
    }
}

pub fn scalar_envelope(inputs: &EnvelopeInputs, t: usize) -> Result<f64> {
    inputs.at(Envelope::Scalar, t)
}

pub fn vector_envelope(inputs: &EnvelopeInputs, t: usize) -> Result<f64> {
    inputs.at(Envelope::Vector, t)
}

pub fn sum_squares_envelope(inputs: &EnvelopeInputs, t: usize) -> Result<f64> {
    inputs.at(Envelope::SumSquares, t)
}

/// Fixed-parameter bounds over `T` rounds: on the sum
/// (`2 b ln(1/delta) + sigma sqrt(2 T ln(1/delta))`) and on the sum of squares
/// (`1.5 sigma^2 T + (5/3) b^2 ln(1/delta)`).
pub fn fixed_param_bounds(sigma: f64, b: f64, horizon: u64, delta: f64) -> Result<(f64, f64)> {
    check_delta(delta)?;
    if !(sigma.is_finite() && sigma > 0.0 && b.is_finite() && b > 0.0) {
        return Err(Error::config("sigma and b must be positive"));
    }
    let t = horizon as f64;
    let l = (1.0 / delta).ln();
    Ok((
        2.0 * b * l + sigma * (2.0 * t * l).sqrt(),
        1.5 * sigma * sigma * t + 5.0 / 3.0 * b * b * l,
    ))
}
