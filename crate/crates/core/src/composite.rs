//! Composite optimistic learner for bounded sub-exponential subgradients.
//!
//! Two rescaled base learners produce a candidate `x_t` (full line) and a
//! correction weight `y_t >= 0` (half-line). The played iterate solves
//! `w = x_t - y_t * grad psi_t(w)`; the map `h(w) = w - x_t + y_t grad psi_t(w)`
//! is nondecreasing with a root in `(x_t - y_t H, x_t]` for `x_t >= 0` and in
//! `[x_t, x_t + y_t H)` for `x_t < 0`, so the root is found by bisection.
//! After `g_t` arrives, `(g_t + grad psi_t(w_t)) / (b + H)` goes to the first
//! learner and `-(g_t + grad psi_t(w_t)) grad psi_t(w_t) / (H (b + H))` to the
//! second.

use crate::base_olo::{Domain, RescaledLearner, COST_SLACK, REGRET_A, REGRET_B, REGRET_C};
use crate::error::{Error, Result};
use crate::regularizer::{Psi, PsiConstants};

/// Absolute tolerance on `|h(w)|` at which bisection stops early.
pub const SOLVER_TOL: f64 = 1e-12;
pub const SOLVER_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: SOLVER_TOL,
            max_iter: SOLVER_MAX_ITER,
        }
    }
}

/// Problem parameters of the composite learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeConfig {
    /// Conditional second-moment bound of the subgradients.
    pub sigma: f64,
    /// Almost-sure bound `|g_t| <= b`.
    pub b: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub horizon: u64,
}

impl CompositeConfig {
    pub fn psi_constants(&self) -> Result<PsiConstants> {
        PsiConstants::compute(self.sigma, self.b, self.delta, self.epsilon, self.horizon)
    }
}

/// `h(w) = w - x + y * grad psi(w)` with the candidate `w` in the current slot.
pub fn fixed_point_residual(w: f64, x: f64, y: f64, psi: &Psi) -> f64 {
    w - x + y * psi.candidate_grad(w)
}

/// Interval guaranteed to contain the fixed point (closed form of both ends).
pub fn solution_bracket(x: f64, y: f64, h: f64) -> (f64, f64) {
    if x >= 0.0 {
        (x - y * h, x)
    } else {
        (x, x + y * h)
    }
}

/// Solves `w = x - y grad psi(w)` by bisection on the monotone residual.
pub fn solve_fixed_point(x: f64, y: f64, psi: &Psi, settings: SolverSettings) -> Result<f64> {
    if y == 0.0 || x == 0.0 {
        return Ok(x);
    }
    let residual = |w: f64| fixed_point_residual(w, x, y, psi);
    let (lemma_lo, lemma_hi) = solution_bracket(x, y, psi.constants().h);
    let (mut lo, mut hi) = (lemma_lo, lemma_hi);
    let (mut r_lo, mut r_hi) = (residual(lo), residual(hi));
    if !(r_lo <= 0.0 && r_hi >= 0.0) {
        let pad = 1e-12 * (1.0 + x.abs());
        lo -= pad;
        hi += pad;
        r_lo = residual(lo);
        r_hi = residual(hi);
        if !(r_lo <= 0.0 && r_hi >= 0.0) {
            return Err(Error::SolverDiverged {
                lo,
                hi,
                h_lo: r_lo,
                h_hi: r_hi,
            });
        }
    }
    if r_lo == 0.0 {
        return Ok(lo.clamp(lemma_lo, lemma_hi));
    }
    if r_hi == 0.0 {
        return Ok(hi.clamp(lemma_lo, lemma_hi));
    }
    for _ in 0..settings.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = residual(mid);
        if r.abs() <= settings.tol {
            return Ok(mid.clamp(lemma_lo, lemma_hi));
        }
        if r < 0.0 {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
    }
    let best = if -r_lo <= r_hi { lo } else { hi };
    Ok(best.clamp(lemma_lo, lemma_hi))
}

/// Everything the composite learner decided for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub w: f64,
    pub x: f64,
    pub y: f64,
}

/// Quantities forwarded after a subgradient is received.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    /// `grad psi_t(w_t)` with `w_t` inserted into the power sums.
    pub psi_grad: f64,
    pub cost_first: f64,
    pub cost_second: f64,
}

#[derive(Debug, Clone)]
pub struct CompositeLearner {
    config: CompositeConfig,
    constants: PsiConstants,
    first: RescaledLearner,
    second: RescaledLearner,
    psi: Psi,
    settings: SolverSettings,
    pending: Option<Prediction>,
    rounds: u64,
}

impl CompositeLearner {
    pub fn new(config: CompositeConfig) -> Result<Self> {
        Self::with_settings(config, SolverSettings::default())
    }

    pub fn with_settings(config: CompositeConfig, settings: SolverSettings) -> Result<Self> {
        let constants = config.psi_constants()?;
        let k = config.b + constants.h;
        Ok(Self {
            first: RescaledLearner::with_lipschitz(config.epsilon, k, Domain::FullLine)?,
            second: RescaledLearner::with_lipschitz(
                config.epsilon,
                constants.h * k,
                Domain::NonnegativeHalfLine,
            )?,
            psi: Psi::new(constants)?,
            config,
            constants,
            settings,
            pending: None,
            rounds: 0,
        })
    }

    pub fn config(&self) -> &CompositeConfig {
        &self.config
    }

    pub fn constants(&self) -> &PsiConstants {
        &self.constants
    }

    pub fn psi(&self) -> &Psi {
        &self.psi
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Solves for this round's iterate. Repeated calls before `update` return
    /// the same prediction.
    pub fn predict(&mut self) -> Result<Prediction> {
        if let Some(p) = self.pending {
            return Ok(p);
        }
        let x = self.first.predict();
        let y = self.second.predict();
        let w = solve_fixed_point(x, y, &self.psi, self.settings)?;
        let p = Prediction { w, x, y };
        self.pending = Some(p);
        Ok(p)
    }

    pub fn update(&mut self, g: f64) -> Result<Feedback> {
        let b = self.config.b;
        if !g.is_finite() || g.abs() > b * (1.0 + COST_SLACK) {
            return Err(Error::CostOutOfRange { cost: g, bound: b });
        }
        let g = g.clamp(-b, b);
        let Prediction { w, .. } = self.pending.take().ok_or(Error::NoPendingPrediction)?;

        self.psi.advance(w);
        let psi_grad = self.psi.value_and_grad(w).1;
        let total = g + psi_grad;
        let h = self.constants.h;
        let k = b + h;
        self.first.update(total)?;
        self.second.update(-total * psi_grad)?;
        self.rounds += 1;
        Ok(Feedback {
            psi_grad,
            cost_first: total / k,
            cost_second: -total * psi_grad / (h * k),
        })
    }
}

/// Explicit high-probability regret bound of the composite learner at
/// comparator `u`, with the base-learner constants of [`crate::base_olo`].
pub fn regret_bound_rhs(config: &CompositeConfig, u: f64) -> Result<f64> {
    let k = config.psi_constants()?;
    let CompositeConfig {
        sigma,
        b,
        delta,
        epsilon,
        horizon,
    } = *config;
    let t = horizon as f64;
    let (a, bb, c) = (REGRET_A, REGRET_B, REGRET_C);
    let u = u.abs();
    let bh = b + k.h;

    // c2 = 32 b ln(224/delta [ln(1 + (b/sigma) 2^(T+2)) + 2]^2).
    let log_c2 = k.c2 / (32.0 * b);
    let base = epsilon * (3.0 + 8.0 * sigma / bh * log_c2);
    if u == 0.0 {
        return Ok(base);
    }

    let n = 1.0 + (bh * bh * u * u * t.powf(c) / (epsilon * epsilon) + 1.0).ln();
    let sum_sq = 1.5 * t * sigma * sigma + 5.0 / 3.0 * b * b * (2.0 / delta).ln();
    let first = u * (4.0 * k.c1 * (a * a + bb) * n + 1.5 * a * (n * sum_sq).sqrt());
    let tail = (k.p2 * ((u / k.alpha2).ln() + 1.0)).max(0.0);
    let second = u
        * b
        * (2.0 * bb * n
            + 4.0 * (8.0 / delta).ln()
            + k.c2 * k.p2 / b * ((a * a + 2.0 * bb) * n + 3.0 * (tail + 4.0)));
    let third = u
        * t.sqrt()
        * (2.0
            * k.c1
            * ((t * u * u * k.c1 * k.c1 / (epsilon * epsilon) + 1.0)
                .ln()
                .sqrt()
                + 1.0)
            + sigma * (2.0 * (8.0 / delta).ln()).sqrt());
    Ok(base + first + second + third)
}
