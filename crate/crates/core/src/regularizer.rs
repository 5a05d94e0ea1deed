//! Cancellation regularizers.
//!
//! A Huber piece `r_t(w; c, p, alpha0)` is quadratic-like (`|w|^p`) up to the
//! last iterate magnitude `|w_t|` and linear beyond it, normalized by
//! `S_t^(1 - 1/p)` with `S_t = sum_{i<=t} |w_i|^p + alpha0^p`. Iterates may grow
//! like `2^t`, so `S_t` is stored as `ln S_t` and every ratio is evaluated in
//! the log domain.
//!
//! The composite regularizer `psi_t` is the sum of two pieces with the
//! constants of [`PsiConstants`]; the clipping-bias regularizer `phi` is the
//! linear function of [`PhiParams`].

use crate::error::{Error, Result};

/// `ln(e^a + e^b)` without overflow. `-inf` acts as the additive identity.
pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sign(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberPieceParams {
    pub c: f64,
    pub p: f64,
    pub alpha0: f64,
}

impl HuberPieceParams {
    pub fn new(c: f64, p: f64, alpha0: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::config(format!(
                "Huber scale c must be >= 0, got {c}"
            )));
        }
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::config(format!(
                "Huber power p must be >= 1, got {p}"
            )));
        }
        if !(alpha0.is_finite() && alpha0 > 0.0) {
            return Err(Error::config(format!(
                "Huber offset alpha0 must be > 0, got {alpha0}"
            )));
        }
        Ok(Self { c, p, alpha0 })
    }
}

/// One Huber piece together with its running power sum.
#[derive(Debug, Clone, PartialEq)]
pub struct HuberPieceState {
    params: HuberPieceParams,
    log_power_sum: f64,
    last_abs_iterate: f64,
}

impl HuberPieceState {
    pub fn new(params: HuberPieceParams) -> Self {
        Self {
            log_power_sum: params.p * params.alpha0.ln(),
            last_abs_iterate: 0.0,
            params,
        }
    }

    pub fn params(&self) -> &HuberPieceParams {
        &self.params
    }

    /// `ln(sum_{i<=t} |w_i|^p + alpha0^p)`.
    pub fn log_power_sum(&self) -> f64 {
        self.log_power_sum
    }

    pub fn last_abs_iterate(&self) -> f64 {
        self.last_abs_iterate
    }

    /// `ln(a^(p-1) / S^(1-1/p))` for `a > 0`, clamped at 0 (the ratio never
    /// exceeds one because `S >= a^p` wherever it is evaluated).
    fn log_slope_ratio(&self, abs_w: f64, log_s: f64) -> f64 {
        let p = self.params.p;
        if p == 1.0 {
            return 0.0;
        }
        ((p - 1.0) * abs_w.ln() - (1.0 - 1.0 / p) * log_s).min(0.0)
    }

    /// Value at `w` of the piece finalized through the current round.
    pub fn value(&self, w: f64) -> f64 {
        let HuberPieceParams { c, p, .. } = self.params;
        let abs_w = w.abs();
        let last = self.last_abs_iterate;
        if abs_w > last {
            if last == 0.0 {
                // p > 1: the linear branch has zero slope when w_t = 0.
                return if p > 1.0 {
                    0.0
                } else {
                    c * abs_w * (-(1.0 - 1.0 / p) * self.log_power_sum).exp()
                };
            }
            let ratio = self.log_slope_ratio(last, self.log_power_sum).exp();
            c * (p * abs_w - (p - 1.0) * last) * ratio
        } else if abs_w == 0.0 {
            0.0
        } else {
            let log_v = p * abs_w.ln() - (1.0 - 1.0 / p) * self.log_power_sum;
            c * log_v.exp()
        }
    }

    /// Gradient at `w` of the piece finalized through the current round.
    pub fn grad(&self, w: f64) -> f64 {
        let HuberPieceParams { c, p, .. } = self.params;
        let at = w.abs().min(self.last_abs_iterate);
        if w == 0.0 || (at == 0.0 && p > 1.0) {
            return 0.0;
        }
        sign(w) * (c * p) * self.log_slope_ratio(at, self.log_power_sum).exp()
    }

    /// Gradient used while solving for the current iterate: `w` occupies the
    /// slot of the round being played, so the normalizer is
    /// `|w|^p + (power sum through the previous round)`.
    pub fn candidate_grad(&self, w: f64) -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let abs_w = w.abs();
        let HuberPieceParams { c, p, .. } = self.params;
        let log_s = log_sum_exp(self.log_power_sum, p * abs_w.ln());
        sign(w) * (c * p) * self.log_slope_ratio(abs_w, log_s).exp()
    }

    /// Inserts the finalized iterate of the current round.
    pub fn advance(&mut self, w_t: f64) {
        let abs_w = w_t.abs();
        if abs_w > 0.0 {
            self.log_power_sum = log_sum_exp(self.log_power_sum, self.params.p * abs_w.ln());
        }
        self.last_abs_iterate = abs_w;
    }
}

/// Constants of the two-piece cancellation regularizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiConstants {
    pub c1: f64,
    pub c2: f64,
    pub p1: f64,
    pub p2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Gradient bound `c1 p1 + c2 p2`.
    pub h: f64,
}

impl PsiConstants {
    /// Constants for noise scale `sigma`, gradient bound `b`, failure
    /// probability `delta`, wealth `epsilon` and horizon `horizon`.
    ///
    /// `ln 2^(T+k)` is evaluated as `(T+k) ln 2`; `ln(1 + (b/sigma) 2^(T+2))` as
    /// a softplus of its log-argument. `p2 = ln T` is floored at 2 so the
    /// second piece stays strictly convex for horizons below `e^2`.
    pub fn compute(sigma: f64, b: f64, delta: f64, epsilon: f64, horizon: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::config(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::config(format!("b must be positive, got {b}")));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::config(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::config(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if horizon < 2 {
            return Err(Error::config(format!(
                "horizon must be at least 2, got {horizon}"
            )));
        }
        let t = horizon as f64;
        let ln2 = std::f64::consts::LN_2;

        let inner1 = (t + 1.0) * ln2 + 2.0;
        let c1 = 2.0 * sigma * (32.0 / delta * inner1 * inner1).ln().sqrt();

        let inner2 = softplus((b / sigma).ln() + (t + 2.0) * ln2) + 2.0;
        let c2 = 32.0 * b * (224.0 / delta * inner2 * inner2).ln();

        let p1 = 2.0;
        let p2 = t.ln().max(2.0);
        let h = c1 * p1 + c2 * p2;
        let alpha1 = epsilon / c1;
        let alpha2 = epsilon * sigma / (4.0 * b * (b + h));
        Ok(Self {
            c1,
            c2,
            p1,
            p2,
            alpha1,
            alpha2,
            h,
        })
    }

    pub fn piece_params(&self) -> Result<[HuberPieceParams; 2]> {
        Ok([
            HuberPieceParams::new(self.c1, self.p1, self.alpha1)?,
            HuberPieceParams::new(self.c2, self.p2, self.alpha2)?,
        ])
    }
}

/// `psi_t = r_t(.; c1, p1, alpha1) + r_t(.; c2, p2, alpha2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi {
    constants: PsiConstants,
    pieces: [HuberPieceState; 2],
}

impl Psi {
    pub fn new(constants: PsiConstants) -> Result<Self> {
        let [first, second] = constants.piece_params()?;
        Ok(Self {
            constants,
            pieces: [HuberPieceState::new(first), HuberPieceState::new(second)],
        })
    }

    /// Builds from explicit pieces (both must be synchronized to one round).
    pub fn from_pieces(constants: PsiConstants, pieces: [HuberPieceState; 2]) -> Self {
        Self { constants, pieces }
    }

    pub fn constants(&self) -> &PsiConstants {
        &self.constants
    }

    pub fn pieces(&self) -> &[HuberPieceState; 2] {
        &self.pieces
    }

    pub fn value_and_grad(&self, w: f64) -> (f64, f64) {
        let [a, b] = &self.pieces;
        (a.value(w) + b.value(w), a.grad(w) + b.grad(w))
    }

    pub fn candidate_grad(&self, w: f64) -> f64 {
        let [a, b] = &self.pieces;
        a.candidate_grad(w) + b.candidate_grad(w)
    }

    pub fn advance(&mut self, w_t: f64) {
        for piece in &mut self.pieces {
            piece.advance(w_t);
        }
    }
}

/// Linear bias regularizer `phi(w) = slope |w|` with
/// `slope = 2^(p-1) (sigma^p + G^p) / tau^(p-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiParams {
    pub moment_power: f64,
    pub sigma_p: f64,
    pub lipschitz_p: f64,
    pub tau: f64,
}

impl PhiParams {
    pub fn new(moment_power: f64, sigma: f64, lipschitz: f64, tau: f64) -> Result<Self> {
        if !(moment_power > 1.0 && moment_power <= 2.0) {
            return Err(Error::config(format!(
                "moment power must lie in (1, 2], got {moment_power}"
            )));
        }
        if !(sigma.is_finite() && sigma >= 0.0 && lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::config("sigma and G must be finite and nonnegative"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config(format!("tau must be positive, got {tau}")));
        }
        Ok(Self {
            moment_power,
            sigma_p: sigma.powf(moment_power),
            lipschitz_p: lipschitz.powf(moment_power),
            tau,
        })
    }

    pub fn slope(&self) -> f64 {
        let p = self.moment_power;
        2f64.powf(p - 1.0) * (self.sigma_p + self.lipschitz_p) / self.tau.powf(p - 1.0)
    }

    pub fn value(&self, w: f64) -> f64 {
        self.slope() * w.abs()
    }

    pub fn grad(&self, w: f64) -> f64 {
        self.slope() * sign(w)
    }
}
