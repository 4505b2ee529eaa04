//! Exit times of heterogeneous arbitrageurs riding a bubble.
//!
//! Agent i believes the crash hazard is h_i(t) = c_i (T_ci − t)^(−β_i) and that a
//! crash costs a fraction κ of the price. It stays while the expected relative
//! gain exceeds the expected relative loss κ·h_i(t) and leaves at the first
//! time the loss overtakes the gain. Expectations are taken in the noise-free
//! limit, where the gain is β/(T_c − t) for the price model and the momentum
//! x(t) = ((m−1)μ)^(−β) (T_c − t)^(−β) for the momentum model.

use crate::models::{Model1Params, Model2Params};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
    #[error("t = {t} is not before the believed critical time {t_ci}")]
    PastCriticalTime { t: f64, t_ci: f64 },
    #[error("no interior exit on ({lo}, {hi})")]
    NoInteriorExit { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageurBelief {
    pub t_ci: f64,
    pub beta_i: f64,
    pub c_i: f64,
    pub kappa: f64,
    pub t_entry: f64,
}

impl ArbitrageurBelief {
    pub fn new(t_ci: f64, beta_i: f64, c_i: f64, kappa: f64, t_entry: f64) -> Result<Self, AgentError> {
        let b = Self { t_ci, beta_i, c_i, kappa, t_entry };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |msg: String| Err(AgentError::InvalidBelief(msg));
        if ![self.t_ci, self.beta_i, self.c_i, self.kappa, self.t_entry].iter().all(|v| v.is_finite()) {
            return bad("all fields must be finite".into());
        }
        if !(self.t_entry < self.t_ci) {
            return bad(format!("entry {} must precede T_ci {}", self.t_entry, self.t_ci));
        }
        if !(self.beta_i > 0.0) {
            return bad(format!("beta_i must be positive, got {}", self.beta_i));
        }
        if !(self.c_i > 0.0) {
            return bad(format!("c_i must be positive, got {}", self.c_i));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return bad(format!("kappa must lie in (0,1), got {}", self.kappa));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSolution {
    pub t_exit: f64,
    /// Gain minus expected crash loss at `t_exit`.
    pub residual: f64,
    pub bracket: (f64, f64),
}

/// c_i (T_ci − t)^(−β_i).
pub fn hazard_rate(b: &ArbitrageurBelief, t: f64) -> Result<f64, AgentError> {
    if !(t < b.t_ci) {
        return Err(AgentError::PastCriticalTime { t, t_ci: b.t_ci });
    }
    Ok(b.c_i * (b.t_ci - t).powf(-b.beta_i))
}

pub const EXIT_TOLERANCE: f64 = 1e-12;

/// Exit date against a price-singularity market with critical time `market.critical_time()`.
pub fn exit_time_model1(b: &ArbitrageurBelief, market: &Model1Params) -> Result<ExitSolution, AgentError> {
    if market.m <= 1.0 {
        return Err(AgentError::InvalidBelief("market has no finite-time singularity".into()));
    }
    let gain = Gain { coeff: market.beta(), exponent: 1.0, t_c: market.critical_time() };
    solve_exit(b, gain)
}

/// Exit date against a momentum-singularity market.
pub fn exit_time_model2(b: &ArbitrageurBelief, market: &Model2Params) -> Result<ExitSolution, AgentError> {
    let beta = market.beta();
    let gain = Gain { coeff: ((market.m - 1.0) * market.mu).powf(-beta), exponent: beta, t_c: market.critical_time() };
    solve_exit(b, gain)
}

/// Gain G (T_c − t)^(−e).
#[derive(Debug, Clone, Copy)]
struct Gain {
    coeff: f64,
    exponent: f64,
    t_c: f64,
}

fn solve_exit(b: &ArbitrageurBelief, gain: Gain) -> Result<ExitSolution, AgentError> {
    b.validate()?;
    let hi = gain.t_c.min(b.t_ci);
    let lo = b.t_entry;
    if !(lo < hi) {
        return Err(AgentError::NoInteriorExit { lo, hi });
    }
    let cost = b.kappa * b.c_i;
    // evaluated by distance d to the upper edge, which keeps precision near it
    let gap_gain = gain.t_c - hi;
    let gap_cost = b.t_ci - hi;
    let f = |d: f64| gain.coeff * (gap_gain + d).powf(-gain.exponent) - cost * (gap_cost + d).powf(-b.beta_i);
    let span = hi - lo;

    // sign of f as d → 0⁺
    let edge_sign = if gap_gain < gap_cost {
        1.0
    } else if gap_cost < gap_gain {
        -1.0
    } else if b.beta_i > gain.exponent {
        -1.0
    } else if b.beta_i < gain.exponent {
        1.0
    } else {
        (gain.coeff - cost).signum()
    };

    // geometric grid of distances from span down to span·1e-15, i.e. increasing t
    const SAMPLES: usize = 400;
    let ratio = (1e-15f64).powf(1.0 / (SAMPLES - 1) as f64);
    let mut prev_d = span;
    let mut prev_f = f(span);
    let mut bracket = None;
    for k in 1..=SAMPLES {
        let (d, fd) = if k < SAMPLES {
            let d = span * ratio.powi(k as i32);
            (d, f(d))
        } else {
            (0.0, edge_sign)
        };
        if prev_f > 0.0 && fd < 0.0 {
            bracket = Some((d, prev_d));
            break;
        }
        if prev_f > 0.0 && fd == 0.0 && k < SAMPLES {
            return Ok(ExitSolution { t_exit: hi - d, residual: 0.0, bracket: (lo, hi) });
        }
        prev_d = d;
        prev_f = fd;
    }
    let Some((mut d_neg, mut d_pos)) = bracket else {
        return Err(AgentError::NoInteriorExit { lo, hi });
    };
    // f(d_pos) > 0 > f(d_neg) with d_neg < d_pos
    for _ in 0..400 {
        if d_pos - d_neg <= EXIT_TOLERANCE {
            break;
        }
        let mid = 0.5 * (d_neg + d_pos);
        if mid <= d_neg || mid >= d_pos {
            break;
        }
        let fm = f(mid);
        if fm > 0.0 {
            d_pos = mid;
        } else if fm < 0.0 {
            d_neg = mid;
        } else {
            d_neg = mid;
            d_pos = mid;
        }
    }
    let d = 0.5 * (d_neg + d_pos);
    if d <= 0.0 || d >= span {
        return Err(AgentError::NoInteriorExit { lo, hi });
    }
    Ok(ExitSolution { t_exit: hi - d, residual: f(d), bracket: (lo, hi) })
}
