//! First-order log-return approximations and the exact expressions they expand.
//!
//! `duration` is T_c + t̃_c(t) − t, `delta_tc` the change Δt̃_c over the horizon τ.

use super::{Model1Params, Model2Params};

/// r ≈ β/(T_c + t̃_c − t) · (τ − Δt̃_c).
pub fn model1_return_approx(p: &Model1Params, duration: f64, delta_tc: f64, tau: f64) -> f64 {
    p.beta() / duration * (tau - delta_tc)
}

/// r = −β ln(1 + (Δt̃_c − τ)/(T_c + t̃_c − t)).
pub fn model1_return_exact(p: &Model1Params, duration: f64, delta_tc: f64, tau: f64) -> f64 {
    -p.beta() * ((delta_tc - tau) / duration).ln_1p()
}

/// r ≈ (1−β) B (T_c + t̃_c − t)^(−β) · (τ − Δt̃_c).
pub fn model2_return_approx(p: &Model2Params, duration: f64, delta_tc: f64, tau: f64) -> f64 {
    let beta = p.beta();
    (1.0 - beta) * p.b() * duration.powf(-beta) * (tau - delta_tc)
}

/// r = −B D^(1−β) [(1 + (Δt̃_c − τ)/D)^(1−β) − 1] with D = T_c + t̃_c − t.
pub fn model2_return_exact(p: &Model2Params, duration: f64, delta_tc: f64, tau: f64) -> f64 {
    let beta = p.beta();
    let ratio = (delta_tc - tau) / duration;
    // (1+r)^(1−β) − 1 without cancellation for small r
    let growth = ((1.0 - beta) * ratio.ln_1p()).exp_m1();
    -p.b() * duration.powf(1.0 - beta) * growth
}
