//! Model 2: log-price y with momentum x,
//!
//! dy = x (1 + γ) dt − (σ/μ) x dW,   dx = μ x^m (1 + δ) dt − σ x^m dW,
//!
//! where the momentum has a finite-time singularity and y stays finite.

use super::noise::WienerIncrements;
use super::ou::{simulate_ou_with, OuParams, OuPath, TcPath};
use super::{ModelError, OVERFLOW_GUARD};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model2Params {
    pub mu: f64,
    pub m: f64,
    /// Terminal log-price y(T_c).
    pub a: f64,
    /// Initial momentum x(0).
    pub x0: f64,
}

impl Model2Params {
    pub fn new(mu: f64, m: f64, a: f64, x0: f64) -> Result<Self, ModelError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(ModelError::InvalidParams(format!("mu must be positive, got {mu}")));
        }
        if !(m > 2.0 && m.is_finite()) {
            return Err(ModelError::InvalidParams(format!("m must exceed 2, got {m}")));
        }
        if !a.is_finite() {
            return Err(ModelError::InvalidParams("A must be finite".into()));
        }
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(ModelError::InvalidParams(format!("x0 must be positive, got {x0}")));
        }
        Ok(Self { mu, m, a, x0 })
    }

    pub fn beta(&self) -> f64 {
        1.0 / (self.m - 1.0)
    }

    /// B = (β/μ)^β / (1 − β).
    pub fn b(&self) -> f64 {
        let beta = self.beta();
        (beta / self.mu).powf(beta) / (1.0 - beta)
    }

    /// Momentum prefactor (β/μ)^β.
    pub fn k(&self) -> f64 {
        let beta = self.beta();
        (beta / self.mu).powf(beta)
    }

    /// T_c = (β/μ) x0^(−1/β).
    pub fn critical_time(&self) -> f64 {
        let beta = self.beta();
        beta / self.mu * self.x0.powf(-1.0 / beta)
    }

    /// A − B D^(1−β) for time-to-singularity D ≥ 0.
    pub fn logprice_at(&self, time_to_singularity: f64) -> Result<f64, ModelError> {
        if time_to_singularity < 0.0 || time_to_singularity.is_nan() {
            return Err(ModelError::PastSingularity { remaining: time_to_singularity });
        }
        Ok(self.a - self.b() * time_to_singularity.powf(1.0 - self.beta()))
    }

    /// (β/μ)^β D^(−β) for D > 0.
    pub fn momentum_at(&self, time_to_singularity: f64) -> Result<f64, ModelError> {
        if !(time_to_singularity > 0.0) {
            return Err(ModelError::PastSingularity { remaining: time_to_singularity });
        }
        Ok(self.k() * time_to_singularity.powf(-self.beta()))
    }
}

/// y at sample `index` of `path`: A − B (T_c + t̃_c(t) − t)^(1−β).
pub fn model2_logprice_closed_form(p: &Model2Params, path: &TcPath, index: usize) -> Result<f64, ModelError> {
    p.logprice_at(path.time_to_singularity(index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model2Path {
    pub log_prices: Vec<f64>,
    pub momenta: Vec<f64>,
    pub ou: OuPath,
    pub truncated_at: Option<usize>,
    pub t_c: f64,
}

impl Model2Path {
    pub fn dt(&self) -> f64 {
        self.ou.dt()
    }

    pub fn tc_path(&self) -> TcPath {
        let mut tc = TcPath::from_ou(self.t_c, &self.ou);
        tc.t_values.truncate(self.log_prices.len());
        tc.tc_values.truncate(self.log_prices.len());
        tc
    }
}

pub fn simulate_model2_sde(
    p: &Model2Params,
    ou: &OuParams,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<Model2Path, ModelError> {
    let noise = WienerIncrements::generate(dt, n_steps, seed)?;
    simulate_model2_sde_with(p, ou, noise)
}

/// Euler–Maruyama for (y, x), co-simulated with the OU residual on the same increments.
///
/// γ = α t̃_c + (σ²/2μ) x^(m−1) and δ = α t̃_c + ½ m (σ²/μ) x^(m−1), σ = noise_scale·μ;
/// both diffusions enter with the sign opposite to the OU's.
pub fn simulate_model2_sde_with(
    p: &Model2Params,
    ou: &OuParams,
    noise: WienerIncrements,
) -> Result<Model2Path, ModelError> {
    let dt = noise.dt();
    let mu = p.mu;
    let m = p.m;
    let sigma = ou.noise_scale * mu;
    let t_c = p.critical_time();
    let ou_path = simulate_ou_with(ou, noise);

    let d0 = t_c + ou.t0_value;
    let mut x = p.momentum_at(d0)?;
    let mut y = p.logprice_at(d0)?;
    let guard = x * OVERFLOW_GUARD;

    let increments = ou_path.noise.as_slice();
    let mut log_prices = Vec::with_capacity(increments.len() + 1);
    let mut momenta = Vec::with_capacity(increments.len() + 1);
    log_prices.push(y);
    momenta.push(x);
    let mut truncated_at = None;
    for (k, &dw) in increments.iter().enumerate() {
        let next_t = (k + 1) as f64 * dt;
        if t_c + ou_path.values[k + 1] - next_t <= 0.0 {
            truncated_at = Some(k + 1);
            break;
        }
        let tc = ou_path.values[k];
        let xm1 = x.powf(m - 1.0);
        let gamma = ou.alpha * tc + sigma * sigma / (2.0 * mu) * xm1;
        let delta = ou.alpha * tc + 0.5 * m * sigma * sigma / mu * xm1;
        let xm = x * xm1;
        let dy = x * (1.0 + gamma) * dt - sigma / mu * x * dw;
        let dx = mu * xm * (1.0 + delta) * dt - sigma * xm * dw;
        y += dy;
        x += dx;
        if !(x.is_finite() && x > 0.0 && x <= guard && y.is_finite()) {
            return Err(ModelError::Blowup(k + 1));
        }
        log_prices.push(y);
        momenta.push(x);
    }
    Ok(Model2Path { log_prices, momenta, ou: ou_path, truncated_at, t_c })
}
