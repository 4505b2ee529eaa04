use super::noise::WienerIncrements;
use super::ModelError;
use serde::{Deserialize, Serialize};

/// Zero-mean OU process dt̃_c = −α t̃_c dt + s dW for the critical-time residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    /// Mean-reversion rate per trading day.
    pub alpha: f64,
    /// Diffusion amplitude s = σ/μ.
    pub noise_scale: f64,
    /// Starting value t̃_c(0).
    pub t0_value: f64,
}

impl OuParams {
    pub fn new(alpha: f64, noise_scale: f64, t0_value: f64) -> Result<Self, ModelError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(ModelError::InvalidParams(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "noise_scale must be >= 0, got {noise_scale}"
            )));
        }
        if !t0_value.is_finite() {
            return Err(ModelError::InvalidParams("t0_value must be finite".into()));
        }
        Ok(Self { alpha, noise_scale, t0_value })
    }

    /// Stationary variance s²/(2α); infinite when α = 0.
    pub fn stationary_variance(&self) -> f64 {
        self.noise_scale * self.noise_scale / (2.0 * self.alpha)
    }
}

/// Euler–Maruyama OU path sampled at k·dt, k = 0..=n_steps, with its driving noise.
#[derive(Debug, Clone, PartialEq)]
pub struct OuPath {
    pub values: Vec<f64>,
    pub noise: WienerIncrements,
}

impl OuPath {
    pub fn dt(&self) -> f64 {
        self.noise.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| k as f64 * self.dt()).collect()
    }
}

pub fn simulate_ou(params: &OuParams, dt: f64, n_steps: usize, seed: u64) -> Result<OuPath, ModelError> {
    let noise = WienerIncrements::generate(dt, n_steps, seed)?;
    Ok(simulate_ou_with(params, noise))
}

/// OU path driven by a given increment stream.
pub fn simulate_ou_with(params: &OuParams, noise: WienerIncrements) -> OuPath {
    let dt = noise.dt();
    let mut values = Vec::with_capacity(noise.len() + 1);
    let mut z = params.t0_value;
    values.push(z);
    for &dw in noise.as_slice() {
        z += -params.alpha * z * dt + params.noise_scale * dw;
        values.push(z);
    }
    OuPath { values, noise }
}

/// Critical-time path T̃_c(t) = T_c + t̃_c(t) sampled at `t_values`.
#[derive(Debug, Clone, PartialEq)]
pub struct TcPath {
    pub t_values: Vec<f64>,
    pub tc_values: Vec<f64>,
    /// Unconditional mean critical time.
    pub t_c: f64,
}

impl TcPath {
    pub fn new(t_c: f64, t_values: Vec<f64>, tc_values: Vec<f64>) -> Result<Self, ModelError> {
        if t_values.len() != tc_values.len() {
            return Err(ModelError::InvalidParams(format!(
                "t and t̃_c lengths differ: {} vs {}",
                t_values.len(),
                tc_values.len()
            )));
        }
        Ok(Self { t_values, tc_values, t_c })
    }

    pub fn from_ou(t_c: f64, ou: &OuPath) -> Self {
        Self { t_values: ou.times(), tc_values: ou.values.clone(), t_c }
    }

    /// Deterministic path with t̃_c ≡ 0.
    pub fn deterministic(t_c: f64, t_values: Vec<f64>) -> Self {
        let n = t_values.len();
        Self { t_values, tc_values: vec![0.0; n], t_c }
    }

    pub fn len(&self) -> usize {
        self.t_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_values.is_empty()
    }

    /// T_c + t̃_c(t) − t at sample `i`.
    pub fn time_to_singularity(&self, i: usize) -> f64 {
        self.t_c + self.tc_values[i] - self.t_values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_zero_start_stays_zero() {
        let p = OuParams::new(0.3, 0.0, 0.0).unwrap();
        let path = simulate_ou(&p, 0.1, 500, 1).unwrap();
        assert!(path.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_decay_matches_exponential() {
        let p = OuParams::new(0.1, 0.0, 1.0).unwrap();
        let dt = 1e-3;
        let path = simulate_ou(&p, dt, 20_000, 1).unwrap();
        for (k, &v) in path.values.iter().enumerate().step_by(997) {
            let t = k as f64 * dt;
            let exact = (-0.1 * t).exp();
            // Euler global error for linear decay is O(dt)
            assert!((v - exact).abs() < 0.1 * dt * t.max(1.0), "t={t} v={v} exact={exact}");
        }
    }

    #[test]
    fn long_run_variance_is_stationary_value() {
        // s²/(2α) = 1/(2·0.05) = 10
        let p = OuParams::new(0.05, 1.0, 0.0).unwrap();
        let dt = 0.1;
        let path = simulate_ou(&p, dt, 2_000_000, 20240611).unwrap();
        let burn = 10_000;
        let xs = &path.values[burn..];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        // batch means on the squared deviations for the standard error
        let batch = 20_000;
        let batch_vars: Vec<f64> = xs
            .chunks_exact(batch)
            .map(|c| c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / batch as f64)
            .collect();
        let nb = batch_vars.len() as f64;
        let bm = batch_vars.iter().sum::<f64>() / nb;
        let se = (batch_vars.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (nb - 1.0) / nb).sqrt();
        assert!((var - p.stationary_variance()).abs() < 3.0 * se, "var {var} se {se}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(OuParams::new(-0.1, 1.0, 0.0).is_err());
        assert!(OuParams::new(0.1, -1.0, 0.0).is_err());
        assert!(simulate_ou(&OuParams::new(0.1, 1.0, 0.0).unwrap(), -1.0, 5, 0).is_err());
    }
}
