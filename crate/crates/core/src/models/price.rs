//! Model 1: dp = μ p^m (1 + δ) dt − σ p^m dW with a finite-time singularity in p.

use super::noise::WienerIncrements;
use super::ou::{simulate_ou_with, OuParams, OuPath, TcPath};
use super::{ModelError, OVERFLOW_GUARD};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model1Params {
    pub mu: f64,
    pub m: f64,
    pub p0: f64,
}

impl Model1Params {
    pub fn new(mu: f64, m: f64, p0: f64) -> Result<Self, ModelError> {
        if !(m > 1.0 && m.is_finite()) {
            return Err(ModelError::InvalidParams(format!("m must exceed 1, got {m}")));
        }
        Self::checked(mu, m, p0)
    }

    /// The m = 1 limit, where the dynamics reduce to geometric Brownian motion.
    /// Only the simulator accepts it; closed forms return [`ModelError::NoSingularity`].
    pub fn linear(mu: f64, p0: f64) -> Result<Self, ModelError> {
        Self::checked(mu, 1.0, p0)
    }

    fn checked(mu: f64, m: f64, p0: f64) -> Result<Self, ModelError> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(ModelError::InvalidParams(format!("mu must be positive, got {mu}")));
        }
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(ModelError::InvalidParams(format!("p0 must be positive, got {p0}")));
        }
        Ok(Self { mu, m, p0 })
    }

    /// β = 1/(m−1).
    pub fn beta(&self) -> f64 {
        1.0 / (self.m - 1.0)
    }

    /// K = (β/μ)^β.
    pub fn k(&self) -> f64 {
        let b = self.beta();
        (b / self.mu).powf(b)
    }

    /// T_c = (β/μ) p0^(−1/β).
    pub fn critical_time(&self) -> f64 {
        let b = self.beta();
        b / self.mu * self.p0.powf(-1.0 / b)
    }

    /// K (T_c + t̃_c − t)^(−β) for a given time-to-singularity.
    pub fn price_at(&self, time_to_singularity: f64) -> Result<f64, ModelError> {
        if self.m <= 1.0 {
            return Err(ModelError::NoSingularity);
        }
        if !(time_to_singularity > 0.0) {
            return Err(ModelError::PastSingularity { remaining: time_to_singularity });
        }
        Ok(self.k() * time_to_singularity.powf(-self.beta()))
    }
}

/// Price at sample `index` of `path`: K (T_c + t̃_c(t) − t)^(−β).
pub fn model1_price_closed_form(p: &Model1Params, path: &TcPath, index: usize) -> Result<f64, ModelError> {
    p.price_at(path.time_to_singularity(index))
}

/// Which δ(p, t) regulator the simulator uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DeltaTerm {
    /// δ = α t̃_c + ½ m (σ²/μ) p^(m−1): the form under which the closed form holds.
    #[default]
    Full,
    /// δ ≡ 0.
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model1Path {
    pub prices: Vec<f64>,
    pub ou: OuPath,
    /// First step at which T_c + t̃_c − t ≤ 0, where the path was cut.
    pub truncated_at: Option<usize>,
    pub t_c: f64,
}

impl Model1Path {
    pub fn dt(&self) -> f64 {
        self.ou.dt()
    }

    pub fn tc_path(&self) -> TcPath {
        let mut tc = TcPath::from_ou(self.t_c, &self.ou);
        tc.t_values.truncate(self.prices.len());
        tc.tc_values.truncate(self.prices.len());
        tc
    }
}

pub fn simulate_model1_sde(
    p: &Model1Params,
    ou: &OuParams,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<Model1Path, ModelError> {
    let noise = WienerIncrements::generate(dt, n_steps, seed)?;
    simulate_model1_sde_with(p, ou, noise, DeltaTerm::Full)
}

/// Euler–Maruyama for the price, co-simulated with the OU residual on the same increments.
///
/// σ = noise_scale·μ. The path starts on the closed form, p(0) = K (T_c + t̃_c(0))^(−β),
/// which is p0 when t̃_c(0) = 0.
pub fn simulate_model1_sde_with(
    p: &Model1Params,
    ou: &OuParams,
    noise: WienerIncrements,
    delta: DeltaTerm,
) -> Result<Model1Path, ModelError> {
    let dt = noise.dt();
    let sigma = ou.noise_scale * p.mu;
    let has_fts = p.m > 1.0;
    let t_c = if has_fts { p.critical_time() } else { f64::INFINITY };
    let ou_path = simulate_ou_with(ou, noise);

    let start = if has_fts && ou.t0_value != 0.0 { p.price_at(t_c + ou.t0_value)? } else { p.p0 };
    let guard = start * OVERFLOW_GUARD;

    let increments = ou_path.noise.as_slice();
    let mut prices = Vec::with_capacity(increments.len() + 1);
    prices.push(start);
    let mut price = start;
    let mut truncated_at = None;
    for (k, &dw) in increments.iter().enumerate() {
        let next_t = (k + 1) as f64 * dt;
        if has_fts && t_c + ou_path.values[k + 1] - next_t <= 0.0 {
            truncated_at = Some(k + 1);
            break;
        }
        let pm = price.powf(p.m);
        let d = match delta {
            DeltaTerm::Full => {
                ou.alpha * ou_path.values[k] + 0.5 * p.m * sigma * sigma / p.mu * price.powf(p.m - 1.0)
            }
            DeltaTerm::Off => 0.0,
        };
        price += p.mu * pm * (1.0 + d) * dt - sigma * pm * dw;
        if !(price.is_finite() && price > 0.0 && price <= guard) {
            return Err(ModelError::Blowup(k + 1));
        }
        prices.push(price);
    }
    Ok(Model1Path { prices, ou: ou_path, truncated_at, t_c })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_for_quadratic_feedback() {
        // m=2, μ=1, p0=0.01 → T_c = 100, p(t) = 1/(100 − t)
        let p = Model1Params::new(1.0, 2.0, 0.01).unwrap();
        assert!((p.beta() - 1.0).abs() < 1e-15);
        assert!((p.k() - 1.0).abs() < 1e-15);
        assert!((p.critical_time() - 100.0).abs() < 1e-9);
        let path = TcPath::deterministic(100.0, vec![0.0, 50.0, 99.0]);
        assert!((model1_price_closed_form(&p, &path, 0).unwrap() - 0.01).abs() < 1e-15);
        assert!((model1_price_closed_form(&p, &path, 1).unwrap() - 0.02).abs() < 1e-15);
        assert!((model1_price_closed_form(&p, &path, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singularity_boundary() {
        let p = Model1Params::new(1.0, 2.0, 0.01).unwrap();
        let path = TcPath::deterministic(100.0, vec![99.999, 100.0, 101.0]);
        assert!(model1_price_closed_form(&p, &path, 0).unwrap() > 9.9e2);
        assert!(matches!(model1_price_closed_form(&p, &path, 1), Err(ModelError::PastSingularity { .. })));
        assert!(matches!(model1_price_closed_form(&p, &path, 2), Err(ModelError::PastSingularity { .. })));
    }

    #[test]
    fn beta_two_example() {
        // m=1.5 → β=2, μ=1 → K=4; p0 chosen so T_c = 50: p0 = (β/(μ T_c))^β = (2/50)^2
        let p = Model1Params::new(1.0, 1.5, (2.0f64 / 50.0).powi(2)).unwrap();
        assert!((p.k() - 4.0).abs() < 1e-12);
        assert!((p.critical_time() - 50.0).abs() < 1e-9);
        let path = TcPath::deterministic(50.0, vec![25.0]);
        let expected = 4.0 * 25f64.powi(-2);
        assert!((model1_price_closed_form(&p, &path, 0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn noise_free_sde_tracks_deterministic_solution() {
        let p = Model1Params::new(1.0, 2.0, 0.01).unwrap();
        let ou = OuParams::new(0.1, 0.0, 0.0).unwrap();
        let mut prev_err = f64::INFINITY;
        for dt in [1e-1, 1e-2, 1e-3] {
            let n = (50.0 / dt) as usize;
            let sim = simulate_model1_sde(&p, &ou, dt, n, 0).unwrap();
            let tc = sim.tc_path();
            let err = (0..sim.prices.len())
                .map(|i| (sim.prices[i] / model1_price_closed_form(&p, &tc, i).unwrap() - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(err < prev_err);
            assert!(err < 0.5 * dt, "dt={dt} err={err}");
            prev_err = err;
        }
    }

    #[test]
    fn guard_and_truncation() {
        let p = Model1Params::new(1.0, 2.0, 0.01).unwrap();
        let ou = OuParams::new(0.1, 0.0, 0.0).unwrap();
        // runs straight into the singularity at t=100
        let sim = simulate_model1_sde(&p, &ou, 1.0, 150, 0).unwrap();
        assert_eq!(sim.truncated_at, Some(100));
        assert_eq!(sim.prices.len(), 100);
        // explosive growth without a singularity trips the overflow guard
        let p = Model1Params::linear(1e3, 1.0).unwrap();
        let noise = WienerIncrements::zeros(1.0, 10).unwrap();
        assert_eq!(
            simulate_model1_sde_with(&p, &ou, noise, DeltaTerm::Off),
            Err(ModelError::Blowup(4))
        );
    }

    #[test]
    fn linear_limit_is_geometric_brownian_motion() {
        // m=1, δ≡0: log-increments ~ N((μ − σ²/2) dt, σ² dt)
        let mu = 0.0004;
        let sigma = 0.01;
        let p = Model1Params::linear(mu, 100.0).unwrap();
        let ou = OuParams::new(0.0, sigma / mu, 0.0).unwrap();
        let n = 10_000;
        let noise = WienerIncrements::generate(1.0, n, 77).unwrap();
        let sim = simulate_model1_sde_with(&p, &ou, noise, DeltaTerm::Off).unwrap();
        let r: Vec<f64> = sim.prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        let nf = r.len() as f64;
        let mean = r.iter().sum::<f64>() / nf;
        let sd = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
        let se_mean = sigma / nf.sqrt();
        assert!((mean - (mu - 0.5 * sigma * sigma)).abs() < 3.0 * se_mean, "mean {mean}");
        assert!((sd - sigma).abs() < 3.0 * sigma / (2.0 * nf).sqrt(), "sd {sd}");
        assert_eq!(p.price_at(1.0), Err(ModelError::NoSingularity));
    }
}
