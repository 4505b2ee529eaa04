//! Dickey-Fuller unit-root test without intercept or lag augmentation, and
//! its Monte Carlo critical values.
//!
//! The regression is Δx_t = ρ x_{t−1} + ε_t; the statistic is ρ̂/se(ρ̂) and the
//! test rejects the unit root in the lower tail.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DfError {
    #[error("series of length {0} is too short (need at least 3)")]
    TooShort(usize),
    #[error("lagged regressor has zero sum of squares")]
    DegenerateRegressor,
    #[error("regression residuals are identically zero")]
    ZeroResidualVariance,
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("at least 10000 replications are required, got {0}")]
    InsufficientReps(usize),
    #[error("level must lie in (0, 0.5], got {0}")]
    InvalidLevel(f64),
    #[error("no critical value for series length {0}")]
    MissingLength(usize),
    #[error("critical-value table: {0}")]
    Table(String),
}

/// Why a statistic could not be formed; reported instead of a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degeneracy {
    DegenerateRegressor,
    ZeroResidualVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfResult {
    pub rho_hat: f64,
    pub t_stat: f64,
    pub n_obs: usize,
    /// `None` when no critical value was supplied.
    pub reject: Option<bool>,
    /// Set when the series was degenerate; the test then does not reject.
    pub diagnostic: Option<Degeneracy>,
}

/// Lagged sums of the no-intercept regression: Σx², Σx·Δx, ΣΔx² over t = 1..n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DfSums {
    pub sxx: f64,
    pub sxy: f64,
    pub syy: f64,
    pub n_obs: usize,
}

impl DfSums {
    /// (ρ̂, t) from the sums, with the residual sum of squares taken as Syy − Sxy²/Sxx.
    pub(crate) fn statistic(&self) -> Result<(f64, f64), DfError> {
        let ssr = self.syy - self.sxy * self.sxy / self.sxx;
        self.statistic_with_ssr(ssr)
    }

    fn statistic_with_ssr(&self, ssr: f64) -> Result<(f64, f64), DfError> {
        if !(self.sxx > 0.0) {
            return Err(DfError::DegenerateRegressor);
        }
        if !(ssr > ZERO_SSR * self.syy) {
            return Err(DfError::ZeroResidualVariance);
        }
        let rho = self.sxy / self.sxx;
        let se = (ssr / (self.n_obs as f64 - 1.0) / self.sxx).sqrt();
        Ok((rho, rho / se))
    }
}

/// Relative residual sum of squares treated as an exact fit.
const ZERO_SSR: f64 = 1e-24;

pub fn df_tstat(x: &[f64]) -> Result<DfResult, DfError> {
    if x.len() < 3 {
        return Err(DfError::TooShort(x.len()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DfError::NonFinite);
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(DfError::ZeroResidualVariance);
    }
    let mut sums = DfSums { sxx: 0.0, sxy: 0.0, syy: 0.0, n_obs: x.len() - 1 };
    for w in x.windows(2) {
        let d = w[1] - w[0];
        sums.sxx += w[0] * w[0];
        sums.sxy += w[0] * d;
        sums.syy += d * d;
    }
    if !(sums.sxx > 0.0) {
        return Err(DfError::DegenerateRegressor);
    }
    let rho = sums.sxy / sums.sxx;
    let ssr: f64 = x
        .windows(2)
        .map(|w| {
            let e = (w[1] - w[0]) - rho * w[0];
            e * e
        })
        .sum();
    let (rho_hat, t_stat) = sums.statistic_with_ssr(ssr)?;
    Ok(DfResult { rho_hat, t_stat, n_obs: sums.n_obs, reject: None, diagnostic: None })
}

/// DF decision against the table value for `x.len()`.
///
/// Degenerate series come back as non-rejections with `diagnostic` set and a NaN statistic.
pub fn reject_unit_root(x: &[f64], table: &CriticalValueTable) -> Result<DfResult, DfError> {
    let cv = table.get(x.len())?;
    reject_at(x, cv)
}

/// DF decision against an explicit critical value.
pub fn reject_at(x: &[f64], critical_value: f64) -> Result<DfResult, DfError> {
    let degenerate = |d| DfResult {
        rho_hat: f64::NAN,
        t_stat: f64::NAN,
        n_obs: x.len().saturating_sub(1),
        reject: Some(false),
        diagnostic: Some(d),
    };
    match df_tstat(x) {
        Ok(mut r) => {
            r.reject = Some(r.t_stat < critical_value);
            Ok(r)
        }
        Err(DfError::DegenerateRegressor) => Ok(degenerate(Degeneracy::DegenerateRegressor)),
        Err(DfError::ZeroResidualVariance) => Ok(degenerate(Degeneracy::ZeroResidualVariance)),
        Err(e) => Err(e),
    }
}

pub const MIN_REPS: usize = 10_000;

/// `level`-quantile of the DF statistic over `reps` driftless Gaussian random
/// walks of `length` points started at zero.
///
/// Replication `r` draws from ChaCha8 seeded with `seed` on stream `r`, so the
/// result does not depend on the number of worker threads.
pub fn df_critical_value(length: usize, level: f64, reps: usize, seed: u64) -> Result<f64, DfError> {
    if !(level > 0.0 && level <= 0.5) {
        return Err(DfError::InvalidLevel(level));
    }
    if reps < MIN_REPS {
        return Err(DfError::InsufficientReps(reps));
    }
    let stats = null_distribution(length, reps, seed)?;
    Ok(quantile_sorted(&stats, level))
}

/// Sorted DF statistics of `reps` simulated random walks.
pub fn null_distribution(length: usize, reps: usize, seed: u64) -> Result<Vec<f64>, DfError> {
    if length < 3 {
        return Err(DfError::TooShort(length));
    }
    let mut stats: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| random_walk_stat(length, seed, rep))
        .collect();
    stats.sort_by(f64::total_cmp);
    Ok(stats)
}

fn random_walk_stat(length: usize, seed: u64, rep: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    let mut sums = DfSums { sxx: 0.0, sxy: 0.0, syy: 0.0, n_obs: length - 1 };
    let mut x = 0.0;
    for _ in 1..length {
        let e: f64 = StandardNormal.sample(&mut rng);
        sums.sxx += x * x;
        sums.sxy += x * e;
        sums.syy += e * e;
        x += e;
    }
    // a Gaussian walk is degenerate with probability zero
    sums.statistic().map(|(_, t)| t).unwrap_or(f64::NAN)
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Critical values by series length, for one level, reps and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValueTable {
    pub level: f64,
    pub reps: usize,
    pub seed: u64,
    pub values: BTreeMap<usize, f64>,
}

const SHIPPED_TABLE: &str = include_str!("../data/df_critical_values.json");

impl CriticalValueTable {
    pub fn build(lengths: &[usize], level: f64, reps: usize, seed: u64) -> Result<Self, DfError> {
        let mut values = BTreeMap::new();
        for &n in lengths {
            values.insert(n, df_critical_value(n, level, reps, seed)?);
        }
        Ok(Self { level, reps, seed, values })
    }

    /// Table shipped with the crate: lengths 750 and 900 at level 0.005.
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED_TABLE).expect("shipped critical-value table is valid")
    }

    /// A table with explicit values, e.g. for tests or alternative levels.
    pub fn from_values(level: f64, reps: usize, seed: u64, values: BTreeMap<usize, f64>) -> Result<Self, DfError> {
        let t = Self { level, reps, seed, values };
        t.validate()?;
        Ok(t)
    }

    pub fn from_json(text: &str) -> Result<Self, DfError> {
        let t: Self = serde_json::from_str(text).map_err(|e| DfError::Table(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn get(&self, length: usize) -> Result<f64, DfError> {
        self.values.get(&length).copied().ok_or(DfError::MissingLength(length))
    }

    fn validate(&self) -> Result<(), DfError> {
        if !(self.level > 0.0 && self.level <= 0.5) {
            return Err(DfError::InvalidLevel(self.level));
        }
        if let Some((n, v)) = self.values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(DfError::Table(format!("value for length {n} is {v}")));
        }
        Ok(())
    }
}

impl Default for CriticalValueTable {
    fn default() -> Self {
        Self::shipped()
    }
}
