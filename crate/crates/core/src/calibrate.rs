//! Per-window grid calibration: transform every grid point, keep the points
//! whose residual rejects the unit root, rank them by DF statistic, keep ten,
//! and pick the one with the smallest residual variance.
//!
//! Along the scale axis the residual is affine in the scale, r = a + d·b with
//! a = t − mean(t) and b the centred, mean-normalised power term, so the DF
//! sums and the variance are quadratics in d. Each (β) or (A, β) line costs
//! one pass over the window; every scale point on it is then O(1). Points that
//! pass this screen are re-checked on the materialised transform before they
//! enter the elite.

use crate::timeseries::PriceWindow;
use crate::transform::{invert_model1_at, invert_model2_at, Model1SearchPoint, Model2SearchPoint};
use crate::unitroot::{reject_at, CriticalValueTable, DfError, DfSums};
use crate::BubbleModel;
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

pub const ELITE_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrateError {
    #[error("window has {actual} points, the model is configured for {expected}")]
    WindowLengthMismatch { expected: usize, actual: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    UnitRoot(#[from] DfError),
}

/// Search grids for both models.
///
/// Model 1: β_k = beta_min + k·(beta_max − beta_min)/n_beta, k = 1..=n_beta.
/// Model 2: β_k = lo + k·(hi − lo)/(n_beta+1) over `model2_beta_range`, and A_j = M + w·j/n_a, j = 1..=n_a, with M the window's max log-price and
/// w = M (so the top of the grid is 2M), or 1 when M ≤ 0. The scale axis (c1 or B)
/// is log-spaced so that the mean of the scale term c1·p^(−1/β), resp.
/// ((A − ln p)/B)^(1/(1−β)), runs over `scale_days`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub n_beta: usize,
    pub n_scale: usize,
    pub n_a: usize,
    pub model1_beta_min: f64,
    pub model1_beta_max: f64,
    /// Open interval for the model-2 β axis, inside (0, 1).
    pub model2_beta_range: (f64, f64),
    pub scale_days: (f64, f64),
    /// Expected window length; the model's default when absent.
    pub window_length: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_beta: 64, n_scale: 64, n_a: 32, model1_beta_min: 0.0, model1_beta_max: 2.0, model2_beta_range: (0.0, 1.0), scale_days: (1.0, 3000.0), window_length: None }
    }
}

impl GridSpec {
    /// Defaults with a finer scale axis (128 points) for model 2.
    pub fn for_model(model: BubbleModel) -> Self {
        match model {
            BubbleModel::Price => Self::default(),
            BubbleModel::Momentum => Self { n_scale: 128, ..Self::default() },
        }
    }

    pub fn validate(&self) -> Result<(), CalibrateError> {
        if self.n_beta == 0 || self.n_scale == 0 || self.n_a == 0 {
            return Err(CalibrateError::InvalidGrid("grid sizes must be positive".into()));
        }
        if !(self.model1_beta_min >= 0.0 && self.model1_beta_max > self.model1_beta_min && self.model1_beta_max.is_finite()) {
            return Err(CalibrateError::InvalidGrid(format!(
                "model-1 beta range ({}, {}]",
                self.model1_beta_min, self.model1_beta_max
            )));
        }
        let (b_lo, b_hi) = self.model2_beta_range;
        if !(b_lo >= 0.0 && b_hi > b_lo && b_hi <= 1.0) {
            return Err(CalibrateError::InvalidGrid(format!("model-2 beta range ({b_lo}, {b_hi})")));
        }
        let (lo, hi) = self.scale_days;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(CalibrateError::InvalidGrid(format!("scale range ({lo}, {hi})")));
        }
        Ok(())
    }

    pub fn expected_length(&self, model: BubbleModel) -> usize {
        self.window_length.unwrap_or_else(|| model.default_window_length())
    }

    pub fn model1_betas(&self) -> Vec<f64> {
        let step = self.model1_beta_step();
        (1..=self.n_beta).map(|k| self.model1_beta_min + k as f64 * step).collect()
    }

    /// Grid spacing of the model-1 β axis.
    pub fn model1_beta_step(&self) -> f64 {
        (self.model1_beta_max - self.model1_beta_min) / self.n_beta as f64
    }

    pub fn model2_betas(&self) -> Vec<f64> {
        let (lo, hi) = self.model2_beta_range;
        let step = (hi - lo) / (self.n_beta + 1) as f64;
        (1..=self.n_beta).map(|k| lo + k as f64 * step).collect()
    }

    pub fn model2_a_values(&self, max_log_price: f64) -> Vec<f64> {
        let width = if max_log_price > 0.0 { max_log_price } else { 1.0 };
        (1..=self.n_a).map(|j| max_log_price + width * j as f64 / self.n_a as f64).collect()
    }

    /// Log-spaced mean sizes of the scale term, in trading days.
    pub fn scale_means(&self) -> Vec<f64> {
        let (lo, hi) = self.scale_days;
        if self.n_scale == 1 {
            return vec![(lo * hi).sqrt()];
        }
        let step = (hi / lo).ln() / (self.n_scale - 1) as f64;
        (0..self.n_scale).map(|j| lo * (step * j as f64).exp()).collect()
    }

    pub fn n_points(&self, model: BubbleModel) -> usize {
        match model {
            BubbleModel::Price => self.n_beta * self.n_scale,
            BubbleModel::Momentum => self.n_a * self.n_beta * self.n_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum SearchPoint {
    #[serde(rename = "fts-price")]
    Model1(Model1SearchPoint),
    #[serde(rename = "fts-momentum")]
    Model2(Model2SearchPoint),
}

impl SearchPoint {
    pub fn beta(&self) -> f64 {
        match self {
            SearchPoint::Model1(p) => p.beta,
            SearchPoint::Model2(p) => p.beta,
        }
    }

    pub fn m(&self) -> f64 {
        match self {
            SearchPoint::Model1(p) => p.m(),
            SearchPoint::Model2(p) => p.m(),
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            SearchPoint::Model1(p) => p.mu(),
            SearchPoint::Model2(p) => p.mu(),
        }
    }

    /// Transformed series of `prices` on offsets 0..n.
    pub fn transform(&self, prices: &[f64]) -> Result<crate::transform::CriticalTimePath, crate::transform::TransformError> {
        let t: Vec<f64> = (0..prices.len()).map(|i| i as f64).collect();
        match self {
            SearchPoint::Model1(p) => invert_model1_at(prices, &t, p),
            SearchPoint::Model2(p) => invert_model2_at(prices, &t, p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EliteMember {
    pub point: SearchPoint,
    /// Position in the grid's enumeration order.
    pub grid_index: usize,
    pub t_stat: f64,
    pub rho_hat: f64,
    /// Population variance of the residual t̃_c series.
    pub variance: f64,
    /// Mean critical time, as a within-window offset.
    pub t_c_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub model: BubbleModel,
    pub window_end_index: usize,
    pub window_end_date: NaiveDate,
    pub window_length: usize,
    pub critical_value: f64,
    pub n_points: usize,
    /// Points passing the unit-root screen before elite truncation.
    pub n_rejecting: usize,
    pub elite: Vec<EliteMember>,
    pub best: Option<EliteMember>,
    pub t_c_hat: Option<f64>,
    pub m: Option<f64>,
    pub mu: Option<f64>,
}

impl CalibrationResult {
    /// Best T_c as trading days after the window's last observation.
    pub fn horizon(&self) -> Option<f64> {
        self.t_c_hat.map(|t| t - (self.window_length as f64 - 1.0))
    }
}

/// Elite and bookkeeping for one price window, independent of dates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub n_points: usize,
    pub n_rejecting: usize,
    pub elite: Vec<EliteMember>,
    pub best: Option<EliteMember>,
}

pub fn grid_search(
    window: &PriceWindow<'_>,
    model: BubbleModel,
    grid: &GridSpec,
    table: &CriticalValueTable,
) -> Result<CalibrationResult, CalibrateError> {
    let expected = grid.expected_length(model);
    if window.len() != expected {
        return Err(CalibrateError::WindowLengthMismatch { expected, actual: window.len() });
    }
    let cv = table.get(window.len())?;
    let out = search_prices(window.closes(), model, grid, cv)?;
    Ok(CalibrationResult {
        model,
        window_end_index: window.end_index(),
        window_end_date: window.end_date(),
        window_length: window.len(),
        critical_value: cv,
        n_points: out.n_points,
        n_rejecting: out.n_rejecting,
        t_c_hat: out.best.map(|b| b.t_c_hat),
        m: out.best.map(|b| b.point.m()),
        mu: out.best.map(|b| b.point.mu()),
        elite: out.elite,
        best: out.best,
    })
}

/// Grid search on raw prices at offsets 0..n against an explicit critical value.
pub fn search_prices(
    prices: &[f64],
    model: BubbleModel,
    grid: &GridSpec,
    critical_value: f64,
) -> Result<GridOutcome, CalibrateError> {
    grid.validate()?;
    if prices.len() < 3 {
        return Err(CalibrateError::UnitRoot(DfError::TooShort(prices.len())));
    }
    if prices.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(CalibrateError::InvalidGrid("window contains non-positive prices".into()));
    }
    let log_p: Vec<f64> = prices.iter().map(|p| p.ln()).collect();
    let means = grid.scale_means();
    let mut candidates = match model {
        BubbleModel::Price => screen_model1(&log_p, grid, &means, critical_value),
        BubbleModel::Momentum => screen_model2(&log_p, grid, &means, critical_value),
    };
    let n_rejecting = candidates.len();
    candidates.sort_by(|a, b| elite_order(a.t_stat, a.variance, a.grid_index, b.t_stat, b.variance, b.grid_index));

    let mut verified = Vec::with_capacity(ELITE_SIZE);
    for c in candidates {
        if verified.len() == ELITE_SIZE {
            break;
        }
        let Ok(path) = c.point.transform(prices) else { continue };
        let df = reject_at(&path.residual, critical_value)?;
        if df.reject == Some(true) {
            verified.push(EliteMember {
                point: c.point,
                grid_index: c.grid_index,
                t_stat: df.t_stat,
                rho_hat: df.rho_hat,
                variance: path.residual_variance(),
                t_c_hat: path.t_c_hat,
            });
        }
    }
    let elite = rank_elite(verified);
    let best = select_best(&elite);
    Ok(GridOutcome { n_points: grid.n_points(model), n_rejecting, elite, best })
}

/// Ascending t-statistic, then smaller variance, then grid order; at most ten.
pub fn rank_elite(mut candidates: Vec<EliteMember>) -> Vec<EliteMember> {
    candidates.sort_by(|a, b| elite_order(a.t_stat, a.variance, a.grid_index, b.t_stat, b.variance, b.grid_index));
    candidates.truncate(ELITE_SIZE);
    candidates
}

/// Minimum residual variance; the earlier elite member wins ties.
pub fn select_best(elite: &[EliteMember]) -> Option<EliteMember> {
    elite.iter().copied().reduce(|best, e| if e.variance < best.variance { e } else { best })
}

fn elite_order(ta: f64, va: f64, ia: usize, tb: f64, vb: f64, ib: usize) -> Ordering {
    ta.total_cmp(&tb).then(va.total_cmp(&vb)).then(ia.cmp(&ib))
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    point: SearchPoint,
    grid_index: usize,
    t_stat: f64,
    variance: f64,
}

/// Moments of r = a + d·b needed for the DF statistic and the variance.
struct AffineSums {
    n: usize,
    lag: [f64; 3],
    cross: [f64; 3],
    diff: [f64; 3],
    full: [f64; 3],
}

impl AffineSums {
    /// `w` is the mean-one scale term; a is the centred time offset.
    fn new(w: &[f64]) -> Self {
        let n = w.len();
        let t_mean = (n as f64 - 1.0) / 2.0;
        let w_mean = w.iter().sum::<f64>() / n as f64;
        let a = |i: usize| i as f64 - t_mean;
        let b = |i: usize| w[i] - w_mean;
        let mut s = AffineSums { n, lag: [0.0; 3], cross: [0.0; 3], diff: [0.0; 3], full: [0.0; 3] };
        for i in 0..n {
            let (ai, bi) = (a(i), b(i));
            s.full[0] += ai * ai;
            s.full[1] += ai * bi;
            s.full[2] += bi * bi;
            if i + 1 < n {
                let db = b(i + 1) - bi;
                s.lag[0] += ai * ai;
                s.lag[1] += ai * bi;
                s.lag[2] += bi * bi;
                // Δa ≡ 1
                s.cross[0] += ai;
                s.cross[1] += ai * db + bi;
                s.cross[2] += bi * db;
                s.diff[1] += db;
                s.diff[2] += db * db;
            }
        }
        s.diff[0] = (n - 1) as f64;
        s
    }

    fn at(&self, d: f64) -> (DfSums, f64) {
        let sums = DfSums {
            sxx: self.lag[0] + 2.0 * d * self.lag[1] + d * d * self.lag[2],
            sxy: self.cross[0] + d * self.cross[1] + d * d * self.cross[2],
            syy: self.diff[0] + 2.0 * d * self.diff[1] + d * d * self.diff[2],
            n_obs: self.n - 1,
        };
        let var = (self.full[0] + 2.0 * d * self.full[1] + d * d * self.full[2]) / self.n as f64;
        (sums, var)
    }
}

/// Scale term normalised to mean one, with its mean; `None` if not representable.
fn normalised(v: Vec<f64>) -> Option<(Vec<f64>, f64)> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    if !(mean > 0.0 && mean.is_finite()) || v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    Some((v.into_iter().map(|x| x / mean).collect(), mean))
}

fn screen_line(sums: &AffineSums, means: &[f64], cv: f64, mut emit: impl FnMut(usize, f64, f64, f64)) {
    for (j, &d) in means.iter().enumerate() {
        let (df, var) = sums.at(d);
        if let Ok((_, t)) = df.statistic() {
            if t < cv && var > 0.0 {
                emit(j, d, t, var);
            }
        }
    }
}

fn screen_model1(log_p: &[f64], grid: &GridSpec, means: &[f64], cv: f64) -> Vec<Candidate> {
    let betas = grid.model1_betas();
    let n_scale = means.len();
    let lines: Vec<Vec<Candidate>> = betas
        .par_iter()
        .enumerate()
        .map(|(k, &beta)| {
            let mut out = Vec::new();
            // centre the log-price so p^(−1/β) stays representable for small β
            let centre = log_p.iter().sum::<f64>() / log_p.len() as f64;
            let raw: Vec<f64> = log_p.iter().map(|y| (-(y - centre) / beta).exp()).collect();
            let Some((w, w_mean)) = normalised(raw) else { return out };
            // c1·p^(−1/β) = d·w  ⇒  c1 = d / (w_mean·e^(centre/β))
            let log_unit = w_mean.ln() - centre / beta;
            let sums = AffineSums::new(&w);
            screen_line(&sums, means, cv, |j, d, t, var| {
                let c1 = (d.ln() - log_unit).exp();
                if let Ok(point) = Model1SearchPoint::new(c1, beta) {
                    out.push(Candidate { point: SearchPoint::Model1(point), grid_index: k * n_scale + j, t_stat: t, variance: var });
                }
            });
            out
        })
        .collect();
    lines.into_iter().flatten().collect()
}

fn screen_model2(log_p: &[f64], grid: &GridSpec, means: &[f64], cv: f64) -> Vec<Candidate> {
    let max_y = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a_values = grid.model2_a_values(max_y);
    let betas = grid.model2_betas();
    let n_scale = means.len();
    let n_beta = betas.len();
    let pairs: Vec<(usize, f64, usize, f64)> = a_values
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| betas.iter().enumerate().map(move |(k, &b)| (i, a, k, b)))
        .collect();
    let lines: Vec<Vec<Candidate>> = pairs
        .par_iter()
        .map(|&(i, a, k, beta)| {
            let mut out = Vec::new();
            let expo = 1.0 / (1.0 - beta);
            let raw: Vec<f64> = log_p.iter().map(|y| (a - y).powf(expo)).collect();
            let Some((w, w_mean)) = normalised(raw) else { return out };
            let sums = AffineSums::new(&w);
            screen_line(&sums, means, cv, |j, d, t, var| {
                // (u/B)^(1/(1−β)) = d·w  ⇒  B = (w_mean/d)^(1−β)
                let b = (w_mean / d).powf(1.0 - beta);
                if let Ok(point) = Model2SearchPoint::new(a, b, beta) {
                    let grid_index = (i * n_beta + k) * n_scale + j;
                    out.push(Candidate { point: SearchPoint::Model2(point), grid_index, t_stat: t, variance: var });
                }
            });
            out
        })
        .collect();
    lines.into_iter().flatten().collect()
}
