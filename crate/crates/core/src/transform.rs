//! Price → critical-time inversions and the mean/residual split.
//!
//! Time `t` is the within-window trading-day offset `0..L`. Every inversion
//! returns the candidate critical-time series T̃_c(t), its arithmetic mean and
//! the residual t̃_c(t) = T̃_c(t) − mean.

use crate::timeseries::PriceWindow;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("invalid search point: {0}")]
    InvalidSearchPoint(String),
    #[error("A = {a} is below ln p = {log_price} at offset {index}")]
    DomainViolation { index: usize, log_price: f64, a: f64 },
    #[error("non-positive price at offset {0}")]
    NonPositivePrice(usize),
    #[error("empty series")]
    EmptySeries,
    #[error("prices and times differ in length ({prices} vs {times})")]
    LengthMismatch { prices: usize, times: usize },
    #[error("transformed series is not finite at offset {0}")]
    NonFinite(usize),
}

/// Model 1 grid point: T̃_c(t) = c1·p(t)^(−1/β) + t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model1SearchPoint {
    pub c1: f64,
    pub beta: f64,
}

impl Model1SearchPoint {
    pub fn new(c1: f64, beta: f64) -> Result<Self, TransformError> {
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(TransformError::InvalidSearchPoint(format!("c1 must be positive, got {c1}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(TransformError::InvalidSearchPoint(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { c1, beta })
    }

    pub fn m(&self) -> f64 {
        1.0 + 1.0 / self.beta
    }

    /// μ = β/c1, the exact-inversion reading of the prefactor.
    pub fn mu(&self) -> f64 {
        self.beta / self.c1
    }
}

/// Model 2 grid point: T̃_c(t) = t + ((A − ln p(t))/B)^(1/(1−β)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model2SearchPoint {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
}

impl Model2SearchPoint {
    pub fn new(a: f64, b: f64, beta: f64) -> Result<Self, TransformError> {
        if !a.is_finite() {
            return Err(TransformError::InvalidSearchPoint("A must be finite".into()));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(TransformError::InvalidSearchPoint(format!("B must be positive, got {b}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(TransformError::InvalidSearchPoint(format!("beta must lie in (0,1), got {beta}")));
        }
        Ok(Self { a, b, beta })
    }

    pub fn m(&self) -> f64 {
        1.0 + 1.0 / self.beta
    }

    /// μ = β·((1−β)B)^(−1/β).
    pub fn mu(&self) -> f64 {
        self.beta * ((1.0 - self.beta) * self.b).powf(-1.0 / self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalTimePath {
    pub t_values: Vec<f64>,
    pub t_tilde: Vec<f64>,
    pub t_c_hat: f64,
    pub residual: Vec<f64>,
}

impl CriticalTimePath {
    fn from_series(t_values: Vec<f64>, t_tilde: Vec<f64>) -> Result<Self, TransformError> {
        if let Some(i) = t_tilde.iter().position(|v| !v.is_finite()) {
            return Err(TransformError::NonFinite(i));
        }
        let (t_c_hat, residual) = split_mean_residual(&t_tilde)?;
        Ok(Self { t_values, t_tilde, t_c_hat, residual })
    }

    pub fn len(&self) -> usize {
        self.t_tilde.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_tilde.is_empty()
    }

    /// Population variance of the residual.
    pub fn residual_variance(&self) -> f64 {
        self.residual.iter().map(|r| r * r).sum::<f64>() / self.residual.len() as f64
    }
}

/// Residuals at or below this multiple of the largest |T̃_c| are rounding noise
/// of an exactly constant series and are set to zero.
pub const RESIDUAL_SNAP: f64 = 1e-12;

/// (mean, series − mean).
pub fn split_mean_residual(series: &[f64]) -> Result<(f64, Vec<f64>), TransformError> {
    if series.is_empty() {
        return Err(TransformError::EmptySeries);
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let mut residual: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let scale = series.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let spread = residual.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if spread <= RESIDUAL_SNAP * scale {
        residual.iter_mut().for_each(|r| *r = 0.0);
    }
    Ok((mean, residual))
}

pub fn invert_model1(window: &PriceWindow<'_>, point: &Model1SearchPoint) -> Result<CriticalTimePath, TransformError> {
    invert_model1_at(window.closes(), &window.t_values(), point)
}

/// [`invert_model1`] on raw prices at explicit times.
pub fn invert_model1_at(
    prices: &[f64],
    t_values: &[f64],
    point: &Model1SearchPoint,
) -> Result<CriticalTimePath, TransformError> {
    check_inputs(prices, t_values)?;
    let point = Model1SearchPoint::new(point.c1, point.beta)?;
    let inv = -1.0 / point.beta;
    let t_tilde = prices
        .iter()
        .zip(t_values)
        .map(|(&p, &t)| point.c1 * (inv * p.ln()).exp() + t)
        .collect();
    CriticalTimePath::from_series(t_values.to_vec(), t_tilde)
}

pub fn invert_model2(window: &PriceWindow<'_>, point: &Model2SearchPoint) -> Result<CriticalTimePath, TransformError> {
    invert_model2_at(window.closes(), &window.t_values(), point)
}

/// [`invert_model2`] on raw prices at explicit times.
pub fn invert_model2_at(
    prices: &[f64],
    t_values: &[f64],
    point: &Model2SearchPoint,
) -> Result<CriticalTimePath, TransformError> {
    check_inputs(prices, t_values)?;
    let point = Model2SearchPoint::new(point.a, point.b, point.beta)?;
    let expo = 1.0 / (1.0 - point.beta);
    let mut t_tilde = Vec::with_capacity(prices.len());
    for (i, (&p, &t)) in prices.iter().zip(t_values).enumerate() {
        let y = p.ln();
        if y > point.a {
            return Err(TransformError::DomainViolation { index: i, log_price: y, a: point.a });
        }
        t_tilde.push(t + ((point.a - y) / point.b).powf(expo));
    }
    CriticalTimePath::from_series(t_values.to_vec(), t_tilde)
}

fn check_inputs(prices: &[f64], t_values: &[f64]) -> Result<(), TransformError> {
    if prices.len() != t_values.len() {
        return Err(TransformError::LengthMismatch { prices: prices.len(), times: t_values.len() });
    }
    if prices.is_empty() {
        return Err(TransformError::EmptySeries);
    }
    if let Some(i) = prices.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
        return Err(TransformError::NonPositivePrice(i));
    }
    Ok(())
}
