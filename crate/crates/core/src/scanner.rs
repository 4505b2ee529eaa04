//! Sliding-window sweep, alarm classification and alarm clustering.

use crate::calibrate::{grid_search, CalibrateError, CalibrationResult, GridSpec};
use crate::timeseries::{add_weekdays, slice_window, window_end_indices, PriceSeries};
use crate::unitroot::CriticalValueTable;
use crate::BubbleModel;
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_STEP: usize = 25;
pub const DEFAULT_MAX_GAP: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("series of {len} points is shorter than one window of {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("step must be positive")]
    ZeroStep,
    #[error(transparent)]
    Calibrate(#[from] CalibrateError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub model: BubbleModel,
    pub window_length: usize,
    pub step: usize,
    pub grid: GridSpec,
    pub table: CriticalValueTable,
}

impl ScanConfig {
    /// Default window length, step 25, default grids and the shipped table.
    pub fn new(model: BubbleModel) -> Self {
        Self {
            model,
            window_length: model.default_window_length(),
            step: DEFAULT_STEP,
            grid: GridSpec::for_model(model),
            table: CriticalValueTable::shipped(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmRecord {
    pub window_end: NaiveDate,
    pub window_end_index: usize,
    pub model: BubbleModel,
    /// Estimated critical date: the window end plus `horizon_days` weekdays.
    pub t_c_date: NaiveDate,
    pub horizon_days: i64,
    pub m: f64,
    pub beta: f64,
    pub level: u32,
}

impl AlarmRecord {
    /// Larger is more severe for both models.
    pub fn severity(&self) -> u32 {
        match self.model {
            BubbleModel::Price => match self.level {
                250 => 3,
                500 => 2,
                _ => 1,
            },
            BubbleModel::Momentum => self.level,
        }
    }
}

/// Tightest satisfied horizon threshold among 250 < 500 < 750.
pub fn classify_model1(horizon: f64, beta: f64) -> Option<u32> {
    if !(beta > 0.0) || !(horizon >= 0.0) {
        return None;
    }
    [250u32, 500, 750].into_iter().find(|&lvl| horizon < lvl as f64)
}

/// Highest satisfied exponent level inside −25 ≤ horizon ≤ 50.
pub fn classify_model2(horizon: f64, m: f64) -> Option<u32> {
    if !(-25.0..=50.0).contains(&horizon) {
        return None;
    }
    if m > 3.0 {
        Some(3)
    } else if m > 2.5 {
        Some(2)
    } else if m > 2.0 {
        Some(1)
    } else {
        None
    }
}

/// Alarm for one calibrated window, if its best point meets the criteria.
pub fn alarm_from_calibration(cal: &CalibrationResult) -> Option<AlarmRecord> {
    let best = cal.best?;
    let horizon = cal.horizon()?.round();
    let beta = best.point.beta();
    let m = best.point.m();
    let level = match cal.model {
        BubbleModel::Price => classify_model1(horizon, beta)?,
        BubbleModel::Momentum => classify_model2(horizon, m)?,
    };
    let horizon_days = horizon as i64;
    Some(AlarmRecord {
        window_end: cal.window_end_date,
        window_end_index: cal.window_end_index,
        model: cal.model,
        t_c_date: add_weekdays(cal.window_end_date, horizon_days),
        horizon_days,
        m,
        beta,
        level,
    })
}

/// Calibrates every window of the sweep, in window-end order.
pub fn calibrate_windows(series: &PriceSeries, config: &ScanConfig) -> Result<Vec<CalibrationResult>, ScanError> {
    if config.step == 0 {
        return Err(ScanError::ZeroStep);
    }
    if series.len() < config.window_length {
        return Err(ScanError::SeriesTooShort { len: series.len(), window: config.window_length });
    }
    let grid = GridSpec { window_length: Some(config.window_length), ..config.grid.clone() };
    window_end_indices(series.len(), config.window_length, config.step)
        .into_par_iter()
        .map(|end| {
            let w = slice_window(series, end, config.window_length).expect("sweep indices fit the series");
            grid_search(&w, config.model, &grid, &config.table).map_err(ScanError::from)
        })
        .collect()
}

pub fn scan(series: &PriceSeries, config: &ScanConfig) -> Result<Vec<AlarmRecord>, ScanError> {
    Ok(calibrate_windows(series, config)?.iter().filter_map(alarm_from_calibration).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmCluster {
    pub members: Vec<AlarmRecord>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub peak_level: u32,
}

/// Chains alarms whose window ends are at most `max_gap` trading days after the
/// previous member. Input must be sorted by window end.
pub fn cluster_alarms(alarms: &[AlarmRecord], max_gap: usize) -> Vec<AlarmCluster> {
    let mut groups: Vec<Vec<AlarmRecord>> = Vec::new();
    for a in alarms {
        match groups.last_mut() {
            Some(g) if a.window_end_index - g.last().unwrap().window_end_index <= max_gap => g.push(a.clone()),
            _ => groups.push(vec![a.clone()]),
        }
    }
    groups
        .into_iter()
        .map(|members| {
            let peak = members.iter().max_by_key(|a| a.severity()).unwrap().level;
            AlarmCluster { start: members[0].window_end, end: members.last().unwrap().window_end, peak_level: peak, members }
        })
        .collect()
}
