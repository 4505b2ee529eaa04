//! Diagnostics for transient super-exponential price bubbles.
//!
//! Two finite-time-singularity models are supported: one where the price
//! itself diverges at a mean-reverting critical time (`fts-price`) and one
//! where the price momentum diverges while the log-price stays finite
//! (`fts-momentum`). For both, the crate provides
//!
//! * closed-form solutions and Euler–Maruyama simulators ([`models`]),
//! * the price → critical-time inversions ([`transform`]),
//! * a Dickey-Fuller unit-root test without intercept and its Monte Carlo
//!   critical values ([`unitroot`]),
//! * per-window grid calibration with elite selection ([`calibrate`]),
//! * the sliding-window alarm scanner ([`scanner`]),
//! * the heterogeneous-arbitrageur exit-time solver ([`agents`]).

pub mod agents;
pub mod calibrate;
pub mod models;
pub mod scanner;
pub mod timeseries;
pub mod transform;
pub mod unitroot;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use calibrate::{grid_search, CalibrationResult, GridSpec};
pub use scanner::{scan, AlarmRecord, ScanConfig};
pub use timeseries::{parse_price_csv, PriceSeries, PriceWindow};
pub use unitroot::{df_tstat, CriticalValueTable, DfResult};

/// Which bubble model a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BubbleModel {
    /// Finite-time singularity in the price.
    #[serde(rename = "fts-price")]
    Price,
    /// Finite-time singularity in the price momentum.
    #[serde(rename = "fts-momentum")]
    Momentum,
}

impl BubbleModel {
    /// Window length in trading days used by the scan procedure.
    pub fn default_window_length(self) -> usize {
        match self {
            BubbleModel::Price => 750,
            BubbleModel::Momentum => 900,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            BubbleModel::Price => "fts-price",
            BubbleModel::Momentum => "fts-momentum",
        }
    }
}

impl fmt::Display for BubbleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown model tag {0:?} (expected fts-price or fts-momentum)")]
pub struct UnknownModel(pub String);

impl FromStr for BubbleModel {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fts-price" | "model1" | "1" => Ok(BubbleModel::Price),
            "fts-momentum" | "model2" | "2" => Ok(BubbleModel::Momentum),
            other => Err(UnknownModel(other.to_string())),
        }
    }
}

/// Version string embedded in every JSON output.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
