//! Optional TOML config file. Keys mirror the long flags in snake_case; any
//! flag given on the command line overrides the file.

use anyhow::Context;
use bubble_fts::GridSpec;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<String>,
    pub input: Option<String>,
    pub from: Option<String>,
    pub to: Option<String>,
    pub out: Option<String>,
    pub plot_data: Option<String>,
    pub window_length: Option<usize>,
    pub step: Option<usize>,
    pub table: Option<String>,
    pub level: Option<f64>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub length: Option<Vec<usize>>,
    pub jobs: Option<usize>,
    pub max_gap: Option<usize>,
    pub format: Option<String>,
    pub end: Option<String>,
    pub series_out: Option<String>,
    pub sidecar: Option<String>,
    pub table_out: Option<String>,
    pub alarms: Option<String>,
    // simulation
    pub mu: Option<f64>,
    pub m: Option<f64>,
    pub p0: Option<f64>,
    pub a: Option<f64>,
    pub x0: Option<f64>,
    pub alpha: Option<f64>,
    pub noise_scale: Option<f64>,
    pub t0_value: Option<f64>,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    // grid
    pub n_beta: Option<usize>,
    pub n_scale: Option<usize>,
    pub n_a: Option<usize>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub model2_beta_lo: Option<f64>,
    pub model2_beta_hi: Option<f64>,
    pub scale_min: Option<f64>,
    pub scale_max: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Grid overrides shared by `scan` and `calibrate`.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct GridArgs {
    /// Points on the β axis.
    #[arg(long)]
    pub n_beta: Option<usize>,
    /// Points on the c1 / B axis.
    #[arg(long)]
    pub n_scale: Option<usize>,
    /// Points on the model-2 A axis.
    #[arg(long)]
    pub n_a: Option<usize>,
    /// Exclusive lower end of the model-1 β axis.
    #[arg(long)]
    pub beta_min: Option<f64>,
    /// Upper end of the model-1 β axis.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Open interval for the model-2 β axis.
    #[arg(long)]
    pub model2_beta_lo: Option<f64>,
    #[arg(long)]
    pub model2_beta_hi: Option<f64>,
    /// Range in trading days of the mean scale term.
    #[arg(long)]
    pub scale_min: Option<f64>,
    #[arg(long)]
    pub scale_max: Option<f64>,
}

impl GridArgs {
    pub fn resolve(&self, file: &FileConfig, base: GridSpec) -> GridSpec {
        GridSpec {
            n_beta: self.n_beta.or(file.n_beta).unwrap_or(base.n_beta),
            n_scale: self.n_scale.or(file.n_scale).unwrap_or(base.n_scale),
            n_a: self.n_a.or(file.n_a).unwrap_or(base.n_a),
            model1_beta_min: self.beta_min.or(file.beta_min).unwrap_or(base.model1_beta_min),
            model1_beta_max: self.beta_max.or(file.beta_max).unwrap_or(base.model1_beta_max),
            model2_beta_range: (
                self.model2_beta_lo.or(file.model2_beta_lo).unwrap_or(base.model2_beta_range.0),
                self.model2_beta_hi.or(file.model2_beta_hi).unwrap_or(base.model2_beta_range.1),
            ),
            scale_days: (
                self.scale_min.or(file.scale_min).unwrap_or(base.scale_days.0),
                self.scale_max.or(file.scale_max).unwrap_or(base.scale_days.1),
            ),
            window_length: base.window_length,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bubble_fts::BubbleModel;

    #[test]
    fn flags_override_file_values() {
        let file: FileConfig = toml::from_str("n_beta = 8\nn_scale = 16\nscale_max = 900.0").unwrap();
        let args = GridArgs { n_beta: Some(4), ..GridArgs::default() };
        let g = args.resolve(&file, GridSpec::for_model(BubbleModel::Momentum));
        assert_eq!(g.n_beta, 4);
        assert_eq!(g.n_scale, 16);
        assert_eq!(g.n_a, 32);
        assert_eq!(g.scale_days, (1.0, 900.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("stepp = 3").is_err());
    }
}
