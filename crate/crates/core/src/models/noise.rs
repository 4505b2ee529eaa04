use super::ModelError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Brownian increments ΔW_k ~ N(0, dt), kept so one path can drive several
/// equations and be coarsened for refinement studies.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrements {
    dt: f64,
    increments: Vec<f64>,
    seed: Option<u64>,
}

impl WienerIncrements {
    pub fn generate(dt: f64, n_steps: usize, seed: u64) -> Result<Self, ModelError> {
        check_step(dt, n_steps)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = dt.sqrt();
        let increments = (0..n_steps)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            })
            .collect();
        Ok(Self { dt, increments, seed: Some(seed) })
    }

    pub fn from_increments(dt: f64, increments: Vec<f64>) -> Result<Self, ModelError> {
        check_step(dt, increments.len())?;
        Ok(Self { dt, increments, seed: None })
    }

    /// Noise-free stream (all increments zero).
    pub fn zeros(dt: f64, n_steps: usize) -> Result<Self, ModelError> {
        Self::from_increments(dt, vec![0.0; n_steps])
    }

    /// Sums blocks of `factor` increments: the same Brownian path sampled at `factor·dt`.
    /// A trailing partial block is dropped.
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(factor >= 1, "coarsening factor must be positive");
        let increments = self.increments.chunks_exact(factor).map(|c| c.iter().sum()).collect();
        Self { dt: self.dt * factor as f64, increments, seed: self.seed }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.increments
    }
}

pub(crate) fn check_step(dt: f64, n_steps: usize) -> Result<(), ModelError> {
    if !(dt > 0.0 && dt.is_finite()) || n_steps == 0 {
        return Err(ModelError::InvalidStep { dt, n_steps });
    }
    Ok(())
}
