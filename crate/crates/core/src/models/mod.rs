//! Closed-form solutions and SDE simulators for the two bubble models.
//!
//! Both models share one Wiener increment stream between the critical-time
//! residual t̃_c (an Ornstein–Uhlenbeck process) and the price or momentum.
//! The closed forms hold pathwise only when the price diffusion enters with
//! the opposite sign of the OU diffusion (a later critical time means a lower
//! price) and the Itô correction in δ carries σ²/μ; the simulators use that
//! form, which is what makes the Euler paths converge onto the closed forms.

mod momentum;
mod noise;
mod ou;
mod price;
mod returns;

pub use momentum::{
    model2_logprice_closed_form, simulate_model2_sde, simulate_model2_sde_with, Model2Params,
    Model2Path,
};
pub use noise::WienerIncrements;
pub use ou::{simulate_ou, simulate_ou_with, OuParams, OuPath, TcPath};
pub use price::{
    model1_price_closed_form, simulate_model1_sde, simulate_model1_sde_with, DeltaTerm,
    Model1Params, Model1Path,
};
pub use returns::{
    model1_return_approx, model1_return_exact, model2_return_approx, model2_return_exact,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid time step: dt={dt}, n_steps={n_steps}")]
    InvalidStep { dt: f64, n_steps: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("time-to-singularity {remaining} is not positive")]
    PastSingularity { remaining: f64 },
    #[error("simulation blew up at step {0}")]
    Blowup(usize),
    #[error("model has no finite-time singularity (m <= 1)")]
    NoSingularity,
}

/// Paths stop once p (or x) exceeds this multiple of its starting value.
pub const OVERFLOW_GUARD: f64 = 1e12;
