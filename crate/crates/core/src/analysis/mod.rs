//! Experiments: saddle escape-time sweeps, GD stalling, Taylor-regime checks,
//! stable-manifold sampling and the global convergence-time bound.
//!
//! Every experiment is a deterministic function of its inputs and seed.
//! Initial conditions are drawn sequentially from a seeded ChaCha stream
//! before any parallel work starts, so results do not depend on the number of
//! worker threads.

mod bounds;
mod dissipation;
mod escape;
mod global;
mod manifold;
mod orbits;
pub mod report;
pub mod sampling;
mod stall;
mod taylor;

use nalgebra::DVector;
use thiserror::Error;

use crate::flow::FlowError;
use crate::spectral::SpectralError;

pub use bounds::{escape_time_bound, global_time_bound, max_permissible_radius, RadiusEstimate};
pub use dissipation::{dissipation_trace, DissipationSample, DissipationTrace};
pub use escape::{escape_sweep, escape_sweep_from, EscapeOutcome, EscapeTimeReport};
pub use global::{global_convergence_experiment, GlobalBoundReport, GlobalRun};
pub use manifold::{reaches_saddle, stable_manifold_sample, StableManifoldReport};
pub use orbits::{compare_orbits, OrbitComparison};
pub use stall::{gd_stall_sweep, gd_stall_time, StallMeasurement, StallReport};
pub use taylor::{taylor_estimate_check, TaylorCheckReport, TaylorViolation, ViolationKind};

/// Default constant in the escape-time bound `C√κ·r`.
pub const DEFAULT_C: f64 = 5.0;
pub const DEFAULT_C1: f64 = 0.6;
pub const DEFAULT_C2: f64 = 0.9;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("constant C must be strictly greater than 4, got {0}")]
    InvalidC(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("occupancy {occupancy} exceeds bound {bound} for initial condition {ic:?}")]
    BoundViolated {
        ic: Vec<f64>,
        occupancy: f64,
        bound: f64,
        report: Box<EscapeTimeReport>,
    },
    #[error("trajectory left B_r without entering B_eps (eps = {eps})")]
    NeverEntered { eps: f64 },
    #[error("assumption violated ({assumption}): {detail}")]
    AssumptionViolated { assumption: String, detail: String },
    #[error("critical point at {location:?} is degenerate")]
    Degenerate { location: Vec<f64> },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl AnalysisError {
    fn assumption(assumption: &str, detail: impl Into<String>) -> Self {
        AnalysisError::AssumptionViolated {
            assumption: assumption.to_string(),
            detail: detail.into(),
        }
    }
}

/// Radius around a saddle inside which a `CriticalPointReached` termination
/// counts as reaching that saddle: `10·√(grad_stop/|λ|min)`.
pub fn saddle_capture_radius(grad_stop: f64, abs_min: f64) -> f64 {
    10.0 * (grad_stop / abs_min).sqrt()
}

fn to_vec(x: &DVector<f64>) -> Vec<f64> {
    x.iter().copied().collect()
}
