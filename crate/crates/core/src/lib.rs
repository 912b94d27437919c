//! Numerical laboratory for gradient descent (GD) and normalized gradient
//! descent (NGD) near saddle points.
//!
//! The crate is split into three layers:
//!
//! * [`objective`] and [`spectral`]: differentiable test objectives with
//!   analytic derivatives, plus Hessian spectral utilities (`|H|`, the
//!   modified distance, condition numbers, critical-point classification).
//! * [`flow`]: adaptive Dormand–Prince integration of the GD and NGD flows
//!   with dense output, event-refined ball crossings and arc-length
//!   reparametrization, and the discrete-time steppers.
//! * [`analysis`]: experiments measuring saddle escape times, GD stalling,
//!   Taylor-regime estimates, stable-manifold sampling and the global
//!   convergence-time bound.

pub mod analysis;
pub mod flow;
pub mod objective;
pub mod spectral;

pub use nalgebra::{DMatrix, DVector};

pub use objective::{
    CatalogEntry, CatalogError, CubicPerturbedQuadratic, ObjectiveFunction, QuadraticForm,
    TrigMultiWell,
};
pub use spectral::{Classification, CriticalPointInfo, SpectralError};
