//! GD and NGD flows: vector fields, adaptive integration, trajectories and
//! ball-occupancy measurement, plus the discrete-time iterations.

mod discrete;
mod integrator;
mod occupancy;
mod trajectory;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::objective::ObjectiveFunction;

pub use discrete::{run_discrete, step_discrete, DiscreteRun};
pub use integrator::{integrate, integrate_with_events, BallEvent, Crossing};
pub use occupancy::{ball_occupancy, BallOccupancy, TangencyWarning};
pub use trajectory::{arc_length_at, reparametrize_by_arc_length, Termination, Trajectory};

/// Below this gradient norm the step size is capped at [`NEAR_CRITICAL_MAX_STEP`].
pub const NEAR_CRITICAL_GRAD: f64 = 1e-4;
pub const NEAR_CRITICAL_MAX_STEP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("critical point reached: |grad f| = {grad_norm:e} <= {grad_stop:e} at t = {t}")]
    CriticalPointReached { t: f64, grad_norm: f64, grad_stop: f64 },
    #[error("integration failed at t = {t}: step size {h:e} underflowed (|grad f| = {grad_norm:e})")]
    StepSizeUnderflow { t: f64, h: f64, grad_norm: f64 },
    #[error("integration failed at t = {t}: exceeded {max_steps} steps")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("integration failed at t = {t}: non-finite state")]
    NonFinite { t: f64 },
    #[error("value {t} outside trajectory interval [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("flow kind {0:?} is not supported by this operation")]
    UnsupportedKind(FlowKind),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Step sizes `αₙ` of a discrete iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSizes {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl StepSizes {
    /// `αₙ`; a finite sequence repeats its last entry.
    pub fn at(&self, n: usize) -> f64 {
        match self {
            StepSizes::Constant(a) => *a,
            StepSizes::Sequence(s) => s[n.min(s.len() - 1)],
        }
    }

    fn validate(&self) -> Result<(), FlowError> {
        let ok = match self {
            StepSizes::Constant(a) => *a > 0.0 && a.is_finite(),
            StepSizes::Sequence(s) => !s.is_empty() && s.iter().all(|a| *a > 0.0 && a.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(FlowError::InvalidConfig("step sizes must be positive and finite".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    /// `ẋ = −∇f(x)`
    Gd,
    /// `ẋ = −∇f(x)/‖∇f(x)‖`
    Ngd,
    /// `xₙ₊₁ = xₙ − αₙ∇f(xₙ)`
    DiscreteGd(StepSizes),
    /// `xₙ₊₁ = xₙ − αₙ∇f(xₙ)/‖∇f(xₙ)‖`
    DiscreteNgd(StepSizes),
}

impl FlowKind {
    pub fn discrete_gd(steps: StepSizes) -> Result<Self, FlowError> {
        steps.validate()?;
        Ok(FlowKind::DiscreteGd(steps))
    }

    pub fn discrete_ngd(steps: StepSizes) -> Result<Self, FlowError> {
        steps.validate()?;
        Ok(FlowKind::DiscreteNgd(steps))
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, FlowKind::DiscreteGd(_) | FlowKind::DiscreteNgd(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    /// Horizon.
    pub t_max: f64,
    /// Gradient norm at or below which a critical point counts as reached.
    pub grad_stop: f64,
    /// Bisection tolerance for event and crossing times.
    pub event_time_tol: f64,
    /// Trajectories leaving `B_divergence_radius(0)` stop as diverged.
    pub divergence_radius: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_step: 0.05,
            t_max: 10.0,
            grad_stop: 1e-10,
            event_time_tol: 1e-12,
            divergence_radius: 1e6,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let fields = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("max_step", self.max_step),
            ("t_max", self.t_max),
            ("grad_stop", self.grad_stop),
            ("event_time_tol", self.event_time_tol),
            ("divergence_radius", self.divergence_radius),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || v.is_nan() {
                return Err(FlowError::InvalidConfig(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if self.event_time_tol > self.max_step {
            return Err(FlowError::InvalidConfig(format!(
                "event_time_tol ({}) must not exceed max_step ({})",
                self.event_time_tol, self.max_step
            )));
        }
        if self.max_steps == 0 {
            return Err(FlowError::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// `−∇f(x)`.
pub fn gd_field(f: &dyn ObjectiveFunction, x: &DVector<f64>) -> DVector<f64> {
    -f.gradient(x)
}

/// `−∇f(x)/‖∇f(x)‖`, or `CriticalPointReached` when `‖∇f(x)‖ ≤ grad_stop`.
pub fn ngd_field(f: &dyn ObjectiveFunction, x: &DVector<f64>, grad_stop: f64) -> Result<DVector<f64>, FlowError> {
    let g = f.gradient(x);
    let n = g.norm();
    if n <= grad_stop {
        return Err(FlowError::CriticalPointReached {
            t: 0.0,
            grad_norm: n,
            grad_stop,
        });
    }
    Ok(-g / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{QuadraticForm, TrigMultiWell};
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn gd_field_examples() {
        let saddle = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        assert_eq!(gd_field(&saddle, &v(&[1.0, 1.0])), v(&[-1.0, 1.0]));
        assert_eq!(gd_field(&saddle, &v(&[0.0, 0.0])).norm(), 0.0);
        let trig = TrigMultiWell::new(2).unwrap();
        let g = gd_field(&trig, &v(&[PI / 2.0, 0.0]));
        assert!((g - v(&[-1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn ngd_field_examples() {
        let saddle = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        assert_eq!(ngd_field(&saddle, &v(&[2.0, 0.0]), 1e-10).unwrap(), v(&[-1.0, 0.0]));
        let bowl = QuadraticForm::diagonal(&[1.0, 1.0]).unwrap();
        let u = ngd_field(&bowl, &v(&[3.0, 4.0]), 1e-10).unwrap();
        assert!((u - v(&[-0.6, -0.8])).norm() < 1e-15);
        assert!(matches!(
            ngd_field(&saddle, &v(&[0.0, 0.0]), 1e-10),
            Err(FlowError::CriticalPointReached { .. })
        ));
    }

    #[test]
    fn ngd_field_is_unit() {
        let trig = TrigMultiWell::new(3).unwrap();
        for k in 0..50 {
            let x = v(&[0.1 * k as f64, -0.07 * k as f64 + 0.3, 1.0 + 0.01 * k as f64]);
            let u = ngd_field(&trig, &x, 1e-10).unwrap();
            assert!((u.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        let bad = IntegratorConfig {
            abs_tol: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig {
            event_time_tol: 1.0,
            max_step: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(FlowKind::discrete_gd(StepSizes::Constant(-1.0)).is_err());
        assert!(FlowKind::discrete_ngd(StepSizes::Sequence(vec![])).is_err());
        assert!(FlowKind::discrete_ngd(StepSizes::Sequence(vec![0.1, 0.2])).is_ok());
    }
}
