//! Second-order Taylor estimates around a non-degenerate critical point,
//! checked by sampling.

use nalgebra::DVector;
use serde::Serialize;

use super::{sampling, to_vec, AnalysisError};
use crate::flow::Trajectory;
use crate::objective::ObjectiveFunction;
use crate::spectral::{classify_critical_point, Classification, CriticalPointInfo, ModifiedDistance};

/// Relative slack absorbing rounding in both sides of each inequality.
const SLACK: f64 = 1e-13;
/// Violations kept in the report; the count is always exact.
const MAX_STORED_VIOLATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `|f(x) − f(x*)| ≤ C1·d̃(x − x*)²` failed.
    ValueBound,
    /// `‖∇f(x)‖ ≥ C2·‖H(x − x*)‖` failed.
    GradientBound,
    /// `‖∇f(x)‖ ≥ C2·√|λ|min·d̃(x − x*)` failed.
    GradientDistanceBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorViolation {
    pub point: Vec<f64>,
    pub kind: ViolationKind,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorCheckReport {
    pub critical_point: CriticalPointInfo,
    pub c1: f64,
    pub c2: f64,
    pub r_hat: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// `8·C1/C2`, the escape-time constant these Taylor constants yield.
    pub implied_c: f64,
    pub violation_count: usize,
    /// The first violations found, at most 100.
    pub violations: Vec<TaylorViolation>,
    /// `(t, d̃(x(t) − x*))` along an attached trajectory.
    pub tilde_trace: Vec<(f64, f64)>,
}

impl TaylorCheckReport {
    pub fn pass(&self) -> bool {
        self.violation_count == 0
    }

    /// Records `d̃(x(t) − x*)` at every node of `traj`.
    pub fn attach_trajectory(&mut self, f: &dyn ObjectiveFunction, traj: &Trajectory) {
        let x_star = self.critical_point.location_vector();
        let md = ModifiedDistance::new(&f.hessian(&x_star));
        self.tilde_trace = traj
            .times()
            .iter()
            .zip(traj.states())
            .map(|(&t, x)| (t, md.eval(&(x - &x_star))))
            .collect();
    }
}

/// Samples `n_samples` points uniformly in `B_{r_hat}(x_star)` and checks the
/// value and gradient estimates against `H = D²f(x_star)`.
pub fn taylor_estimate_check(
    f: &dyn ObjectiveFunction,
    x_star: &DVector<f64>,
    c1: f64,
    c2: f64,
    r_hat: f64,
    n_samples: usize,
    seed: u64,
) -> Result<TaylorCheckReport, AnalysisError> {
    if !(c1 > 0.5) {
        return Err(AnalysisError::InvalidArgument(format!("C1 must exceed 1/2, got {c1}")));
    }
    if !(c2 > 0.0 && c2 < 1.0) {
        return Err(AnalysisError::InvalidArgument(format!("C2 must lie in (0, 1), got {c2}")));
    }
    if !(r_hat > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("r_hat must be positive, got {r_hat}")));
    }
    let info = classify_critical_point(f, x_star, 1e-8)?;
    if info.classification == Classification::Degenerate {
        return Err(AnalysisError::Degenerate {
            location: info.location,
        });
    }
    let h = f.hessian(x_star);
    let md = ModifiedDistance::new(&h);
    let sqrt_min = md.abs_min().sqrt();
    let f_star = f.value(x_star);

    let mut violations = Vec::new();
    let mut violation_count = 0;
    let mut record = |point: &DVector<f64>, kind, lhs: f64, rhs: f64| {
        violation_count += 1;
        if violations.len() < MAX_STORED_VIOLATIONS {
            violations.push(TaylorViolation {
                point: to_vec(point),
                kind,
                lhs,
                rhs,
            });
        }
    };
    for x in sampling::in_ball(seed, x_star, r_hat, n_samples) {
        let y = &x - x_star;
        let dt = md.eval(&y);
        let value_gap = (f.value(&x) - f_star).abs();
        let value_rhs = c1 * dt * dt;
        if value_gap > value_rhs * (1.0 + SLACK) + SLACK * f_star.abs() {
            record(&x, ViolationKind::ValueBound, value_gap, value_rhs);
        }
        let grad = f.gradient(&x).norm();
        let hy = c2 * (&h * &y).norm();
        if grad < hy * (1.0 - SLACK) {
            record(&x, ViolationKind::GradientBound, grad, hy);
        }
        let chain = c2 * sqrt_min * dt;
        if grad < chain * (1.0 - SLACK) {
            record(&x, ViolationKind::GradientDistanceBound, grad, chain);
        }
    }
    Ok(TaylorCheckReport {
        critical_point: info,
        c1,
        c2,
        r_hat,
        n_samples,
        seed,
        implied_c: 8.0 * c1 / c2,
        violation_count,
        violations,
        tilde_trace: Vec::new(),
    })
}
