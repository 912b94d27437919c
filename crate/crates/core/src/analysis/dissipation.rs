//! Rate of decrease of the objective along NGD trajectories.

use serde::Serialize;

use super::AnalysisError;
use crate::flow::{FlowError, FlowKind, Trajectory};
use crate::objective::ObjectiveFunction;

/// Half-width of the centered difference on the dense output.
const FD_HALF_WIDTH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationSample {
    pub t: f64,
    /// Centered finite-difference slope of `f(x(t))`.
    pub slope: f64,
    /// `−‖∇f(x(t))‖`.
    pub neg_grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipationTrace {
    pub samples: Vec<DissipationSample>,
    pub max_discrepancy: f64,
    /// Largest observed slope; non-positive for a descent flow.
    pub max_slope: f64,
}

/// Compares `d/dt f(x(t))` with `−‖∇f(x(t))‖` at every interior node of an
/// NGD trajectory at least `1e−4` away from both ends.
pub fn dissipation_trace(traj: &Trajectory, f: &dyn ObjectiveFunction) -> Result<DissipationTrace, AnalysisError> {
    if *traj.kind() != FlowKind::Ngd {
        return Err(FlowError::UnsupportedKind(traj.kind().clone()).into());
    }
    let (start, end) = (traj.start_time(), traj.end_time());
    let fx = |t: f64| -> Result<f64, FlowError> { Ok(f.value(&traj.state_at(t)?)) };
    let mut samples = Vec::new();
    for (i, &t) in traj.times().iter().enumerate() {
        if t - FD_HALF_WIDTH < start || t + FD_HALF_WIDTH > end {
            continue;
        }
        let slope = (fx(t + FD_HALF_WIDTH)? - fx(t - FD_HALF_WIDTH)?) / (2.0 * FD_HALF_WIDTH);
        samples.push(DissipationSample {
            t,
            slope,
            neg_grad_norm: -f.gradient(&traj.states()[i]).norm(),
        });
    }
    let max_discrepancy = samples
        .iter()
        .map(|s| (s.slope - s.neg_grad_norm).abs())
        .fold(0.0, f64::max);
    let max_slope = samples.iter().map(|s| s.slope).fold(f64::NEG_INFINITY, f64::max);
    Ok(DissipationTrace {
        samples,
        max_discrepancy,
        max_slope,
    })
}
