use nalgebra::DVector;
use serde::Serialize;

use super::{FlowError, FlowKind};
use crate::objective::ObjectiveFunction;

/// One step of discrete GD or NGD with step size `alpha`.
pub fn step_discrete(
    f: &dyn ObjectiveFunction,
    kind: &FlowKind,
    x: &DVector<f64>,
    alpha: f64,
    grad_stop: f64,
) -> Result<DVector<f64>, FlowError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(FlowError::InvalidConfig(format!("step size must be positive, got {alpha}")));
    }
    let g = f.gradient(x);
    match kind {
        FlowKind::DiscreteGd(_) => Ok(x - g * alpha),
        FlowKind::DiscreteNgd(_) => {
            let n = g.norm();
            if n <= grad_stop {
                return Err(FlowError::CriticalPointReached {
                    t: 0.0,
                    grad_norm: n,
                    grad_stop,
                });
            }
            Ok(x - g * (alpha / n))
        }
        other => Err(FlowError::UnsupportedKind(other.clone())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteRun {
    pub iterates: Vec<Vec<f64>>,
    pub f_values: Vec<f64>,
    /// Sum of step sizes taken, the discrete analogue of flow time.
    pub elapsed: Vec<f64>,
    /// Set when NGD stopped early at a (numerically) critical iterate.
    pub stopped_at_critical: bool,
}

/// Runs `n_steps` iterations of a discrete flow, using the step sizes stored
/// in `kind`.
pub fn run_discrete(
    f: &dyn ObjectiveFunction,
    kind: &FlowKind,
    x0: &DVector<f64>,
    n_steps: usize,
    grad_stop: f64,
) -> Result<DiscreteRun, FlowError> {
    let steps = match kind {
        FlowKind::DiscreteGd(s) | FlowKind::DiscreteNgd(s) => s,
        other => return Err(FlowError::UnsupportedKind(other.clone())),
    };
    let mut x = x0.clone();
    let mut run = DiscreteRun {
        iterates: vec![x.iter().copied().collect()],
        f_values: vec![f.value(&x)],
        elapsed: vec![0.0],
        stopped_at_critical: false,
    };
    let mut clock = 0.0;
    for n in 0..n_steps {
        let alpha = steps.at(n);
        x = match step_discrete(f, kind, &x, alpha, grad_stop) {
            Ok(next) => next,
            Err(FlowError::CriticalPointReached { .. }) => {
                run.stopped_at_critical = true;
                break;
            }
            Err(e) => return Err(e),
        };
        clock += alpha;
        run.iterates.push(x.iter().copied().collect());
        run.f_values.push(f.value(&x));
        run.elapsed.push(clock);
    }
    Ok(run)
}
