//! Statistical check that NGD almost never converges to a strict saddle.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::{sampling, saddle_capture_radius, to_vec, AnalysisError};
use crate::flow::{integrate, FlowKind, IntegratorConfig, Termination};
use crate::objective::ObjectiveFunction;
use crate::spectral::{classify_critical_point, CriticalPointInfo};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifoldOutcome {
    pub initial_point: Vec<f64>,
    pub termination: Termination,
    pub end_time: f64,
    pub reached_saddle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StableManifoldReport {
    pub saddle: CriticalPointInfo,
    pub r: f64,
    pub n_ic: usize,
    pub seed: u64,
    pub capture_radius: f64,
    pub per_ic: Vec<ManifoldOutcome>,
    pub hits: usize,
    pub fraction: f64,
}

fn strict_saddle(f: &dyn ObjectiveFunction, saddle: &DVector<f64>) -> Result<CriticalPointInfo, AnalysisError> {
    let info = classify_critical_point(f, saddle, 1e-8)?;
    if !info.eigenvalues.iter().any(|&l| l < 0.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "critical point {:?} has no negative Hessian eigenvalue",
            info.location
        )));
    }
    Ok(info)
}

fn run_one(
    f: &dyn ObjectiveFunction,
    saddle: &DVector<f64>,
    capture: f64,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<ManifoldOutcome, AnalysisError> {
    let traj = integrate(f, &FlowKind::Ngd, x0, cfg)?;
    let reached_saddle = match traj.termination() {
        Termination::CriticalPointReached { point } => (DVector::from_column_slice(point) - saddle).norm() <= capture,
        _ => false,
    };
    Ok(ManifoldOutcome {
        initial_point: to_vec(x0),
        termination: traj.termination().clone(),
        end_time: traj.end_time(),
        reached_saddle,
    })
}

/// Fraction of NGD trajectories from `n_ic` uniform initial conditions in
/// the shell `B_{2r}(saddle) ∖ B_r(saddle)` that end at the saddle.
pub fn stable_manifold_sample(
    f: &dyn ObjectiveFunction,
    saddle: &DVector<f64>,
    r: f64,
    n_ic: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<StableManifoldReport, AnalysisError> {
    if !(r > 0.0) || n_ic == 0 {
        return Err(AnalysisError::InvalidArgument(format!("need r > 0 and n_ic > 0, got r = {r}, n_ic = {n_ic}")));
    }
    let info = strict_saddle(f, saddle)?;
    let capture = saddle_capture_radius(cfg.grad_stop, info.abs_min());
    let ics = sampling::in_shell(seed, saddle, r, 2.0 * r, n_ic);
    let per_ic = ics
        .par_iter()
        .map(|x0| run_one(f, saddle, capture, x0, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let hits = per_ic.iter().filter(|o| o.reached_saddle).count();
    Ok(StableManifoldReport {
        saddle: info,
        r,
        n_ic,
        seed,
        capture_radius: capture,
        per_ic,
        hits,
        fraction: hits as f64 / n_ic as f64,
    })
}

/// Whether the NGD trajectory from `x0` ends at the strict saddle.
pub fn reaches_saddle(
    f: &dyn ObjectiveFunction,
    saddle: &DVector<f64>,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<bool, AnalysisError> {
    let info = strict_saddle(f, saddle)?;
    let capture = saddle_capture_radius(cfg.grad_stop, info.abs_min());
    Ok(run_one(f, saddle, capture, x0, cfg)?.reached_saddle)
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
    fn random_ics_miss_the_saddle() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let rep = stable_manifold_sample(&f, &v(&[0.0, 0.0]), 0.5, 200, 7, &IntegratorConfig::default()).unwrap();
        assert_eq!(rep.hits, 0);
        assert_eq!(rep.fraction, 0.0);
        for o in &rep.per_ic {
            let n = v(&o.initial_point).norm();
            assert!((0.5..=1.0).contains(&n));
        }
    }

    #[test]
    fn stable_axis_reaches_saddle() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        assert!(reaches_saddle(&f, &v(&[0.0, 0.0]), &v(&[0.5, 0.0]), &IntegratorConfig::default()).unwrap());
        assert!(!reaches_saddle(&f, &v(&[0.0, 0.0]), &v(&[0.5, 1e-3]), &IntegratorConfig::default()).unwrap());
    }

    #[test]
    fn trig_saddle_stable_line() {
        // The Hessian at (π, 0) is diag(−1, 1); the stable line is x = π.
        let f = TrigMultiWell::new(2).unwrap();
        let s = v(&[PI, 0.0]);
        assert!(reaches_saddle(&f, &s, &v(&[PI, 0.2]), &IntegratorConfig::default()).unwrap());
        assert!(!reaches_saddle(&f, &s, &v(&[PI + 1e-3, 0.2]), &IntegratorConfig::default()).unwrap());
    }

    #[test]
    fn minimum_is_rejected() {
        let f = QuadraticForm::diagonal(&[1.0, 1.0]).unwrap();
        assert!(stable_manifold_sample(&f, &v(&[0.0, 0.0]), 0.5, 10, 1, &IntegratorConfig::default()).is_err());
    }
}
