//! NGD escape-time sweeps around a non-degenerate critical point.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{escape_time_bound, max_permissible_radius};
use super::{sampling, saddle_capture_radius, to_vec, AnalysisError};
use crate::flow::{ball_occupancy, integrate_with_events, BallEvent, Crossing, FlowKind, IntegratorConfig, Termination};
use crate::objective::ObjectiveFunction;
use crate::spectral::{Classification, CriticalPointInfo};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeOutcome {
    pub initial_point: Vec<f64>,
    /// Time spent inside the open ball `B_r(saddle)`.
    pub occupancy: f64,
    pub termination: Termination,
    pub end_time: f64,
    pub converged_to_saddle: bool,
    /// Grazing contacts reported by the occupancy scan.
    pub tangencies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeTimeReport {
    pub saddle: CriticalPointInfo,
    pub r: f64,
    pub c: f64,
    pub kappa: f64,
    /// `C·√κ·r`.
    pub bound: f64,
    /// Permissible radius when the objective has a nonzero third-derivative bound.
    pub r_bar: Option<f64>,
    pub seed: Option<u64>,
    pub t_max: f64,
    pub per_ic: Vec<EscapeOutcome>,
    /// Maximum occupancy over initial conditions that do not converge to the saddle.
    pub max_occupancy: f64,
    pub argmax: Option<usize>,
    pub slack: f64,
    /// Initial conditions whose integration hit the horizon before leaving `B_{2r}`.
    pub horizon_hits: usize,
    pub pass: bool,
}

/// Samples `n_ic` initial conditions uniformly on `∂B_r(saddle)` and measures
/// the NGD occupancy of `B_r(saddle)` for each.
///
/// Each trajectory runs until it leaves `B_{2r}(saddle)` or terminates.
/// Trajectories ending at the saddle are reported but excluded from the
/// maximum.
pub fn escape_sweep(
    f: &dyn ObjectiveFunction,
    saddle: &CriticalPointInfo,
    r: f64,
    n_ic: usize,
    seed: u64,
    c: f64,
    cfg: &IntegratorConfig,
) -> Result<EscapeTimeReport, AnalysisError> {
    if n_ic == 0 {
        return Err(AnalysisError::InvalidArgument("n_ic must be positive".into()));
    }
    if !(r > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("r must be positive, got {r}")));
    }
    let ics = sampling::on_sphere(seed, &saddle.location_vector(), r, n_ic);
    match escape_sweep_from(f, saddle, r, &ics, c, cfg) {
        Ok(mut report) => {
            report.seed = Some(seed);
            Ok(report)
        }
        Err(AnalysisError::BoundViolated {
            ic,
            occupancy,
            bound,
            mut report,
        }) => {
            report.seed = Some(seed);
            Err(AnalysisError::BoundViolated {
                ic,
                occupancy,
                bound,
                report,
            })
        }
        Err(e) => Err(e),
    }
}

/// [`escape_sweep`] on caller-supplied initial conditions.
pub fn escape_sweep_from(
    f: &dyn ObjectiveFunction,
    saddle: &CriticalPointInfo,
    r: f64,
    ics: &[DVector<f64>],
    c: f64,
    cfg: &IntegratorConfig,
) -> Result<EscapeTimeReport, AnalysisError> {
    let kappa = match (saddle.classification, saddle.kappa) {
        (Classification::Degenerate, _) | (_, None) => {
            return Err(AnalysisError::Degenerate {
                location: saddle.location.clone(),
            })
        }
        (_, Some(k)) => k,
    };
    let bound = escape_time_bound(kappa, r, c)?;
    let r_bar = match f.third_derivative_bound() {
        Some(c_hat) if c_hat > 0.0 => {
            let est = max_permissible_radius(c, c_hat, saddle.abs_max(), kappa)?;
            if r > est.r_bar {
                return Err(AnalysisError::assumption(
                    "permissible radius",
                    format!("r = {r} exceeds r_bar = {}", est.r_bar),
                ));
            }
            Some(est.r_bar)
        }
        _ => None,
    };
    cfg.validate()?;
    let center = saddle.location_vector();
    let capture = saddle_capture_radius(cfg.grad_stop, saddle.abs_min());
    // The horizon must not cut a passage through B_2r short.
    let run_cfg = cfg.clone().with_t_max(cfg.t_max.max(10.0 * bound));
    let exit = [BallEvent::new(center.clone(), 2.0 * r, Crossing::Exit)];

    let per_ic = ics
        .par_iter()
        .map(|x0| -> Result<EscapeOutcome, AnalysisError> {
            let traj = integrate_with_events(f, &FlowKind::Ngd, x0, &run_cfg, &exit)?;
            let occ = ball_occupancy(&traj, &center, r)?;
            let converged_to_saddle = match traj.termination() {
                Termination::CriticalPointReached { point } => {
                    (DVector::from_column_slice(point) - &center).norm() <= capture
                }
                _ => false,
            };
            Ok(EscapeOutcome {
                initial_point: to_vec(x0),
                occupancy: occ.total_time,
                termination: traj.termination().clone(),
                end_time: traj.end_time(),
                converged_to_saddle,
                tangencies: occ.warnings.len(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut max_occupancy = 0.0;
    let mut argmax = None;
    for (i, o) in per_ic.iter().enumerate() {
        if !o.converged_to_saddle && (argmax.is_none() || o.occupancy > max_occupancy) {
            max_occupancy = o.occupancy;
            argmax = Some(i);
        }
    }
    let horizon_hits = per_ic
        .iter()
        .filter(|o| o.termination == Termination::HorizonReached)
        .count();
    let pass = max_occupancy <= bound;
    let report = EscapeTimeReport {
        saddle: saddle.clone(),
        r,
        c,
        kappa,
        bound,
        r_bar,
        seed: None,
        t_max: run_cfg.t_max,
        per_ic,
        max_occupancy,
        argmax,
        slack: bound - max_occupancy,
        horizon_hits,
        pass,
    };
    if !pass {
        let i = argmax.expect("a violation has a maximizer");
        return Err(AnalysisError::BoundViolated {
            ic: report.per_ic[i].initial_point.clone(),
            occupancy: max_occupancy,
            bound,
            report: Box::new(report),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{CubicPerturbedQuadratic, QuadraticForm};
    use crate::spectral::classify_critical_point;

    fn origin_info(f: &dyn ObjectiveFunction) -> CriticalPointInfo {
        classify_critical_point(f, &DVector::zeros(f.dim()), 1e-10).unwrap()
    }

    #[test]
    fn unit_saddle_occupancy_below_two_r() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let rep = escape_sweep(&f, &origin_info(&f), 0.5, 64, 7, 5.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(rep.bound, 2.5);
        assert!(rep.max_occupancy <= 1.0 + 1e-4, "{}", rep.max_occupancy);
        assert!(rep.max_occupancy > 0.5);
        assert_eq!(rep.per_ic.len(), 64);
        assert_eq!(rep.seed, Some(7));
        assert!(rep.pass);
    }

    #[test]
    fn stable_axis_ic_is_excluded() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let ics = vec![
            DVector::from_vec(vec![0.5, 0.0]),
            DVector::from_vec(vec![0.0, 0.5]),
        ];
        let rep = escape_sweep_from(&f, &origin_info(&f), 0.5, &ics, 5.0, &IntegratorConfig::default()).unwrap();
        assert!(rep.per_ic[0].converged_to_saddle);
        assert!((rep.per_ic[0].occupancy - 0.5).abs() < 1e-6);
        assert!(!rep.per_ic[1].converged_to_saddle);
        assert_eq!(rep.argmax, Some(1));
        assert!(rep.max_occupancy < 1e-6);
    }

    #[test]
    fn conditioned_saddle() {
        let f = QuadraticForm::diagonal(&[2.0, -0.5]).unwrap();
        let info = origin_info(&f);
        assert!((info.kappa.unwrap() - 4.0).abs() < 1e-12);
        let rep = escape_sweep(&f, &info, 0.1, 32, 3, 5.0, &IntegratorConfig::default()).unwrap();
        assert!((rep.bound - 1.0).abs() < 1e-15);
        assert!(rep.max_occupancy <= rep.bound);
    }

    #[test]
    fn minimum_converges_everywhere() {
        let f = QuadraticForm::diagonal(&[1.0, 1.0]).unwrap();
        let rep = escape_sweep(&f, &origin_info(&f), 0.5, 8, 1, 5.0, &IntegratorConfig::default()).unwrap();
        assert!(rep.per_ic.iter().all(|o| o.converged_to_saddle));
        assert_eq!(rep.argmax, None);
        assert_eq!(rep.max_occupancy, 0.0);
    }

    #[test]
    fn radius_above_r_bar_is_rejected() {
        let f = CubicPerturbedQuadratic::diagonal(&[1.0, -1.0], 1.0).unwrap();
        let err = escape_sweep(&f, &origin_info(&f), 0.3, 4, 1, 5.0, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, AnalysisError::AssumptionViolated { .. }));
        let rep = escape_sweep(&f, &origin_info(&f), 0.13, 16, 1, 5.0, &IntegratorConfig::default()).unwrap();
        assert!((rep.r_bar.unwrap() - 6.0 / 23.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let info = origin_info(&f);
        let cfg = IntegratorConfig::default();
        assert!(matches!(escape_sweep(&f, &info, 0.5, 4, 1, 4.0, &cfg), Err(AnalysisError::InvalidC(_))));
        assert!(escape_sweep(&f, &info, 0.5, 0, 1, 5.0, &cfg).is_err());
        let mut degenerate = info.clone();
        degenerate.classification = Classification::Degenerate;
        degenerate.kappa = None;
        assert!(matches!(
            escape_sweep(&f, &degenerate, 0.5, 4, 1, 5.0, &cfg),
            Err(AnalysisError::Degenerate { .. })
        ));
    }
}
