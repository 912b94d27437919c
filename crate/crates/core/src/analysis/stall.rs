//! Plain gradient flow stalling near a saddle.

use nalgebra::DVector;
use serde::Serialize;

use super::{to_vec, AnalysisError};
use crate::flow::{ball_occupancy, integrate_with_events, BallEvent, Crossing, FlowKind, IntegratorConfig, Termination};
use crate::objective::ObjectiveFunction;

/// Time the GD flow from `ic` (on `∂B_r(saddle)`) spends inside `B_r(saddle)`
/// before first entering `B_eps(saddle)`.
///
/// The horizon is extended to at least `2·ln(r/eps) + 10`. A trajectory that
/// leaves `B_r`, terminates, or reaches the horizon without entering
/// `B_eps` yields `NeverEntered`.
pub fn gd_stall_time(
    f: &dyn ObjectiveFunction,
    saddle: &DVector<f64>,
    r: f64,
    eps: f64,
    ic: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<f64, AnalysisError> {
    if !(eps > 0.0 && eps < r) {
        return Err(AnalysisError::InvalidArgument(format!("need 0 < eps < r, got eps = {eps}, r = {r}")));
    }
    if saddle.len() != f.dim() || ic.len() != f.dim() {
        return Err(AnalysisError::InvalidArgument("saddle and ic must match the objective's dimension".into()));
    }
    let dist = (ic - saddle).norm();
    if (dist - r).abs() > 1e-9 * r {
        return Err(AnalysisError::InvalidArgument(format!(
            "ic must lie on the sphere of radius {r} around the saddle (distance {dist})"
        )));
    }
    let run_cfg = cfg.clone().with_t_max(cfg.t_max.max(2.0 * (r / eps).ln() + 10.0));
    let events = [
        BallEvent::new(saddle.clone(), eps, Crossing::Enter),
        BallEvent::new(saddle.clone(), r, Crossing::Exit),
    ];
    let traj = integrate_with_events(f, &FlowKind::Gd, ic, &run_cfg, &events)?;
    match traj.termination() {
        Termination::EventTriggered { event: 0 } => Ok(ball_occupancy(&traj, saddle, r)?.total_time),
        _ => Err(AnalysisError::NeverEntered { eps }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StallMeasurement {
    pub eps: f64,
    /// `None` when the trajectory never entered `B_eps`.
    pub time: Option<f64>,
    /// `ln(r/eps)`, the time the stable coordinate needs to shrink from `r` to `eps`.
    pub log_r_over_eps: f64,
    /// `−r·ln(eps)`; equals `ln(r/eps)` only at `r = 1`.
    pub neg_r_log_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StallReport {
    pub saddle: Vec<f64>,
    pub r: f64,
    pub initial_point: Vec<f64>,
    pub measurements: Vec<StallMeasurement>,
    /// All requested `eps` produced a measured time.
    pub pass: bool,
}

/// [`gd_stall_time`] for each `eps` in turn.
pub fn gd_stall_sweep(
    f: &dyn ObjectiveFunction,
    saddle: &DVector<f64>,
    r: f64,
    eps_values: &[f64],
    ic: &DVector<f64>,
    cfg: &IntegratorConfig,
) -> Result<StallReport, AnalysisError> {
    let mut measurements = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let time = match gd_stall_time(f, saddle, r, eps, ic, cfg) {
            Ok(t) => Some(t),
            Err(AnalysisError::NeverEntered { .. }) => None,
            Err(e) => return Err(e),
        };
        measurements.push(StallMeasurement {
            eps,
            time,
            log_r_over_eps: (r / eps).ln(),
            neg_r_log_eps: -r * eps.ln(),
        });
    }
    Ok(StallReport {
        saddle: to_vec(saddle),
        r,
        initial_point: to_vec(ic),
        pass: measurements.iter().all(|m| m.time.is_some()),
        measurements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::QuadraticForm;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn stall_time_grows_logarithmically() {
        // From angle θ the orbit is x = cos θ e^{−t}, y = sin θ e^{t}; its
        // closest approach is √(sin 2θ), so θ = 1e−9 reaches B_1e−4.
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let theta: f64 = 1e-9;
        let ic = v(&[theta.cos(), theta.sin()]);
        let cfg = IntegratorConfig::default();
        let t2 = gd_stall_time(&f, &v(&[0.0, 0.0]), 1.0, 1e-2, &ic, &cfg).unwrap();
        let t4 = gd_stall_time(&f, &v(&[0.0, 0.0]), 1.0, 1e-4, &ic, &cfg).unwrap();
        assert!(t2 >= 100f64.ln() - 1e-6, "{t2}");
        assert!(t4 >= 1e4f64.ln() - 1e-6, "{t4}");
        assert!(t4 - t2 >= 10f64.ln() - 0.1);
        assert!((t4 / t2 - 2.0).abs() < 1e-2);
    }

    #[test]
    fn stall_time_matches_closed_form() {
        // Entry into B_eps solves cos²θ e^{−2t} + sin²θ e^{2t} = eps².
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let theta: f64 = 1e-6;
        let (c, s) = (theta.cos(), theta.sin());
        let eps: f64 = 1e-2;
        // Smaller root of s² w² − eps² w + c² = 0 in w = e^{2t}, rationalized.
        let w = 2.0 * c * c / (eps * eps + (eps.powi(4) - 4.0 * c * c * s * s).sqrt());
        let exact = 0.5 * w.ln();
        let t = gd_stall_time(&f, &v(&[0.0, 0.0]), 1.0, eps, &v(&[c, s]), &IntegratorConfig::default()).unwrap();
        assert!((t - exact).abs() < 1e-8, "{t} vs {exact}");
    }

    #[test]
    fn unstable_direction_never_enters() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let err = gd_stall_time(&f, &v(&[0.0, 0.0]), 1.0, 0.01, &v(&[0.0, 1.0]), &IntegratorConfig::default())
            .unwrap_err();
        assert!(matches!(err, AnalysisError::NeverEntered { .. }));
    }

    #[test]
    fn sweep_records_both_expressions() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        // Closest approach is r·√(sin 2θ) ≈ 0.0707.
        let theta: f64 = 0.01;
        let r = 0.5;
        let ic = v(&[r * theta.cos(), r * theta.sin()]);
        let rep = gd_stall_sweep(&f, &v(&[0.0, 0.0]), r, &[0.1, 1e-2], &ic, &IntegratorConfig::default()).unwrap();
        assert!(rep.measurements[0].time.is_some());
        assert!(rep.measurements[1].time.is_none());
        assert!(!rep.pass);
        assert!((rep.measurements[0].log_r_over_eps - 5f64.ln()).abs() < 1e-12);
        assert!((rep.measurements[0].neg_r_log_eps - 0.5 * 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let cfg = IntegratorConfig::default();
        let o = v(&[0.0, 0.0]);
        assert!(gd_stall_time(&f, &o, 1.0, 1.0, &v(&[1.0, 0.0]), &cfg).is_err());
        assert!(gd_stall_time(&f, &o, 1.0, 0.1, &v(&[0.5, 0.0]), &cfg).is_err());
    }
}
