//! GD and NGD trace the same orbit: the GD solution reparametrized by arc
//! length coincides with the NGD solution.

use nalgebra::DVector;
use serde::Serialize;

use super::AnalysisError;
use crate::flow::{integrate, reparametrize_by_arc_length, FlowKind, IntegratorConfig, Termination};
use crate::objective::ObjectiveFunction;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitComparison {
    pub initial_point: Vec<f64>,
    /// Upper end of the common arc-length range `[0, s_max]`.
    pub s_max: f64,
    pub n_grid: usize,
    /// `sup_s ‖x̃_GD(s) − x_NGD(s)‖` over the grid.
    pub sup_error: f64,
    /// `max |L(t) − t|` over the NGD nodes.
    pub ngd_unit_speed_error: f64,
    pub gd_termination: Termination,
    pub ngd_termination: Termination,
    /// `(s, ‖x̃_GD(s) − x_NGD(s)‖)` on the grid.
    pub errors: Vec<(f64, f64)>,
}

/// Integrates GD and NGD from `x0` with the same configuration and compares
/// them on `n_grid` evenly spaced arc-length values.
pub fn compare_orbits(
    f: &dyn ObjectiveFunction,
    x0: &DVector<f64>,
    cfg: &IntegratorConfig,
    n_grid: usize,
) -> Result<OrbitComparison, AnalysisError> {
    if n_grid < 2 {
        return Err(AnalysisError::InvalidArgument("n_grid must be at least 2".into()));
    }
    let gd = integrate(f, &FlowKind::Gd, x0, cfg)?;
    let ngd = integrate(f, &FlowKind::Ngd, x0, cfg)?;
    let s_max = gd.total_arc_length().min(ngd.total_arc_length()).min(ngd.end_time());
    let grid: Vec<f64> = (0..n_grid).map(|k| s_max * k as f64 / (n_grid - 1) as f64).collect();
    let gd_points = reparametrize_by_arc_length(&gd, &grid)?;
    let mut errors = Vec::with_capacity(n_grid);
    for (s, p) in grid.iter().zip(&gd_points) {
        errors.push((*s, (p - ngd.state_at(*s)?).norm()));
    }
    let sup_error = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    let ngd_unit_speed_error = ngd
        .times()
        .iter()
        .zip(ngd.arc_lengths())
        .map(|(t, l)| (l - t).abs())
        .fold(0.0, f64::max);
    Ok(OrbitComparison {
        initial_point: x0.iter().copied().collect(),
        s_max,
        n_grid,
        sup_error,
        ngd_unit_speed_error,
        gd_termination: gd.termination().clone(),
        ngd_termination: ngd.termination().clone(),
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{CubicPerturbedQuadratic, QuadraticForm};

    #[test]
    fn saddle_orbits_coincide() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        let cmp = compare_orbits(&f, &DVector::from_vec(vec![0.8, -0.3]), &IntegratorConfig::default(), 500).unwrap();
        assert!(cmp.sup_error <= 1e-5, "{}", cmp.sup_error);
        assert!(cmp.ngd_unit_speed_error <= 1e-6);
        assert!(cmp.s_max > 5.0);
    }

    #[test]
    fn converging_orbits_coincide() {
        // From (0.2, 1) with β = 0.5 both flows settle in the minimum (0, 4).
        let f = CubicPerturbedQuadratic::diagonal(&[1.0, -1.0], 0.5).unwrap();
        let cmp = compare_orbits(&f, &DVector::from_vec(vec![0.2, 1.0]), &IntegratorConfig::default(), 500).unwrap();
        assert!(matches!(cmp.ngd_termination, Termination::CriticalPointReached { .. }));
        assert!(cmp.sup_error <= 1e-5, "{}", cmp.sup_error);
    }

    #[test]
    fn grid_must_have_two_points() {
        let f = QuadraticForm::diagonal(&[1.0, -1.0]).unwrap();
        assert!(compare_orbits(&f, &DVector::from_vec(vec![1.0, 1.0]), &IntegratorConfig::default(), 1).is_err());
    }
}
