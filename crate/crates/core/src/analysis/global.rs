//! Global convergence time of NGD to a local minimum.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{escape_time_bound, global_time_bound};
use super::{sampling, to_vec, AnalysisError};
use crate::flow::{integrate, FlowKind, IntegratorConfig, Termination};
use crate::objective::ObjectiveFunction;
use crate::spectral::{classify_critical_point, classify_spectrum, symmetric_eigen, Classification, DEGENERACY_TOL};

/// Sampling grids for `M` and `ν` larger than this switch to random points.
const MAX_GRID_POINTS: usize = 4_000_000;
const RANDOM_ESTIMATE_POINTS: usize = 1_000_000;
const M_INFLATION: f64 = 1.01;
const NU_DEFLATION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalRun {
    pub initial_point: Vec<f64>,
    pub termination: Termination,
    /// Time at which the trajectory reached a minimum, if it did.
    pub time: Option<f64>,
    pub converged_to_minimum: bool,
    /// The trajectory left `B_R(0)` at some node.
    pub left_ball: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalBoundReport {
    /// Estimate of `sup_{B_R(0)} |f|` (sampled maximum, inflated by 1%).
    pub m: f64,
    pub nu: f64,
    /// Whether `nu` was estimated from samples rather than supplied.
    pub nu_estimated: bool,
    /// Smallest sampled `‖∇f‖` away from the critical points.
    pub sampled_grad_min: f64,
    pub big_r: f64,
    pub r: f64,
    pub d: usize,
    pub c: f64,
    /// Largest condition number over the critical points in `B_{R+r}(0)`.
    pub kappa: f64,
    pub c_hat: f64,
    pub critical_points: Vec<(Vec<f64>, Classification)>,
    pub min_separation: Option<f64>,
    /// `2M/ν + C√κ(R+r)^d/r^{d−1}`.
    pub bound: f64,
    /// `(R+r)^d/r^d`, the count of `r`-balls charged in the bound.
    pub ball_count: f64,
    /// Escape budget `C√κ·r` charged per ball.
    pub per_ball_time: f64,
    pub seed: u64,
    pub measured: Vec<GlobalRun>,
    pub max_time: Option<f64>,
    pub all_converged: bool,
    /// Runs whose trajectory left `B_R(0)`: the invariance hypothesis does not hold there.
    pub invariance_violations: usize,
    pub pass: bool,
}

/// Sampled extrema of `|f|` over `B_R(0)` and of `‖∇f‖` over `B_R(0)` minus
/// the `r`-balls around `centers`.
fn sample_landscape(f: &dyn ObjectiveFunction, big_r: f64, r: f64, centers: &[DVector<f64>], seed: u64) -> (f64, f64) {
    let d = f.dim();
    let pitch = r / 10.0;
    let per_axis = (2.0 * big_r / pitch).floor() as usize + 1;
    let grid_points = (per_axis as f64).powi(d as i32);
    let points: Vec<DVector<f64>> = if grid_points <= MAX_GRID_POINTS as f64 {
        let total = per_axis.pow(d as u32);
        (0..total)
            .map(|mut k| {
                DVector::from_fn(d, |_, _| {
                    let i = k % per_axis;
                    k /= per_axis;
                    -big_r + pitch * i as f64
                })
            })
            .filter(|x| x.norm() <= big_r)
            .collect()
    } else {
        let mut rng = sampling::rng(seed ^ 0x9e37_79b9_7f4a_7c15);
        (0..RANDOM_ESTIMATE_POINTS)
            .map(|_| {
                let u: f64 = rng.gen();
                sampling::unit_direction(&mut rng, d) * (big_r * u.powf(1.0 / d as f64))
            })
            .collect()
    };
    points
        .par_iter()
        .map(|x| {
            let fx = f.value(x).abs();
            let away = centers.iter().all(|c| (x - c).norm() >= r);
            let g = if away { f.gradient(x).norm() } else { f64::INFINITY };
            (fx, g)
        })
        .reduce(|| (0.0, f64::INFINITY), |a, b| (a.0.max(b.0), a.1.min(b.1)))
}

/// Checks the landscape hypotheses on `B_R(0)`, then integrates NGD from
/// `n_ic` uniform initial conditions in `B_R(0)` and compares every
/// convergence time with the global bound.
///
/// `nu` is estimated when `None`; a supplied `nu` must not exceed the
/// smallest sampled gradient norm away from the critical points. Runs that
/// leave `B_R(0)` are counted in `invariance_violations`; they do not abort
/// the experiment.
#[allow(clippy::too_many_arguments)]
pub fn global_convergence_experiment(
    f: &dyn ObjectiveFunction,
    big_r: f64,
    nu: Option<f64>,
    r: f64,
    c: f64,
    n_ic: usize,
    seed: u64,
    cfg: &IntegratorConfig,
) -> Result<GlobalBoundReport, AnalysisError> {
    if !(big_r > 0.0 && r > 0.0) || n_ic == 0 {
        return Err(AnalysisError::InvalidArgument(format!(
            "need R > 0, r > 0, n_ic > 0 (got {big_r}, {r}, {n_ic})"
        )));
    }
    escape_time_bound(1.0, r, c)?;
    let d = f.dim();
    let c_hat = f.third_derivative_bound().ok_or_else(|| {
        AnalysisError::assumption("third-derivative bound", "objective has no uniform bound on D³f")
    })?;
    let origin = DVector::zeros(d);
    let centers = f.critical_points_within(&origin, big_r + r).ok_or_else(|| {
        AnalysisError::assumption("critical points", "critical points of the objective cannot be enumerated")
    })?;

    let mut critical_points = Vec::with_capacity(centers.len());
    let mut kappa: f64 = 1.0;
    let mut lambda_min = f64::INFINITY;
    for x in &centers {
        let (eigs, _) = symmetric_eigen(&f.hessian(x));
        let (class, k) = classify_spectrum(&eigs, DEGENERACY_TOL);
        match k {
            Some(k) if class != Classification::Degenerate => kappa = kappa.max(k),
            _ => {
                return Err(AnalysisError::assumption(
                    "non-degenerate critical points",
                    format!("critical point {:?} is degenerate", to_vec(x)),
                ))
            }
        }
        lambda_min = lambda_min.min(eigs.iter().fold(f64::INFINITY, |m, l| m.min(l.abs())));
        critical_points.push((to_vec(x), class));
    }
    let mut min_separation: Option<f64> = None;
    for (i, a) in centers.iter().enumerate() {
        for b in &centers[i + 1..] {
            if a.norm() > big_r || b.norm() > big_r {
                continue;
            }
            let dist = (a - b).norm();
            min_separation = Some(min_separation.map_or(dist, |m| m.min(dist)));
            if dist < 2.0 * r {
                return Err(AnalysisError::assumption(
                    "separation",
                    format!("critical points {:?} and {:?} are {dist} apart, less than 2r", to_vec(a), to_vec(b)),
                ));
            }
        }
    }

    if c_hat > 0.0 && r > lambda_min / c_hat {
        return Err(AnalysisError::assumption(
            "radius",
            format!("r = {r} exceeds |lambda|_min / C_hat = {}", lambda_min / c_hat),
        ));
    }
    let (f_max, grad_min) = sample_landscape(f, big_r, r, &centers, seed);
    let m = M_INFLATION * f_max;
    let (nu, nu_estimated) = match nu {
        Some(nu) if !(nu > 0.0) => {
            return Err(AnalysisError::InvalidArgument(format!("nu must be positive, got {nu}")));
        }
        Some(nu) if grad_min <= nu => {
            return Err(AnalysisError::assumption(
                "gradient lower bound",
                format!("sampled |grad f| = {grad_min} <= nu = {nu} outside the r-balls"),
            ));
        }
        Some(nu) => (nu, false),
        None if !(grad_min > 0.0) || !grad_min.is_finite() => {
            return Err(AnalysisError::assumption(
                "gradient lower bound",
                format!("no positive gradient lower bound found (sampled minimum {grad_min})"),
            ));
        }
        None => (NU_DEFLATION * grad_min, true),
    };

    let bound = global_time_bound(m, nu, c, kappa, big_r, r, d);
    let run_cfg = cfg.clone().with_t_max(bound);
    let ics = sampling::in_ball(seed, &origin, big_r, n_ic);
    let measured = ics
        .par_iter()
        .map(|x0| -> Result<GlobalRun, AnalysisError> {
            let traj = integrate(f, &FlowKind::Ngd, x0, &run_cfg)?;
            let left_ball = traj.states().iter().any(|x| x.norm() > big_r);
            let converged_to_minimum = match traj.termination() {
                Termination::CriticalPointReached { point } => {
                    let p = DVector::from_column_slice(point);
                    classify_critical_point(f, &p, 10.0 * cfg.grad_stop)
                        .map(|info| info.classification == Classification::Minimum)
                        .unwrap_or(false)
                }
                _ => false,
            };
            Ok(GlobalRun {
                initial_point: to_vec(x0),
                termination: traj.termination().clone(),
                time: converged_to_minimum.then(|| traj.end_time()),
                converged_to_minimum,
                left_ball,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let all_converged = measured.iter().all(|m| m.converged_to_minimum);
    let max_time = measured.iter().filter_map(|m| m.time).reduce(f64::max);
    let invariance_violations = measured.iter().filter(|m| m.left_ball).count();
    let pass = all_converged && max_time.map_or(true, |t| t <= bound);
    Ok(GlobalBoundReport {
        m,
        nu,
        nu_estimated,
        sampled_grad_min: grad_min,
        big_r,
        r,
        d,
        c,
        kappa,
        c_hat,
        critical_points,
        min_separation,
        bound,
        ball_count: ((big_r + r) / r).powi(d as i32),
        per_ball_time: c * kappa.sqrt() * r,
        seed,
        measured,
        max_time,
        all_converged,
        invariance_violations,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{CubicPerturbedQuadratic, QuadraticForm, TrigMultiWell};

    #[test]
    fn single_well_converges_within_radius() {
        let f = QuadraticForm::diagonal(&[1.0, 1.0]).unwrap();
        let rep = global_convergence_experiment(&f, 1.0, None, 0.1, 5.0, 40, 3, &IntegratorConfig::default()).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.invariance_violations, 0);
        assert!(rep.max_time.unwrap() <= 1.0 + 1e-9);
        assert!(rep.bound >= 1.0);
        assert!((rep.m - 0.505).abs() < 1e-12);
        assert!((rep.sampled_grad_min - 0.1).abs() < 0.01);
        assert_eq!(rep.min_separation, None);
    }

    #[test]
    fn bound_identity_and_forms() {
        let f = QuadraticForm::diagonal(&[1.0, 1.0]).unwrap();
        let rep = global_convergence_experiment(&f, 1.0, None, 0.1, 5.0, 4, 3, &IntegratorConfig::default()).unwrap();
        let expected = 2.0 * rep.m / rep.nu + 5.0 * 1.1f64.powi(2) / 0.1;
        assert_eq!(rep.bound, expected);
        assert!((rep.bound - (2.0 * rep.m / rep.nu + rep.ball_count * rep.per_ball_time)).abs() < 1e-9);
    }

    #[test]
    fn trig_separation_and_estimates() {
        let f = TrigMultiWell::new(2).unwrap();
        let rep = global_convergence_experiment(&f, 4.0, None, 0.3, 5.0, 20, 11, &IntegratorConfig::default()).unwrap();
        assert!((rep.min_separation.unwrap() - std::f64::consts::PI).abs() < 1e-12);
        assert!(rep.m <= 2.0 * 1.01 + 1e-12);
        assert!(rep.kappa == 1.0);
        assert!(rep.pass, "{:?}", rep.measured.iter().find(|m| !m.converged_to_minimum));
    }

    #[test]
    fn supplied_nu_too_large_is_rejected() {
        let f = TrigMultiWell::new(2).unwrap();
        let err = global_convergence_experiment(&f, 4.0, Some(0.5), 0.3, 5.0, 4, 1, &IntegratorConfig::default())
            .unwrap_err();
        assert!(matches!(err, AnalysisError::AssumptionViolated { ref assumption, .. } if assumption == "gradient lower bound"));
    }

    #[test]
    fn close_critical_points_rejected() {
        // β = 4 puts the cubic's second critical point of each coordinate at −0.5.
        let f = CubicPerturbedQuadratic::diagonal(&[1.0, 1.0], 4.0).unwrap();
        let err = global_convergence_experiment(&f, 1.0, None, 0.3, 5.0, 4, 1, &IntegratorConfig::default())
            .unwrap_err();
        assert!(matches!(err, AnalysisError::AssumptionViolated { ref assumption, .. } if assumption == "separation"));
    }

    #[test]
    fn radius_above_curvature_ratio_rejected() {
        // Lattice spacing π allows r up to π/2, but |λ|min/Ĉ = 1.
        let f = TrigMultiWell::new(2).unwrap();
        let err = global_convergence_experiment(&f, 4.0, None, 1.2, 5.0, 4, 1, &IntegratorConfig::default())
            .unwrap_err();
        assert!(matches!(err, AnalysisError::AssumptionViolated { ref assumption, .. } if assumption == "radius"));
    }
}
