//! Closed-form time and radius bounds.

use serde::Serialize;

use super::AnalysisError;

fn check_c(c: f64) -> Result<(), AnalysisError> {
    if c > 4.0 && c.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::InvalidC(c))
    }
}

/// Escape-time bound `C·√κ·r` for NGD in `B_r` around a non-degenerate
/// critical point with condition number `κ`.
pub fn escape_time_bound(kappa: f64, r: f64, c: f64) -> Result<f64, AnalysisError> {
    check_c(c)?;
    if !(kappa >= 1.0) {
        return Err(AnalysisError::InvalidArgument(format!("kappa must be >= 1, got {kappa}")));
    }
    if !(r > 0.0) {
        return Err(AnalysisError::InvalidArgument(format!("r must be positive, got {r}")));
    }
    Ok(c * kappa.sqrt() * r)
}

/// Largest ball radius for which the escape-time bound is guaranteed, given
/// a uniform third-derivative bound `Ĉ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub c: f64,
    pub c_hat: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub r_bar: f64,
}

/// `r̄ = 6 κ^{−1/2} Ĉ^{−1} |λ|max (C(3κ+2)/(6Cκ+16) − 1/2)`.
pub fn max_permissible_radius(c: f64, c_hat: f64, lambda_max: f64, kappa: f64) -> Result<RadiusEstimate, AnalysisError> {
    check_c(c)?;
    if !(c_hat > 0.0) || !(lambda_max > 0.0) || !(kappa >= 1.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "need c_hat > 0, lambda_max > 0, kappa >= 1 (got {c_hat}, {lambda_max}, {kappa})"
        )));
    }
    let bracket = c * (3.0 * kappa + 2.0) / (6.0 * c * kappa + 16.0) - 0.5;
    let r_bar = 6.0 / kappa.sqrt() / c_hat * lambda_max * bracket;
    Ok(RadiusEstimate {
        c,
        c_hat,
        lambda_max,
        kappa,
        r_bar,
    })
}

/// Global convergence-time bound `2M/ν + C√κ (R+r)^d / r^{d−1}`.
pub fn global_time_bound(m: f64, nu: f64, c: f64, kappa: f64, big_r: f64, r: f64, d: usize) -> f64 {
    2.0 * m / nu + c * kappa.sqrt() * (big_r + r).powi(d as i32) / r.powi(d as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escape_bound_examples() {
        assert_eq!(escape_time_bound(1.0, 0.5, 5.0).unwrap(), 2.5);
        assert!((escape_time_bound(4.0, 0.1, 5.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(escape_time_bound(1.0, 0.5, 4.0), Err(AnalysisError::InvalidC(_))));
        assert!(escape_time_bound(0.5, 0.5, 5.0).is_err());
        assert!(escape_time_bound(1.0, 0.0, 5.0).is_err());
    }

    #[test]
    fn permissible_radius_examples() {
        let est = max_permissible_radius(5.0, 1.0, 1.0, 1.0).unwrap();
        assert!((est.r_bar - 6.0 / 23.0).abs() < 1e-15);
        let big = max_permissible_radius(5.0, 1.0, 1.0, 100.0).unwrap();
        assert!(big.r_bar < est.r_bar);
        // C just above 4: bracket = 4.001·5/40.006 − 1/2.
        let near = max_permissible_radius(4.001, 1.0, 1.0, 1.0).unwrap();
        let expected = 6.0 * (4.001 * 5.0 / (6.0 * 4.001 + 16.0) - 0.5);
        assert_eq!(near.r_bar, expected);
        assert!(near.r_bar > 0.0 && near.r_bar < 3.0e-4 + 1e-7);
        assert!(near.r_bar < 2e-3 * est.r_bar);
        assert!(matches!(max_permissible_radius(4.0, 1.0, 1.0, 1.0), Err(AnalysisError::InvalidC(_))));
    }

    #[test]
    fn permissible_radius_positive_for_any_c_above_four() {
        for k in 1..200 {
            let c = 4.0 + 0.01 * k as f64;
            for kappa in [1.0, 4.0, 25.0, 100.0, 1e4] {
                assert!(max_permissible_radius(c, 2.0, 3.0, kappa).unwrap().r_bar > 0.0);
            }
        }
    }

    #[test]
    fn global_bound_formula() {
        let b = global_time_bound(2.0, 0.5, 5.0, 1.0, 4.0, 0.3, 2);
        assert!((b - (8.0 + 5.0 * 4.3 * 4.3 / 0.3)).abs() < 1e-12);
        let b1 = global_time_bound(1.0, 1.0, 5.0, 4.0, 1.0, 0.5, 1);
        assert!((b1 - (2.0 + 10.0 * 1.5)).abs() < 1e-12);
    }
}
