//! Hessian spectra: the spectral absolute value `|H|`, the modified distance
//! `d̃(x) = √(xᵀ|H|x)`, condition numbers and critical-point classification.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::objective::ObjectiveFunction;

/// Eigenvalues with `min|λ| ≤ DEGENERACY_TOL · max|λ|` are treated as zero.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("point is not critical: |grad f| = {norm:e} exceeds tolerance {tol:e}")]
    NotCritical { norm: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Minimum,
    Maximum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointInfo {
    pub location: Vec<f64>,
    /// Hessian spectrum, descending.
    pub eigenvalues: Vec<f64>,
    pub classification: Classification,
    /// `max|λ| / min|λ|`; `None` when degenerate.
    pub kappa: Option<f64>,
}

impl CriticalPointInfo {
    pub fn location_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.location)
    }

    pub fn abs_max(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()))
    }

    pub fn abs_min(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()))
    }

    /// Strict saddle: at least one negative Hessian eigenvalue.
    pub fn is_strict_saddle(&self) -> bool {
        self.classification == Classification::Saddle
            || (self.classification == Classification::Degenerate
                && self.eigenvalues.iter().any(|&l| l < 0.0)
                && self.eigenvalues.iter().any(|&l| l > 0.0))
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending
/// (ties keep the solver's original order). Column `i` of the returned matrix
/// is the eigenvector of eigenvalue `i`.
pub fn symmetric_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `|H| = V |Λ| Vᵀ`: same eigenvectors as `H`, eigenvalues `|λᵢ|`.
pub fn matrix_abs(h: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = symmetric_eigen(h);
    let abs = DMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|l| l.abs())));
    let m = &vectors * abs * vectors.transpose();
    (&m + m.transpose()) * 0.5
}

/// Caches `|H|` and the extreme eigenvalue magnitudes for repeated
/// modified-distance evaluations around one critical point.
#[derive(Debug, Clone)]
pub struct ModifiedDistance {
    abs_h: DMatrix<f64>,
    abs_max: f64,
    abs_min: f64,
}

impl ModifiedDistance {
    pub fn new(h: &DMatrix<f64>) -> Self {
        let (values, _) = symmetric_eigen(h);
        let abs_max = values.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let abs_min = values.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
        Self {
            abs_h: matrix_abs(h),
            abs_max,
            abs_min,
        }
    }

    pub fn abs_h(&self) -> &DMatrix<f64> {
        &self.abs_h
    }

    pub fn abs_max(&self) -> f64 {
        self.abs_max
    }

    pub fn abs_min(&self) -> f64 {
        self.abs_min
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.abs_h * x)).max(0.0).sqrt()
    }
}

pub fn modified_distance(h: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    ModifiedDistance::new(h).eval(x)
}

/// Classifies a spectrum; returns the classification and `κ`.
pub fn classify_spectrum(eigenvalues: &[f64], degeneracy_tol: f64) -> (Classification, Option<f64>) {
    let abs_max = eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let abs_min = eigenvalues.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
    if abs_max == 0.0 || abs_min <= degeneracy_tol * abs_max {
        return (Classification::Degenerate, None);
    }
    let kappa = abs_max / abs_min;
    let pos = eigenvalues.iter().any(|&l| l > 0.0);
    let neg = eigenvalues.iter().any(|&l| l < 0.0);
    let class = match (pos, neg) {
        (true, true) => Classification::Saddle,
        (true, false) => Classification::Minimum,
        _ => Classification::Maximum,
    };
    (class, Some(kappa))
}

pub fn classify_critical_point(
    f: &dyn ObjectiveFunction,
    x_star: &DVector<f64>,
    tol: f64,
) -> Result<CriticalPointInfo, SpectralError> {
    classify_critical_point_with(f, x_star, tol, DEGENERACY_TOL)
}

pub fn classify_critical_point_with(
    f: &dyn ObjectiveFunction,
    x_star: &DVector<f64>,
    tol: f64,
    degeneracy_tol: f64,
) -> Result<CriticalPointInfo, SpectralError> {
    if x_star.len() != f.dim() {
        return Err(SpectralError::DimensionMismatch {
            expected: f.dim(),
            got: x_star.len(),
        });
    }
    let norm = f.gradient(x_star).norm();
    if !(norm <= tol) {
        return Err(SpectralError::NotCritical { norm, tol });
    }
    let (eigenvalues, _) = symmetric_eigen(&f.hessian(x_star));
    let (classification, kappa) = classify_spectrum(&eigenvalues, degeneracy_tol);
    Ok(CriticalPointInfo {
        location: x_star.iter().copied().collect(),
        eigenvalues,
        classification,
        kappa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub pass: bool,
    pub checked: usize,
    pub violations: usize,
    /// Largest `conclusion_lhs - conclusion_rhs` over samples whose premise
    /// held; non-positive on success.
    pub worst_margin: f64,
    pub worst_sample: Option<usize>,
}

/// Verifies the norm-inclusion implications
/// `‖x‖ ≤ a/√|λ|max ⟹ d̃(x) ≤ a` and `d̃(x) ≤ a ⟹ ‖x‖ ≤ a/√|λ|min`
/// for `a ∈ {d̃(x), ‖x‖·√|λ|max}` at every sample.
pub fn inclusion_check(h: &DMatrix<f64>, samples: &[DVector<f64>]) -> InclusionReport {
    let md = ModifiedDistance::new(h);
    let smax = md.abs_max().sqrt();
    let smin = md.abs_min().sqrt();
    // Relative slack for rounding in the eigendecomposition.
    const SLACK: f64 = 1e-12;
    let mut report = InclusionReport {
        pass: true,
        checked: 0,
        violations: 0,
        worst_margin: f64::NEG_INFINITY,
        worst_sample: None,
    };
    for (idx, x) in samples.iter().enumerate() {
        let norm = x.norm();
        let dt = md.eval(x);
        for a in [dt, norm * smax] {
            let mut record = |lhs: f64, rhs: f64| {
                report.checked += 1;
                let margin = lhs - rhs;
                if margin > report.worst_margin {
                    report.worst_margin = margin;
                    report.worst_sample = Some(idx);
                }
                if margin > SLACK * rhs.abs().max(lhs.abs()) + f64::MIN_POSITIVE {
                    report.violations += 1;
                    report.pass = false;
                }
            };
            if norm <= a / smax * (1.0 + SLACK) {
                record(dt, a);
            }
            if dt <= a * (1.0 + SLACK) {
                record(norm, a / smin);
            }
        }
    }
    if report.checked == 0 {
        report.worst_margin = 0.0;
    }
    report
}
