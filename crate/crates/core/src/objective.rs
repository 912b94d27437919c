//! Objective functions with analytic derivatives and the built-in catalog.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::spectral::{classify_critical_point, Classification};

/// Upper bound on the number of analytic critical points we are willing to
/// enumerate for a single query.
const MAX_ENUMERATED_POINTS: usize = 1 << 16;

/// Symmetry tolerance (relative to the largest entry) for user-supplied matrices.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: entry ({row},{col}) differs from its transpose by {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("non-finite parameter: {0}")]
    NonFinite(String),
    #[error("dimension must be positive")]
    ZeroDimension,
}

/// A twice continuously differentiable scalar field on `R^d` with analytic
/// gradient and Hessian.
///
/// Implementations must be pure: evaluation never mutates shared state, so a
/// single instance can be shared across worker threads.
pub trait ObjectiveFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Symmetric `d x d` Hessian.
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;

    /// Uniform bound `Ĉ` on the third derivative, when one is known.
    fn third_derivative_bound(&self) -> Option<f64> {
        None
    }

    /// Analytically known critical points inside the closed ball
    /// `B_radius(center)`.
    ///
    /// Returns `None` when the function cannot enumerate them (unknown
    /// structure, or too many to list).
    fn critical_points_within(&self, _center: &DVector<f64>, _radius: f64) -> Option<Vec<DVector<f64>>> {
        None
    }

    /// Human-readable one-line description.
    fn describe(&self) -> String;
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<(), CatalogError> {
    let (rows, cols) = a.shape();
    if rows == 0 || rows != cols {
        return Err(CatalogError::NotSquare { rows, cols });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(CatalogError::NonFinite("matrix entry".into()));
    }
    let scale = a.amax().max(1.0);
    for i in 0..rows {
        for j in (i + 1)..cols {
            let diff = (a[(i, j)] - a[(j, i)]).abs();
            if diff > SYMMETRY_TOL * scale {
                return Err(CatalogError::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    Ok(())
}

/// Symmetrize exactly so that `hessian` is bit-symmetric.
fn symmetrized(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn diagonal_entries(a: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != 0.0 {
                return None;
            }
        }
    }
    Some((0..n).map(|i| a[(i, i)]).collect())
}

/// Cartesian product of per-coordinate candidate values, filtered to a ball.
fn product_within(
    choices: &[Vec<f64>],
    center: &DVector<f64>,
    radius: f64,
) -> Option<Vec<DVector<f64>>> {
    let total = choices
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))?;
    if total > MAX_ENUMERATED_POINTS {
        return None;
    }
    let d = choices.len();
    let mut out = Vec::new();
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let p = DVector::from_iterator(d, idx.iter().zip(choices).map(|(&k, c)| c[k]));
        if (&p - center).norm() <= radius {
            out.push(p);
        }
        for (k, c) in idx.iter_mut().zip(choices) {
            *k += 1;
            if *k < c.len() {
                break;
            }
            *k = 0;
        }
    }
    Some(out)
}

/// `f(x) = ½ xᵀAx` for a symmetric matrix `A`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    a: DMatrix<f64>,
}

impl QuadraticForm {
    pub fn new(a: DMatrix<f64>) -> Result<Self, CatalogError> {
        check_symmetric(&a)?;
        Ok(Self { a: symmetrized(&a) })
    }

    pub fn diagonal(eigenvalues: &[f64]) -> Result<Self, CatalogError> {
        if eigenvalues.is_empty() {
            return Err(CatalogError::ZeroDimension);
        }
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl ObjectiveFunction for QuadraticForm {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x))
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn third_derivative_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn critical_points_within(&self, center: &DVector<f64>, radius: f64) -> Option<Vec<DVector<f64>>> {
        let origin = DVector::zeros(self.dim());
        if (&origin - center).norm() <= radius {
            Some(vec![origin])
        } else {
            Some(Vec::new())
        }
    }

    fn describe(&self) -> String {
        match diagonal_entries(&self.a) {
            Some(diag) => format!("quadratic form 1/2 x^T A x, A = diag{diag:?}"),
            None => format!("quadratic form 1/2 x^T A x, dense A ({0}x{0})", self.dim()),
        }
    }
}

/// `f(x) = ½ xᵀAx + (β/6) Σ xᵢ³`; the third derivative is bounded by `|β|`.
#[derive(Debug, Clone)]
pub struct CubicPerturbedQuadratic {
    a: DMatrix<f64>,
    beta: f64,
}

impl CubicPerturbedQuadratic {
    pub fn new(a: DMatrix<f64>, beta: f64) -> Result<Self, CatalogError> {
        check_symmetric(&a)?;
        if !beta.is_finite() {
            return Err(CatalogError::NonFinite("beta".into()));
        }
        Ok(Self { a: symmetrized(&a), beta })
    }

    pub fn diagonal(eigenvalues: &[f64], beta: f64) -> Result<Self, CatalogError> {
        if eigenvalues.is_empty() {
            return Err(CatalogError::ZeroDimension);
        }
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues)), beta)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl ObjectiveFunction for CubicPerturbedQuadratic {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let cubic: f64 = x.iter().map(|v| v * v * v).sum();
        0.5 * x.dot(&(&self.a * x)) + self.beta / 6.0 * cubic
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + x.map(|v| 0.5 * self.beta * v * v)
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = self.a.clone();
        for i in 0..x.len() {
            h[(i, i)] += self.beta * x[i];
        }
        h
    }

    fn third_derivative_bound(&self) -> Option<f64> {
        Some(self.beta.abs())
    }

    /// Only diagonal `A` has a closed-form critical set: each coordinate is
    /// either `0` or `-2 a_ii / β`.
    fn critical_points_within(&self, center: &DVector<f64>, radius: f64) -> Option<Vec<DVector<f64>>> {
        let diag = diagonal_entries(&self.a)?;
        let choices: Vec<Vec<f64>> = diag
            .iter()
            .map(|&a| {
                if self.beta == 0.0 || a == 0.0 {
                    vec![0.0]
                } else {
                    vec![0.0, -2.0 * a / self.beta]
                }
            })
            .collect();
        product_within(&choices, center, radius)
    }

    fn describe(&self) -> String {
        match diagonal_entries(&self.a) {
            Some(diag) => format!(
                "cubic-perturbed quadratic 1/2 x^T A x + ({}/6) sum x_i^3, A = diag{diag:?}",
                self.beta
            ),
            None => format!(
                "cubic-perturbed quadratic with dense A ({0}x{0}), beta = {1}",
                self.dim(),
                self.beta
            ),
        }
    }
}

/// `f(x) = -Σ cos(xᵢ)`: minima, saddles and maxima on the lattice `πZ^d`.
#[derive(Debug, Clone)]
pub struct TrigMultiWell {
    d: usize,
}

impl TrigMultiWell {
    pub fn new(d: usize) -> Result<Self, CatalogError> {
        if d == 0 {
            return Err(CatalogError::ZeroDimension);
        }
        Ok(Self { d })
    }
}

impl ObjectiveFunction for TrigMultiWell {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        -x.iter().map(|v| v.cos()).sum::<f64>()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(f64::sin)
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&x.map(f64::cos))
    }

    fn third_derivative_bound(&self) -> Option<f64> {
        Some(1.0)
    }

    fn critical_points_within(&self, center: &DVector<f64>, radius: f64) -> Option<Vec<DVector<f64>>> {
        let choices: Vec<Vec<f64>> = center
            .iter()
            .map(|&c| {
                let lo = ((c - radius) / PI).ceil() as i64;
                let hi = ((c + radius) / PI).floor() as i64;
                (lo..=hi).map(|k| k as f64 * PI).collect()
            })
            .collect();
        product_within(&choices, center, radius)
    }

    fn describe(&self) -> String {
        format!("trigonometric multi-well -sum cos(x_i), d = {}", self.d)
    }
}

/// A named catalog function together with its known critical points.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub function: Arc<dyn ObjectiveFunction>,
    pub known_critical_points: Vec<(DVector<f64>, Classification)>,
}

impl CatalogEntry {
    /// Wraps `function`, classifying every enumerable critical point within
    /// `search_radius` of the origin.
    pub fn new(name: impl Into<String>, function: Arc<dyn ObjectiveFunction>, search_radius: f64) -> Self {
        let origin = DVector::zeros(function.dim());
        let known_critical_points = function
            .critical_points_within(&origin, search_radius)
            .unwrap_or_default()
            .into_iter()
            .filter_map(|p| {
                classify_critical_point(function.as_ref(), &p, 1e-10)
                    .ok()
                    .map(|info| (p, info.classification))
            })
            .collect();
        Self {
            name: name.into(),
            function,
            known_critical_points,
        }
    }

    /// The default catalog used by `list-functions` and the catalog-wide tests.
    pub fn defaults() -> Vec<CatalogEntry> {
        let mut entries = Vec::new();
        let mut push = |name: &str, f: Arc<dyn ObjectiveFunction>, radius: f64| {
            entries.push(CatalogEntry::new(name, f, radius));
        };
        push(
            "quadratic:diag:1,-1",
            Arc::new(QuadraticForm::diagonal(&[1.0, -1.0]).unwrap()),
            1.0,
        );
        push(
            "quadratic:diag:1,1",
            Arc::new(QuadraticForm::diagonal(&[1.0, 1.0]).unwrap()),
            1.0,
        );
        push(
            "quadratic:diag:2,-0.5",
            Arc::new(QuadraticForm::diagonal(&[2.0, -0.5]).unwrap()),
            1.0,
        );
        let alternating: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        push(
            "quadratic:diag:1,-1,1,-1,1,-1,1,-1,1,-1",
            Arc::new(QuadraticForm::diagonal(&alternating).unwrap()),
            1.0,
        );
        push(
            "quadratic:dense:0,1,1,0",
            Arc::new(QuadraticForm::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()),
            1.0,
        );
        push(
            "cubic-perturbed:1,-1:1",
            Arc::new(CubicPerturbedQuadratic::diagonal(&[1.0, -1.0], 1.0).unwrap()),
            10.0,
        );
        push(
            "cubic-perturbed:1,-1:0.5",
            Arc::new(CubicPerturbedQuadratic::diagonal(&[1.0, -1.0], 0.5).unwrap()),
            10.0,
        );
        push("trig-multiwell:2", Arc::new(TrigMultiWell::new(2).unwrap()), 4.0);
        push("trig-multiwell:3", Arc::new(TrigMultiWell::new(3).unwrap()), 3.5);
        entries
    }
}
