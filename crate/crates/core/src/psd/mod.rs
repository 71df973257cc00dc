//! The PSD cone written as the single inequality `c(A) = -lambda_min(A) <= 0`.
//!
//! Inside an epoch only the smallest eigenpair is needed (for the value and
//! the rank-one subgradient `-u u^T`), which an iterative solver gets at a
//! cost linear in the nonzeros of `A`. The full eigendecomposition is
//! reserved for [`project_psd`], applied once per epoch.

mod eigen;
mod sym;

pub use eigen::{default_max_matvecs, dense_min_eigenpair, min_eigenpair, EigenResult, SparseRows, DEFAULT_EIG_TOL};
pub use sym::SymMatrix;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::penalty::{Constraint, ConstraintEval};
use crate::point::{Point, Shape};

/// `c(A) = -lambda_min(A)` using the default solver settings.
pub fn psd_constraint(a: &SymMatrix) -> Result<f64> {
    Ok(-smallest(a, DEFAULT_EIG_TOL, default_max_matvecs(a.dim()))?.0)
}

/// `-u u^T` when `lambda_min(A) < 0`, the zero matrix otherwise.
pub fn psd_subgrad(a: &SymMatrix) -> Result<SymMatrix> {
    let (lambda, u, _) = smallest(a, DEFAULT_EIG_TOL, default_max_matvecs(a.dim()))?;
    let mut g = SymMatrix::zeros(a.dim());
    if lambda < 0.0 {
        g.add_outer(-1.0, &u);
    }
    Ok(g)
}

/// Smallest eigenpair, falling back to a dense decomposition when the
/// iterative solver runs out of budget. Returns `(lambda, u, matvecs)`.
fn smallest(a: &SymMatrix, eig_tol: f64, max_matvecs: u64) -> Result<(f64, Vec<f64>, u64)> {
    let r = min_eigenpair(a, eig_tol, max_matvecs)?;
    if r.converged {
        return Ok((r.eigenvalue, r.eigenvector.into_values(), r.matvec_count));
    }
    log::warn!(
        "lanczos did not converge in {} matvecs (d = {}); using dense decomposition",
        r.matvec_count,
        a.dim()
    );
    let (lambda, u) = dense_min_eigenpair(a)?;
    Ok((lambda, u, r.matvec_count))
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped to zero.
///
/// Computed as `A - sum_{lambda_i < 0} lambda_i v_i v_i^T`, so PSD inputs come
/// back bit-for-bit.
pub fn project_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let d = a.dim();
    if !a.as_point().is_finite() {
        return Err(Error::invalid("PSD projection of a non-finite matrix"));
    }
    if d == 0 {
        return Ok(a.clone());
    }
    let eig = SymmetricEigen::try_new(a.to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("symmetric eigendecomposition did not converge"))?;
    let negative: Vec<usize> = (0..d).filter(|&k| eig.eigenvalues[k] < 0.0).collect();
    if negative.is_empty() {
        return Ok(a.clone());
    }
    let mut out = a.clone();
    for k in negative {
        let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        out.add_outer(-eig.eigenvalues[k], &v);
    }
    Ok(out)
}

/// The PSD cone over `d x d` symmetric matrices, with `rho = G2 = 1`.
#[derive(Clone, Copy, Debug)]
pub struct PsdCone {
    d: usize,
    eig_tol: f64,
    max_matvecs: u64,
}

impl PsdCone {
    pub fn new(d: usize) -> Self {
        PsdCone {
            d,
            eig_tol: DEFAULT_EIG_TOL,
            max_matvecs: default_max_matvecs(d),
        }
    }

    pub fn with_solver(mut self, eig_tol: f64, max_matvecs: u64) -> Self {
        self.eig_tol = eig_tol;
        self.max_matvecs = max_matvecs;
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    fn matrix(&self, x: &Point) -> Result<SymMatrix> {
        x.expect_shape(Shape::Symmetric(self.d))?;
        SymMatrix::from_point(x.clone())
    }
}

impl Constraint for PsdCone {
    fn value(&self, x: &Point) -> Result<f64> {
        Ok(-smallest(&self.matrix(x)?, self.eig_tol, self.max_matvecs)?.0)
    }

    fn subgrad(&self, x: &Point) -> Result<Point> {
        Ok(self
            .evaluate(x)?
            .active_subgrad
            .unwrap_or_else(|| Point::zeros(x.shape())))
    }

    fn evaluate(&self, x: &Point) -> Result<ConstraintEval> {
        let (lambda, u, matvecs) = smallest(&self.matrix(x)?, self.eig_tol, self.max_matvecs)?;
        let value = -lambda;
        let active_subgrad = (value > 0.0).then(|| Point::outer(&u, -1.0));
        Ok(ConstraintEval {
            value,
            active_subgrad,
            matvecs,
        })
    }

    fn project(&self, x: &Point) -> Result<Point> {
        Ok(project_psd(&self.matrix(x)?)?.into_point())
    }

    fn rho(&self) -> f64 {
        1.0
    }

    fn g2(&self) -> f64 {
        1.0
    }
}
