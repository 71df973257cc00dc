//! Smallest eigenpair of a sparse symmetric matrix.
//!
//! Lanczos with full reorthogonalization runs on the shifted operator
//! `sigma*I - A`, where `sigma` is a Gershgorin upper bound on the spectrum,
//! so the smallest eigenvalue of `A` becomes the largest (and best separated
//! from the positive side) eigenvalue of the operator. Each operator
//! application walks the nonzeros of `A` once.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::SymMatrix;
use crate::error::{Error, Result};
use crate::point::Point;
use crate::rng::aux_rng;

/// Default relative residual tolerance.
pub const DEFAULT_EIG_TOL: f64 = 1e-8;

/// Default operator-application budget for a `d x d` matrix.
pub fn default_max_matvecs(d: usize) -> u64 {
    50 * d as u64
}

const MAX_BASIS: usize = 100;
const CHECK_EVERY: usize = 5;

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub eigenvalue: f64,
    /// Unit-norm vector point.
    pub eigenvector: Point,
    pub matvec_count: u64,
    /// Matrix entries read over all operator applications.
    pub entries_touched: u64,
    pub converged: bool,
}

/// Compressed rows of the off-diagonal nonzeros plus the dense diagonal:
/// the operator the iterative eigen-solver applies.
pub struct SparseRows {
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn new(a: &SymMatrix) -> Self {
        let d = a.dim();
        let data = a.as_point().values();
        let mut diag = Vec::with_capacity(d);
        let mut row_ptr = Vec::with_capacity(d + 1);
        let mut cols = Vec::with_capacity(a.nnz_offdiag());
        let mut vals = Vec::with_capacity(a.nnz_offdiag());
        row_ptr.push(0);
        for i in 0..d {
            diag.push(data[i * d + i]);
            for j in 0..d {
                let v = data[i * d + j];
                if j != i && v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseRows {
            diag,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Entries read by one application.
    pub fn cost(&self) -> u64 {
        (self.diag.len() + self.vals.len()) as u64
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = self.diag[i] * x[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    /// Gershgorin upper bound on the largest eigenvalue.
    fn gershgorin_max(&self) -> f64 {
        (0..self.diag.len())
            .map(|i| {
                let radius: f64 = self.vals[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum();
                self.diag[i] + radius
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Deterministic pseudo-random unit start vector.
fn start_vector(d: usize) -> Vec<f64> {
    let mut rng = aux_rng(0x1a2c_305, d as u64);
    let mut v: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

struct Counter {
    matvecs: u64,
    cost: u64,
}

/// Smallest eigenvalue of `a` and a unit eigenvector.
///
/// Converged results satisfy `||A u - lambda u|| <= eig_tol * max(1, ||A||_F)`.
/// When the budget of `max_matvecs` operator applications runs out, the best
/// Ritz pair so far is returned with `converged = false`.
pub fn min_eigenpair(a: &SymMatrix, eig_tol: f64, max_matvecs: u64) -> Result<EigenResult> {
    let d = a.dim();
    if d == 0 {
        return Err(Error::invalid("eigenpair of an empty matrix"));
    }
    if !(eig_tol > 0.0) {
        return Err(Error::invalid(format!("eig_tol must be positive, got {eig_tol}")));
    }
    let op = SparseRows::new(a);
    let sigma = op.gershgorin_max();
    let target = eig_tol * a.frobenius_norm().max(1.0);
    let mut counter = Counter { matvecs: 0, cost: 0 };

    // Shifted operator: w = sigma * q - A q.
    let apply_shifted = |q: &[f64], w: &mut [f64], counter: &mut Counter| {
        op.apply(q, w);
        for (wi, qi) in w.iter_mut().zip(q) {
            *wi = sigma * qi - *wi;
        }
        counter.matvecs += 1;
        counter.cost += op.cost();
    };

    let basis_cap = d.min(MAX_BASIS);
    let breakdown = 1e-14 * (sigma.abs() + a.frobenius_norm()).max(1.0);
    let mut start = start_vector(d);
    // Best verified pair (lambda, u, residual) and the latest unverified Ritz vector.
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut latest: Option<Vec<f64>> = None;

    'restart: loop {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(basis_cap);
        let mut beta: Vec<f64> = Vec::with_capacity(basis_cap);
        let mut w = vec![0.0; d];

        for j in 0..basis_cap {
            if counter.matvecs >= max_matvecs {
                break 'restart;
            }
            apply_shifted(&basis[j], &mut w, &mut counter);
            let a_j = dot(&basis[j], &w);
            alpha.push(a_j);
            axpy(-a_j, &basis[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            let b_j = norm(&w);
            beta.push(b_j);

            let exhausted = b_j <= breakdown || j + 1 == basis_cap;
            if (j + 1) % CHECK_EVERY == 0 || exhausted {
                let s = top_ritz(&alpha, &beta[..j]);
                let estimate = b_j * s[j].abs();
                let u = ritz_vector(&basis, &s);
                if estimate <= 0.5 * target || exhausted {
                    let (lambda, residual) = residual(&op, &u, &mut counter);
                    if residual <= target {
                        return Ok(finish(lambda, u, counter, true));
                    }
                    if best.as_ref().is_none_or(|b| residual < b.2) {
                        best = Some((lambda, u.clone(), residual));
                    }
                } else {
                    latest = Some(u.clone());
                }
                if exhausted {
                    start = u;
                    continue 'restart;
                }
            }
            let inv = 1.0 / b_j;
            basis.push(w.iter().map(|x| x * inv).collect());
        }
        // Only reached when basis_cap iterations ran without an exhausted check,
        // which cannot happen; the exhausted branch always restarts.
        unreachable!("lanczos loop fell through");
    }

    let (lambda, u) = match (best, latest) {
        (Some((lambda, u, _)), _) => (lambda, u),
        (None, candidate) => {
            let u = candidate.unwrap_or(start);
            let (lambda, _) = residual(&op, &u, &mut counter);
            (lambda, u)
        }
    };
    Ok(finish(lambda, u, counter, false))
}

fn finish(lambda: f64, mut u: Vec<f64>, counter: Counter, converged: bool) -> EigenResult {
    let n = norm(&u);
    u.iter_mut().for_each(|x| *x /= n);
    EigenResult {
        eigenvalue: lambda,
        eigenvector: Point::vector(u).expect("finite eigenvector"),
        matvec_count: counter.matvecs,
        entries_touched: counter.cost,
        converged,
    }
}

/// Rayleigh quotient and residual norm of a unit vector.
fn residual(op: &SparseRows, u: &[f64], counter: &mut Counter) -> (f64, f64) {
    let mut au = vec![0.0; u.len()];
    op.apply(u, &mut au);
    counter.matvecs += 1;
    counter.cost += op.cost();
    let lambda = dot(u, &au);
    axpy(-lambda, u, &mut au);
    (lambda, norm(&au))
}

/// Largest eigenpair of the tridiagonal matrix with diagonal `alpha` and off-diagonal `beta`.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    eig.eigenvectors.column(idx).iter().copied().collect()
}

fn ritz_vector(basis: &[Vec<f64>], s: &[f64]) -> Vec<f64> {
    let d = basis[0].len();
    let mut u = vec![0.0; d];
    for (q, &c) in basis.iter().zip(s) {
        axpy(c, q, &mut u);
    }
    let n = norm(&u);
    u.iter_mut().for_each(|x| *x /= n);
    u
}

/// Smallest eigenpair from a dense symmetric decomposition. Reference and fallback path.
pub fn dense_min_eigenpair(a: &SymMatrix) -> Result<(f64, Vec<f64>)> {
    let eig = SymmetricEigen::try_new(a.to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("dense symmetric eigendecomposition did not converge"))?;
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::invalid("eigenpair of an empty matrix"))?;
    Ok((lambda, eig.eigenvectors.column(idx).iter().copied().collect()))
}
