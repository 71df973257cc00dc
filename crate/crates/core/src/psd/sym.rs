use crate::error::{Error, Result};
use crate::point::{Point, Shape};

/// Dense symmetric matrix with a cached count of nonzero off-diagonal entries.
///
/// Only symmetric updates are exposed, so `a[i][j] == a[j][i]` holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    point: Point,
    nnz_offdiag: usize,
}

impl SymMatrix {
    pub fn zeros(d: usize) -> Self {
        SymMatrix {
            point: Point::zeros(Shape::Symmetric(d)),
            nnz_offdiag: 0,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_point_unchecked(Point::scaled_identity(d, 1.0))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self::from_point_unchecked(Point::symmetric_from_fn(d, |i, j| {
            if i == j {
                diag[i]
            } else {
                0.0
            }
        }))
    }

    /// Built from the upper triangle of `f(i, j)`, `i <= j`.
    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self::from_point_unchecked(Point::symmetric_from_fn(d, f))
    }

    /// From row-major storage; fails unless exactly symmetric and finite.
    pub fn from_row_major(d: usize, values: Vec<f64>) -> Result<Self> {
        Ok(Self::from_point_unchecked(Point::symmetric(d, values)?))
    }

    pub fn from_point(point: Point) -> Result<Self> {
        match point.shape() {
            Shape::Symmetric(_) => Ok(Self::from_point_unchecked(point)),
            Shape::Vector(_) => Err(Error::ShapeMismatch {
                expected: "symmetric matrix".into(),
                got: point.shape().to_string(),
            }),
        }
    }

    fn from_point_unchecked(point: Point) -> Self {
        let nnz_offdiag = point.nnz_offdiag();
        SymMatrix { point, nnz_offdiag }
    }

    pub fn dim(&self) -> usize {
        self.point.shape().dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.point.at(i, j)
    }

    pub fn as_point(&self) -> &Point {
        &self.point
    }

    pub fn into_point(self) -> Point {
        self.point
    }

    pub fn nnz_offdiag(&self) -> usize {
        self.nnz_offdiag
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.point.norm()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `tr(self * other)` for symmetric matrices, i.e. the Frobenius inner product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        self.point.dot(&other.point)
    }

    /// `self += alpha * u u^T`.
    pub fn add_outer(&mut self, alpha: f64, u: &[f64]) {
        let d = self.dim();
        assert_eq!(u.len(), d);
        let values = self.point.values_mut();
        for i in 0..d {
            for j in i..d {
                let v = values[i * d + j] + alpha * u[i] * u[j];
                values[i * d + j] = v;
                values[j * d + i] = v;
            }
        }
        self.nnz_offdiag = self.point.nnz_offdiag();
    }

    /// Sets `(i, j)` and `(j, i)` to `v`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let d = self.dim();
        let values = self.point.values_mut();
        let before = values[i * d + j];
        values[i * d + j] = v;
        values[j * d + i] = v;
        if i != j {
            match (before != 0.0, v != 0.0) {
                (false, true) => self.nnz_offdiag += 2,
                (true, false) => self.nnz_offdiag -= 2,
                _ => {}
            }
        }
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let a = self.point.values();
        let mut total = 0.0;
        for i in 0..d {
            let row = &a[i * d..(i + 1) * d];
            let r: f64 = row.iter().zip(x).map(|(aij, xj)| aij * xj).sum();
            total += x[i] * r;
        }
        total
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        nalgebra::DMatrix::from_row_slice(d, d, self.point.values())
    }
}

impl From<SymMatrix> for Point {
    fn from(m: SymMatrix) -> Point {
        m.point
    }
}
