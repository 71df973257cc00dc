//! Iterates and the cheap ball projection.
//!
//! A [`Point`] is either a plain vector in `R^d` or a symmetric `d x d`
//! matrix stored densely in row-major order. The solvers only ever need
//! linear combinations, inner products and the Euclidean (Frobenius) norm,
//! so both shapes share one implementation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape tag carried by every [`Point`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Vector(usize),
    Symmetric(usize),
}

impl Shape {
    /// Number of stored entries.
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(d) => d,
            Shape::Symmetric(d) => d * d,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match *self {
            Shape::Vector(d) | Shape::Symmetric(d) => d,
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Shape::Vector(d) => write!(f, "vector({d})"),
            Shape::Symmetric(d) => write!(f, "symmetric({d}x{d})"),
        }
    }
}

/// A vector or a symmetric matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    values: Vec<f64>,
    shape: Shape,
}

impl Point {
    pub fn zeros(shape: Shape) -> Self {
        Point {
            values: vec![0.0; shape.len()],
            shape,
        }
    }

    /// A vector point. Fails on non-finite entries.
    pub fn vector(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Point {
            shape: Shape::Vector(values.len()),
            values,
        })
    }

    /// A symmetric matrix point from row-major storage.
    ///
    /// Fails unless `values.len() == d * d`, every entry is finite and
    /// `values[i*d + j] == values[j*d + i]` holds exactly.
    pub fn symmetric(d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != d * d {
            return Err(Error::ShapeMismatch {
                expected: format!("{} entries", d * d),
                got: format!("{} entries", values.len()),
            });
        }
        check_finite(&values)?;
        for i in 0..d {
            for j in (i + 1)..d {
                if values[i * d + j] != values[j * d + i] {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Point {
            values,
            shape: Shape::Symmetric(d),
        })
    }

    /// Symmetric matrix filled from the upper triangle of `f(i, j)`, `i <= j`.
    pub fn symmetric_from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let v = f(i, j);
                values[i * d + j] = v;
                values[j * d + i] = v;
            }
        }
        Point {
            values,
            shape: Shape::Symmetric(d),
        }
    }

    /// `scale * I`.
    pub fn scaled_identity(d: usize, scale: f64) -> Self {
        Self::symmetric_from_fn(d, |i, j| if i == j { scale } else { 0.0 })
    }

    /// `scale * u u^T` for a vector `u`; exactly symmetric.
    pub fn outer(u: &[f64], scale: f64) -> Self {
        Self::symmetric_from_fn(u.len(), |i, j| scale * u[i] * u[j])
    }

    pub(crate) fn from_parts(values: Vec<f64>, shape: Shape) -> Self {
        debug_assert_eq!(values.len(), shape.len());
        Point { values, shape }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Raw mutable storage; callers must preserve symmetry and finiteness.
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Matrix entry `(i, j)`. Panics on vector points.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match self.shape {
            Shape::Symmetric(d) => self.values[i * d + j],
            Shape::Vector(_) => panic!("matrix indexing on a vector point"),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm for vectors, Frobenius norm for matrices.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.assert_same_shape(other);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Point) {
        self.assert_same_shape(other);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn scaled(mut self, alpha: f64) -> Self {
        self.scale(alpha);
        self
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.assert_same_shape(other);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Number of nonzero off-diagonal entries (both triangles). Zero for vectors.
    pub fn nnz_offdiag(&self) -> usize {
        match self.shape {
            Shape::Vector(_) => 0,
            Shape::Symmetric(d) => {
                let mut n = 0;
                for i in 0..d {
                    for j in 0..d {
                        if i != j && self.values[i * d + j] != 0.0 {
                            n += 1;
                        }
                    }
                }
                n
            }
        }
    }

    /// Fails with [`Error::ShapeMismatch`] unless `self` has shape `shape`.
    pub fn expect_shape(&self, shape: Shape) -> Result<()> {
        if self.shape != shape {
            return Err(Error::ShapeMismatch {
                expected: shape.to_string(),
                got: self.shape.to_string(),
            });
        }
        Ok(())
    }

    fn assert_same_shape(&self, other: &Point) {
        assert_eq!(self.shape, other.shape, "point shapes differ");
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::invalid(format!("non-finite entry at index {i}"))),
        None => Ok(()),
    }
}

/// Running mean of points, summed in insertion order.
#[derive(Clone, Debug)]
pub struct Averager {
    sum: Point,
    count: usize,
}

impl Averager {
    pub fn new(shape: Shape) -> Self {
        Averager {
            sum: Point::zeros(shape),
            count: 0,
        }
    }

    pub fn push(&mut self, x: &Point) {
        self.sum.add_scaled(1.0, x);
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The mean so far. Panics when nothing was pushed.
    pub fn mean(&self) -> Point {
        assert!(self.count > 0, "mean of an empty average");
        self.sum.clone().scaled(1.0 / self.count as f64)
    }
}

/// The ball `{x : ||x|| <= r}` that contains the optimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    radius: f64,
}

impl Ball {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Ball { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.norm() <= self.radius
    }
}

/// Projection onto the ball: `x * r / max(||x||, r)`.
///
/// Points already inside are returned bit-for-bit. Points outside are
/// rescaled so that the *computed* norm is at most `r`, which makes the map
/// exactly idempotent.
pub fn project_ball(x: &Point, ball: &Ball) -> Result<Point> {
    if !x.is_finite() {
        return Err(Error::invalid("ball projection of a non-finite point"));
    }
    let mut y = x.clone();
    project_ball_in_place(&mut y, ball);
    Ok(y)
}

/// In-place variant of [`project_ball`] for finite points; returns whether it rescaled.
pub(crate) fn project_ball_in_place(x: &mut Point, ball: &Ball) -> bool {
    let r = ball.radius;
    let n = x.norm();
    if n <= r {
        return false;
    }
    let original = x.values.clone();
    let mut factor = r / n;
    loop {
        for (v, o) in x.values.iter_mut().zip(&original) {
            *v = o * factor;
        }
        if x.norm() <= r {
            return true;
        }
        factor *= 1.0 - f64::EPSILON;
    }
}

/// `[s]_+ = max(0, s)`, with `0.0` (never `-0.0`) for non-positive input.
pub fn hinge_pos(s: f64) -> f64 {
    if s > 0.0 {
        s
    } else {
        0.0
    }
}
