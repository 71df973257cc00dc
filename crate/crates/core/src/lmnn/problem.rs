use rand::Rng;

use super::{DataSet, TripletSet};
use crate::error::{Error, Result};
use crate::penalty::Objective;
use crate::point::{Ball, Point, Shape};
use crate::prox::ElasticNet;
use crate::psd::SymMatrix;
use crate::rng::DrawRng;
use crate::solvers::ProblemConstants;

/// The sparse LMNN objective
///
/// ```text
/// (c/N) sum_j [ |x1-x2|_A^2 - |x1-x3|_A^2 + 1 ]_+ + (1-c) tr(A L)
///     + mu1/2 |A|_F^2 + mu2 |A|_1^off
/// ```
///
/// over the PSD cone. The first two terms form the smooth part sampled by
/// the stochastic gradient; the last two are handled by the proximal step.
#[derive(Clone, Debug)]
pub struct LmnnProblem {
    d: usize,
    c: f64,
    mu1: f64,
    mu2: f64,
    prior: SymMatrix,
    triplets: Vec<[usize; 3]>,
    /// Row-major `N x d` blocks of `x1 - x2` and `x1 - x3`.
    near: Vec<f64>,
    far: Vec<f64>,
    feature_bound: f64,
    minibatch: usize,
}

impl LmnnProblem {
    pub fn new(data: &DataSet, triplets: &TripletSet, prior: SymMatrix, c: f64, mu1: f64, mu2: f64) -> Result<Self> {
        let d = data.dim();
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::config(format!("c must lie in (0, 1), got {c}")));
        }
        if !(mu1 > 0.0 && mu1.is_finite()) {
            return Err(Error::config(format!("mu1 must be positive, got {mu1}")));
        }
        if !(mu2 >= 0.0 && mu2.is_finite()) {
            return Err(Error::config(format!("mu2 must be nonnegative, got {mu2}")));
        }
        if prior.dim() != d {
            return Err(Error::ShapeMismatch {
                expected: format!("{d}x{d} prior"),
                got: format!("{0}x{0}", prior.dim()),
            });
        }
        if triplets.is_empty() {
            return Err(Error::invalid("no triplets; every class needs at least two members"));
        }
        let mut near = Vec::with_capacity(triplets.len() * d);
        let mut far = Vec::with_capacity(triplets.len() * d);
        for &[i, j, l] in &triplets.triplets {
            if i.max(j).max(l) >= data.len() {
                return Err(Error::invalid(format!("triplet ({i}, {j}, {l}) out of range")));
            }
            if data.label(i) != data.label(j) || data.label(i) == data.label(l) {
                return Err(Error::invalid(format!("triplet ({i}, {j}, {l}) violates the label pattern")));
            }
            let (xi, xj, xl) = (data.point(i), data.point(j), data.point(l));
            near.extend(xi.iter().zip(xj).map(|(a, b)| a - b));
            far.extend(xi.iter().zip(xl).map(|(a, b)| a - b));
        }
        Ok(LmnnProblem {
            d,
            c,
            mu1,
            mu2,
            prior,
            triplets: triplets.triplets.clone(),
            near,
            far,
            feature_bound: data.feature_bound(),
            minibatch: 1,
        })
    }

    /// Triplets averaged per stochastic gradient (default 1).
    pub fn with_minibatch(mut self, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::config("minibatch size must be positive"));
        }
        self.minibatch = size;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn prior(&self) -> &SymMatrix {
        &self.prior
    }

    pub fn triplets(&self) -> &[[usize; 3]] {
        &self.triplets
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn minibatch(&self) -> usize {
        self.minibatch
    }

    pub fn feature_bound(&self) -> f64 {
        self.feature_bound
    }

    /// `r = sqrt(2c / mu1)`: the optimum lies in this Frobenius ball since
    /// the objective at zero is `c`.
    pub fn radius(&self) -> f64 {
        (2.0 * self.c / self.mu1).sqrt()
    }

    pub fn ball(&self) -> Ball {
        Ball::new(self.radius()).expect("radius is positive for valid c and mu1")
    }

    /// `8 c R^2 + (1-c) |L|_F + mu1 r + mu2 d`.
    pub fn g1_bound(&self) -> f64 {
        8.0 * self.c * self.feature_bound.powi(2)
            + (1.0 - self.c) * self.prior.frobenius_norm()
            + self.mu1 * self.radius()
            + self.mu2 * self.d as f64
    }

    /// `2 G1`.
    pub fn lambda(&self) -> f64 {
        2.0 * self.g1_bound()
    }

    /// `beta = mu1`, `rho = G2 = 1`.
    pub fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            beta: self.mu1,
            g1: self.g1_bound(),
            g2: 1.0,
            rho: 1.0,
        }
    }

    /// The elastic net on the off-diagonal part.
    pub fn regularizer(&self) -> ElasticNet {
        ElasticNet {
            mu1: self.mu1,
            mu2: self.mu2,
            diagonal_exempt: true,
        }
    }

    /// `(r / sqrt d) I`, feasible and on the ball boundary.
    pub fn initial_metric(&self) -> SymMatrix {
        let s = self.radius() / (self.d as f64).sqrt();
        SymMatrix::diagonal(&vec![s; self.d])
    }

    fn near(&self, j: usize) -> &[f64] {
        &self.near[j * self.d..(j + 1) * self.d]
    }

    fn far(&self, j: usize) -> &[f64] {
        &self.far[j * self.d..(j + 1) * self.d]
    }

    /// `|x1-x2|_A^2 - |x1-x3|_A^2 + 1` for triplet `j`.
    pub fn hinge_argument(&self, a: &Point, j: usize) -> f64 {
        quad(a.values(), self.d, self.near(j)) - quad(a.values(), self.d, self.far(j)) + 1.0
    }

    /// Fraction of triplets whose hinge is active (argument `> 0`).
    pub fn active_fraction(&self, a: &Point) -> f64 {
        let active = (0..self.len()).filter(|&j| self.hinge_argument(a, j) > 0.0).count();
        active as f64 / self.len() as f64
    }

    /// `(c/N) sum_j [.]_+ + (1-c) tr(A L)`.
    pub fn smooth_value(&self, a: &Point) -> f64 {
        let hinge: f64 = (0..self.len()).map(|j| self.hinge_argument(a, j).max(0.0)).sum();
        self.c * hinge / self.len() as f64 + (1.0 - self.c) * trace_product(a.values(), self.prior.as_point().values())
    }

    /// Average of the single-triplet gradients over all `N` triplets.
    pub fn full_smooth_grad(&self, a: &Point) -> Point {
        let n = self.len();
        let mut acc = vec![0.0; self.d * self.d];
        for j in 0..n {
            if self.hinge_argument(a, j) > 0.0 {
                add_hinge_grad(&mut acc, self.d, self.c / n as f64, self.near(j), self.far(j));
            }
        }
        self.finish_grad(acc)
    }

    fn triplet_grad(&self, a: &Point, batch: &[usize]) -> Point {
        let mut acc = vec![0.0; self.d * self.d];
        let w = self.c / batch.len() as f64;
        for &j in batch {
            if self.hinge_argument(a, j) > 0.0 {
                add_hinge_grad(&mut acc, self.d, w, self.near(j), self.far(j));
            }
        }
        self.finish_grad(acc)
    }

    /// Adds `(1-c) L` to the hinge part accumulated in the upper triangle and mirrors it.
    fn finish_grad(&self, mut acc: Vec<f64>) -> Point {
        let d = self.d;
        let prior = self.prior.as_point().values();
        for i in 0..d {
            for k in i..d {
                let v = acc[i * d + k] + (1.0 - self.c) * prior[i * d + k];
                acc[i * d + k] = v;
                acc[k * d + i] = v;
            }
        }
        Point::from_parts(acc, Shape::Symmetric(d))
    }

    fn check(&self, a: &SymMatrix) -> Result<()> {
        if a.dim() != self.d {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0} metric", self.d),
                got: format!("{0}x{0}", a.dim()),
            });
        }
        Ok(())
    }
}

/// Upper-triangle accumulation of `w (u u^T - v v^T)`.
fn add_hinge_grad(acc: &mut [f64], d: usize, w: f64, u: &[f64], v: &[f64]) {
    for i in 0..d {
        let (wu, wv) = (w * u[i], w * v[i]);
        let row = &mut acc[i * d..(i + 1) * d];
        for k in i..d {
            row[k] += wu * u[k] - wv * v[k];
        }
    }
}

fn quad(a: &[f64], d: usize, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..d {
        if x[i] == 0.0 {
            continue;
        }
        let row = &a[i * d..(i + 1) * d];
        total += x[i] * row.iter().zip(x).map(|(r, y)| r * y).sum::<f64>();
    }
    total
}

fn trace_product(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The full objective, regularizer included.
pub fn lmnn_value(a: &SymMatrix, prob: &LmnnProblem) -> Result<f64> {
    prob.check(a)?;
    Ok(prob.value(a.as_point()))
}

/// Gradient of the smooth part at triplet `index`:
/// `c (u u^T - v v^T) + (1-c) L` when its hinge is active, `(1-c) L` otherwise.
pub fn lmnn_stoch_grad(a: &SymMatrix, index: usize, prob: &LmnnProblem) -> Result<SymMatrix> {
    prob.check(a)?;
    if index >= prob.len() {
        return Err(Error::invalid(format!(
            "triplet index {index} out of range for {} triplets",
            prob.len()
        )));
    }
    SymMatrix::from_point(prob.triplet_grad(a.as_point(), &[index]))
}

impl Objective for LmnnProblem {
    fn shape(&self) -> Shape {
        Shape::Symmetric(self.d)
    }

    /// Uniform sampling with replacement of `minibatch` triplets.
    fn stoch_grad(&self, x: &Point, rng: &mut DrawRng) -> Point {
        let batch: Vec<usize> = (0..self.minibatch).map(|_| rng.gen_range(0..self.len())).collect();
        self.triplet_grad(x, &batch)
    }

    fn value(&self, x: &Point) -> f64 {
        self.smooth_value(x) + self.regularizer().value(x)
    }

    fn beta(&self) -> f64 {
        self.mu1
    }

    fn g1(&self) -> f64 {
        self.g1_bound()
    }
}
