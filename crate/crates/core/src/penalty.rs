//! Stochastic objectives, inequality constraints and the penalized objective
//! `F(x) = f(x) + lambda * [c(x)]_+` that replaces the hard constraint inside
//! an epoch.

use crate::error::{Error, Result};
use crate::point::{hinge_pos, Point, Shape};
use crate::rng::DrawRng;

/// Absolute tolerance for declaring an exact projection's output feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A strongly convex objective accessed through stochastic subgradients.
pub trait Objective: Sync {
    fn shape(&self) -> Shape;

    /// One stochastic subgradient at `x`. For composite objectives used with
    /// the proximal solver this is the gradient of the smooth part only.
    fn stoch_grad(&self, x: &Point, rng: &mut DrawRng) -> Point;

    /// Full objective value `f(x)`.
    fn value(&self, x: &Point) -> f64;

    /// Strong convexity modulus.
    fn beta(&self) -> f64;

    /// Uniform bound on the stochastic subgradient norm over the ball.
    fn g1(&self) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn shape(&self) -> Shape {
        (**self).shape()
    }

    fn stoch_grad(&self, x: &Point, rng: &mut DrawRng) -> Point {
        (**self).stoch_grad(x, rng)
    }

    fn value(&self, x: &Point) -> f64 {
        (**self).value(x)
    }

    fn beta(&self) -> f64 {
        (**self).beta()
    }

    fn g1(&self) -> f64 {
        (**self).g1()
    }
}

/// Result of evaluating a constraint and, when violated, its subgradient.
#[derive(Clone, Debug)]
pub struct ConstraintEval {
    pub value: f64,
    /// `Some` exactly when `value > 0`.
    pub active_subgrad: Option<Point>,
    /// Operator applications spent by an iterative solver, if any.
    pub matvecs: u64,
}

/// The domain `D = {x : c(x) <= 0}` with its exact projection.
pub trait Constraint: Sync {
    fn value(&self, x: &Point) -> Result<f64>;

    fn subgrad(&self, x: &Point) -> Result<Point>;

    /// Constraint value plus the subgradient of `[c]_+` when it is active.
    fn evaluate(&self, x: &Point) -> Result<ConstraintEval> {
        let value = self.value(x)?;
        let active_subgrad = if value > 0.0 {
            Some(self.subgrad(x)?)
        } else {
            None
        };
        Ok(ConstraintEval {
            value,
            active_subgrad,
            matvecs: 0,
        })
    }

    /// Euclidean projection onto `D`. This is the expensive step.
    fn project(&self, x: &Point) -> Result<Point>;

    /// Lower bound on `||grad c||` on the boundary.
    fn rho(&self) -> f64;

    /// Upper bound on `||grad c||` over the ball.
    fn g2(&self) -> f64;
}

/// `lambda * rho > G1`, the condition under which the penalty is exact.
pub fn check_multiplier(lambda: f64, rho: f64, g1: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::config(format!("lambda must be positive, got {lambda}")));
    }
    if !(rho > 0.0) {
        return Err(Error::config(format!("rho must be positive, got {rho}")));
    }
    if lambda * rho <= g1 {
        return Err(Error::config(format!(
            "lambda = {lambda} must exceed G1/rho = {}",
            g1 / rho
        )));
    }
    Ok(())
}

/// `F(x) = f(x) + lambda * [c(x)]_+`.
pub fn penalized_value<O, C>(x: &Point, oracle: &O, cons: &C, lambda: f64) -> Result<f64>
where
    O: Objective + ?Sized,
    C: Constraint + ?Sized,
{
    check_multiplier(lambda, cons.rho(), oracle.g1())?;
    Ok(oracle.value(x) + lambda * hinge_pos(cons.value(x)?))
}

/// Stochastic subgradient of `F`: `g(x; eps) + lambda * grad [c(x)]_+`, where
/// the hinge gradient is the zero point whenever `c(x) <= 0`.
pub fn penalized_subgrad<O, C>(
    x: &Point,
    oracle: &O,
    cons: &C,
    lambda: f64,
    rng: &mut DrawRng,
) -> Result<Point>
where
    O: Objective + ?Sized,
    C: Constraint + ?Sized,
{
    check_multiplier(lambda, cons.rho(), oracle.g1())?;
    Ok(penalized_step_direction(x, oracle, cons, lambda, rng)?.0)
}

/// Unchecked core of [`penalized_subgrad`]; also returns the constraint evaluation.
pub(crate) fn penalized_step_direction<O, C>(
    x: &Point,
    oracle: &O,
    cons: &C,
    lambda: f64,
    rng: &mut DrawRng,
) -> Result<(Point, ConstraintEval)>
where
    O: Objective + ?Sized,
    C: Constraint + ?Sized,
{
    let mut g = oracle.stoch_grad(x, rng);
    let eval = cons.evaluate(x)?;
    if let Some(h) = &eval.active_subgrad {
        g.add_scaled(lambda, h);
    }
    Ok((g, eval))
}

/// A halfspace `{x : w.x <= b}`; `rho = G2 = ||w||`.
#[derive(Clone, Debug)]
pub struct Halfspace {
    normal: Point,
    offset: f64,
    normal_norm: f64,
}

impl Halfspace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let normal_norm = normal.norm();
        if !(normal_norm > 0.0) || !offset.is_finite() {
            return Err(Error::invalid("halfspace needs a nonzero normal and finite offset"));
        }
        Ok(Halfspace {
            normal,
            offset,
            normal_norm,
        })
    }

    pub fn normal(&self) -> &Point {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl Constraint for Halfspace {
    fn value(&self, x: &Point) -> Result<f64> {
        x.expect_shape(self.normal.shape())?;
        Ok(self.normal.dot(x) - self.offset)
    }

    fn subgrad(&self, x: &Point) -> Result<Point> {
        x.expect_shape(self.normal.shape())?;
        Ok(self.normal.clone())
    }

    fn project(&self, x: &Point) -> Result<Point> {
        let excess = self.value(x)?;
        let mut y = x.clone();
        if excess > 0.0 {
            y.add_scaled(-excess / (self.normal_norm * self.normal_norm), &self.normal);
            // Rounding can leave the result a hair outside; nudge it onto the safe side.
            let mut residual = self.value(&y)?;
            while residual > 0.0 {
                y.add_scaled(-2.0 * residual.max(f64::MIN_POSITIVE) / self.normal_norm.powi(2), &self.normal);
                residual = self.value(&y)?;
            }
        }
        Ok(y)
    }

    fn rho(&self) -> f64 {
        self.normal_norm
    }

    fn g2(&self) -> f64 {
        self.normal_norm
    }
}

/// The trivial domain `R^d` (`c = -1`), for baselines and tests.
#[derive(Clone, Copy, Debug)]
pub struct Unconstrained;

impl Constraint for Unconstrained {
    fn value(&self, _x: &Point) -> Result<f64> {
        Ok(-1.0)
    }

    fn subgrad(&self, x: &Point) -> Result<Point> {
        Ok(Point::zeros(x.shape()))
    }

    fn project(&self, x: &Point) -> Result<Point> {
        Ok(x.clone())
    }

    fn rho(&self) -> f64 {
        1.0
    }

    fn g2(&self) -> f64 {
        1.0
    }
}
