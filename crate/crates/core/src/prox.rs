//! Elastic-net proximal map restricted to the ball.
//!
//! The inner update of the proximal solver solves
//!
//! ```text
//! argmin_{||x|| <= r}  1/2 ||x - xbar||^2 + eta * (mu1/2 ||x||^2 + mu2 ||x||_1)
//! ```
//!
//! in closed form: soft-threshold by `eta * mu2`, shrink by `1 / (eta * mu1 + 1)`,
//! then rescale onto the ball. The rescaling is exact here because the
//! ball multiplier only changes the shrink factor, never the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{Constraint, Objective};
use crate::point::{project_ball_in_place, Ball, Point, Shape};
use crate::rng::DrawRng;

/// `g(x) = mu1/2 ||x||^2 + mu2 ||x||_1`, optionally without the l1 term on a
/// matrix diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticNet {
    pub mu1: f64,
    pub mu2: f64,
    pub diagonal_exempt: bool,
}

impl ElasticNet {
    pub fn new(mu1: f64, mu2: f64, diagonal_exempt: bool) -> Result<Self> {
        if !(mu1 >= 0.0 && mu1.is_finite() && mu2 >= 0.0 && mu2.is_finite()) {
            return Err(Error::invalid(format!(
                "elastic-net weights must be finite and nonnegative, got mu1={mu1}, mu2={mu2}"
            )));
        }
        Ok(ElasticNet {
            mu1,
            mu2,
            diagonal_exempt,
        })
    }

    /// The zero regularizer.
    pub fn none() -> Self {
        ElasticNet {
            mu1: 0.0,
            mu2: 0.0,
            diagonal_exempt: false,
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        let l1: f64 = match x.shape() {
            Shape::Symmetric(d) if self.diagonal_exempt => x
                .values()
                .iter()
                .enumerate()
                .filter(|(k, _)| k / d != k % d)
                .map(|(_, v)| v.abs())
                .sum(),
            _ => x.values().iter().map(|v| v.abs()).sum(),
        };
        0.5 * self.mu1 * x.norm_sq() + self.mu2 * l1
    }

    /// A subgradient of `g` (sign(0) = 0 on the l1 part).
    pub fn subgrad(&self, x: &Point) -> Point {
        let shape = x.shape();
        let exempt = self.exempt_mask(shape);
        let values = x
            .values()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let l1 = if exempt(k) { 0.0 } else { self.mu2 * sign(v) };
                self.mu1 * v + l1
            })
            .collect();
        Point::from_parts(values, shape)
    }

    fn exempt_mask(&self, shape: Shape) -> impl Fn(usize) -> bool {
        let diag_dim = match shape {
            Shape::Symmetric(d) if self.diagonal_exempt => Some(d),
            _ => None,
        };
        move |k| diag_dim.is_some_and(|d| k / d == k % d)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `P_B[ sign(xbar) * [|xbar| - eta*mu2]_+ / (eta*mu1 + 1) ]`, elementwise.
///
/// Thresholded entries are literal `0.0`. With `diagonal_exempt` on a matrix,
/// diagonal entries are only shrunk.
pub fn prox_elastic_net_ball(xbar: &Point, eta: f64, reg: &ElasticNet, ball: &Ball) -> Result<Point> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("prox step must be positive, got {eta}")));
    }
    if !xbar.is_finite() {
        return Err(Error::invalid("prox of a non-finite point"));
    }
    let mut out = shrink_threshold(xbar, eta, reg);
    project_ball_in_place(&mut out, ball);
    Ok(out)
}

/// The unconstrained elastic-net prox (no ball).
pub fn shrink_threshold(xbar: &Point, eta: f64, reg: &ElasticNet) -> Point {
    let shrink = 1.0 / (eta * reg.mu1 + 1.0);
    let threshold = eta * reg.mu2;
    let exempt = reg.exempt_mask(xbar.shape());
    let values = xbar
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            if exempt(k) {
                shrink * v
            } else {
                let excess = v.abs() - threshold;
                if excess > 0.0 {
                    shrink * sign(v) * excess
                } else {
                    0.0
                }
            }
        })
        .collect();
    Point::from_parts(values, xbar.shape())
}

/// One proximal inner step: a penalized stochastic gradient step on the
/// smooth part followed by [`prox_elastic_net_ball`].
#[allow(clippy::too_many_arguments)]
pub fn prox_step<O, C>(
    x: &Point,
    eta: f64,
    oracle: &O,
    cons: &C,
    lambda: f64,
    reg: &ElasticNet,
    ball: &Ball,
    rng: &mut DrawRng,
) -> Result<Point>
where
    O: Objective + ?Sized,
    C: Constraint + ?Sized,
{
    let mut xbar = x.clone();
    let g = oracle.stoch_grad(x, rng);
    xbar.add_scaled(-eta, &g);
    if let Some(h) = cons.evaluate(x)?.active_subgrad {
        xbar.add_scaled(-eta * lambda, &h);
    }
    prox_elastic_net_ball(&xbar, eta, reg, ball)
}
