//! Slow reference solvers used to check the fast paths.

use crate::error::{Error, Result};
use crate::point::{Ball, Point, Shape};
use crate::prox::ElasticNet;

/// Minimizer of the 1-d convex function with derivative
/// `s x - target + weight * sign(x)` (subdifferential at 0), by bisection on
/// one-sided derivatives.
fn scalar_argmin(s: f64, target: f64, weight: f64) -> f64 {
    let left = |x: f64| s * x - target + if x > 0.0 { weight } else { -weight };
    let right = |x: f64| s * x - target + if x >= 0.0 { weight } else { -weight };
    let bound = (target.abs() + weight) / s + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if left(mid) > 0.0 {
            hi = mid;
        } else if right(mid) < 0.0 {
            lo = mid;
        } else {
            return mid;
        }
        if hi - lo <= f64::EPSILON * bound {
            break;
        }
    }
    // Zero is the only kink; snap to it when it is optimal.
    if left(0.0) <= 0.0 && right(0.0) >= 0.0 {
        0.0
    } else {
        0.5 * (lo + hi)
    }
}

/// `argmin_x 1/2 ||x - xbar||^2 + eta g(x) + nu/2 ||x||^2`, coordinatewise.
fn penalized_argmin(xbar: &Point, eta: f64, reg: &ElasticNet, nu: f64) -> Point {
    let diag = match xbar.shape() {
        Shape::Symmetric(d) if reg.diagonal_exempt => Some(d),
        _ => None,
    };
    let s = 1.0 + eta * reg.mu1 + nu;
    let values = xbar
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let exempt = diag.is_some_and(|d| k / d == k % d);
            let weight = if exempt { 0.0 } else { eta * reg.mu2 };
            scalar_argmin(s, v, weight)
        })
        .collect();
    Point::from_parts(values, xbar.shape())
}

/// `argmin_{||x|| <= r} 1/2 ||x - xbar||^2 + eta g(x)` for small problems.
///
/// Solves the Lagrangian dual in the ball multiplier `nu >= 0` by bisection,
/// with every inner problem solved coordinatewise by bisection. No closed
/// form for the shrinkage is used. Fails when the KKT conditions cannot be
/// certified to `tol`.
pub fn brute_force_prox(xbar: &Point, eta: f64, reg: &ElasticNet, ball: &Ball, tol: f64) -> Result<Point> {
    if xbar.len() > 400 {
        return Err(Error::invalid("brute-force prox is meant for small problems"));
    }
    if !(eta > 0.0 && tol > 0.0) {
        return Err(Error::invalid("eta and tol must be positive"));
    }
    let r = ball.radius();
    let free = penalized_argmin(xbar, eta, reg, 0.0);
    if free.norm() <= r {
        return Ok(free);
    }
    let mut hi = 1.0;
    while penalized_argmin(xbar, eta, reg, hi).norm() > r {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::numerical("could not bracket the ball multiplier"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if penalized_argmin(xbar, eta, reg, mid).norm() > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let x = penalized_argmin(xbar, eta, reg, hi);
    let gap = r - x.norm();
    if !(gap >= -tol * r.max(1.0) && gap <= tol * r.max(1.0)) {
        return Err(Error::numerical(format!(
            "brute-force prox: norm {} misses radius {r} (multiplier in [{lo}, {hi}])",
            x.norm()
        )));
    }
    Ok(x)
}
