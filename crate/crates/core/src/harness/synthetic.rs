use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{Constraint, ConstraintEval, Halfspace, Objective};
use crate::point::{Ball, Point, Shape};
use crate::psd::{project_psd, PsdCone, SymMatrix};
use crate::rng::{aux_rng, DrawRng};
use crate::solvers::Problem;

/// `f(x) = beta/2 ||x - a||^2` observed through `grad f + eps`, with every
/// entry of `eps` uniform on `[-noise, noise]`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    center: Point,
    beta: f64,
    noise: f64,
    radius: f64,
}

impl Quadratic {
    /// `radius` is the ball the solvers stay in; it enters the gradient bound.
    pub fn new(center: Point, beta: f64, noise: f64, radius: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::config(format!("beta must be positive, got {beta}")));
        }
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(Error::config(format!("noise must be nonnegative, got {noise}")));
        }
        Ok(Quadratic {
            center,
            beta,
            noise,
            radius,
        })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }
}

impl Objective for Quadratic {
    fn shape(&self) -> Shape {
        self.center.shape()
    }

    fn stoch_grad(&self, x: &Point, rng: &mut DrawRng) -> Point {
        let mut g = x.clone();
        g.add_scaled(-1.0, &self.center);
        g.scale(self.beta);
        if self.noise > 0.0 {
            let values: Vec<f64> = match g.shape() {
                Shape::Vector(n) => (0..n).map(|_| rng.gen_range(-self.noise..=self.noise)).collect(),
                Shape::Symmetric(d) => {
                    let mut e = vec![0.0; d * d];
                    for i in 0..d {
                        for j in i..d {
                            let v = rng.gen_range(-self.noise..=self.noise);
                            e[i * d + j] = v;
                            e[j * d + i] = v;
                        }
                    }
                    e
                }
            };
            g.add_scaled(1.0, &Point::from_parts(values, g.shape()));
        }
        g
    }

    fn value(&self, x: &Point) -> f64 {
        0.5 * self.beta * x.distance(&self.center).powi(2)
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    /// `beta (r + ||a||) + noise sqrt(len)`.
    fn g1(&self) -> f64 {
        self.beta * (self.radius + self.center.norm()) + self.noise * (self.center.len() as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    QuadraticHalfspace,
    QuadraticPsd,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic_halfspace" => Ok(Family::QuadraticHalfspace),
            "quadratic_psd" => Ok(Family::QuadraticPsd),
            _ => Err(Error::config(format!("unknown problem family '{s}'"))),
        }
    }
}

/// The domain of a synthetic problem.
#[derive(Clone, Debug)]
pub enum SyntheticDomain {
    Halfspace(Halfspace),
    Psd(PsdCone),
}

impl Constraint for SyntheticDomain {
    fn value(&self, x: &Point) -> Result<f64> {
        match self {
            SyntheticDomain::Halfspace(h) => h.value(x),
            SyntheticDomain::Psd(p) => p.value(x),
        }
    }

    fn subgrad(&self, x: &Point) -> Result<Point> {
        match self {
            SyntheticDomain::Halfspace(h) => h.subgrad(x),
            SyntheticDomain::Psd(p) => p.subgrad(x),
        }
    }

    fn evaluate(&self, x: &Point) -> Result<ConstraintEval> {
        match self {
            SyntheticDomain::Halfspace(h) => h.evaluate(x),
            SyntheticDomain::Psd(p) => p.evaluate(x),
        }
    }

    fn project(&self, x: &Point) -> Result<Point> {
        match self {
            SyntheticDomain::Halfspace(h) => h.project(x),
            SyntheticDomain::Psd(p) => p.project(x),
        }
    }

    fn rho(&self) -> f64 {
        match self {
            SyntheticDomain::Halfspace(h) => h.rho(),
            SyntheticDomain::Psd(p) => p.rho(),
        }
    }

    fn g2(&self) -> f64 {
        match self {
            SyntheticDomain::Halfspace(h) => h.g2(),
            SyntheticDomain::Psd(p) => p.g2(),
        }
    }
}

/// A test problem with its optimum known in closed form.
#[derive(Clone, Debug)]
pub struct SyntheticProblem {
    pub family: Family,
    pub problem: Problem<Quadratic, SyntheticDomain>,
    pub x_star: Point,
    pub f_star: f64,
}

impl SyntheticProblem {
    /// `f(x) - f(x*)`.
    pub fn error(&self, x: &Point) -> f64 {
        self.problem.objective.value(x) - self.f_star
    }
}

/// Ball radius: twice the larger of the optimum and the center norms, at least 1.
fn radius_for(x_star: &Point, center: &Point) -> f64 {
    (2.0 * x_star.norm().max(center.norm())).max(1.0)
}

/// `f(x) = beta/2 ||x - a||^2` over `{x : w.x <= b}` with an explicit center.
/// The start point is the origin, which must be feasible (`b >= 0`).
pub fn quadratic_halfspace(a: Point, w: Point, b: f64, beta: f64, noise: f64) -> Result<SyntheticProblem> {
    if b < 0.0 {
        return Err(Error::config("offset must be nonnegative so the origin is feasible"));
    }
    let half = Halfspace::new(w.clone(), b)?;
    let excess = half.value(&a)?;
    let mut x_star = a.clone();
    if excess > 0.0 {
        x_star.add_scaled(-excess / w.norm_sq(), &w);
    }
    let radius = radius_for(&x_star, &a);
    let objective = Quadratic::new(a, beta, noise, radius)?;
    let f_star = objective.value(&x_star);
    let shape = objective.shape();
    let problem = Problem::new(objective, SyntheticDomain::Halfspace(half), Ball::new(radius)?, Point::zeros(shape))?;
    Ok(SyntheticProblem {
        family: Family::QuadraticHalfspace,
        problem,
        x_star,
        f_star,
    })
}

/// A random instance: unit normal `w`, offset `b = 1`, and a center `a`
/// between 1 and 2 units outside the halfspace, so the optimum is on the boundary.
pub fn gen_quadratic_halfspace(d: usize, beta: f64, noise: f64, seed: u64) -> Result<SyntheticProblem> {
    if d == 0 {
        return Err(Error::config("dimension must be positive"));
    }
    let mut rng = aux_rng(seed, 0x5155);
    let w = unit_vector(&mut rng, d);
    let mut perp: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let along: f64 = perp.iter().zip(&w).map(|(p, q)| p * q).sum();
    perp.iter_mut().zip(&w).for_each(|(p, q)| *p -= along * q);
    let perp_norm = perp.iter().map(|v| v * v).sum::<f64>().sqrt();
    if perp_norm > 1.0 {
        perp.iter_mut().for_each(|p| *p /= perp_norm);
    }
    let outside = 1.0 + rng.gen_range(1.0..2.0);
    let a: Vec<f64> = w.iter().zip(&perp).map(|(q, p)| outside * q + p).collect();
    quadratic_halfspace(Point::vector(a)?, Point::vector(w)?, 1.0, beta, noise)
}

fn unit_vector(rng: &mut DrawRng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `f(A) = beta/2 ||A - C||_F^2` over the PSD cone, with `C` a random
/// symmetric matrix with entries in `[-1, 1]`. The optimum is `C` with its
/// negative eigenvalues clipped.
pub fn gen_quadratic_psd(d: usize, beta: f64, noise: f64, seed: u64) -> Result<SyntheticProblem> {
    if d == 0 {
        return Err(Error::config("dimension must be positive"));
    }
    let mut rng = aux_rng(seed, 0x95d);
    let center = SymMatrix::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
    let x_star = project_psd(&center)?.into_point();
    let center = center.into_point();
    let radius = radius_for(&x_star, &center);
    let objective = Quadratic::new(center, beta, noise, radius)?;
    let f_star = objective.value(&x_star);
    let problem = Problem::new(
        objective,
        SyntheticDomain::Psd(PsdCone::new(d)),
        Ball::new(radius)?,
        Point::zeros(Shape::Symmetric(d)),
    )?;
    Ok(SyntheticProblem {
        family: Family::QuadraticPsd,
        problem,
        x_star,
        f_star,
    })
}

pub fn generate(family: Family, d: usize, beta: f64, noise: f64, seed: u64) -> Result<SyntheticProblem> {
    match family {
        Family::QuadraticHalfspace => gen_quadratic_halfspace(d, beta, noise, seed),
        Family::QuadraticPsd => gen_quadratic_psd(d, beta, noise, seed),
    }
}

/// Two-class data whose labels depend on the first `informative` features
/// only; the rest are noise. Points lie in the unit box.
pub fn gen_sparse_metric_data(n: usize, d: usize, informative: usize, seed: u64) -> Result<crate::lmnn::DataSet> {
    if informative == 0 || informative > d || n < 4 {
        return Err(Error::config("need 0 < informative <= d and at least 4 points"));
    }
    let mut rng = aux_rng(seed, 0x1a);
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let shift = if label == 0 { -0.5 } else { 0.5 };
        let p: Vec<f64> = (0..d)
            .map(|f| {
                if f < informative {
                    shift + rng.gen_range(-0.4..0.4)
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            })
            .collect();
        points.push(p.into_iter().map(|v: f64| v / (d as f64).sqrt()).collect());
        labels.push(label);
    }
    crate::lmnn::DataSet::new(points, labels)
}
