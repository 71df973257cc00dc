use super::*;
use crate::penalty::{Halfspace, FEASIBILITY_TOL};
use crate::point::Shape;
use crate::rng::DrawRng;
use rand::Rng;

/// `f(x) = beta/2 ||x - a||^2` with uniform gradient noise of the given amplitude.
struct Quadratic {
    a: Point,
    beta: f64,
    noise: f64,
    radius: f64,
}

impl Objective for Quadratic {
    fn shape(&self) -> Shape {
        self.a.shape()
    }
    fn stoch_grad(&self, x: &Point, rng: &mut DrawRng) -> Point {
        let mut g = x.clone();
        g.add_scaled(-1.0, &self.a);
        g.scale(self.beta);
        if self.noise > 0.0 {
            let eps: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-self.noise..=self.noise)).collect();
            g.add_scaled(1.0, &Point::vector(eps).unwrap());
        }
        g
    }
    fn value(&self, x: &Point) -> f64 {
        0.5 * self.beta * x.distance(&self.a).powi(2)
    }
    fn beta(&self) -> f64 {
        self.beta
    }
    fn g1(&self) -> f64 {
        self.beta * (self.radius + self.a.norm()) + self.noise * (self.a.len() as f64).sqrt()
    }
}

/// Minimizer `(1, 0)` sits on the boundary of `x_1 <= 1`.
fn problem(noise: f64) -> Problem<Quadratic, Halfspace> {
    let objective = Quadratic {
        a: Point::vector(vec![3.0, 0.0]).unwrap(),
        beta: 1.0,
        noise,
        radius: 2.0,
    };
    let cons = Halfspace::new(Point::vector(vec![1.0, 0.0]).unwrap(), 1.0).unwrap();
    Problem::new(objective, cons, Ball::new(2.0).unwrap(), Point::zeros(Shape::Vector(2))).unwrap()
}

fn config(p: &Problem<Quadratic, Halfspace>, variant: Variant, total: u64, seed: u64) -> SolverConfig {
    let consts = p.constants();
    SolverConfig::recommended(variant, &consts, consts.default_lambda(), ParamMode::Expected, total, seed).unwrap()
}

#[test]
fn projection_counts() {
    let p = problem(0.5);
    let counts: Vec<u64> = Variant::ALL
        .iter()
        .map(|&v| run(&p, &config(&p, v, 120, 1)).unwrap().exact_projections())
        .collect();
    assert_eq!(counts, vec![120, 1, 120, 4, 4]);
    let epro = run(&p, &config(&p, Variant::Epro, 120, 1)).unwrap();
    assert_eq!(epro.ball_projections(), 120);
    assert_eq!(epro.iterations_used, 120);
    assert_eq!(epro.records.iter().map(|r| r.iters).collect::<Vec<_>>(), vec![8, 16, 32, 64]);
}

#[test]
fn iterates_stay_in_ball_and_outputs_are_feasible() {
    let p = problem(2.0);
    for variant in [Variant::Opro, Variant::Epro, Variant::EproProx] {
        let mut worst = 0.0f64;
        let mut epoch_ends = Vec::new();
        let trace = run_observed(&p, &config(&p, variant, 500, 3), &mut |e| match e {
            Event::Iterate { point, .. } => worst = worst.max(point.norm()),
            Event::EpochEnd { point, .. } => epoch_ends.push(p.constraint.value(point).unwrap()),
        })
        .unwrap();
        assert!(worst <= 2.0, "{variant}: iterate norm {worst}");
        assert!(epoch_ends.iter().all(|&c| c <= FEASIBILITY_TOL));
        assert!(trace.final_violation <= FEASIBILITY_TOL);
    }
}

#[test]
fn same_seed_same_trace() {
    let p = problem(1.0);
    for variant in Variant::ALL {
        let a = run(&p, &config(&p, variant, 300, 9)).unwrap();
        let b = run(&p, &config(&p, variant, 300, 9)).unwrap();
        assert_eq!(a.final_point, b.final_point);
        assert_eq!(a.records_without_timing(), b.records_without_timing());
        let c = run(&p, &config(&p, variant, 300, 10)).unwrap();
        assert_ne!(a.final_point, c.final_point);
    }
}

#[test]
fn small_multiplier_rejected() {
    let p = problem(0.0);
    let g1 = p.constants().g1;
    let bad = SolverConfig::new(Variant::Epro, 100, 8, 0.1, g1, 0).unwrap();
    assert!(matches!(run(&p, &bad), Err(Error::Config(_))));
    // The unpenalized baselines ignore the multiplier.
    assert!(run(&p, &bad.clone().with_variant(Variant::Sgd)).is_ok());
    assert!(SolverConfig::new(Variant::Epro, 4, 8, 0.1, 10.0, 0).is_err());
    assert!(SolverConfig::new(Variant::Epro, 8, 0, 0.1, 10.0, 0).is_err());
}

#[test]
fn infeasible_start_is_projected_and_reported() {
    let mut p = problem(0.0);
    p.start = Point::vector(vec![1.5, 0.0]).unwrap();
    let trace = run(&p, &config(&p, Variant::Epro, 120, 0)).unwrap();
    assert!(trace.initial_projection);
    assert_eq!(trace.exact_projections(), 4);
    let trace = run(&problem(0.0), &config(&p, Variant::Epro, 120, 0)).unwrap();
    assert!(!trace.initial_projection);
}

#[test]
fn variants_approach_boundary_minimizer() {
    let p = problem(0.5);
    let star = Point::vector(vec![1.0, 0.0]).unwrap();
    let f_star = p.objective.value(&star);
    for variant in Variant::ALL {
        let trace = run(&p, &config(&p, variant, 20_000, 2)).unwrap();
        let gap = trace.final_value - f_star;
        assert!(gap < 0.05, "{variant}: gap {gap}");
        assert!(trace.final_violation <= FEASIBILITY_TOL);
    }
}

#[test]
fn variant_names_round_trip() {
    for v in Variant::ALL {
        assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, format!("\"{}\"", v.name()));
    }
    assert!("nope".parse::<Variant>().is_err());
}
