use epro::harness::brute_force_prox;
use epro::point::{Ball, Point};
use epro::prox::{prox_elastic_net_ball, ElasticNet};
use epro::psd::{dense_min_eigenpair, project_psd, SymMatrix};
use proptest::prelude::*;

proptest! {
    #[test]
    fn prox_matches_oracle_in_five_dimensions(
        xs in prop::collection::vec(-4.0f64..4.0, 5),
        eta in 1e-3f64..10.0,
        mu1 in 0.0f64..5.0,
        mu2 in 0.0f64..5.0,
        radius in 0.05f64..6.0,
    ) {
        let xbar = Point::vector(xs).unwrap();
        let reg = ElasticNet::new(mu1, mu2, false).unwrap();
        let ball = Ball::new(radius).unwrap();
        let fast = prox_elastic_net_ball(&xbar, eta, &reg, &ball).unwrap();
        let slow = brute_force_prox(&xbar, eta, &reg, &ball, 1e-12).unwrap();
        for (a, b) in fast.values().iter().zip(slow.values()) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    /// `X = P(A)` iff `X >= 0`, `X - A >= 0` and `<X, X - A> = 0`.
    #[test]
    fn projection_satisfies_moreau_certificate(entries in prop::collection::vec(-2.0f64..2.0, 36)) {
        let a = SymMatrix::from_fn(6, |i, j| entries[i * 6 + j]);
        let x = project_psd(&a).unwrap();
        let mut gap = x.as_point().clone();
        gap.add_scaled(-1.0, a.as_point());
        let gap = SymMatrix::from_point(gap).unwrap();
        prop_assert!(dense_min_eigenpair(&x).unwrap().0 >= -1e-12);
        prop_assert!(dense_min_eigenpair(&gap).unwrap().0 >= -1e-12);
        prop_assert!(x.trace_product(&gap).abs() <= 1e-10 * (1.0 + a.frobenius_norm().powi(2)));
    }
}

#[test]
fn worked_prox_example_against_oracle() {
    let reg = ElasticNet::new(1.0, 0.5, false).unwrap();
    let xbar = Point::vector(vec![2.0, -0.3, 0.0]).unwrap();
    let ball = Ball::new(10.0).unwrap();
    let slow = brute_force_prox(&xbar, 1.0, &reg, &ball, 1e-12).unwrap();
    let fast = prox_elastic_net_ball(&xbar, 1.0, &reg, &ball).unwrap();
    assert_eq!(fast.values(), &[0.75, 0.0, 0.0]);
    assert!(fast.distance(&slow) < 1e-6);
}

/// Projected gradient on `1/2 ||X - A||^2` over PSD matrices, started away from the answer.
#[test]
fn diagonal_projection_against_projected_gradient() {
    let a = SymMatrix::diagonal(&[1.0, -2.0]);
    let mut x = SymMatrix::from_fn(2, |i, j| if i == j { 3.0 } else { 1.0 });
    for _ in 0..200 {
        let mut step = x.as_point().clone();
        step.add_scaled(-0.5, &{
            let mut g = x.as_point().clone();
            g.add_scaled(-1.0, a.as_point());
            g
        });
        x = project_psd(&SymMatrix::from_point(step).unwrap()).unwrap();
    }
    let p = project_psd(&a).unwrap();
    assert!(x.as_point().distance(p.as_point()) < 1e-10);
    assert_eq!(p, SymMatrix::diagonal(&[1.0, 0.0]));
}
