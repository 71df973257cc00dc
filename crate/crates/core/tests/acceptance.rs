//! The acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use epro::harness::io::trace_csv_bytes;
use epro::harness::synthetic::{gen_quadratic_halfspace, gen_quadratic_psd, gen_sparse_metric_data, SyntheticProblem};
use epro::harness::{bootstrap_mean, brute_force_prox, fit_rate, linear_fit};
use epro::lmnn::{build_triplets, lmnn_stoch_grad, prior_matrix, solve_lmnn, DataSet, LmnnProblem};
use epro::penalty::{Constraint, FEASIBILITY_TOL};
use epro::point::{Ball, Point, Shape};
use epro::prox::{prox_elastic_net_ball, shrink_threshold, ElasticNet};
use epro::psd::{dense_min_eigenpair, min_eigenpair, project_psd, SparseRows, SymMatrix, DEFAULT_EIG_TOL};
use epro::rng::aux_rng;
use epro::solvers::{
    recommended_params, run, run_epro, run_observed, Event, ParamMode, RunTrace, SolverConfig, Variant,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn expected_config(sp: &SyntheticProblem, variant: Variant, total: u64, seed: u64) -> SolverConfig {
    let c = sp.problem.constants();
    SolverConfig::recommended(variant, &c, c.default_lambda(), ParamMode::Expected, total, seed).unwrap()
}

fn projection_count() -> Outcome {
    let sp = gen_quadratic_halfspace(2, 1.0, 0.5, 0).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for total in [8u64, 120, 1000, 1_000_000] {
        let mut config = expected_config(&sp, Variant::Epro, total, 1);
        config.first_epoch_len = 8;
        let trace = run_epro(&sp.problem, &config).unwrap();
        let formula = ((total as f64) / 8.0 + 1.0).log2().floor() as u64;
        let ceiling = (total as f64 / 4.0).log2();
        let ok = trace.exact_projections() == formula && (formula as f64) <= ceiling;
        pass &= ok;
        notes.push(format!("T={total}: {} (formula {formula})", trace.exact_projections()));
    }
    outcome(pass, notes.join(", "))
}

const RATE_SEEDS: u64 = 100;
const RATE_GRID: std::ops::RangeInclusive<u32> = 7..=14;

struct RateData {
    sp: SyntheticProblem,
    /// `errors[variant][t_index][seed]`.
    errors: Vec<Vec<Vec<f64>>>,
}

fn rate_data() -> &'static RateData {
    static DATA: OnceLock<RateData> = OnceLock::new();
    DATA.get_or_init(|| {
        let sp = gen_quadratic_halfspace(20, 1.0, 0.5, 2024).unwrap();
        let errors = Variant::ALL
            .iter()
            .map(|&v| {
                RATE_GRID
                    .map(|k| {
                        (0..RATE_SEEDS)
                            .into_par_iter()
                            .map(|seed| {
                                let trace = run(&sp.problem, &expected_config(&sp, v, 1 << k, seed)).unwrap();
                                sp.error(&trace.final_point)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        RateData { sp, errors }
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn rate_exponent() -> Outcome {
    let data = rate_data();
    let mut pass = true;
    let mut notes = Vec::new();
    for (v, per_t) in Variant::ALL.iter().zip(&data.errors) {
        let points: Vec<(u64, f64)> = RATE_GRID.zip(per_t).map(|(k, e)| (1u64 << k, mean(e))).collect();
        let slope = fit_rate(&points).map(|f| f.slope).unwrap_or(f64::NAN);
        let ok = slope <= -0.7 && (*v != Variant::Epro || (-1.25..=-0.75).contains(&slope));
        pass &= ok;
        notes.push(format!("{v} {slope:.3}"));
    }
    outcome(pass, format!("slopes: {}", notes.join(", ")))
}

fn expected_bound() -> Outcome {
    let data = rate_data();
    let c = data.sp.problem.constants();
    let lambda = c.default_lambda();
    let mut pass = true;
    let mut worst = 0.0f64;
    for (&v, per_t) in Variant::ALL.iter().zip(&data.errors) {
        if !matches!(v, Variant::Epro | Variant::EproProx) {
            continue;
        }
        for (k, errs) in RATE_GRID.zip(per_t) {
            let total = 1u64 << k;
            let bound = recommended_params(&c, lambda, ParamMode::Expected, total)
                .unwrap()
                .expected_bound(c.beta, total);
            let ci = bootstrap_mean(errs, 2000, 0.95, total).unwrap();
            pass &= ci.upper <= bound;
            worst = worst.max(ci.upper / bound);
        }
    }
    outcome(pass, format!("largest upper-95% / bound ratio {worst:.2e}"))
}

fn prox_oracle() -> Outcome {
    let tol = 1e-5;
    let mut worst = 0.0f64;
    let (mut active, mut inactive, mut failures) = (0, 0, Vec::new());
    for i in 0..1000u64 {
        let mut rng = aux_rng(4, i);
        let matrix = i % 5 == 0;
        let shape = if matrix {
            Shape::Symmetric(rng.gen_range(1..=3))
        } else {
            Shape::Vector(rng.gen_range(1..=10))
        };
        let values: Vec<f64> = (0..shape.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let xbar = match shape {
            Shape::Vector(_) => Point::vector(values).unwrap(),
            Shape::Symmetric(d) => Point::symmetric_from_fn(d, |a, b| values[a * d + b]),
        };
        let eta = 10f64.powf(rng.gen_range(-3.0..1.0));
        let reg = ElasticNet::new(rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0), matrix).unwrap();
        let free = shrink_threshold(&xbar, eta, &reg).norm();
        let want_active = i % 2 == 0 && free > 1e-3;
        let radius = if want_active {
            free * rng.gen_range(0.2..0.9)
        } else {
            free + 1.0 + rng.gen::<f64>()
        };
        let ball = Ball::new(radius).unwrap();
        let fast = prox_elastic_net_ball(&xbar, eta, &reg, &ball).unwrap();
        let slow = match brute_force_prox(&xbar, eta, &reg, &ball, 1e-12) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("instance {i}: oracle failed: {e}"));
                continue;
            }
        };
        let diff = fast
            .values()
            .iter()
            .zip(slow.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
        if want_active {
            active += 1;
        } else {
            inactive += 1;
        }
        if diff > tol {
            failures.push(format!("instance {i} (ball {}): {diff:.2e}", if want_active { "active" } else { "inactive" }));
        }
    }
    for f in failures.iter().take(5) {
        println!("    finding: {f}");
    }
    outcome(
        failures.is_empty(),
        format!("{active} ball-active, {inactive} inactive; max coordinate gap {worst:.1e}"),
    )
}

fn random_symmetric(rng: &mut impl Rng, d: usize, density: f64, shift: f64) -> SymMatrix {
    SymMatrix::from_fn(d, |i, j| {
        if i == j {
            rng.gen_range(-1.0..1.0) + shift
        } else if rng.gen::<f64>() < density {
            rng.gen_range(-1.0..1.0)
        } else {
            0.0
        }
    })
}

fn eigen_and_projection() -> Outcome {
    let mut worst_eig = 0.0f64;
    let mut unconverged = 0;
    for i in 0..200u64 {
        let mut rng = aux_rng(5, i);
        let d = rng.gen_range(2..=100);
        let density = [1.0, 0.3, 0.05][i as usize % 3];
        let shift = [0.0, 2.0, -1.0, 0.5][i as usize % 4];
        let a = random_symmetric(&mut rng, d, density, shift);
        let r = min_eigenpair(&a, DEFAULT_EIG_TOL, 50 * d as u64).unwrap();
        if !r.converged {
            unconverged += 1;
        }
        let (dense, _) = dense_min_eigenpair(&a).unwrap();
        worst_eig = worst_eig.max((r.eigenvalue - dense).abs());
    }
    let mut beaten = 0;
    let mut worst_idem = 0.0f64;
    let mut worst_lmin = 0.0f64;
    for i in 0..20u64 {
        let mut rng = aux_rng(55, i);
        let d = rng.gen_range(2..=30);
        let a = random_symmetric(&mut rng, d, 1.0, -0.3);
        let x = project_psd(&a).unwrap();
        let dist = x.as_point().distance(a.as_point());
        worst_lmin = worst_lmin.min(dense_min_eigenpair(&x).unwrap().0);
        let xx = project_psd(&x).unwrap();
        worst_idem = worst_idem.max(xx.as_point().distance(x.as_point()));
        for c in 0..100 {
            let candidate = if c % 2 == 0 {
                let b: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let scale = rng.gen_range(0.01..1.0);
                SymMatrix::from_fn(d, |p, q| scale * (0..d).map(|k| b[p * d + k] * b[q * d + k]).sum::<f64>())
            } else {
                let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut y = x.clone();
                y.add_outer(10f64.powf(rng.gen_range(-6.0..0.0)), &v);
                y
            };
            if candidate.as_point().distance(a.as_point()) < dist - 1e-12 {
                beaten += 1;
            }
        }
    }
    let pass = worst_eig <= 1e-8 && beaten == 0 && worst_idem <= 1e-10 && worst_lmin >= -1e-10;
    outcome(
        pass,
        format!(
            "max eigenvalue gap {worst_eig:.1e} ({unconverged} used fallback); candidates closer than projection: {beaten}; idempotence {worst_idem:.1e}; min eigenvalue {worst_lmin:.1e}"
        ),
    )
}

fn lmnn_gradient() -> Outcome {
    let mut rng = aux_rng(6, 0);
    let (n, d) = (30, 8);
    let data = DataSet::new(
        (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
        (0..n).map(|i| i % 3).collect(),
    )
    .unwrap();
    let set = build_triplets(&data, 3, 2).unwrap();
    let prior = prior_matrix(&data, &set.pairs).unwrap();
    let prob = LmnnProblem::new(&data, &set, prior, 0.5, 0.1, 0.0).unwrap();
    let a = (0..1000)
        .map(|_| random_symmetric(&mut rng, d, 1.0, 0.0))
        .find(|a| (0..prob.len()).all(|j| prob.hinge_argument(a.as_point(), j).abs() >= 1e-3))
        .expect("no hinge-margin-free point found");
    let mut grad = Point::zeros(Shape::Symmetric(d));
    for j in 0..prob.len() {
        grad.add_scaled(1.0 / prob.len() as f64, lmnn_stoch_grad(&a, j, &prob).unwrap().as_point());
    }
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..d {
        for k in i..d {
            let mut plus = a.clone();
            let mut minus = a.clone();
            plus.set(i, k, a.get(i, k) + h);
            minus.set(i, k, a.get(i, k) - h);
            let fd = (prob.smooth_value(plus.as_point()) - prob.smooth_value(minus.as_point())) / (2.0 * h);
            // An off-diagonal perturbation moves both (i, k) and (k, i).
            let expected = if i == k { grad.at(i, i) } else { 2.0 * grad.at(i, k) };
            worst = worst.max((fd - expected).abs() / if i == k { 1.0 } else { 2.0 });
        }
    }
    outcome(worst <= 1e-5, format!("{} triplets, max entry gap {worst:.1e}", prob.len()))
}

fn sparsity_and_cost() -> Outcome {
    let data = gen_sparse_metric_data(100, 50, 5, 7).unwrap();
    let set = build_triplets(&data, 3, 1).unwrap();
    let prior = prior_matrix(&data, &set.pairs).unwrap();
    let solve = |mu2: f64| {
        let prob = LmnnProblem::new(&data, &set, prior.clone(), 0.5, 1e-2, mu2).unwrap();
        solve_lmnn(&prob, ParamMode::HighProb { delta: 0.05 }, 5000, 7).unwrap()
    };
    let dense = solve(0.0);
    let sparse = solve(0.03);
    let sparsity_ok = sparse.summary.n_max < dense.summary.n_max;

    let d = 600;
    let mut rng = aux_rng(7, 0);
    let (mut nnz, mut per_matvec, mut per_iteration) = (Vec::new(), Vec::new(), Vec::new());
    let mut cost_model_ok = true;
    for density in [0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0] {
        let a = random_symmetric(&mut rng, d, density, 0.0);
        let started = Instant::now();
        let r = min_eigenpair(&a, DEFAULT_EIG_TOL, 50 * d as u64).unwrap();
        per_iteration.push(started.elapsed().as_nanos() as f64 / r.matvec_count as f64);
        let op = SparseRows::new(&a);
        cost_model_ok &= r.entries_touched == r.matvec_count * op.cost();
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = vec![0.0; d];
        let best = (0..5)
            .map(|_| {
                let t = Instant::now();
                for _ in 0..100 {
                    op.apply(std::hint::black_box(&x), &mut y);
                }
                t.elapsed().as_nanos() as f64 / 100.0
            })
            .fold(f64::INFINITY, f64::min);
        nnz.push(op.cost() as f64);
        per_matvec.push(best);
    }
    let fit = linear_fit(&nnz, &per_matvec).unwrap();
    let whole = linear_fit(&nnz, &per_iteration).unwrap();
    let pass = sparsity_ok && cost_model_ok && fit.r_squared >= 0.9;
    outcome(
        pass,
        format!(
            "N_max {} (mu2=0.03) vs {} (mu2=0); matvec ns ~ {:.2e} * nnz, R^2 {:.3}; whole-iteration R^2 {:.3}",
            sparse.summary.n_max, dense.summary.n_max, fit.slope, fit.r_squared, whole.r_squared
        ),
    )
}

fn feasibility_invariants() -> Outcome {
    let mut violations = Vec::new();
    for i in 0..200u64 {
        let mut rng = aux_rng(8, i);
        let psd = i % 3 == 0;
        let noise = rng.gen_range(0.0..1.0);
        let beta = rng.gen_range(0.5..3.0);
        let mut sp = if psd {
            gen_quadratic_psd(rng.gen_range(2..=6), beta, noise, i).unwrap()
        } else {
            gen_quadratic_halfspace(rng.gen_range(1..=10), beta, noise, i).unwrap()
        };
        let variant = [Variant::Opro, Variant::Epro, Variant::EproProx][i as usize % 3];
        if variant == Variant::EproProx {
            sp.problem.regularizer = ElasticNet::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.5), psd).unwrap();
        }
        let total = rng.gen_range(8..600);
        let config = expected_config(&sp, variant, total, i);
        let r = sp.problem.ball.radius();
        let limit = r + 4.0 * (r.next_up() - r);
        let mut epoch_end_worst = f64::NEG_INFINITY;
        let mut norm_worst = 0.0f64;
        let cons = &sp.problem.constraint;
        let trace = run_observed(&sp.problem, &config, &mut |e| match e {
            Event::Iterate { point, .. } => norm_worst = norm_worst.max(point.norm()),
            Event::EpochEnd { point, .. } => epoch_end_worst = epoch_end_worst.max(cons.value(point).unwrap()),
        })
        .unwrap();
        if norm_worst > limit {
            violations.push(format!("config {i}: iterate norm {norm_worst} > {r}"));
        }
        if epoch_end_worst > FEASIBILITY_TOL {
            violations.push(format!("config {i}: epoch-end c = {epoch_end_worst:e}"));
        }
        if variant == Variant::Opro && trace.exact_projections() != 1 {
            violations.push(format!("config {i}: opro made {} exact projections", trace.exact_projections()));
        }
    }
    for v in violations.iter().take(5) {
        println!("    finding: {v}");
    }
    outcome(violations.is_empty(), format!("200 random configs, {} violations", violations.len()))
}

fn fingerprint(trace: &RunTrace) -> (Vec<u8>, Vec<u64>) {
    let bytes = trace_csv_bytes(&trace.records_without_timing()).unwrap();
    let bits = trace.final_point.values().iter().map(|v| v.to_bits()).collect();
    (bytes, bits)
}

fn determinism() -> Outcome {
    let half = gen_quadratic_halfspace(5, 1.0, 0.7, 9).unwrap();
    let psd = gen_quadratic_psd(4, 1.0, 0.3, 9).unwrap();
    let mut mismatches = 0;
    let mut runs = 0;
    for sp in [&half, &psd] {
        for v in Variant::ALL {
            let config = expected_config(sp, v, 700, 31);
            let serial = fingerprint(&run(&sp.problem, &config).unwrap());
            let parallel: Vec<_> = (0..4)
                .into_par_iter()
                .map(|_| fingerprint(&run(&sp.problem, &config).unwrap()))
                .collect();
            runs += 5;
            mismatches += parallel.iter().filter(|p| **p != serial).count();
        }
    }
    let data = gen_sparse_metric_data(30, 8, 2, 3).unwrap();
    let set = build_triplets(&data, 2, 1).unwrap();
    let prob = LmnnProblem::new(&data, &set, prior_matrix(&data, &set.pairs).unwrap(), 0.5, 0.1, 0.01).unwrap();
    let a = solve_lmnn(&prob, ParamMode::HighProb { delta: 0.1 }, 400, 5).unwrap();
    let b = solve_lmnn(&prob, ParamMode::HighProb { delta: 0.1 }, 400, 5).unwrap();
    runs += 2;
    if fingerprint(&a.trace) != fingerprint(&b.trace) {
        mismatches += 1;
    }
    outcome(mismatches == 0, format!("{runs} runs, {mismatches} differing traces"))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "projection count", Duration::from_secs(60), projection_count),
        (2, "rate exponent", Duration::from_secs(600), rate_exponent),
        (3, "expected bound", Duration::from_secs(600), expected_bound),
        (4, "prox oracle", Duration::from_secs(60), prox_oracle),
        (5, "eigen and PSD projection oracles", Duration::from_secs(120), eigen_and_projection),
        (6, "LMNN gradient check", Duration::from_secs(60), lmnn_gradient),
        (7, "sparsity and matvec cost", Duration::from_secs(300), sparsity_and_cost),
        (8, "feasibility invariants", Duration::from_secs(120), feasibility_invariants),
        (9, "determinism", Duration::from_secs(60), determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, name, budget, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == n.to_string()) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = started.elapsed();
        let pass = result.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n} ({name}): {} [{:.1}s] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            result.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
