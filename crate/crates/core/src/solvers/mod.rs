//! The solver family.
//!
//! | variant     | inner step                               | exact projections |
//! |-------------|------------------------------------------|-------------------|
//! | `sgd`       | `P_D[x - eta_t g]`, `eta_t = 1/(2 beta t)` | `T`             |
//! | `opro`      | `P_B[x - eta_t (g + lambda h)]`          | 1 (on the average)|
//! | `epoch_sgd` | `P_D[x - eta_k g]`, doubling epochs      | `sum T_k`         |
//! | `epro`      | `P_B[x - eta_k (g + lambda h)]`          | one per epoch     |
//! | `epro_prox` | elastic-net prox in place of `P_B`       | one per epoch     |
//!
//! Here `g` is a stochastic subgradient of `f` and `h` the subgradient of
//! `[c]_+`, zero whenever `c(x) <= 0`.

mod params;
mod schedule;
mod trace;

pub use params::{
    mu_factor, recommended_params, union_count, ParamMode, ProblemConstants, RecommendedParams,
};
pub(crate) use params::first_len_from_t0;
pub use schedule::{epoch_schedule, k_dagger_formula, EpochSchedule};
pub use trace::{speedup_estimate, EpochRecord, RunTrace};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{check_multiplier, Constraint, Objective};
use crate::point::{project_ball_in_place, Averager, Ball, Point};
use crate::prox::{prox_elastic_net_ball, ElasticNet};
use crate::rng::draw_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Sgd,
    Opro,
    EpochSgd,
    Epro,
    EproProx,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Sgd,
        Variant::Opro,
        Variant::EpochSgd,
        Variant::Epro,
        Variant::EproProx,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Sgd => "sgd",
            Variant::Opro => "opro",
            Variant::EpochSgd => "epoch_sgd",
            Variant::Epro => "epro",
            Variant::EproProx => "epro_prox",
        }
    }

    /// Whether the inner steps use the penalized objective.
    pub fn is_penalized(&self) -> bool {
        matches!(self, Variant::Opro | Variant::Epro | Variant::EproProx)
    }

    pub fn is_epoch_based(&self) -> bool {
        matches!(self, Variant::EpochSgd | Variant::Epro | Variant::EproProx)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config(format!("unknown solver '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub variant: Variant,
    pub total_iters: u64,
    pub first_epoch_len: u64,
    pub first_step: f64,
    pub lambda: f64,
    pub seed: u64,
    /// Confidence parameter when the schedule came from the high-probability recipe.
    pub high_prob: Option<f64>,
}

impl SolverConfig {
    pub fn new(
        variant: Variant,
        total_iters: u64,
        first_epoch_len: u64,
        first_step: f64,
        lambda: f64,
        seed: u64,
    ) -> Result<Self> {
        let config = SolverConfig {
            variant,
            total_iters,
            first_epoch_len,
            first_step,
            lambda,
            seed,
            high_prob: None,
        };
        config.check_shape()?;
        Ok(config)
    }

    /// Configuration from [`recommended_params`], with `lambda` validated
    /// against the problem constants.
    pub fn recommended(
        variant: Variant,
        consts: &ProblemConstants,
        lambda: f64,
        mode: ParamMode,
        total_iters: u64,
        seed: u64,
    ) -> Result<Self> {
        let p = recommended_params(consts, lambda, mode, total_iters)?;
        let mut config = SolverConfig::new(
            variant,
            total_iters,
            p.first_epoch_len,
            p.first_step,
            lambda,
            seed,
        )?;
        if let ParamMode::HighProb { delta } = mode {
            config.high_prob = Some(delta);
        }
        Ok(config)
    }

    fn check_shape(&self) -> Result<()> {
        if self.total_iters == 0 || self.first_epoch_len == 0 {
            return Err(Error::config("iteration counts must be positive"));
        }
        if self.variant.is_epoch_based() && self.total_iters < self.first_epoch_len {
            return Err(Error::config(format!(
                "total iterations {} smaller than first epoch length {}",
                self.total_iters, self.first_epoch_len
            )));
        }
        if !(self.first_step > 0.0 && self.first_step.is_finite()) {
            return Err(Error::config(format!("first step must be positive, got {}", self.first_step)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Checks everything, including `lambda * rho > G1` for penalized variants.
    pub fn validate(&self, consts: &ProblemConstants) -> Result<()> {
        self.check_shape()?;
        if self.variant.is_penalized() {
            check_multiplier(self.lambda, consts.rho, consts.g1)?;
        }
        Ok(())
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }
}

/// A constrained problem: objective, domain, enclosing ball, start point and
/// (for the proximal variant) the elastic-net part of the objective.
#[derive(Clone, Debug)]
pub struct Problem<O, C> {
    pub objective: O,
    pub constraint: C,
    pub ball: Ball,
    pub start: Point,
    pub regularizer: ElasticNet,
}

impl<O: Objective, C: Constraint> Problem<O, C> {
    pub fn new(objective: O, constraint: C, ball: Ball, start: Point) -> Result<Self> {
        start.expect_shape(objective.shape())?;
        if !start.is_finite() {
            return Err(Error::invalid("start point has non-finite entries"));
        }
        Ok(Problem {
            objective,
            constraint,
            ball,
            start,
            regularizer: ElasticNet::none(),
        })
    }

    pub fn with_regularizer(mut self, regularizer: ElasticNet) -> Self {
        self.regularizer = regularizer;
        self
    }

    pub fn constants(&self) -> ProblemConstants {
        ProblemConstants::of(&self.objective, &self.constraint)
    }
}

/// What a run observer sees.
#[derive(Debug)]
pub enum Event<'a> {
    /// Iterate `x_t` of `epoch` (1-based), before its update.
    Iterate { epoch: usize, t: u64, point: &'a Point },
    /// The point carried out of `epoch`.
    EpochEnd { epoch: usize, point: &'a Point },
}

/// Runs `config.variant` on `problem`.
pub fn run<O: Objective, C: Constraint>(problem: &Problem<O, C>, config: &SolverConfig) -> Result<RunTrace> {
    run_observed(problem, config, &mut |_| {})
}

pub fn run_sgd<O: Objective, C: Constraint>(problem: &Problem<O, C>, config: &SolverConfig) -> Result<RunTrace> {
    run(problem, &config.clone().with_variant(Variant::Sgd))
}

pub fn run_opro<O: Objective, C: Constraint>(problem: &Problem<O, C>, config: &SolverConfig) -> Result<RunTrace> {
    run(problem, &config.clone().with_variant(Variant::Opro))
}

pub fn run_epoch_sgd<O: Objective, C: Constraint>(
    problem: &Problem<O, C>,
    config: &SolverConfig,
) -> Result<RunTrace> {
    run(problem, &config.clone().with_variant(Variant::EpochSgd))
}

pub fn run_epro<O: Objective, C: Constraint>(problem: &Problem<O, C>, config: &SolverConfig) -> Result<RunTrace> {
    run(problem, &config.clone().with_variant(Variant::Epro))
}

pub fn run_epro_prox<O: Objective, C: Constraint>(
    problem: &Problem<O, C>,
    config: &SolverConfig,
) -> Result<RunTrace> {
    run(problem, &config.clone().with_variant(Variant::EproProx))
}

/// [`run`] with a callback on every iterate and epoch end.
pub fn run_observed<O: Objective, C: Constraint>(
    problem: &Problem<O, C>,
    config: &SolverConfig,
    observer: &mut dyn FnMut(Event<'_>),
) -> Result<RunTrace> {
    config.validate(&problem.constants())?;
    let mut run = Runner {
        problem,
        config,
        observer,
        exact: 0,
        ball: 0,
        matvecs: 0,
        n_max: 0,
        epoch_nnz: 0,
        max_grad_norm: 0.0,
        records: Vec::new(),
    };
    let (start, initial_projection) = run.feasible_start()?;
    let final_point = match config.variant {
        Variant::Sgd | Variant::Opro => run.single_schedule(start)?,
        Variant::EpochSgd | Variant::Epro | Variant::EproProx => run.epochs(start)?,
    };
    let final_value = problem.objective.value(&final_point);
    let final_violation = problem.constraint.value(&final_point)?;
    let iterations_used = run.records.iter().map(|r| r.iters).sum();
    Ok(RunTrace {
        variant: config.variant,
        records: run.records,
        final_point,
        final_value,
        final_violation,
        initial_projection,
        iterations_used,
        n_max: run.n_max,
        max_grad_norm: run.max_grad_norm,
    })
}

struct Runner<'a, O, C> {
    problem: &'a Problem<O, C>,
    config: &'a SolverConfig,
    observer: &'a mut dyn FnMut(Event<'_>),
    exact: u64,
    ball: u64,
    matvecs: u64,
    n_max: usize,
    epoch_nnz: usize,
    max_grad_norm: f64,
    records: Vec<EpochRecord>,
}

impl<O: Objective, C: Constraint> Runner<'_, O, C> {
    fn feasible_start(&mut self) -> Result<(Point, bool)> {
        let start = &self.problem.start;
        let eval = self.problem.constraint.evaluate(start)?;
        self.matvecs += eval.matvecs;
        if eval.value > 0.0 {
            Ok((self.problem.constraint.project(start)?, true))
        } else {
            Ok((start.clone(), false))
        }
    }

    fn observe_iterate(&mut self, epoch: usize, t: u64, x: &Point) {
        let nnz = x.nnz_offdiag();
        self.epoch_nnz = self.epoch_nnz.max(nnz);
        self.n_max = self.n_max.max(nnz);
        (self.observer)(Event::Iterate { epoch, t, point: x });
    }

    /// One inner update from `x` with step `eta`, drawing randomness keyed by `(epoch, t)`.
    fn step(&mut self, x: &Point, eta: f64, epoch: usize, t: u64) -> Result<Point> {
        let problem = self.problem;
        let mut rng = draw_rng(self.config.seed, epoch as u64, t);
        let g = problem.objective.stoch_grad(x, &mut rng);
        self.max_grad_norm = self.max_grad_norm.max(g.norm());
        let mut next = x.clone();
        next.add_scaled(-eta, &g);
        if !self.config.variant.is_penalized() {
            self.exact += 1;
            return problem.constraint.project(&next);
        }
        let eval = problem.constraint.evaluate(x)?;
        self.matvecs += eval.matvecs;
        if let Some(h) = &eval.active_subgrad {
            next.add_scaled(-eta * self.config.lambda, h);
        }
        if !next.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite iterate at epoch {epoch}, step {t}"
            )));
        }
        self.ball += 1;
        if self.config.variant == Variant::EproProx {
            prox_elastic_net_ball(&next, eta, &problem.regularizer, &problem.ball)
        } else {
            project_ball_in_place(&mut next, &problem.ball);
            Ok(next)
        }
    }

    fn constraint_value(&mut self, x: &Point) -> Result<f64> {
        let eval = self.problem.constraint.evaluate(x)?;
        self.matvecs += eval.matvecs;
        Ok(eval.value)
    }

    fn push_record(&mut self, epoch: usize, iters: u64, eta: f64, out: &Point, c_value: f64, started: Instant) {
        self.records.push(EpochRecord {
            epoch,
            iters,
            eta,
            f_value: self.problem.objective.value(out),
            c_value,
            exact_projections: self.exact,
            ball_projections: self.ball,
            matvecs: self.matvecs,
            nnz_offdiag: self.epoch_nnz,
            wall_ns: started.elapsed().as_nanos() as u64,
        });
        self.epoch_nnz = 0;
    }

    /// `sgd` and `opro`: steps `1 / (2 beta t)`, averaged iterates.
    fn single_schedule(&mut self, start: Point) -> Result<Point> {
        let started = Instant::now();
        let total = self.config.total_iters;
        let beta = self.problem.objective.beta();
        let mut avg = Averager::new(start.shape());
        let mut x = start;
        for t in 1..=total {
            avg.push(&x);
            self.observe_iterate(1, t, &x);
            let eta = 1.0 / (2.0 * beta * t as f64);
            x = self.step(&x, eta, 1, t)?;
        }
        let mean = avg.mean();
        let c_value = self.constraint_value(&mean)?;
        let out = if self.config.variant == Variant::Opro {
            self.exact += 1;
            self.problem.constraint.project(&mean)?
        } else {
            mean
        };
        (self.observer)(Event::EpochEnd { epoch: 1, point: &out });
        self.push_record(1, total, 1.0 / (2.0 * beta), &out, c_value, started);
        Ok(out)
    }

    /// `epoch_sgd`, `epro`, `epro_prox`.
    fn epochs(&mut self, start: Point) -> Result<Point> {
        let schedule = epoch_schedule(self.config.total_iters, self.config.first_epoch_len)?;
        let steps = schedule.step_sizes(self.config.first_step);
        let mut x_start = start;
        for (k, (&len, &eta)) in schedule.epoch_lengths.iter().zip(&steps).enumerate() {
            let epoch = k + 1;
            let started = Instant::now();
            let mut avg = Averager::new(x_start.shape());
            let mut x = x_start.clone();
            for t in 1..=len {
                avg.push(&x);
                self.observe_iterate(epoch, t, &x);
                x = self.step(&x, eta, epoch, t)?;
            }
            let mean = avg.mean();
            let c_value = self.constraint_value(&mean)?;
            x_start = if self.config.variant == Variant::EpochSgd {
                mean
            } else {
                self.exact += 1;
                self.problem.constraint.project(&mean)?
            };
            (self.observer)(Event::EpochEnd {
                epoch,
                point: &x_start,
            });
            self.push_record(epoch, len, eta, &x_start, c_value, started);
        }
        Ok(x_start)
    }
}

#[cfg(test)]
mod tests;
