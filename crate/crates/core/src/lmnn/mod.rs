//! Sparse large-margin metric learning on the PSD cone, solved with the
//! proximal one-projection-per-epoch method.

mod data;
mod problem;
mod triplets;

pub use data::DataSet;
pub use problem::{lmnn_stoch_grad, lmnn_value, LmnnProblem};
pub use triplets::{build_triplets, intra_class_covariance, prior_matrix, TripletSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::penalty::Constraint;
use crate::psd::{PsdCone, SymMatrix};
use crate::solvers::{
    first_len_from_t0, recommended_params, run, union_count, ParamMode, Problem, RunTrace, SolverConfig, Variant,
};

/// Schedule constants for the LMNN run with `lambda = 2 G1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmnnSchedule {
    pub lambda: f64,
    pub first_epoch_len: u64,
    pub first_step: f64,
    /// `(2 G1 ln(m/delta) + mu1 (1 + ln(m/delta))) / (10 G1)`.
    pub t0: Option<f64>,
    /// `T0` from the general recipe with `mu G^2` in the denominator.
    pub t0_general: Option<f64>,
    /// Rate bound `80 T1 G1^2 / (mu1 T)`.
    pub rate_bound: f64,
}

/// The schedule for `total_iters` iterations. In high-probability mode
/// `T1 = ceil(max(18, 12 T0))` and `eta1 = 2 / (3 mu1)`; in expected mode
/// `T1 = 8` and `eta1 = 1 / mu1`.
pub fn lmnn_schedule(prob: &LmnnProblem, mode: ParamMode, total_iters: u64) -> Result<LmnnSchedule> {
    let consts = prob.constants();
    let lambda = prob.lambda();
    let general = recommended_params(&consts, lambda, mode, total_iters)?;
    let g1 = consts.g1;
    let (first_epoch_len, first_step, t0) = match mode {
        ParamMode::Expected => (general.first_epoch_len, general.first_step, None),
        ParamMode::HighProb { delta } => {
            let log_term = (union_count(total_iters) as f64 / delta).ln();
            let t0 = (2.0 * g1 * log_term + prob.mu1() * (1.0 + log_term)) / (10.0 * g1);
            (first_len_from_t0(t0), 2.0 / (3.0 * prob.mu1()), Some(t0))
        }
    };
    Ok(LmnnSchedule {
        lambda,
        first_epoch_len,
        first_step,
        t0,
        t0_general: general.t0,
        rate_bound: 80.0 * first_epoch_len as f64 * g1 * g1 / (prob.mu1() * total_iters as f64),
    })
}

/// Run summary written next to the learned metric.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LmnnSummary {
    pub objective: f64,
    pub constraint_violation: f64,
    pub k_dagger: usize,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub speedup_estimate: Option<f64>,
    pub exact_projections: u64,
    pub matvecs: u64,
    pub g1_bound: f64,
    pub max_grad_norm: f64,
    pub radius: f64,
    pub schedule: LmnnSchedule,
    pub config: LmnnRunEcho,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LmnnRunEcho {
    pub d: usize,
    pub triplets: usize,
    pub c: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub minibatch: usize,
    pub total_iters: u64,
    pub mode: ParamMode,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct LmnnSolution {
    pub metric: SymMatrix,
    pub trace: RunTrace,
    pub summary: LmnnSummary,
}

/// Learns a metric with `epro_prox` on the PSD cone, starting from `(r/sqrt d) I`.
pub fn solve_lmnn(prob: &LmnnProblem, mode: ParamMode, total_iters: u64, seed: u64) -> Result<LmnnSolution> {
    let schedule = lmnn_schedule(prob, mode, total_iters)?;
    let cone = PsdCone::new(prob.dim());
    let problem = Problem::new(prob, cone, prob.ball(), prob.initial_metric().into_point())?
        .with_regularizer(prob.regularizer());
    let mut config = SolverConfig::new(
        Variant::EproProx,
        total_iters,
        schedule.first_epoch_len,
        schedule.first_step,
        schedule.lambda,
        seed,
    )?;
    if let ParamMode::HighProb { delta } = mode {
        config.high_prob = Some(delta);
    }
    let trace = run(&problem, &config)?;
    let metric = SymMatrix::from_point(trace.final_point.clone())?;
    let summary = LmnnSummary {
        objective: trace.final_value,
        constraint_violation: cone.value(&trace.final_point)?.max(0.0),
        k_dagger: trace.epochs(),
        n_max: trace.n_max,
        speedup_estimate: trace.speedup_estimate(prob.dim()),
        exact_projections: trace.exact_projections(),
        matvecs: trace.matvecs(),
        g1_bound: prob.g1_bound(),
        max_grad_norm: trace.max_grad_norm,
        radius: prob.radius(),
        schedule,
        config: LmnnRunEcho {
            d: prob.dim(),
            triplets: prob.len(),
            c: prob.c(),
            mu1: prob.mu1(),
            mu2: prob.mu2(),
            minibatch: prob.minibatch(),
            total_iters,
            mode,
            seed,
        },
    };
    Ok(LmnnSolution { metric, trace, summary })
}
