use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{read_json, write_json, write_trace_csv};
use super::rate::{bootstrap_mean, MeanInterval};
use super::synthetic::{generate, Family, SyntheticProblem};
use crate::error::{Error, Result};
use crate::lmnn::{build_triplets, lmnn_schedule, prior_matrix, DataSet, LmnnProblem};
use crate::penalty::{Constraint, FEASIBILITY_TOL};
use crate::psd::{PsdCone, DEFAULT_EIG_TOL};
use crate::solvers::{
    recommended_params, run, ParamMode, Problem, ProblemConstants, RunTrace, SolverConfig, Variant,
};

/// A full experiment: one problem, a grid of solvers, iteration budgets and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solvers: Vec<Variant>,
    pub t_grid: Vec<u64>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub mode: ParamMode,
    /// Penalty multiplier; defaults to `2 G1 / rho`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    QuadraticHalfspace {
        d: usize,
        beta: f64,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    QuadraticPsd {
        d: usize,
        beta: f64,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    Lmnn {
        data: PathBuf,
        label_col: String,
        k: usize,
        #[serde(default = "one")]
        impostors: usize,
        c: f64,
        mu1: f64,
        mu2: f64,
        #[serde(default = "one")]
        minibatch: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_feasibility")]
    pub feasibility: f64,
    #[serde(default = "default_eig_tol")]
    pub eig_tol: f64,
    /// Iterative eigen-solver budget; defaults to `50 d`.
    #[serde(default)]
    pub max_matvecs: Option<u64>,
}

fn default_feasibility() -> f64 {
    FEASIBILITY_TOL
}

fn default_eig_tol() -> f64 {
    DEFAULT_EIG_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: FEASIBILITY_TOL,
            eig_tol: DEFAULT_EIG_TOL,
            max_matvecs: None,
        }
    }
}

/// One `(solver, T, seed)` combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub solver: Variant,
    pub total_iters: u64,
    pub seed: u64,
}

impl Cell {
    pub fn trace_file_name(&self) -> String {
        format!("{}_T{}_seed{}.csv", self.solver, self.total_iters, self.seed)
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON config; unknown keys are configuration errors.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        fn distinct<T: std::hash::Hash + Eq + Copy>(what: &str, xs: &[T]) -> Result<()> {
            if xs.is_empty() {
                return Err(Error::config(format!("{what} must not be empty")));
            }
            let set: HashSet<T> = xs.iter().copied().collect();
            if set.len() != xs.len() {
                return Err(Error::config(format!("{what} contains duplicates")));
            }
            Ok(())
        }
        distinct("solvers", &self.solvers)?;
        distinct("t_grid", &self.t_grid)?;
        distinct("seeds", &self.seeds)?;
        if self.t_grid.contains(&0) {
            return Err(Error::config("t_grid entries must be positive"));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::config(format!("lambda must be positive, got {l}")));
            }
        }
        Ok(())
    }

    /// Every combination, solver-major, then `T`, then seed.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::with_capacity(self.solvers.len() * self.t_grid.len() * self.seeds.len());
        for &solver in &self.solvers {
            for &total_iters in &self.t_grid {
                for &seed in &self.seeds {
                    cells.push(Cell {
                        solver,
                        total_iters,
                        seed,
                    });
                }
            }
        }
        cells
    }
}

/// What one cell produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub cell: Cell,
    pub first_epoch_len: u64,
    pub first_step: f64,
    pub lambda: f64,
    pub final_value: f64,
    /// `f - f*` when the optimum is known.
    pub f_error: Option<f64>,
    pub constraint_violation: f64,
    pub feasible: bool,
    pub initial_projection: bool,
    pub iterations_used: u64,
    pub epochs: usize,
    pub exact_projections: u64,
    pub ball_projections: u64,
    pub matvecs: u64,
    pub n_max: usize,
    pub max_grad_norm: f64,
    pub trace_file: String,
}

/// Seed-averaged statistics of one `(solver, T)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub solver: Variant,
    pub total_iters: u64,
    pub seeds: usize,
    pub error: Option<MeanInterval>,
    pub mean_value: f64,
    pub exact_projections: Vec<u64>,
    /// `32 mu^2 G^2 / (beta T)`, for the penalized solvers.
    pub expected_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub constants: ProblemConstants,
    pub lambda: f64,
    pub f_star: Option<f64>,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentSummary {
    pub const FILE_NAME: &'static str = "summary.json";

    pub fn load(dir: &Path) -> Result<Self> {
        read_json(&dir.join(Self::FILE_NAME))
    }
}

/// The problem an experiment runs on.
pub enum BuiltProblem {
    Synthetic(SyntheticProblem),
    Lmnn(Box<Problem<LmnnProblem, PsdCone>>),
}

impl BuiltProblem {
    pub fn constants(&self) -> ProblemConstants {
        match self {
            BuiltProblem::Synthetic(s) => s.problem.constants(),
            BuiltProblem::Lmnn(p) => p.constants(),
        }
    }

    pub fn f_star(&self) -> Option<f64> {
        match self {
            BuiltProblem::Synthetic(s) => Some(s.f_star),
            BuiltProblem::Lmnn(_) => None,
        }
    }
}

pub fn build_problem(spec: &ProblemSpec, tol: &Tolerances) -> Result<BuiltProblem> {
    let synthetic = |family, d: usize, beta, noise, seed| -> Result<BuiltProblem> {
        let mut s = generate(family, d, beta, noise, seed)?;
        if let super::synthetic::SyntheticDomain::Psd(cone) = &mut s.problem.constraint {
            *cone = PsdCone::new(d).with_solver(tol.eig_tol, tol.max_matvecs.unwrap_or(50 * d as u64));
        }
        Ok(BuiltProblem::Synthetic(s))
    };
    match spec {
        ProblemSpec::QuadraticHalfspace { d, beta, noise, seed } => {
            synthetic(Family::QuadraticHalfspace, *d, *beta, *noise, *seed)
        }
        ProblemSpec::QuadraticPsd { d, beta, noise, seed } => synthetic(Family::QuadraticPsd, *d, *beta, *noise, *seed),
        ProblemSpec::Lmnn {
            data,
            label_col,
            k,
            impostors,
            c,
            mu1,
            mu2,
            minibatch,
        } => {
            let data = DataSet::from_csv(data, label_col)?;
            let set = build_triplets(&data, *k, *impostors)?;
            let prior = prior_matrix(&data, &set.pairs)?;
            let prob = LmnnProblem::new(&data, &set, prior, *c, *mu1, *mu2)?.with_minibatch(*minibatch)?;
            let d = prob.dim();
            let cone = PsdCone::new(d).with_solver(tol.eig_tol, tol.max_matvecs.unwrap_or(50 * d as u64));
            let (ball, start, reg) = (prob.ball(), prob.initial_metric().into_point(), prob.regularizer());
            Ok(BuiltProblem::Lmnn(Box::new(
                Problem::new(prob, cone, ball, start)?.with_regularizer(reg),
            )))
        }
    }
}

fn solver_config(
    built: &BuiltProblem,
    cfg: &ExperimentConfig,
    lambda: f64,
    cell: Cell,
) -> Result<SolverConfig> {
    let (first_epoch_len, first_step) = match built {
        BuiltProblem::Lmnn(p) if cfg.lambda.is_none() => {
            let s = lmnn_schedule(&p.objective, cfg.mode, cell.total_iters)?;
            (s.first_epoch_len, s.first_step)
        }
        _ => {
            let p = recommended_params(&built.constants(), lambda, cfg.mode, cell.total_iters)?;
            (p.first_epoch_len, p.first_step)
        }
    };
    let mut config = SolverConfig::new(cell.solver, cell.total_iters, first_epoch_len, first_step, lambda, cell.seed)?;
    if let ParamMode::HighProb { delta } = cfg.mode {
        config.high_prob = Some(delta);
    }
    Ok(config)
}

fn run_built(built: &BuiltProblem, config: &SolverConfig) -> Result<RunTrace> {
    match built {
        BuiltProblem::Synthetic(s) => run(&s.problem, config),
        BuiltProblem::Lmnn(p) => run(p.as_ref(), config),
    }
}

fn violation(built: &BuiltProblem, trace: &RunTrace) -> Result<f64> {
    Ok(match built {
        BuiltProblem::Synthetic(s) => s.problem.constraint.value(&trace.final_point)?,
        BuiltProblem::Lmnn(p) => p.constraint.value(&trace.final_point)?,
    }
    .max(0.0))
}

/// Runs one cell and writes its trace under `dir/traces`.
pub fn run_cell(built: &BuiltProblem, cfg: &ExperimentConfig, lambda: f64, cell: Cell, dir: &Path) -> Result<CellResult> {
    let config = solver_config(built, cfg, lambda, cell)?;
    let trace = run_built(built, &config)?;
    let trace_file = format!("traces/{}", cell.trace_file_name());
    write_trace_csv(&dir.join(&trace_file), &trace.records)?;
    let constraint_violation = violation(built, &trace)?;
    let f_error = built.f_star().map(|f| trace.final_value - f);
    Ok(CellResult {
        cell,
        first_epoch_len: config.first_epoch_len,
        first_step: config.first_step,
        lambda,
        final_value: trace.final_value,
        f_error,
        constraint_violation,
        feasible: constraint_violation <= cfg.tolerances.feasibility,
        initial_projection: trace.initial_projection,
        iterations_used: trace.iterations_used,
        epochs: trace.epochs(),
        exact_projections: trace.exact_projections(),
        ball_projections: trace.ball_projections(),
        matvecs: trace.matvecs(),
        n_max: trace.n_max,
        max_grad_norm: trace.max_grad_norm,
        trace_file,
    })
}

/// Runs every cell in parallel, writing one trace CSV per cell and
/// `summary.json` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let built = build_problem(&cfg.problem, &cfg.tolerances)?;
    let constants = built.constants();
    let lambda = cfg.lambda.unwrap_or_else(|| match &built {
        BuiltProblem::Lmnn(p) => p.objective.lambda(),
        BuiltProblem::Synthetic(_) => constants.default_lambda(),
    });
    let dir = cfg.output_dir.as_path();
    let cells: Vec<CellResult> = cfg
        .cells()
        .into_par_iter()
        .map(|cell| run_cell(&built, cfg, lambda, cell, dir))
        .collect::<Result<_>>()?;
    let aggregates = aggregate(&cells, &constants, lambda)?;
    let summary = ExperimentSummary {
        config: cfg.clone(),
        constants,
        lambda,
        f_star: built.f_star(),
        cells,
        aggregates,
    };
    write_json(&dir.join(ExperimentSummary::FILE_NAME), &summary)?;
    Ok(summary)
}

/// Groups cell results by `(solver, T)` in first-appearance order.
pub fn aggregate(cells: &[CellResult], constants: &ProblemConstants, lambda: f64) -> Result<Vec<Aggregate>> {
    let mut keys: Vec<(Variant, u64)> = Vec::new();
    for c in cells {
        let key = (c.cell.solver, c.cell.total_iters);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(solver, total_iters)| {
            let group: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.cell.solver == solver && c.cell.total_iters == total_iters)
                .collect();
            let errors: Option<Vec<f64>> = group.iter().map(|c| c.f_error).collect();
            let error = match errors {
                Some(e) => Some(bootstrap_mean(&e, 2000, 0.95, total_iters)?),
                None => None,
            };
            let expected_bound = if solver.is_penalized() && lambda * constants.rho > constants.g1 {
                let p = recommended_params(constants, lambda, ParamMode::Expected, total_iters)?;
                Some(p.expected_bound(constants.beta, total_iters))
            } else {
                None
            };
            Ok(Aggregate {
                solver,
                total_iters,
                seeds: group.len(),
                error,
                mean_value: group.iter().map(|c| c.final_value).sum::<f64>() / group.len() as f64,
                exact_projections: group.iter().map(|c| c.exact_projections).collect(),
                expected_bound,
            })
        })
        .collect()
}
