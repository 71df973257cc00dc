//! Synthetic problems, experiment orchestration, reports and the slow
//! reference solvers used by the test suite.

pub mod experiment;
pub mod io;
pub mod oracle;
pub mod rate;
pub mod report;
pub mod synthetic;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentSummary, ProblemSpec};
pub use oracle::brute_force_prox;
pub use rate::{bootstrap_mean, fit_rate, linear_fit, LinearFit, MeanInterval};
pub use report::{build_report, render_table, Report};
pub use synthetic::{gen_quadratic_halfspace, gen_quadratic_psd, gen_sparse_metric_data, Family, SyntheticProblem};
