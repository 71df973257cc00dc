use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use epro::harness::experiment::{run_experiment, ExperimentConfig, ExperimentSummary, ProblemSpec, Tolerances};
use epro::harness::io::{write_json, write_metric_csv, write_trace_csv};
use epro::harness::report::{build_report, render_table};
use epro::harness::synthetic::Family;
use epro::lmnn::{build_triplets, prior_matrix, solve_lmnn, DataSet, LmnnProblem, LmnnSummary};
use epro::solvers::{ParamMode, Variant};

#[derive(Parser)]
#[command(name = "epro", version, about = "Stochastic optimization with one exact projection per epoch")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config (JSON).
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Single run on a synthetic problem.
    Synth(SynthArgs),
    /// Learn a sparse metric from a labelled CSV.
    Lmnn(LmnnArgs),
    /// Aggregate an output directory into a comparison table.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "quadratic_halfspace")]
    family: Family,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Per-coordinate amplitude of the uniform gradient noise.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long = "T")]
    total_iters: u64,
    #[arg(long, default_value = "epro")]
    solver: Variant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the problem instance; defaults to `--seed`.
    #[arg(long)]
    problem_seed: Option<u64>,
    /// Use the high-probability schedule with this confidence parameter.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LmnnArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_col: String,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    impostors: usize,
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long, default_value_t = 1e-2)]
    mu1: f64,
    #[arg(long, default_value_t = 1e-3)]
    mu2: f64,
    #[arg(long = "T")]
    total_iters: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    minibatch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct LmnnOutput<'a> {
    #[serde(flatten)]
    summary: &'a LmnnSummary,
    data: &'a Path,
    label_col: &'a str,
    k: usize,
    impostors: usize,
    short_points: usize,
}

fn mode(delta: Option<f64>) -> ParamMode {
    delta.map_or(ParamMode::Expected, |delta| ParamMode::HighProb { delta })
}

fn print_report(dir: &Path) -> Result<()> {
    let summary = ExperimentSummary::load(dir).with_context(|| format!("reading summary in {}", dir.display()))?;
    let report = build_report(&summary)?;
    let table = render_table(&report);
    print!("{table}");
    write_json(&dir.join("report.json"), &report)?;
    epro::harness::io::atomic_write(&dir.join("report.md"), table.as_bytes())?;
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_json_file(&config)?;
            let summary = run_experiment(&cfg)?;
            log::info!("{} cells written to {}", summary.cells.len(), cfg.output_dir.display());
            print_report(&cfg.output_dir)
        }
        Command::Synth(a) => {
            let problem_seed = a.problem_seed.unwrap_or(a.seed);
            let problem = match a.family {
                Family::QuadraticHalfspace => ProblemSpec::QuadraticHalfspace {
                    d: a.d,
                    beta: a.beta,
                    noise: a.noise,
                    seed: problem_seed,
                },
                Family::QuadraticPsd => ProblemSpec::QuadraticPsd {
                    d: a.d,
                    beta: a.beta,
                    noise: a.noise,
                    seed: problem_seed,
                },
            };
            let cfg = ExperimentConfig {
                problem,
                solvers: vec![a.solver],
                t_grid: vec![a.total_iters],
                seeds: vec![a.seed],
                output_dir: a.out.clone(),
                mode: mode(a.delta),
                lambda: a.lambda,
                tolerances: Tolerances::default(),
            };
            let summary = run_experiment(&cfg)?;
            let cell = &summary.cells[0];
            println!(
                "{} T={} f={:.6e} f-error={} c={:.3e} exact projections={} trace={}",
                cell.cell.solver,
                cell.cell.total_iters,
                cell.final_value,
                cell.f_error.map_or("-".into(), |e| format!("{e:.3e}")),
                cell.constraint_violation,
                cell.exact_projections,
                a.out.join(&cell.trace_file).display()
            );
            Ok(())
        }
        Command::Lmnn(a) => {
            let data = DataSet::from_csv(&a.data, &a.label_col)?;
            let triplets = build_triplets(&data, a.k, a.impostors)?;
            let prior = prior_matrix(&data, &triplets.pairs)?;
            let prob = LmnnProblem::new(&data, &triplets, prior, a.c, a.mu1, a.mu2)?.with_minibatch(a.minibatch)?;
            let sol = solve_lmnn(&prob, ParamMode::HighProb { delta: a.delta }, a.total_iters, a.seed)?;
            write_metric_csv(&a.out.join("metric.csv"), &sol.metric)?;
            write_trace_csv(&a.out.join("trace.csv"), &sol.trace.records)?;
            write_json(
                &a.out.join("summary.json"),
                &LmnnOutput {
                    summary: &sol.summary,
                    data: &a.data,
                    label_col: &a.label_col,
                    k: a.k,
                    impostors: a.impostors,
                    short_points: triplets.short_points.len(),
                },
            )?;
            let s = &sol.summary;
            println!(
                "objective={:.6e} violation={:.2e} k_dagger={} N_max={} speed-up~{} out={}",
                s.objective,
                s.constraint_violation,
                s.k_dagger,
                s.n_max,
                s.speedup_estimate.map_or("-".into(), |v| format!("{v:.3e}")),
                a.out.display()
            );
            Ok(())
        }
        Command::Report { input } => print_report(&input),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<epro::Error>()) {
        Some(e) if e.is_config() => 2,
        Some(epro::Error::Numerical(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
