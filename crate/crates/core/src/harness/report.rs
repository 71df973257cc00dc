use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::experiment::ExperimentSummary;
use super::rate::{fit_rate, LinearFit};
use crate::error::Result;
use crate::solvers::{epoch_schedule, Variant};

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub solver: Variant,
    pub total_iters: u64,
    pub seeds: usize,
    pub mean_error: Option<f64>,
    pub error_upper: Option<f64>,
    pub expected_bound: Option<f64>,
    pub mean_exact_projections: f64,
    /// Projections the schedule predicts: `T` for `sgd`, one for `opro`,
    /// the iterations run for `epoch_sgd`, `k_dagger` for the epoch-projection solvers.
    pub analytic_projections: u64,
    pub projections_match: bool,
    pub mean_matvecs: f64,
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub solver: Variant,
    pub fit: Option<LinearFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub rates: Vec<RateRow>,
}

pub fn build_report(summary: &ExperimentSummary) -> Result<Report> {
    let mut rows = Vec::new();
    for agg in &summary.aggregates {
        let cells: Vec<_> = summary
            .cells
            .iter()
            .filter(|c| c.cell.solver == agg.solver && c.cell.total_iters == agg.total_iters)
            .collect();
        let first_len = cells.first().map_or(1, |c| c.first_epoch_len);
        let analytic = match agg.solver {
            Variant::Sgd => agg.total_iters,
            Variant::Opro => 1,
            Variant::EpochSgd => epoch_schedule(agg.total_iters, first_len)?.total_iters(),
            Variant::Epro | Variant::EproProx => epoch_schedule(agg.total_iters, first_len)?.k_dagger as u64,
        };
        let n = cells.len().max(1) as f64;
        rows.push(ReportRow {
            solver: agg.solver,
            total_iters: agg.total_iters,
            seeds: agg.seeds,
            mean_error: agg.error.map(|e| e.mean),
            error_upper: agg.error.map(|e| e.upper),
            expected_bound: agg.expected_bound,
            mean_exact_projections: cells.iter().map(|c| c.exact_projections as f64).sum::<f64>() / n,
            analytic_projections: analytic,
            projections_match: cells.iter().all(|c| c.exact_projections == analytic),
            mean_matvecs: cells.iter().map(|c| c.matvecs as f64).sum::<f64>() / n,
            n_max: cells.iter().map(|c| c.n_max).max().unwrap_or(0),
        });
    }
    let mut solvers: Vec<Variant> = Vec::new();
    for r in &rows {
        if !solvers.contains(&r.solver) {
            solvers.push(r.solver);
        }
    }
    let rates = solvers
        .into_iter()
        .map(|solver| {
            let points: Option<Vec<(u64, f64)>> = rows
                .iter()
                .filter(|r| r.solver == solver)
                .map(|r| r.mean_error.map(|e| (r.total_iters, e)))
                .collect();
            RateRow {
                solver,
                fit: points.and_then(|p| fit_rate(&p).ok()),
            }
        })
        .collect();
    Ok(Report { rows, rates })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"))
}

/// A plain-text table of the rows followed by the fitted slopes.
pub fn render_table(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "| solver | T | seeds | mean f-error | upper 95% | bound | exact proj | analytic | match | matvecs | N_max |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|---|---|");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {:.1} | {} | {} | {:.0} | {} |",
            r.solver,
            r.total_iters,
            r.seeds,
            opt(r.mean_error),
            opt(r.error_upper),
            opt(r.expected_bound),
            r.mean_exact_projections,
            r.analytic_projections,
            if r.projections_match { "yes" } else { "NO" },
            r.mean_matvecs,
            r.n_max
        );
    }
    let _ = writeln!(out);
    for rate in &report.rates {
        match &rate.fit {
            Some(f) => {
                let _ = writeln!(out, "{}: log-log slope {:.3} (R^2 {:.3})", rate.solver, f.slope, f.r_squared);
            }
            None => {
                let _ = writeln!(out, "{}: no rate fit", rate.solver);
            }
        }
    }
    out
}
