use serde::{Deserialize, Serialize};

use super::Variant;
use crate::point::Point;

/// One row of a run trace. Field order is the trace CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Iterations run in this epoch.
    pub iters: u64,
    pub eta: f64,
    /// Objective at the point carried out of the epoch.
    pub f_value: f64,
    /// Constraint value of the epoch average before the exact projection.
    pub c_value: f64,
    /// Cumulative exact projections, excluding a start-point correction.
    pub exact_projections: u64,
    /// Cumulative ball projections.
    pub ball_projections: u64,
    /// Cumulative eigen-solver operator applications.
    pub matvecs: u64,
    /// Largest off-diagonal nonzero count among this epoch's iterates.
    pub nnz_offdiag: usize,
    pub wall_ns: u64,
}

/// Everything a solver run reports.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub variant: Variant,
    pub records: Vec<EpochRecord>,
    pub final_point: Point,
    pub final_value: f64,
    /// `c` at the final point.
    pub final_violation: f64,
    /// Whether the start point had to be projected onto the domain first.
    pub initial_projection: bool,
    pub iterations_used: u64,
    /// Largest off-diagonal nonzero count over all intermediate iterates.
    pub n_max: usize,
    /// Largest stochastic gradient norm observed.
    pub max_grad_norm: f64,
}

impl RunTrace {
    pub fn exact_projections(&self) -> u64 {
        self.records.last().map_or(0, |r| r.exact_projections)
    }

    pub fn ball_projections(&self) -> u64 {
        self.records.last().map_or(0, |r| r.ball_projections)
    }

    pub fn matvecs(&self) -> u64 {
        self.records.last().map_or(0, |r| r.matvecs)
    }

    pub fn epochs(&self) -> usize {
        self.records.len()
    }

    /// Records with the wall-clock column zeroed, for reproducibility checks.
    pub fn records_without_timing(&self) -> Vec<EpochRecord> {
        self.records
            .iter()
            .cloned()
            .map(|mut r| {
                r.wall_ns = 0;
                r
            })
            .collect()
    }

    /// Speed-up of the sparse proximal method over dense per-iteration
    /// projections, `d^3 / (1.2 N_max)`. `None` when `N_max` is zero.
    pub fn speedup_estimate(&self, d: usize) -> Option<f64> {
        speedup_estimate(d, self.n_max)
    }
}

/// `d^3 / (1.2 N_max)`.
pub fn speedup_estimate(d: usize, n_max: usize) -> Option<f64> {
    (n_max > 0).then(|| (d as f64).powi(3) / (1.2 * n_max as f64))
}
