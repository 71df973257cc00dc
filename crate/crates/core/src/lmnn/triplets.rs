use rayon::prelude::*;

use super::DataSet;
use crate::error::{Error, Result};
use crate::psd::SymMatrix;

/// Index triples `(i, j, l)`: `j` is a same-class target neighbor of `i`,
/// `l` an impostor from another class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripletSet {
    pub triplets: Vec<[usize; 3]>,
    /// Distinct `(i, j)` target-neighbor pairs, in construction order.
    pub pairs: Vec<(usize, usize)>,
    /// Points that got fewer than `k` target neighbors.
    pub short_points: Vec<usize>,
}

impl TripletSet {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `count` nearest points to `i` accepted by `keep`, ties broken by index.
fn nearest(data: &DataSet, i: usize, count: usize, keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut cands: Vec<(f64, usize)> = (0..data.len())
        .filter(|&j| j != i && keep(j))
        .map(|j| (sq_dist(data.point(i), data.point(j)), j))
        .collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cands.truncate(count);
    cands.into_iter().map(|(_, j)| j).collect()
}

/// Each point's `k` nearest same-class neighbors, each paired with its
/// `impostors` nearest other-class points.
pub fn build_triplets(data: &DataSet, k: usize, impostors: usize) -> Result<TripletSet> {
    if k == 0 || impostors == 0 {
        return Err(Error::config("k and impostors per point must be positive"));
    }
    let per_point: Vec<(Vec<usize>, Vec<usize>)> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let y = data.label(i);
            (
                nearest(data, i, k, |j| data.label(j) == y),
                nearest(data, i, impostors, |j| data.label(j) != y),
            )
        })
        .collect();
    let mut set = TripletSet {
        triplets: Vec::new(),
        pairs: Vec::new(),
        short_points: Vec::new(),
    };
    for (i, (targets, imps)) in per_point.into_iter().enumerate() {
        if targets.len() < k {
            set.short_points.push(i);
        }
        for &j in &targets {
            set.pairs.push((i, j));
            for &l in &imps {
                set.triplets.push([i, j, l]);
            }
        }
    }
    if !set.short_points.is_empty() {
        log::warn!(
            "{} point(s) have fewer than {k} same-class neighbors and contribute fewer triplets",
            set.short_points.len()
        );
    }
    Ok(set)
}

/// Mean of `(x_i - x_j)(x_i - x_j)^T` over the pairs, so `tr(A L)` is the
/// mean squared `A`-distance between paired points.
pub fn prior_matrix(data: &DataSet, pairs: &[(usize, usize)]) -> Result<SymMatrix> {
    if pairs.is_empty() {
        return Err(Error::invalid("prior matrix needs at least one pair"));
    }
    let d = data.dim();
    let mut l = SymMatrix::zeros(d);
    let w = 1.0 / pairs.len() as f64;
    let mut diff = vec![0.0; d];
    for &(i, j) in pairs {
        for (t, (a, b)) in diff.iter_mut().zip(data.point(i).iter().zip(data.point(j))) {
            *t = a - b;
        }
        l.add_outer(w, &diff);
    }
    Ok(l)
}

/// Pooled intra-class covariance `(1/n) sum_i (x_i - m_{y_i})(x_i - m_{y_i})^T`.
pub fn intra_class_covariance(data: &DataSet) -> SymMatrix {
    let d = data.dim();
    let sizes = data.class_sizes();
    let mut means = vec![vec![0.0; d]; sizes.len()];
    for i in 0..data.len() {
        let m = &mut means[data.label(i)];
        for (a, b) in m.iter_mut().zip(data.point(i)) {
            *a += b;
        }
    }
    for (m, &n) in means.iter_mut().zip(&sizes) {
        if n > 0 {
            m.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    let mut cov = SymMatrix::zeros(d);
    let w = 1.0 / data.len() as f64;
    for i in 0..data.len() {
        let m = &means[data.label(i)];
        let centered: Vec<f64> = data.point(i).iter().zip(m).map(|(a, b)| a - b).collect();
        cov.add_outer(w, &centered);
    }
    cov
}
