use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::aux_rng;

/// Least-squares line `y = slope x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("linear fit needs two or more paired samples"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("linear fit needs distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Slope of `log(error)` against `log(T)`.
pub fn fit_rate(errors: &[(u64, f64)]) -> Result<LinearFit> {
    let mut distinct: Vec<u64> = errors.iter().map(|e| e.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::invalid("rate fit needs at least three distinct T values"));
    }
    if let Some(&(t, e)) = errors.iter().find(|(_, e)| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::invalid(format!("error at T = {t} is {e}; rate fit needs positive errors")));
    }
    let xs: Vec<f64> = errors.iter().map(|(t, _)| (*t as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|(_, e)| e.ln()).collect();
    linear_fit(&xs, &ys)
}

/// Sample mean with a percentile bootstrap interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanInterval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Percentile bootstrap of the mean at confidence `level`, deterministic in `seed`.
pub fn bootstrap_mean(samples: &[f64], resamples: usize, level: f64, seed: u64) -> Result<MeanInterval> {
    if samples.is_empty() || resamples == 0 {
        return Err(Error::invalid("bootstrap needs samples and resamples"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut rng = aux_rng(seed, 0xb007);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| samples[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let pick = |q: f64| means[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok(MeanInterval {
        mean,
        lower: pick(tail),
        upper: pick(1.0 - tail),
    })
}
