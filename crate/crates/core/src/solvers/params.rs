//! Step-size and epoch-length recipes derived from the problem constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{check_multiplier, Constraint, Objective};

/// The constants a problem must supply: strong convexity `beta`, gradient
/// bounds `g1` (objective) and `g2` (constraint), boundary gradient floor `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub beta: f64,
    pub g1: f64,
    pub g2: f64,
    pub rho: f64,
}

impl ProblemConstants {
    pub fn of<O: Objective + ?Sized, C: Constraint + ?Sized>(objective: &O, constraint: &C) -> Self {
        ProblemConstants {
            beta: objective.beta(),
            g1: objective.g1(),
            g2: constraint.g2(),
            rho: constraint.rho(),
        }
    }

    /// The multiplier `2 G1 / rho`, which gives `mu = 2`.
    pub fn default_lambda(&self) -> f64 {
        2.0 * self.g1 / self.rho
    }
}

/// How the first epoch is parameterized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ParamMode {
    #[default]
    /// `T1 = 8`, `eta1 = mu / (2 beta)`; bound in expectation.
    Expected,
    /// `T1 = max(18, 12 T0)`, `eta1 = mu / (3 beta)`; bound with probability `1 - delta`.
    HighProb { delta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecommendedParams {
    pub mu: f64,
    /// `G^2 = G1^2 + lambda^2 G2^2`.
    pub g_sq: f64,
    pub first_epoch_len: u64,
    pub first_step: f64,
    /// `T0` of the high-probability recipe, before the `max(18, .)` floor.
    pub t0: Option<f64>,
}

impl RecommendedParams {
    /// Expected-error bound `32 mu^2 G^2 / (beta T)`.
    pub fn expected_bound(&self, beta: f64, total: u64) -> f64 {
        32.0 * self.mu * self.mu * self.g_sq / (beta * total as f64)
    }

    /// High-probability bound `4 T1 mu^2 G^2 / (beta T)`.
    pub fn high_prob_bound(&self, beta: f64, total: u64) -> f64 {
        4.0 * self.first_epoch_len as f64 * self.mu * self.mu * self.g_sq / (beta * total as f64)
    }
}

/// `mu = rho / (rho - G1/lambda)`; requires `lambda * rho > G1`.
pub fn mu_factor(consts: &ProblemConstants, lambda: f64) -> Result<f64> {
    check_multiplier(lambda, consts.rho, consts.g1)?;
    Ok(consts.rho / (consts.rho - consts.g1 / lambda))
}

/// `m = ceil(2 log2 T)`, the number of epochs union-bounded over.
pub fn union_count(total: u64) -> u64 {
    (2.0 * (total as f64).log2()).ceil().max(1.0) as u64
}

/// Schedule parameters for a multiplier `lambda`.
///
/// `total` only matters in [`ParamMode::HighProb`], through `m`, where
/// `T0 = (2 G1^2 ln(m/delta) + G1 beta (1 + ln(m/delta))) / (mu G^2)`.
pub fn recommended_params(
    consts: &ProblemConstants,
    lambda: f64,
    mode: ParamMode,
    total: u64,
) -> Result<RecommendedParams> {
    if !(consts.beta > 0.0 && consts.g1 > 0.0 && consts.g2 > 0.0) {
        return Err(Error::config(format!("problem constants must be positive: {consts:?}")));
    }
    let mu = mu_factor(consts, lambda)?;
    let g_sq = consts.g1 * consts.g1 + lambda * lambda * consts.g2 * consts.g2;
    match mode {
        ParamMode::Expected => Ok(RecommendedParams {
            mu,
            g_sq,
            first_epoch_len: 8,
            first_step: mu / (2.0 * consts.beta),
            t0: None,
        }),
        ParamMode::HighProb { delta } => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::config(format!("delta must lie in (0, 1), got {delta}")));
            }
            let log_term = (union_count(total) as f64 / delta).ln();
            let (g1, beta) = (consts.g1, consts.beta);
            let t0 = (2.0 * g1 * g1 * log_term + g1 * beta * (1.0 + log_term)) / (mu * g_sq);
            Ok(RecommendedParams {
                mu,
                g_sq,
                first_epoch_len: first_len_from_t0(t0),
                first_step: mu / (3.0 * beta),
                t0: Some(t0),
            })
        }
    }
}

/// `ceil(max(18, 12 T0))`.
pub(crate) fn first_len_from_t0(t0: f64) -> u64 {
    (12.0 * t0).max(18.0).ceil() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(g1: f64, g2: f64, rho: f64) -> ProblemConstants {
        ProblemConstants {
            beta: 1.0,
            g1,
            g2,
            rho,
        }
    }

    #[test]
    fn psd_remark_values() {
        let c = consts(3.0, 1.0, 1.0);
        let p = recommended_params(&c, 2.0 * 3.0, ParamMode::Expected, 100).unwrap();
        assert!((p.mu - 2.0).abs() < 1e-15);
        assert!((p.g_sq - 5.0 * 9.0).abs() < 1e-12);
        assert_eq!(p.first_epoch_len, 8);
        assert_eq!(p.first_step, 1.0);
    }

    #[test]
    fn direct_substitution() {
        let p = recommended_params(&consts(1.0, 1.0, 1.0), 4.0, ParamMode::Expected, 100).unwrap();
        assert!((p.mu - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.g_sq, 17.0);
    }

    #[test]
    fn large_lambda_limit() {
        let c = consts(1.0, 1.0, 1.0);
        let p = recommended_params(&c, 1e9, ParamMode::Expected, 100).unwrap();
        assert!((p.mu - 1.0).abs() < 1e-8);
        assert!(p.g_sq > 1e17);
    }

    #[test]
    fn lambda_tradeoff_is_strict() {
        let c = consts(2.0, 0.5, 0.7);
        let mut prev: Option<RecommendedParams> = None;
        for k in 1..40 {
            let lambda = c.g1 / c.rho * (1.0 + 0.25 * k as f64);
            let p = recommended_params(&c, lambda, ParamMode::Expected, 100).unwrap();
            if let Some(q) = prev {
                assert!(p.mu < q.mu);
                assert!(p.g_sq > q.g_sq);
            }
            prev = Some(p);
        }
    }

    #[test]
    fn rejects_small_multiplier() {
        let c = consts(2.0, 1.0, 1.0);
        assert!(matches!(
            recommended_params(&c, 2.0, ParamMode::Expected, 10),
            Err(Error::Config(_))
        ));
        assert!(recommended_params(&c, 1.0, ParamMode::Expected, 10).is_err());
        assert!(recommended_params(&c, 3.0, ParamMode::HighProb { delta: 1.5 }, 10).is_err());
    }

    #[test]
    fn high_prob_recipe() {
        let c = consts(1.0, 1.0, 1.0);
        let total = 1 << 12;
        let p = recommended_params(&c, 2.0, ParamMode::HighProb { delta: 0.05 }, total).unwrap();
        // m = ceil(2 * 12) = 24, mu = 2, G^2 = 5
        let l = (24.0f64 / 0.05).ln();
        let t0 = (2.0 * l + (1.0 + l)) / 10.0;
        assert_eq!(union_count(total), 24);
        assert!((p.t0.unwrap() - t0).abs() < 1e-12);
        assert_eq!(p.first_epoch_len, (12.0 * t0).ceil() as u64);
        assert!((p.first_step - 2.0 / 3.0).abs() < 1e-15);
        // Small T0 floors at 18.
        let tiny = recommended_params(&consts(10.0, 1.0, 1.0), 20.0, ParamMode::HighProb { delta: 0.5 }, 16).unwrap();
        assert!(tiny.t0.unwrap() <= 1.5);
        assert_eq!(tiny.first_epoch_len, 18);
    }
}
