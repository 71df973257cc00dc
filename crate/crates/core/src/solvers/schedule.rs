use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Epoch lengths `T1, 2*T1, 4*T1, ...` and steps `eta1, eta1/2, ...`,
/// keeping as many epochs as fit in the iteration budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSchedule {
    pub epoch_lengths: Vec<u64>,
    pub k_dagger: usize,
}

impl EpochSchedule {
    pub fn total_iters(&self) -> u64 {
        self.epoch_lengths.iter().sum()
    }

    /// Step sizes for a first step `eta1`: `eta_k = eta1 / 2^(k-1)`.
    pub fn step_sizes(&self, eta1: f64) -> Vec<f64> {
        let mut eta = eta1;
        self.epoch_lengths
            .iter()
            .map(|_| {
                let e = eta;
                eta /= 2.0;
                e
            })
            .collect()
    }
}

/// The maximal doubling schedule with `sum T_k <= total`.
pub fn epoch_schedule(total: u64, first_len: u64) -> Result<EpochSchedule> {
    if first_len == 0 {
        return Err(Error::config("first epoch length must be at least 1"));
    }
    if total < first_len {
        return Err(Error::config(format!(
            "total iterations {total} smaller than first epoch length {first_len}"
        )));
    }
    let mut epoch_lengths = Vec::new();
    let mut used: u64 = 0;
    let mut len = first_len;
    while let Some(next) = used.checked_add(len).filter(|&n| n <= total) {
        used = next;
        epoch_lengths.push(len);
        len = match len.checked_mul(2) {
            Some(l) => l,
            None => break,
        };
    }
    Ok(EpochSchedule {
        k_dagger: epoch_lengths.len(),
        epoch_lengths,
    })
}

/// `floor(log2(T / T1 + 1))` computed in exact integer arithmetic.
pub fn k_dagger_formula(total: u64, first_len: u64) -> usize {
    // floor(log2(T/T1 + 1)) = max k with T1 * (2^k - 1) <= T
    let mut k = 0usize;
    while first_len
        .checked_mul((1u64 << (k + 1)) - 1)
        .is_some_and(|v| v <= total)
    {
        k += 1;
        if k >= 63 {
            break;
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_schedules() {
        let s = epoch_schedule(120, 8).unwrap();
        assert_eq!(s.epoch_lengths, vec![8, 16, 32, 64]);
        assert_eq!(s.k_dagger, 4);
        assert_eq!(s.total_iters(), 120);

        let s = epoch_schedule(8, 8).unwrap();
        assert_eq!(s.epoch_lengths, vec![8]);

        let s = epoch_schedule(1000, 8).unwrap();
        assert_eq!(s.k_dagger, 6);
        assert_eq!(s.epoch_lengths, vec![8, 16, 32, 64, 128, 256]);
        assert_eq!(s.total_iters(), 504);
    }

    #[test]
    fn step_sizes_halve_exactly() {
        let s = epoch_schedule(1000, 8).unwrap();
        let eta = s.step_sizes(0.3);
        assert_eq!(eta[0], 0.3);
        for w in eta.windows(2) {
            assert_eq!(w[1], w[0] / 2.0);
        }
    }

    #[test]
    fn rejects_short_budgets() {
        assert!(matches!(epoch_schedule(7, 8), Err(Error::Config(_))));
        assert!(epoch_schedule(10, 0).is_err());
    }

    #[test]
    fn formula_against_floats() {
        for t in [8u64, 120, 1000, 1_000_000] {
            let k = k_dagger_formula(t, 8);
            assert_eq!(k, ((t as f64) / 8.0 + 1.0).log2().floor() as usize);
            assert!((k as f64) <= (t as f64 / 4.0).log2());
        }
    }

    proptest! {
        #[test]
        fn schedule_is_maximal(total in 1u64..5_000_000, first in 1u64..64) {
            prop_assume!(total >= first);
            let s = epoch_schedule(total, first).unwrap();
            prop_assert!(s.total_iters() <= total);
            let next = s.epoch_lengths.last().unwrap() * 2;
            prop_assert!(s.total_iters() + next > total);
            for w in s.epoch_lengths.windows(2) {
                prop_assert_eq!(w[1], 2 * w[0]);
            }
            prop_assert_eq!(s.k_dagger, k_dagger_formula(total, first));
        }
    }
}
