//! Estimating `A` online from differences of consecutive observations.
//!
//! Pulling `j` twice in a row gives `A_jj` up to two noise terms. The
//! pattern `(j, k, j)` gives `A_jj + A_jk`, from which the diagonal estimate
//! is subtracted.

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::matrix::InteractionMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub a_hat: InteractionMatrix<f64>,
    pub pulls: u64,
    /// `pulls / k^2`.
    pub constant: f64,
}

/// Pulls needed to probe a `k`-armed matrix: `2k + 3k(k-1)/2`.
pub fn probe_pulls(k: usize) -> u64 {
    let k = k as u64;
    2 * k + 3 * k * k.saturating_sub(1) / 2
}

/// Runs the probe schedule on `env` from its current state. Fails before
/// pulling anything if `budget` is too small.
pub fn probing_estimator(env: &mut Environment<f64>, budget: u64) -> Result<ProbeResult> {
    let k = env.k();
    let required = probe_pulls(k);
    if budget < required {
        return Err(Error::InsufficientBudget { budget, required });
    }
    let mut a = vec![0.0; k * k];
    for j in 0..k {
        let first = env.step(j)?;
        let second = env.step(j)?;
        a[j * k + j] = second - first;
    }
    for j in 0..k {
        for m in j + 1..k {
            let first = env.step(j)?;
            env.step(m)?;
            let third = env.step(j)?;
            let v = third - first - a[j * k + j];
            a[j * k + m] = v;
            a[m * k + j] = v;
        }
    }
    let pulls = required;
    Ok(ProbeResult {
        a_hat: InteractionMatrix::new(k, a)?,
        pulls,
        constant: pulls as f64 / (k * k) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, NoiseModel};

    #[test]
    fn pull_count_matches_schedule() {
        assert_eq!(probe_pulls(1), 2);
        assert_eq!(probe_pulls(2), 7);
        assert_eq!(probe_pulls(3), 15);
        for k in 1..50 {
            assert!(probe_pulls(k) <= 2 * (k * k) as u64);
        }
    }

    #[test]
    fn pulls_advance_the_environment() {
        let a = InteractionMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap();
        let inst = Instance::new(a, vec![0.0, 0.0], NoiseModel::None).unwrap();
        let mut env = Environment::new(inst, 0);
        let r = probing_estimator(&mut env, 100).unwrap();
        assert_eq!(env.round(), r.pulls + 1);
    }

    #[test]
    fn small_budget_is_rejected_without_pulling() {
        let inst = Instance::new(InteractionMatrix::zeros(3), vec![0.0; 3], NoiseModel::None).unwrap();
        let mut env = Environment::new(inst, 0);
        assert!(matches!(
            probing_estimator(&mut env, 14),
            Err(Error::InsufficientBudget { required: 15, .. })
        ));
        assert_eq!(env.round(), 1);
    }
}
