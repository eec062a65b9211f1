//! Stationary baseline: predict each arm's loss by its training mean.

use super::log::RatingLog;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub user: String,
    /// `None` for arms never selected in training.
    pub arm_means: Vec<Option<f64>>,
    pub loo_prediction: f64,
    pub loo_actual: f64,
    pub loo_squared_error: f64,
    /// True when the held-out arm was unseen and the global mean was used.
    pub used_global_mean: bool,
}

pub fn stationary_baseline(log: &RatingLog, k: usize) -> Result<BaselineResult> {
    let (train, held_out) = log.split_last()?;
    let mut sums = vec![0.0; k];
    let mut pulls = vec![0usize; k];
    for e in train {
        if e.arm >= k {
            return Err(crate::Error::ArmOutOfRange { arm: e.arm, k });
        }
        sums[e.arm] += e.loss;
        pulls[e.arm] += 1;
    }
    if held_out.arm >= k {
        return Err(crate::Error::ArmOutOfRange { arm: held_out.arm, k });
    }
    let arm_means: Vec<Option<f64>> = sums
        .iter()
        .zip(&pulls)
        .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
        .collect();
    let global = sums.iter().sum::<f64>() / train.len() as f64;
    let (loo_prediction, used_global_mean) = match arm_means[held_out.arm] {
        Some(m) => (m, false),
        None => (global, true),
    };
    Ok(BaselineResult {
        user: log.user_id.clone(),
        arm_means,
        loo_prediction,
        loo_actual: held_out.loss,
        loo_squared_error: (loo_prediction - held_out.loss).powi(2),
        used_global_mean,
    })
}
