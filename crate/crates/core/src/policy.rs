//! Arm-selection strategies.
//!
//! All policies break ties toward the lowest arm index, which keeps every run
//! a deterministic function of the observations.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{argmin_by, Real, Scalar};

/// Uniform contract driven by [`crate::env::run_policy`]. Rounds are 1-based.
pub trait Policy<T>: Send {
    fn name(&self) -> String;
    fn select(&self, t: u64) -> usize;
    fn observe(&mut self, t: u64, arm: usize, loss: T);
    fn reset(&mut self);
}

/// Last-observation lower confidence bound.
///
/// Keeps the last observed loss of each arm and the number of rounds since
/// it was seen, and plays `argmin_i l_hat_i - B * c_i`. Unseen arms carry an
/// estimate of minus infinity, so the first `k` rounds visit every arm in
/// index order.
#[derive(Debug, Clone)]
pub struct InfluentialLcb<T> {
    scale: T,
    since_seen: Vec<u64>,
    last_loss: Vec<Option<T>>,
}

impl<T: Scalar> InfluentialLcb<T> {
    pub fn new(k: usize) -> Self {
        Self::with_scale(k, T::one())
    }

    /// `scale` is a known bound `B >= max_ij |A_ij|`.
    pub fn with_scale(k: usize, scale: T) -> Self {
        Self {
            scale,
            since_seen: vec![0; k],
            last_loss: vec![None; k],
        }
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn since_seen(&self) -> &[u64] {
        &self.since_seen
    }

    /// `None` stands for an unseen arm (minus infinity).
    pub fn last_loss(&self) -> &[Option<T>] {
        &self.last_loss
    }

    /// Lower-confidence scores; `None` for unseen arms.
    pub fn scores(&self) -> Vec<Option<T>> {
        self.last_loss
            .iter()
            .zip(&self.since_seen)
            .map(|(l, &c)| l.map(|l| l - self.scale * T::from_count(c)))
            .collect()
    }

    pub fn select_arm(&self) -> usize {
        if let Some(unseen) = self.last_loss.iter().position(Option::is_none) {
            return unseen;
        }
        argmin_by(self.scores().into_iter().flatten()).unwrap_or(0)
    }

    pub fn record(&mut self, arm: usize, loss: T) {
        self.last_loss[arm] = Some(loss);
        for (i, c) in self.since_seen.iter_mut().enumerate() {
            *c = if i == arm { 1 } else { *c + 1 };
        }
    }

    /// Restores a given state, mainly for inspection and tests.
    pub fn from_state(scale: T, since_seen: Vec<u64>, last_loss: Vec<Option<T>>) -> Result<Self> {
        if since_seen.len() != last_loss.len() {
            return Err(Error::DimensionMismatch {
                expected: since_seen.len(),
                got: last_loss.len(),
            });
        }
        Ok(Self {
            scale,
            since_seen,
            last_loss,
        })
    }
}

impl<T: Scalar> Policy<T> for InfluentialLcb<T> {
    fn name(&self) -> String {
        if self.scale == T::one() {
            "ilcb".into()
        } else {
            format!("ilcb:B={:?}", self.scale)
        }
    }

    fn select(&self, _t: u64) -> usize {
        self.select_arm()
    }

    fn observe(&mut self, _t: u64, arm: usize, loss: T) {
        self.record(arm, loss);
    }

    fn reset(&mut self) {
        let k = self.since_seen.len();
        *self = Self::with_scale(k, self.scale);
    }
}

/// Empirical-mean LCB: `argmin_i mu_i - sqrt(2 ln t / n_i)`, after one
/// bootstrap pull of each arm in index order.
#[derive(Debug, Clone)]
pub struct StandardLcb<T> {
    sums: Vec<T>,
    pulls: Vec<u64>,
    t: u64,
}

impl<T: Real> StandardLcb<T> {
    pub fn new(k: usize) -> Self {
        Self {
            sums: vec![T::zero(); k],
            pulls: vec![0; k],
            t: 0,
        }
    }

    pub fn from_state(sums: Vec<T>, pulls: Vec<u64>) -> Result<Self> {
        if sums.len() != pulls.len() {
            return Err(Error::DimensionMismatch {
                expected: sums.len(),
                got: pulls.len(),
            });
        }
        let t = pulls.iter().sum();
        Ok(Self { sums, pulls, t })
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn sums(&self) -> &[T] {
        &self.sums
    }

    pub fn scores(&self, t: u64) -> Vec<T> {
        let log_t = T::from_count(t).ln();
        let two = T::one() + T::one();
        self.sums
            .iter()
            .zip(&self.pulls)
            .map(|(&s, &n)| {
                let n = T::from_count(n);
                s / n - (two * log_t / n).sqrt()
            })
            .collect()
    }

    pub fn select_arm(&self, t: u64) -> usize {
        if let Some(unpulled) = self.pulls.iter().position(|&n| n == 0) {
            return unpulled;
        }
        argmin_by(self.scores(t)).unwrap_or(0)
    }
}

impl<T: Real> Policy<T> for StandardLcb<T> {
    fn name(&self) -> String {
        "lcb".into()
    }

    fn select(&self, t: u64) -> usize {
        self.select_arm(t)
    }

    fn observe(&mut self, _t: u64, arm: usize, loss: T) {
        self.sums[arm] = self.sums[arm] + loss;
        self.pulls[arm] += 1;
        self.t += 1;
    }

    fn reset(&mut self) {
        *self = Self::new(self.sums.len());
    }
}

/// Always plays the same arm.
#[derive(Debug, Clone)]
pub struct FixedArm {
    arm: usize,
}

impl FixedArm {
    pub fn new(arm: usize, k: usize) -> Result<Self> {
        if arm >= k {
            return Err(Error::ArmOutOfRange { arm, k });
        }
        Ok(Self { arm })
    }
}

impl<T> Policy<T> for FixedArm {
    fn name(&self) -> String {
        format!("fixed:{}", self.arm + 1)
    }

    fn select(&self, _t: u64) -> usize {
        self.arm
    }

    fn observe(&mut self, _t: u64, _arm: usize, _loss: T) {}

    fn reset(&mut self) {}
}

/// Cycles through arms `0, 1, ..., k-1, 0, ...`.
#[derive(Debug, Clone)]
pub struct RoundRobin {
    k: usize,
}

impl RoundRobin {
    pub fn new(k: usize) -> Self {
        Self { k: k.max(1) }
    }
}

impl<T> Policy<T> for RoundRobin {
    fn name(&self) -> String {
        "round_robin".into()
    }

    fn select(&self, t: u64) -> usize {
        ((t.saturating_sub(1)) % self.k as u64) as usize
    }

    fn observe(&mut self, _t: u64, _arm: usize, _loss: T) {}

    fn reset(&mut self) {}
}

/// Policy named on the command line: `ilcb`, `ilcb:B=<float>`, `lcb`,
/// `fixed:<arm>` (1-based) or `round_robin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    InfluentialLcb { scale: f64 },
    StandardLcb,
    /// 0-based arm.
    FixedArm(usize),
    RoundRobin,
}

impl PolicySpec {
    pub fn build<T: Real>(&self, k: usize) -> Result<Box<dyn Policy<T>>> {
        Ok(match *self {
            PolicySpec::InfluentialLcb { scale } => {
                Box::new(InfluentialLcb::with_scale(k, T::lit(scale)))
            }
            PolicySpec::StandardLcb => Box::new(StandardLcb::new(k)),
            PolicySpec::FixedArm(arm) => Box::new(FixedArm::new(arm, k)?),
            PolicySpec::RoundRobin => Box::new(RoundRobin::new(k)),
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::InfluentialLcb { scale } if *scale == 1.0 => write!(f, "ilcb"),
            PolicySpec::InfluentialLcb { scale } => write!(f, "ilcb:B={scale}"),
            PolicySpec::StandardLcb => write!(f, "lcb"),
            PolicySpec::FixedArm(arm) => write!(f, "fixed:{}", arm + 1),
            PolicySpec::RoundRobin => write!(f, "round_robin"),
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unknown policy `{s}`"));
        match s {
            "ilcb" => return Ok(PolicySpec::InfluentialLcb { scale: 1.0 }),
            "lcb" => return Ok(PolicySpec::StandardLcb),
            "round_robin" | "rr" => return Ok(PolicySpec::RoundRobin),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("ilcb:") {
            let value = rest.strip_prefix("B=").ok_or_else(bad)?;
            let scale: f64 = value.parse().map_err(|_| bad())?;
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(Error::InvalidParameter(format!("ilcb scale must be finite and >= 0, got {value}")));
            }
            return Ok(PolicySpec::InfluentialLcb { scale });
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            let arm: usize = rest.parse().map_err(|_| bad())?;
            if arm == 0 {
                return Err(Error::InvalidParameter("fixed arms are 1-based".into()));
            }
            return Ok(PolicySpec::FixedArm(arm - 1));
        }
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fresh_ilcb_visits_arms_in_order() {
        let mut p = InfluentialLcb::<f64>::new(3);
        assert_eq!(p.select_arm(), 0);
        p.record(0, 5.0);
        assert_eq!(p.select_arm(), 1);
        p.record(1, 5.0);
        assert_eq!(p.select_arm(), 2);
    }

    #[test]
    fn ilcb_select_examples() {
        let p = InfluentialLcb::from_state(1.0, vec![3, 1], vec![Some(5.0), Some(4.0)]).unwrap();
        assert_eq!(p.scores(), vec![Some(2.0), Some(3.0)]);
        assert_eq!(p.select_arm(), 0);
        let tie = InfluentialLcb::from_state(1.0, vec![2, 1], vec![Some(5.0), Some(4.0)]).unwrap();
        assert_eq!(tie.select_arm(), 0);
    }

    #[test]
    fn ilcb_unseen_arm_beats_everything() {
        let p = InfluentialLcb::from_state(1.0, vec![1, 5, 2], vec![Some(-1e9), None, None]).unwrap();
        assert_eq!(p.select_arm(), 1);
    }

    #[test]
    fn ilcb_observe_examples() {
        let mut p = InfluentialLcb::<f64>::new(2);
        p.record(0, 1.5);
        assert_eq!(p.since_seen(), &[1, 1]);
        assert_eq!(p.last_loss(), &[Some(1.5), None]);
        p.record(1, 2.0);
        assert_eq!(p.since_seen(), &[2, 1]);
        assert_eq!(p.last_loss()[1], Some(2.0));
        for _ in 0..5 {
            p.record(0, 0.0);
            assert_eq!(p.since_seen()[0], 1);
        }
    }

    #[test]
    fn ilcb_scale_changes_preference() {
        // with B=0 the policy is greedy on the last observation
        let p = InfluentialLcb::from_state(0.0, vec![3, 1], vec![Some(5.0), Some(4.0)]).unwrap();
        assert_eq!(p.select_arm(), 1);
    }

    #[test]
    fn lcb_select_examples() {
        let p = StandardLcb::from_state(vec![1.0, 2.0], vec![1, 1]).unwrap();
        let scores = p.scores(2);
        let bonus = (2.0 * 2f64.ln()).sqrt();
        assert!((scores[0] - (1.0 - bonus)).abs() < 1e-15);
        assert!((scores[0] + 0.177).abs() < 1e-3);
        assert!((scores[1] - 0.823).abs() < 1e-3);
        assert_eq!(p.select_arm(2), 0);

        let eq = StandardLcb::from_state(vec![3.0, 3.0, 3.0], vec![2, 2, 2]).unwrap();
        for t in [4, 7, 1000] {
            assert_eq!(eq.select_arm(t), 0);
        }
    }

    #[test]
    fn lcb_bootstraps_in_index_order() {
        let mut p = StandardLcb::<f64>::new(3);
        for arm in 0..3 {
            assert_eq!(p.select_arm(arm as u64 + 1), arm);
            Policy::observe(&mut p, arm as u64 + 1, arm, -100.0);
        }
    }

    #[test]
    fn fixed_arm_rejects_out_of_range() {
        assert!(FixedArm::new(2, 2).is_err());
    }

    #[test]
    fn round_robin_cycles() {
        let p = RoundRobin::new(3);
        let arms: Vec<usize> = (1..=6).map(|t| Policy::<f64>::select(&p, t)).collect();
        assert_eq!(arms, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn policy_specs_parse() {
        assert_eq!("ilcb".parse::<PolicySpec>().unwrap(), PolicySpec::InfluentialLcb { scale: 1.0 });
        assert_eq!("ilcb:B=2.5".parse::<PolicySpec>().unwrap(), PolicySpec::InfluentialLcb { scale: 2.5 });
        assert_eq!("lcb".parse::<PolicySpec>().unwrap(), PolicySpec::StandardLcb);
        assert_eq!("fixed:1".parse::<PolicySpec>().unwrap(), PolicySpec::FixedArm(0));
        assert_eq!("round_robin".parse::<PolicySpec>().unwrap(), PolicySpec::RoundRobin);
        for bad in ["fixed:0", "fixed:x", "ilcb:B=-1", "ilcb:C=1", "thompson"] {
            assert!(bad.parse::<PolicySpec>().is_err(), "{bad}");
        }
        for spec in ["ilcb", "ilcb:B=0.5", "lcb", "fixed:3", "round_robin"] {
            assert_eq!(spec.parse::<PolicySpec>().unwrap().to_string(), spec);
        }
    }

    proptest! {
        #[test]
        fn ilcb_argmin_is_shift_invariant(
            losses in proptest::collection::vec(-50i32..50, 2..6),
            gaps in proptest::collection::vec(1u64..20, 6),
            shift in -100i32..100,
        ) {
            // integer-valued losses keep the shifted comparison exact
            let k = losses.len();
            let base: Vec<Option<f64>> = losses.iter().map(|&l| Some(l as f64)).collect();
            let shifted: Vec<Option<f64>> = losses.iter().map(|&l| Some((l + shift) as f64)).collect();
            let c = gaps[..k].to_vec();
            let a = InfluentialLcb::from_state(1.0, c.clone(), base).unwrap();
            let b = InfluentialLcb::from_state(1.0, c, shifted).unwrap();
            prop_assert_eq!(a.select_arm(), b.select_arm());
        }

        #[test]
        fn ilcb_counter_sum_recurrence(k in 2usize..6, arms in proptest::collection::vec(0usize..6, 1..60)) {
            let mut p = InfluentialLcb::<f64>::new(k);
            for (step, raw) in arms.into_iter().enumerate() {
                let arm = if step < k { p.select_arm() } else { raw % k };
                let before: u64 = p.since_seen().iter().sum();
                let c_arm = p.since_seen()[arm];
                p.record(arm, 0.0);
                let after: u64 = p.since_seen().iter().sum();
                prop_assert_eq!(after, before + k as u64 - c_arm);
                if step + 1 >= k {
                    prop_assert_eq!(p.since_seen().iter().filter(|&&c| c == 1).count(), 1);
                    prop_assert!(p.last_loss().iter().all(Option::is_some));
                }
            }
        }
    }
}
